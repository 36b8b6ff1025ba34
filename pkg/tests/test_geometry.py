import numpy as np
import numpy.testing as npt

from pytest                import raises
from hypothesis            import given
from hypothesis            import settings
from hypothesis.strategies import integers
from hypothesis.strategies import sampled_from

from quasiplanes.errors         import DegenerateSimplex
from quasiplanes.errors         import PointNotInSet
from quasiplanes.tools.geometry import AffineMap
from quasiplanes.tools.geometry import Plane
from quasiplanes.tools.geometry import SampledSet
from quasiplanes.tools.geometry import affine_from_samples
from quasiplanes.tools.geometry import canonical_frame
from quasiplanes.tools.geometry import fit_line_angle_grid
from quasiplanes.tools.geometry import fit_plane_minimax
from quasiplanes.tools.geometry import minimax_fit
from quasiplanes.tools.geometry import operator_norms
from quasiplanes.tools.geometry import random_orthonormal
from quasiplanes.tools.geometry import singular_values

from .helpers import noisy_plane_cloud


def test_affine_map_call_and_compose():
    A = AffineMap([[2.0, 0.0], [0.0, 3.0], [1.0, 1.0]], [1.0, 0.0, -1.0])
    B = AffineMap([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
    x = np.array([[1.0, 2.0], [-1.0, 0.0]])
    npt.assert_allclose(A.compose(B)(x), A(B(x)))
    npt.assert_allclose(B.post(A)(x), A(B(x)))
    assert (A.n, A.N) == (2, 3)


def test_affine_map_rejects_wrong_shapes():
    with raises(ValueError):
        AffineMap(np.ones((2, 3)), np.zeros(2))
    with raises(ValueError):
        AffineMap(np.ones((3, 2)), np.zeros(2))


def test_taylor_map_agrees_at_base_point():
    J = np.array([[1.0, 2.0], [0.0, 1.0]])
    A = AffineMap.taylor([3.0, 4.0], J, [1.0, 1.0])
    npt.assert_allclose(A([1.0, 1.0]), [3.0, 4.0])
    npt.assert_allclose(A.linear, J)


def test_singular_values_are_ascending():
    s = singular_values(np.diag([3.0, 1.0, 2.0]))
    npt.assert_allclose(s, [1.0, 2.0, 3.0])
    assert AffineMap(np.diag([3.0, 1.0]), np.zeros(2)).norm == 3.0


@given(integers(0, 2**32 - 1), sampled_from([1, 2, 3]))
@settings(max_examples=30, deadline=None)
def test_operator_norms_match_svd(seed, n):
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((5, n + 1, n))
    expected = [np.linalg.norm(m, ord=2) for m in mats]
    npt.assert_allclose(operator_norms(mats), expected, rtol=1e-10)


@given(integers(0, 2**32 - 1), sampled_from([(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]))
@settings(max_examples=40, deadline=None)
def test_affine_from_samples_recovers_map(seed, dims):
    n, N = dims
    rng = np.random.default_rng(seed)
    A = AffineMap(rng.standard_normal((N, n)), rng.standard_normal(N))
    nodes = np.vstack([np.zeros(n), np.eye(n)]) + 0.1*rng.standard_normal((n + 1, n))
    B = affine_from_samples(nodes, A(nodes))
    npt.assert_allclose(B.linear, A.linear, atol=1e-8)
    npt.assert_allclose(B.shift, A.shift, atol=1e-8)


def test_affine_from_samples_degenerate_nodes():
    nodes = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with raises(DegenerateSimplex):
        affine_from_samples(nodes, nodes)


def test_plane_distance_and_projection():
    P = Plane([0.0, 0.0, 1.0], [[1.0, 0.0, 0.0]])
    pts = np.array([[2.0, 3.0, 1.0], [0.0, 0.0, 5.0]])
    npt.assert_allclose(P.distance(pts), [3.0, 4.0])
    npt.assert_allclose(P.project(pts), [[2.0, 0.0, 1.0], [0.0, 0.0, 1.0]])


def test_plane_rejects_non_orthonormal_frame():
    with raises(ValueError):
        Plane([0.0, 0.0], [[1.0, 1.0]])


@given(integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_canonical_frame_depends_on_the_plane_only(seed):
    rng = np.random.default_rng(seed)
    U = random_orthonormal(3, 2, rng)
    R = random_orthonormal(2, 2, rng)
    npt.assert_allclose(canonical_frame(U), canonical_frame(U @ R), atol=1e-10)


@given(integers(0, 2**32 - 1), sampled_from([None, "anchor"]))
@settings(max_examples=25, deadline=None)
def test_minimax_line_matches_angle_scan(seed, anchored):
    rng = np.random.default_rng(seed)
    pts = noisy_plane_cloud(rng, 15, 1, 2, 0.2)
    anchor = pts[0] if anchored else None
    fit = minimax_fit(pts, 1, anchor=anchor)
    _, scanned = fit_line_angle_grid(pts, anchor=anchor, step=1e-4)
    diam = np.max(np.linalg.norm(pts[:, None] - pts[None], axis=2))
    # the scan is coarse by at most diam * step
    assert fit.supdist <= scanned + 10*fit.tol + 1e-12
    assert scanned <= fit.supdist + diam*1e-4


def test_minimax_fit_collinear_points_are_exact():
    t = np.linspace(0, 1, 7)
    pts = np.stack([t, 2*t, -t], axis=1)
    fit = minimax_fit(pts, 1)
    assert fit.degenerate
    assert fit.supdist < 1e-12


@given(integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_fit_plane_minimax_supdist_is_attained(seed):
    rng = np.random.default_rng(seed)
    pts = noisy_plane_cloud(rng, 20, 2, 3, 0.05)
    plane, supdist = fit_plane_minimax(pts, 2)
    assert plane.n == 2 and plane.N == 3
    npt.assert_allclose(np.max(plane.distance(pts)), supdist, rtol=1e-9, atol=1e-12)
    # no worse than the least-squares plane
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid)
    lsq = Plane(centroid, vt[:2])
    assert supdist <= np.max(lsq.distance(pts)) + 1e-5


def test_fit_plane_minimax_through_anchor():
    pts = np.array([[1.0, 1.0], [2.0, 2.1], [3.0, 2.9]])
    plane, supdist = fit_plane_minimax(pts, 1, anchor=np.zeros(2))
    assert plane.distance(np.zeros(2))[0] < 1e-9
    npt.assert_allclose(np.max(plane.distance(pts)), supdist, rtol=1e-9, atol=1e-12)


def test_minimax_fit_full_dimension_is_zero():
    fit = minimax_fit(np.eye(3), 3)
    assert fit.supdist == 0.0


def test_sampled_set_basics(line_set):
    assert len(line_set) == 33
    assert line_set.dim == 2
    npt.assert_allclose(line_set.resolution, 1/16)
    npt.assert_allclose(line_set.diameter, 2.0)
    idx = line_set.ball([0.0, 0.0], 0.125)
    npt.assert_array_equal(idx, [14, 15, 16, 17, 18])


def test_sampled_set_index_of(line_set):
    assert line_set.index_of([0.0, 0.0]) == 16
    with raises(PointNotInSet):
        line_set.index_of([0.01, 0.0])
    with raises(PointNotInSet):
        line_set.index_of([0.0])


def test_sampled_set_nearest_ties_to_lowest_index():
    E = SampledSet([[0.0], [2.0]])
    d, i = E.nearest([[1.0]])
    assert d[0] == 1.0
    assert i[0] == 0


def test_sampled_set_rejects_points_outside_box():
    with raises(ValueError):
        SampledSet([[0.0], [2.0]], box=([0.0], 1.0))
