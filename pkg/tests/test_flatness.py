import math

import numpy as np
import numpy.testing as npt

from pytest                import raises
from hypothesis            import example
from hypothesis            import given
from hypothesis            import settings
from hypothesis.strategies import integers
from hypothesis.strategies import sampled_from

from quasiplanes.config           import GeneratorSpec
from quasiplanes.errors           import ScaleBelowResolution
from quasiplanes.tools            import flatness
from quasiplanes.tools.generators import generate
from quasiplanes.tools.geometry   import SampledSet
from quasiplanes.tools.geometry   import random_orthonormal

from .helpers import noisy_plane_cloud


def corner_set(spacing=1/16):
    """Two unit arms meeting at the origin at a right angle."""
    t = np.arange(0, 1 + spacing/2, spacing)
    arm_x = np.stack([t, np.zeros_like(t)], axis=1)
    arm_y = np.stack([np.zeros_like(t[1:]), t[1:]], axis=1)
    return SampledSet(np.vstack([arm_x, arm_y]), meta={"n": 1})


def test_line_is_flat(line_set):
    for r in (0.125, 0.5, 1.0):
        assert flatness.beta(line_set, 16, r) < 1e-12
        assert flatness.beta(line_set, 16, r, centered=True) < 1e-12
        # the farthest points of the axis from the samples are the midpoints
        npt.assert_allclose(flatness.theta(line_set, 16, r), (1/32)/r, rtol=1e-9)


def test_corner_betas():
    E = corner_set()
    # the widest strip is the triangle's height, r / sqrt 2
    npt.assert_allclose(flatness.beta(E, 0, 0.5), 1/(2*math.sqrt(2)), rtol=1e-5)
    npt.assert_allclose(flatness.beta(E, 0, 0.5, centered=True), 1/math.sqrt(2), rtol=1e-5)


@given(integers(0, 2**32 - 1), sampled_from([(1, 2), (1, 3), (2, 3)]),
       sampled_from([0.0, 0.01, 0.3]))
@settings(max_examples=30, deadline=None)
def test_sandwich(seed, dims, noise):
    n, N = dims
    rng = np.random.default_rng(seed)
    E = SampledSet(noisy_plane_cloud(rng, 12, n, N, noise), meta={"n": n})
    r = float(rng.uniform(0.3, 2.0))
    b = flatness.beta(E, 0, r)
    bc = flatness.beta(E, 0, r, centered=True)
    th = flatness.theta(E, 0, r)
    assert 0 <= b <= bc + 1e-12
    assert bc <= 2*b + 4e-6
    assert bc <= th + 1e-12
    assert th <= 1.0


@given(integers(0, 2**32 - 1), sampled_from([(1, 2), (1, 3), (2, 3)]),
       sampled_from([0.0, 0.1, 0.3]))
@example(15, (1, 2), 0.1)
@settings(max_examples=25, deadline=None)
def test_theta_shrinks_no_faster_than_the_radius(seed, dims, noise):
    n, N = dims
    rng = np.random.default_rng(seed)
    E = SampledSet(noisy_plane_cloud(rng, 15, n, N, noise), meta={"n": n})
    r = float(rng.uniform(0.3, 2.0))
    s = float(rng.uniform(0.1, 1.0))
    big, plane = flatness.theta_fit(E, 0, r)
    assert plane.distance(E.points[0])[0] < 1e-9
    small = flatness.theta(E, 0, s*r, planes=[plane])
    assert small <= big/s + 1e-9


def test_profile_theta_is_monotone():
    rng = np.random.default_rng(15)
    E = SampledSet(noisy_plane_cloud(rng, 30, 1, 2, 0.1), meta={"n": 1})
    p = flatness.flatness_profile(E, 0, [2.0, 1.0, 0.6, 0.3])
    ratio = p.scales[:-1]/p.scales[1:]
    assert np.all(p.theta[1:] <= p.theta[:-1]*ratio + 1e-9)
    assert np.all(p.beta_ctr <= p.theta + 1e-12)


@given(integers(0, 2**32 - 1), sampled_from([(1, 2), (1, 3), (2, 3)]))
@settings(max_examples=15, deadline=None)
def test_flatness_is_similarity_invariant(seed, dims):
    n, N = dims
    rng = np.random.default_rng(seed)
    pts = noisy_plane_cloud(rng, 12, n, N, 0.1)
    lam = float(rng.uniform(0.2, 5.0))
    R = random_orthonormal(N, N, rng)
    E = SampledSet(pts, meta={"n": n})
    F = SampledSet(lam*pts @ R.T + rng.standard_normal(N), meta={"n": n})
    r = float(rng.uniform(0.5, 2.0))
    for centered in (False, True):
        npt.assert_allclose(flatness.beta(F, 0, lam*r, centered=centered),
                            flatness.beta(E, 0, r, centered=centered), rtol=0, atol=1e-9)
    npt.assert_allclose(flatness.theta(F, 0, lam*r), flatness.theta(E, 0, r),
                        rtol=0, atol=1e-9)


def test_theta_search_modes(line_set):
    full = flatness.theta(line_set, 16, 0.5)
    assert flatness.theta(line_set, 16, 0.5, search="none") >= full - 1e-12
    with raises(ValueError) as info:
        flatness.theta(line_set, 16, 0.5, search="grid")
    assert "    full\n" in str(info.value)


def test_beta_rejects_nonpositive_radius(line_set):
    with raises(ValueError):
        flatness.beta(line_set, 0, 0.0)


def test_dyadic_sum_refuses_scales_below_resolution(line_set):
    with raises(ScaleBelowResolution):
        flatness.dyadic_beta_sq_sum(line_set, 16, 0.5, base=10, kmax=2)


def test_dyadic_sum_counts_every_level():
    E = corner_set(spacing=1/256)
    total = flatness.dyadic_beta_sq_sum(E, 0, 0.5, base=2, kmax=3)
    # the corner looks the same at every scale
    npt.assert_allclose(total, 4*0.5, rtol=1e-4)


def test_dyadic_sum_over_three_decades_of_a_snowflake():
    E = generate(GeneratorSpec(kind="snowflake", params={"depth": 4, "angle": 0.8})).image_set()
    E.meta.setdefault("n", 1)
    # index 2 is an apex of the finest level; its neighbours are the only
    # samples within 1.5 times the segment length
    i = 2
    r0 = 1000*E.resolution*1.5
    terms = [flatness.beta(E, i, r0/10**k, centered=True)**2 for k in range(4)]
    assert terms[2] > 0 and terms[3] > 0
    total = flatness.dyadic_beta_sq_sum(E, i, r0, base=10, kmax=3)
    npt.assert_allclose(total, sum(terms), rtol=1e-12)
    assert total <= 400/math.log(10)*flatness.dini_beta_integral(E, i, 10*r0)


def test_log_grid_hits_decades():
    radii = flatness.log_grid(1.0, 0.01, 8)
    assert len(radii) == 17
    npt.assert_allclose(radii[[0, 8, 16]], [1.0, 0.1, 0.01])
    with raises(ScaleBelowResolution):
        flatness.log_grid(1.0, 2.0, 8)


def test_trapezoid_log_of_constant():
    radii = flatness.log_grid(1.0, 0.1, 8)
    npt.assert_allclose(flatness.trapezoid_log(radii, np.ones_like(radii)), math.log(10))


def test_dini_integral(line_set):
    assert flatness.dini_beta_integral(line_set, 16, 1.0) < 1e-20
    E = corner_set()
    radii, values, integral = flatness.dini_beta_quadrature(E, 0, 1.0)
    assert radii[-1] <= 1/16
    # beta is 1 / (2 sqrt 2) wherever the ball sees both arms
    assert integral > 0.125*math.log(8)


def test_reifenberg_and_linear_approximation(line_set):
    centers = [8, 16, 24]
    scales = [0.5, 0.25]
    passed, worst = flatness.reifenberg_check(line_set, 0.2, 1.0, centers, scales)
    assert passed
    passed, worst = flatness.linear_approximation_check(line_set, 1e-9, 1.0, centers, scales)
    assert passed

    E = corner_set()
    passed, worst = flatness.linear_approximation_check(E, 0.1, 1.0, [0, 4], [0.5])
    assert not passed
    assert worst[0] == 0
    # nothing below R is tested
    passed, worst = flatness.reifenberg_check(E, 0.1, 0.1, [0], [0.5])
    assert passed and worst is None


def test_profile_and_run(line_set):
    df, profiles = flatness.run(line_set, centers=[24, 8], scales=[0.25, 0.5, 1.0])
    assert [p.index for p in profiles] == [8, 24]
    assert list(df["index"]) == [8, 8, 8, 24, 24, 24]
    assert list(df["scale"][:3]) == [1.0, 0.5, 0.25]
    assert {"x0", "x1", "beta", "beta_ctr", "theta", "resolution"} <= set(df.columns)
    npt.assert_allclose(df["beta"], 0, atol=1e-12)

    p = profiles[0]
    assert p.kmax == 1
    assert p.dyadic_sq_sum < 1e-20
    record = p.to_record()
    assert record["scales"] == [1.0, 0.5, 0.25]

    capped = flatness.flatness_profile(line_set, 8, [1.0], base=2, kmax=2)
    assert capped.kmax == 2


def test_run_needs_scales(line_set):
    with raises(ValueError):
        flatness.run(line_set, centers=[0])
