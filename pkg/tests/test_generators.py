import math

import numpy as np
import numpy.testing as npt

from pytest                import raises
from pytest                import mark
from hypothesis            import given
from hypothesis            import settings
from hypothesis.strategies import floats
from hypothesis.strategies import integers

from quasiplanes.config             import GeneratorSpec
from quasiplanes.errors             import BadSpec
from quasiplanes.tools              import generators as gen
from quasiplanes.tools.families     import check_almost_affine
from quasiplanes.tools.families     import scale_grid
from quasiplanes.tools.quasisymmetry import weak_qs_constant


def polyline_length(points):
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def test_generate_is_deterministic():
    spec = {"kind": "perturbed_affine", "n": 2, "N": 3, "seed": 11,
            "resolution": 0.25, "params": {"eps": 0.05}}
    a, b = gen.generate(spec), gen.generate(GeneratorSpec.from_dict(spec))
    npt.assert_array_equal(a.points, b.points)
    npt.assert_array_equal(a.image, b.image)


@given(integers(0, 2**32 - 1), floats(0.1, 10.0))
@settings(max_examples=10, deadline=None)
def test_similarity_scales_every_distance(seed, scale):
    f = gen.generate({"kind": "similarity", "n": 2, "N": 3, "seed": seed,
                      "resolution": 0.5, "params": {"scale": scale}})
    i, j = 0, len(f) - 1
    npt.assert_allclose(np.linalg.norm(f.image[i] - f.image[j]),
                        scale*np.linalg.norm(f.points[i] - f.points[j]))
    npt.assert_allclose(weak_qs_constant(f).H, 1.0, atol=1e-9)


def test_radial_qc():
    f = gen.generate({"kind": "radial_qc", "resolution": 0.25, "params": {"alpha": 1.0}})
    npt.assert_array_equal(f.image, f.points)

    g = gen.generate({"kind": "radial_qc", "resolution": 0.25, "params": {"alpha": 0.5}})
    npt.assert_allclose(np.linalg.norm(g.image, axis=1),
                        np.sqrt(np.linalg.norm(g.points, axis=1)))


def test_straight_snowflake_is_the_segment():
    f = gen.generate({"kind": "snowflake", "params": {"depth": 3, "angle": 0.0}})
    assert len(f) == 4**3 + 1
    npt.assert_allclose(f.image[:, 0], f.points[:, 0], atol=1e-15)
    npt.assert_allclose(f.image[:, 1], 0.0, atol=1e-15)


@mark.parametrize("angle", [math.pi/3, 0.3, 1.2])
def test_snowflake_length_growth(angle):
    depth = 4
    f = gen.generate({"kind": "snowflake", "params": {"depth": depth, "angle": angle}})
    npt.assert_allclose(polyline_length(f.image),
                        gen.snowflake_length_factor(angle)**depth)
    npt.assert_allclose(f.image[[0, -1]], [[0.0, 0.0], [1.0, 0.0]], atol=1e-12)


def test_harmonic_angles():
    f = gen.generate({"kind": "snowflake", "params": {"depth": 3, "harmonic": 0.9}})
    npt.assert_allclose(f.meta["angles"], [0.9, 0.45, 0.3])
    expected = np.prod([gen.snowflake_length_factor(a) for a in f.meta["angles"]])
    npt.assert_allclose(polyline_length(f.image), expected)


@mark.parametrize("spec", [
    {"kind": "snowflake", "params": {"depth": 13}},
    {"kind": "snowflake", "params": {"angle": 1.6}},
    {"kind": "snowflake", "params": {"angle": 0.3, "harmonic": 0.3}},
    {"kind": "snowflake", "params": {"depth": 3, "angles": [0.1, 0.2]}},
    {"kind": "radial_qc", "params": {"alpha": 1.5}},
    {"kind": "radial_qc", "n": 2, "N": 3},
    {"kind": "similarity", "params": {"scale": 0.0}},
    {"kind": "similarity", "params": {"spin": 1}},
    {"kind": "grid_set", "resolution": -1.0},
    {"kind": "grid_set", "params": {"support": "torus"}},
    {"kind": "perturbed_affine", "params": {}},
    {"kind": "perturbed_affine", "params": {"eps": 0.1, "H": 0.5}},
    {"kind": "circle_set", "n": 2, "N": 3},
    {"kind": "hilbert_curve"},
    {"params": {}},
])
def test_bad_specs(spec):
    with raises(BadSpec):
        gen.generate(spec)


def test_grid_and_circle_sets():
    E = gen.generate({"kind": "grid_set", "n": 1, "N": 2, "resolution": 0.125})
    assert len(E) == 17
    npt.assert_allclose(E.points[:, 1], 0.0)
    npt.assert_allclose(E.resolution, 0.125)

    C = gen.generate({"kind": "circle_set", "N": 3, "resolution": 0.1,
                      "params": {"radius": 2.0}})
    assert len(C) == math.ceil(4*math.pi/0.1)
    npt.assert_allclose(np.linalg.norm(C.points, axis=1), 2.0)

    B = gen.generate({"kind": "grid_set", "n": 2, "N": 2, "resolution": 0.5,
                      "params": {"support": "ball"}})
    assert len(B) == 13


def test_cantor_points():
    pts = gen.cantor_points(1, 1/6, depth=1)
    assert np.all((pts[:, 0] <= -1/3 + 1e-12) | (pts[:, 0] >= 1/3 - 1e-12))
    npt.assert_allclose([pts.min(), pts.max()], [-1.0, 1.0])


def test_perturbed_affine_jacobian_and_eps():
    pa = gen.PerturbedAffine.from_spec({"kind": "perturbed_affine", "n": 2, "N": 3,
                                        "seed": 3, "params": {"eps": 0.05, "H": 2.0}})
    npt.assert_allclose(pa.eps, 0.05)
    x = np.array([0.3, -0.2])
    h = 1e-6
    fd = np.column_stack([(pa(x + h*e)[0] - pa(x - h*e)[0])/(2*h) for e in np.eye(2)])
    npt.assert_allclose(pa.jacobian(x)[0], fd, atol=1e-8)
    npt.assert_allclose(pa.family_map(x, 1.0).linear, pa.A0)
    npt.assert_allclose(pa.family_map(x, 0.1)(x), pa(x)[0])


def test_perturbed_affine_family_is_almost_affine():
    spec = {"kind": "perturbed_affine", "n": 1, "N": 2, "seed": 5, "resolution": 1/32,
            "params": {"eps": 0.1, "rho": 0.125}}
    f = gen.generate(spec)
    pa = gen.PerturbedAffine.from_spec(spec)
    F = pa.sample_family(f.points, scale_grid(1/16, 6))
    assert F.eps_nominal == pa.eps
    assert check_almost_affine(f, f.domain, F) <= pa.eps*(1 + 1e-9)
