import math

import numpy as np
import numpy.testing as npt

from pytest                import raises
from hypothesis            import given
from hypothesis            import settings
from hypothesis.strategies import integers
from hypothesis.strategies import sampled_from

from quasiplanes.errors           import DomainError
from quasiplanes.errors           import EpsilonTooLarge
from quasiplanes.errors           import HypothesisViolated
from quasiplanes.errors           import PointNotInSet
from quasiplanes.tools            import families as fam
from quasiplanes.tools.geometry   import AffineMap
from quasiplanes.tools.geometry   import SampledSet
from quasiplanes.tools.geometry   import random_orthonormal
from quasiplanes.tools.quasisymmetry import SampledMap


def identity_family(base, scales):
    n = np.atleast_2d(base).shape[1] if np.ndim(base) > 1 else 1
    return fam.AffineFamily.constant(base, scales, AffineMap(np.eye(n), np.zeros(n)))


def random_family(seed, eps=0.1, n=2, N=3, m=10, K=6):
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 1, (m, n))
    L0 = random_orthonormal(N, n, rng)
    return fam.random_compatible_family(base, fam.scale_grid(1/16, K), L0, eps, rng)


def test_T_eps():
    npt.assert_allclose(fam.T_eps(0.0, 8.0), 7.0)
    npt.assert_allclose(fam.T_eps(0.3, 1.0), 1.0)
    npt.assert_allclose(fam.T_eps(1.0, 2.0), 3*2**2)
    with raises(DomainError):
        fam.T_eps(0.1, 0.5)
    with raises(DomainError):
        fam.T_eps(-0.1, 2.0)


def test_tau():
    assert fam.tau([0.0], 1.0, [3.0], 2.0) == 6.0
    assert fam.tau([0.0], 1.0, [0.0], 4.0) == 4.0


def test_psi():
    npt.assert_allclose(fam.psi([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), 4.0)
    npt.assert_allclose(fam.psi([[0.0], [2.0], [0.5]]), 1.0)
    assert fam.psi([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]) == math.inf
    with raises(ValueError):
        fam.psi([[0.0, 0.0]])


def test_constants():
    assert fam.P_adapt(1) == 90.0
    npt.assert_allclose(fam.post_constant(1.0, 0.0), 10.0)
    assert fam.post_constant(2.0, 0.1) > fam.post_constant(1.0, 0.1)


def test_family_lookup_and_validation():
    scales = fam.scale_grid(0.25, 3)
    F = identity_family([[0.0], [1.0]], scales)
    assert (F.n, F.N, len(F)) == (1, 1, 6)
    assert F.grid_index(0.5) == 1
    assert F.grid_index(0.6) is None
    assert F.scale_index(100.0) == 2
    npt.assert_allclose(F.map([1.0], 0.5)([3.0]), [3.0])
    with raises(PointNotInSet):
        F.map([0.5], 0.5)
    with raises(ValueError):
        fam.AffineFamily([[0.0]], [1.0, 3.0], np.ones((1, 2, 1, 1)), np.zeros((1, 2, 1)))
    with raises(ValueError):
        fam.AffineFamily([[0.0]], [1.0], np.ones((1, 1, 1, 2)), np.zeros((1, 1, 1)))


def test_family_records_and_post():
    F = random_family(3, n=1, N=2, m=3, K=2)
    G = fam.AffineFamily.from_records(F.to_records(), eps_nominal=F.eps_nominal)
    npt.assert_allclose(G.linear, F.linear)
    npt.assert_allclose(G.shift, F.shift)

    outer = AffineMap(2*np.eye(2), [1.0, 0.0])
    x = F.base_points[1]
    npt.assert_allclose(F.post(outer).map(x, F.r_min)([0.3]),
                        outer(F.map(x, F.r_min)([0.3])))


def test_check_compatible_finds_the_worst_pair():
    base = [[0.0], [0.5], [5.0]]
    scales = fam.scale_grid(1.0, 2)
    linear = np.ones((3, 2, 1, 1))
    linear[1, :] = 1.1
    linear[2, :] = 3.0
    F = fam.AffineFamily(base, scales, linear, np.zeros((3, 2, 1)))
    eps, witness = fam.check_compatible(F)
    # the far point never pairs with the others
    npt.assert_allclose(eps, 0.1)
    assert {witness[0], witness[2]} == {0, 1}


def test_approximation_error():
    E = SampledSet(np.linspace(0, 1, 11))
    f = SampledMap(E, E.points + 0.01)
    F = identity_family(E.points, fam.scale_grid(0.1, 3))
    value, witness = fam.approximation_error(f, F)
    npt.assert_allclose(value, 0.1)
    assert witness[1] == 0
    npt.assert_allclose(fam.check_almost_affine(f, E, F), 0.1)


@given(integers(0, 2**32 - 1), sampled_from([1e-3, 0.05, 0.5]),
       sampled_from([(1, 1), (1, 2), (2, 2), (2, 3)]))
@settings(max_examples=20, deadline=None)
def test_random_compatible_family_is_compatible(seed, eps, dims):
    n, N = dims
    F = random_family(seed, eps=eps, n=n, N=N)
    measured, _ = F.compatibility
    assert measured <= eps*(1 + 1e-9)
    assert F.is_compatible()
    # every map fixes the base point's value under z -> L0 z
    for i in (0, len(F.base_points) - 1):
        x = F.base_points[i]
        npt.assert_allclose(F.map_at(i, 0)(x), F.map_at(i, len(F.scales) - 1)(x))


def test_random_compatible_family_rejects_large_eps():
    with raises(ValueError):
        random_family(0, eps=0.6)


@given(integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_pre_estimates_hold(seed):
    F = random_family(seed, eps=0.3)
    rng = np.random.default_rng(seed)
    m, K = F.linear.shape[:2]
    checked = 0
    for _ in range(40):
        i, j = (int(v) for v in rng.integers(m, size=2))
        k, l = (int(v) for v in rng.integers(K, size=2))
        try:
            reports = [fam.verify_inequality(kind, family=F, i=i, k=k, j=j, l=l)
                       for kind in ("pre_a", "pre_b")]
            reports += [fam.verify_inequality(kind, family=F, i=i, k=k, j=j, l=l, a=8.0)
                        for kind in ("pre_c", "pre_d")]
        except HypothesisViolated:
            continue
        checked += 1
        assert all(rep.slack >= -1e-9 for rep in reports)
    assert checked > 0


def test_hypotheses_are_named():
    F = random_family(1, eps=0.3)
    with raises(HypothesisViolated) as info:
        fam.verify_inequality("pre_a", family=F, i=0, k=0, j=1, l=0, eps=1e-6)
    assert info.value.precondition == "compatible"
    with raises(HypothesisViolated) as info:
        fam.verify_inequality("pre_c", family=F, i=0, k=0, j=0, l=0, a=0.5)
    assert info.value.precondition == "a>=1"
    with raises(ValueError):
        fam.verify_inequality("no_such_kind")


def test_compat_single_pair():
    F = random_family(2, eps=0.2)
    rep = fam.verify_inequality("compat", family=F, i=0, k=1, j=0, l=2)
    assert rep.slack >= 0
    with raises(HypothesisViolated):
        fam.verify_inequality("compat", family=F, i=0, k=0, j=0, l=3)


def test_post_estimates_on_an_affine_map():
    E = SampledSet(np.linspace(0, 1, 65))
    f = SampledMap(E, 2*E.points)
    F = fam.AffineFamily.constant(E.points, fam.scale_grid(1/32, 6),
                                  AffineMap([[2.0]], [0.0]), eps_nominal=0.01)
    z = np.array([[0.2], [0.3]])
    for kind in ("post_a", "post_b"):
        rep = fam.verify_inequality(kind, f=f, family=F, i=10, k=0, j=12, l=1, z=z,
                                    a=2.0, eps=0.01)
        assert rep.lhs == 0.0 and rep.rhs > 0
        assert rep.slack >= 0


def test_ab_bound():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    A = AffineMap(np.eye(2), np.zeros(2))
    B = AffineMap(np.eye(2)*1.01, np.zeros(2))
    z = np.array([[5.0, 5.0], [0.2, 0.2]])
    rep = fam.verify_inequality("AB_bound", A=A, B=B, V=V, z=z)
    assert rep.slack >= 0
    with raises(HypothesisViolated):
        fam.verify_inequality("AB_bound", A=A, B=B, V=V[:2], z=z)


def test_holder_on_an_affine_map():
    E = SampledSet(np.linspace(0, 1, 129))
    f = SampledMap(E, E.points)
    F = identity_family(E.points, fam.scale_grid(1/64, 6))
    rep = fam.verify_inequality("holder", f=f, family=F, x0=E.points[64], r0=0.5)
    assert rep.slack >= 0
    with raises(HypothesisViolated):
        fam.verify_inequality("holder", f=f, family=F, x0=E.points[64], r0=0.3)


def test_stabilize_large_scales():
    F = random_family(4, eps=0.1, K=8)
    G = fam.stabilize_large_scales(F, 0)
    kD = int(np.flatnonzero(F.scales >= F.base_set.diameter)[0])
    npt.assert_allclose(G.linear[:, :kD + 1], F.linear[:, :kD + 1])
    npt.assert_allclose(G.linear[:, kD + 1:], np.broadcast_to(
        F.linear[0, kD], G.linear[:, kD + 1:].shape))
    assert G.meta["stable_from"] == F.scales[kD]


def test_adapt_small_scales_interpolates():
    E = SampledSet(np.linspace(0, 1, 129))
    f = SampledMap(E, np.hstack([E.points, 1e-5*np.sin(6*E.points)]))
    L = AffineMap([[1.0], [0.0]], [0.0, 0.0])
    F = fam.AffineFamily.constant(E.points, fam.scale_grid(1/64, 4), L)
    G = fam.adapt_small_scales(f, F, E.points[64], 1/32)
    assert G.eps_nominal == fam.P_adapt(1)*G.meta["eps_in"]
    x = G.base_points[0]
    A = G.map(x, 1/64)
    npt.assert_allclose(A(x + 1/64), f.values_at(x + 1/64)[0], atol=1e-12)


def test_adapt_small_scales_rejects_large_eps():
    E = SampledSet(np.linspace(0, 1, 129))
    f = SampledMap(E, np.hstack([E.points, 0.3*np.sin(6*E.points)]))
    F = fam.AffineFamily.constant(E.points, fam.scale_grid(1/64, 4),
                                  AffineMap([[1.0], [0.0]], [0.0, 0.0]))
    with raises(EpsilonTooLarge):
        fam.adapt_small_scales(f, F, E.points[64], 1/32)


def test_ineq_report_record():
    rep = fam.IneqReport.build("pre_a", 1.0, 2.0, i=np.int64(3))
    assert rep.slack == 1.0
    assert rep.to_record()["witness"] == {"i": 3}
