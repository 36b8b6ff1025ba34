__description__ = \
"""
Extension of an almost affine map off a closed set: F = sum phi_Q A_Q over
the Whitney cubes, its exact first and second derivatives, the extended
family A+, and the measured constants of the extension estimates.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

from ..errors import (CollarViolation, EpsilonTooLarge, HypothesisViolated, PointNotInSet,
                      UnresolvableCube)
from .families import AffineFamily, T_eps, check_almost_affine, check_compatible
from .flatness import dini_beta_integral
from .geometry import AffineMap, SampledSet, operator_norms
from .quasisymmetry import (SampledMap, dini_qs_integral, farthest_point_order,
                            weak_qs_constant)
from .whitney import partition_of_unity, whitney_decompose

# almost affine triples must have eps below this
EPS_CEILING = math.sqrt(2) - 1


class Evaluation(NamedTuple):
    """
    F, DF and D2F at one point.  flag is "E" on the set, "interior" off it,
    "collar" below the sampling resolution and "outside" beyond the box.
    Derivatives are nan where they are not defined.
    """
    value: np.ndarray
    jacobian: np.ndarray
    hessian: np.ndarray
    flag: str


class ExtensionEvaluator(object):
    """
    The extension F of f off E and the extended family A+.

    Parameters
    ----------
    f : SampledMap
        values of f on E (its domain must hold every sample of E).
    family : AffineFamily
        indexed over the samples of E.
    W : WhitneyDecomposition
        cubes of box \\ E.
    eps : float, optional
        measured almost affine constant of (f, E, family).
    """

    def __init__(self, f, family, W, eps=None):

        self.f = f
        self.family = family
        self.W = W
        self.E = W.E
        self.eps = eps
        self.pou = partition_of_unity(W)
        self.values = f.image if f.domain is W.E else f.values_at(W.E.points)

        z, _ = W.anchors
        linear = np.empty((len(W), family.N, family.n))
        shift = np.empty((len(W), family.N))
        lo, hi = 0.5*family.r_min, 2*family.r_max
        for q in range(len(W)):
            rq = W.diameters[q]
            if not lo*(1 - 1e-12) <= rq <= hi*(1 + 1e-12):
                err = "cube {} has diameter {} outside the family scales [{}, {}].\n".format(
                    q, rq, lo, hi)
                raise UnresolvableCube(err)
            try:
                A = family.map(self.E.points[z[q]], rq)
            except PointNotInSet:
                err = "the family has no maps at z_Q = {} of cube {}.\n".format(
                    self.E.points[z[q]].tolist(), q)
                raise UnresolvableCube(err)
            linear[q] = A.linear
            shift[q] = A.shift
        self.linear = linear
        self.shift = shift

    @property
    def n(self):
        return self.family.n

    @property
    def N(self):
        return self.family.N

    def cube_map(self, q):
        """A_Q = A_{z_Q, r_Q}."""
        return AffineMap(self.linear[q], self.shift[q])

    def evaluate(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        n, N = self.n, self.N
        undefined = (np.full((N, n), np.nan), np.full((N, n, n), np.nan))

        d, i = self.W.distance(x)
        if not self.W.inside_box(x):
            A = self.family.map(self.E.points[i], self.family.r_max)
            return Evaluation(A(x), A.linear.copy(), np.zeros((N, n, n)), "outside")
        if d <= 1e-12*max(1.0, float(np.max(np.abs(x)))):
            return Evaluation(self.values[i].copy(), *undefined, "E")
        if len(self.W.locate(x)) == 0:
            return Evaluation(self.values[i].copy(), *undefined, "collar")

        idx, phi, Dphi, D2phi = self.pou(x)
        L = self.linear[idx]
        Ax = L @ x + self.shift[idx]
        value = phi @ Ax
        jac = np.einsum("ka,ki->ai", Ax, Dphi) + np.einsum("k,kai->ai", phi, L)
        cross = np.einsum("kai,kj->aij", L, Dphi)
        hess = cross + np.swapaxes(cross, 1, 2) + np.einsum("ka,kij->aij", Ax, D2phi)
        return Evaluation(value, jac, hess, "interior")

    def F(self, points):
        """F at each point, with the flags."""
        evs = [self.evaluate(x) for x in np.atleast_2d(points)]
        return np.array([e.value for e in evs]), [e.flag for e in evs]

    def DF(self, points):
        return np.array([self.evaluate(x).jacobian for x in np.atleast_2d(points)])

    def D2F(self, points):
        return np.array([self.evaluate(x).hessian for x in np.atleast_2d(points)])

    def aplus(self, x, r):
        """
        A+_{x,r}: the family map on E; the Taylor map of F at x when
        r < d(x)/2; A_{x',r} otherwise.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        d, i = self.W.distance(x)
        xp = self.E.points[i]
        if d <= 1e-12*max(1.0, float(np.max(np.abs(x)))):
            return self.family.map(xp, r)
        if r < 0.5*d:
            ev = self.evaluate(x)
            if ev.flag == "collar":
                err = "{} lies in the resolution collar; A+ at r = {} < d(x)/2 is undefined.\n".format(
                    x.tolist(), r)
                raise CollarViolation(err)
            return AffineMap.taylor(ev.value, ev.jacobian, x)
        return self.family.map(xp, r)


def extend_map(f, family, W=None, E=None, min_level=None):
    """
    Build the extension of f.  (f, E, family) must be eps-almost affine
    with eps < sqrt(2) - 1.

    f: SampledMap on E (or on a superset of E)
    family: AffineFamily over the samples of E
    W: WhitneyDecomposition of the box minus E (built if omitted)
    E: SampledSet, default f.domain
    """
    E = f.domain if E is None else E
    eps = check_almost_affine(f, E, family)
    if eps >= EPS_CEILING:
        err = "(f, E, family) is {}-almost affine; extension needs eps < {}.\n".format(
            eps, EPS_CEILING)
        raise EpsilonTooLarge(err)
    if W is None:
        W = whitney_decompose(E, min_level=min_level)
    return ExtensionEvaluator(f, family, W, eps=eps)


def extend_family(ev, points, scales, ratio=2.0):
    """A+ restricted to the given points and grid scales."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    scales = np.asarray(scales, dtype=float)
    maps = [[ev.aplus(x, r) for r in scales] for x in points]
    linear = np.array([[A.linear for A in row] for row in maps])
    shift = np.array([[A.shift for A in row] for row in maps])
    return AffineFamily(points, scales, linear, shift, eps_nominal=ev.eps or 0.0,
                        ratio=ratio, meta={"extended": True})


def _per_eps(value, eps):
    if eps and eps > 0:
        return value/eps
    return 0.0 if value <= 1e-12 else math.inf


def _ball_samples(x, r, count, rng):
    n = len(x)
    u = rng.standard_normal((count, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = r*rng.uniform(size=count)**(1.0/n)
    return x + u*rad[:, None]


def measure_cube_constants(ev):
    """
    Touching cubes (2Q ∩ 2R nonempty): the norm ratio of A'_Q and A'_R,
    ||A'_Q - A'_R|| / (eps min ||A'||) and the largest |A_Q - A_R| on
    2Q ∪ 2R over eps min ||A'|| min diam.
    """
    W = ev.W
    I, J = W.touching_pairs()
    out = {"pairs": int(len(I)), "norm_ratio": 1.0, "linear_diff": 0.0, "value_diff": 0.0}
    if len(I) == 0:
        return out

    norms = operator_norms(ev.linear)
    lo = np.minimum(norms[I], norms[J])
    out["norm_ratio"] = float(np.max(np.maximum(norms[I], norms[J])/lo))
    diff = operator_norms(ev.linear[I] - ev.linear[J])
    out["linear_diff"] = _per_eps(float(np.max(diff/lo)), ev.eps)

    n = W.n
    unit = np.array(np.meshgrid(*([[-1.0, 1.0]]*n), indexing="ij")).reshape(n, -1).T
    worst = 0.0
    for a, b in zip(I, J):
        verts = np.vstack([W.centers[a] + unit*W.sides[a], W.centers[b] + unit*W.sides[b]])
        gap = (ev.linear[a] - ev.linear[b]) @ verts.T + (ev.shift[a] - ev.shift[b])[:, None]
        size = min(norms[a], norms[b])*min(W.diameters[a], W.diameters[b])
        worst = max(worst, float(np.max(np.linalg.norm(gap, axis=0)))/size)
    out["value_diff"] = _per_eps(worst, ev.eps)
    return out


def measure_far_field(ev, queries, scales, samples=64, seed=0):
    """
    For r >= d(x)/2: the largest ||DF(y) - A'_{x',r}|| / (T_eps(r/d(y)) eps
    ||A'_{x',r}||) over y in B(x, 2r) off E, and the largest
    |F(y) - A_{x',r}(y)| / (eps ||A'_{x',r}|| r) over y in B(x, r).
    """
    rng = np.random.default_rng(seed)
    eps = ev.eps or 0.0
    deriv = value = 0.0
    used = 0
    for x in np.atleast_2d(queries):
        d, _ = ev.W.distance(x)
        for r in scales:
            if r < 0.5*d:
                continue
            A = ev.aplus(x, r)
            norm = A.norm
            for y in _ball_samples(x, 2*r, samples, rng):
                e = ev.evaluate(y)
                if e.flag not in ("interior", "E"):
                    continue
                used += 1
                if np.linalg.norm(y - x) <= r:
                    value = max(value, float(np.linalg.norm(e.value - A(y)))/(norm*r))
                if e.flag == "interior":
                    dy, _ = ev.W.distance(y)
                    T = T_eps(eps, max(1.0, r/dy))
                    gap = float(np.linalg.norm(e.jacobian - A.linear, ord=2))
                    deriv = max(deriv, gap/(T*norm))
    return {"far_derivative": _per_eps(deriv, eps), "far_value": _per_eps(value, eps),
            "samples": used}


def measure_near_field(ev, queries, scales, samples=64, seed=0):
    """
    For x off E and r < d(x)/2: the largest |F(y) - A_{x,r}(y)| over
    eps (r/d(x)) ||A'_{x,r}|| r, and ||DF(y) - DF(x)|| over
    eps (r/d(x)) min(||DF(y)||, ||DF(x)||), for y in B(x, r).
    """
    rng = np.random.default_rng(seed)
    eps = ev.eps or 0.0
    value = lip = 0.0
    used = 0
    for x in np.atleast_2d(queries):
        ex = ev.evaluate(x)
        if ex.flag != "interior":
            continue
        d, _ = ev.W.distance(x)
        nx = float(np.linalg.norm(ex.jacobian, ord=2))
        for r in scales:
            if r >= 0.5*d:
                continue
            A = AffineMap.taylor(ex.value, ex.jacobian, x)
            for y in _ball_samples(x, r, samples, rng):
                e = ev.evaluate(y)
                if e.flag != "interior":
                    continue
                used += 1
                ny = float(np.linalg.norm(e.jacobian, ord=2))
                value = max(value, float(np.linalg.norm(e.value - A(y)))/((r/d)*nx*r))
                gap = float(np.linalg.norm(e.jacobian - ex.jacobian, ord=2))
                lip = max(lip, gap/((r/d)*min(nx, ny)))
    return {"near_value": _per_eps(value, eps), "near_lipschitz": _per_eps(lip, eps),
            "samples": used}


def _condition(linear):
    sv = np.linalg.svd(linear, compute_uv=False)
    return float(np.max(sv[..., 0]/sv[..., -1]))


@dataclass
class ExtensionReport:
    """Measured constants of one extension; C_* are divided by eps."""
    eps: float
    C_compat: float
    C_aa: float
    H_F: float
    H_family: float
    H_aplus: float
    dini_beta_max: float
    C_E: float
    kappa: float
    n_samples: int
    C_H: float = math.nan
    H: float = math.nan
    rho: float = math.nan
    rho_H: float = math.nan
    cube: dict = field(default_factory=dict)
    far: dict = field(default_factory=dict)
    near: dict = field(default_factory=dict)

    def to_record(self):
        rec = {k: getattr(self, k) for k in ("eps", "C_compat", "C_aa", "H_F", "H_family",
                                             "H_aplus", "dini_beta_max", "C_E", "kappa",
                                             "n_samples", "C_H", "H", "rho", "rho_H")}
        rec.update({"cube": dict(self.cube), "far": dict(self.far), "near": dict(self.near)})
        return rec


def sample_extension(ev, spacing=None):
    """
    F on a regular grid of the box together with the samples of E, minus
    the collar.  Returns a SampledMap (not checked for injectivity).
    """
    corner, side = ev.W.box
    n = ev.n
    if spacing is None:
        spacing = side/64
    k = int(math.floor(side/spacing))
    ticks = [corner[j] + spacing*np.arange(k + 1) for j in range(n)]
    grid = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, n)

    d, _ = ev.E.nearest(grid)
    grid = grid[d > 1e-12*max(1.0, side)]
    keep = [x for x in grid if not ev.W.in_collar(x)]
    pts = np.vstack([ev.E.points] + ([np.array(keep)] if keep else []))
    values, _ = ev.F(pts)
    return SampledMap(SampledSet(pts, box=ev.W.box, meta={"n": n}), values,
                      meta={"n": n}, embedding=False)


def measure_extension_theorems(ev, scales=None, spacing=None, n_base=32, qs_map=None,
                               rmax=None, grid_per_decade=8, n_beta_points=4,
                               samples=32, cap=400, seed=0, H=None, rho=None):
    """
    Measured constants of the extension theorems on one instance.

    C_compat and C_aa are the compatibility and almost affine constants of
    (F, A+) on a grid sample, over eps.  H_F is the weak quasisymmetry
    constant of F on that sample.  dini_beta_max is the largest Dini
    integral of beta^2 of F(R^n) at a few points of E, compared with
    C_E + eps^2 through kappa; C_E comes from qs_map (a map sampled around
    E) when given, and is nan otherwise.  C_H = (H_F - 1) / eps is the
    constant of H_F <= 1 + C eps.

    With H given, every member of the family must have lambda_n <= H lambda_1
    and the report also records H, rho (default 2) and the target rho H of
    the weak quasisymmetry bound on F.

    ev: ExtensionEvaluator
    scales: grid scales of A+ (default: the family scales)
    spacing: grid spacing of the F sample (default: box side / 64)
    n_base: base points of A+, spread by farthest-point selection
    H, rho: weak quasisymmetry branch; H bounds lambda_n / lambda_1 of the family
    """

    eps = ev.eps or 0.0
    H_family = _condition(ev.family.linear)
    if H is not None:
        rho = 2.0 if rho is None else float(rho)
        if not H_family <= H*(1 + 1e-12):
            err = "family has lambda_n / lambda_1 = {} > H = {}.\n".format(H_family, H)
            raise HypothesisViolated(err, precondition="lambda_n<=H*lambda_1")
    Fmap = sample_extension(ev, spacing)
    D = Fmap.domain
    scales = ev.family.scales if scales is None else np.asarray(scales, dtype=float)

    base_idx = farthest_point_order(D.points, n_base)
    aplus = extend_family(ev, D.points[base_idx], scales, ratio=ev.family.ratio)
    compat, _ = check_compatible(aplus)
    aa = check_almost_affine(Fmap, D, aplus)

    H_F = weak_qs_constant(Fmap, cap=cap).H

    image = SampledSet(Fmap.image, meta={"n": ev.n})
    on_E = base_idx[base_idx < len(ev.E)]
    beta_points = on_E[:n_beta_points] if len(on_E) else base_idx[:n_beta_points]
    r_img = 0.25*image.diameter if rmax is None else rmax
    dini = 0.0
    for i in beta_points:
        dini = max(dini, dini_beta_integral(image, int(i), r_img,
                                            grid_per_decade=grid_per_decade, n=ev.n))

    C_E = math.nan
    if qs_map is not None:
        r_dom = 0.25*qs_map.domain.diameter if rmax is None else rmax
        C_E = max(dini_qs_integral(qs_map, ev.E.points[int(i)], r_dom,
                                   grid_per_decade=grid_per_decade, cap=cap)
                  for i in beta_points)
    bound = (0.0 if math.isnan(C_E) else C_E) + eps**2
    kappa = dini/bound if bound > 0 else (0.0 if dini == 0 else math.inf)

    queries = D.points[base_idx]
    return ExtensionReport(
        eps=eps,
        C_compat=_per_eps(compat, eps),
        C_aa=_per_eps(aa, eps),
        H_F=H_F,
        H_family=H_family,
        H_aplus=_condition(aplus.linear),
        dini_beta_max=dini,
        C_E=C_E,
        kappa=kappa,
        n_samples=len(D),
        C_H=_per_eps(max(H_F - 1.0, 0.0), eps),
        H=math.nan if H is None else float(H),
        rho=math.nan if H is None else rho,
        rho_H=math.nan if H is None else rho*H,
        cube=measure_cube_constants(ev),
        far=measure_far_field(ev, queries, scales, samples=samples, seed=seed),
        near=measure_near_field(ev, queries, scales, samples=samples, seed=seed))


def point_frame(ev, points):
    """One row per point: x, F(x), d(x) and the flag."""
    rows = []
    for x in np.atleast_2d(points):
        e = ev.evaluate(x)
        d, _ = ev.W.distance(x)
        row = {"x{}".format(j): float(v) for j, v in enumerate(x)}
        row.update({"F{}".format(j): float(v) for j, v in enumerate(e.value)})
        row.update({"d": d, "flag": e.flag})
        rows.append(row)
    return pd.DataFrame(rows)
