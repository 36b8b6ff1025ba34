__description__ = \
"""
Families of affine maps indexed by (base point, scale): compatibility and
almost-affine checks, the T_eps / tau / Psi quantities, the large- and
small-scale transforms, and numerical verifiers for the estimates that
compatible and almost affine families satisfy.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist, pdist

from ..errors import (DomainError, EpsilonTooLarge, HypothesisViolated,
                      UnsupportedDimension, ZeroLinearPart)
from .flatness import theta as theta_number
from .geometry import (BALL_SLACK, AffineMap, Plane, SampledSet, affine_from_samples,
                       canonical_frame, operator_norms, singular_values)
from .quasisymmetry import farthest_point_order
from .records import plain

# relative slack when comparing a measured epsilon to a claimed one
EPS_SLACK = 1e-9

# pairs of base points handled per vectorised block
PAIR_CHUNK = 200000


def scale_grid(r_min, count, ratio=2.0):
    """Geometric scale grid r_min * ratio^k, k = 0 .. count-1."""
    return r_min*ratio**np.arange(count)


class AffineFamily(object):
    """
    Affine maps A_{x,r}: R^n -> R^N, one per base point and grid scale.

    Parameters
    ----------
    base_points : array-like, shape (m, n)
        the index set.
    scales : array-like, shape (K,)
        geometric grid r_min * ratio^k, ascending.
    linear : array-like, shape (m, K, N, n)
        linear parts A'_{x,r}.
    shift : array-like, shape (m, K, N)
        A_{x,r}(0).
    eps_nominal : float
        the compatibility constant the family claims.
    ratio : float (default: 2)
        ratio of the scale grid.
    meta : dict, optional
        provenance.
    """

    def __init__(self, base_points, scales, linear, shift, eps_nominal=0.0, ratio=2.0,
                 meta=None):

        base_points = np.asarray(base_points, dtype=float)
        if base_points.ndim == 1:
            base_points = base_points.reshape(-1, 1)
        scales = np.asarray(scales, dtype=float).reshape(-1)
        linear = np.asarray(linear, dtype=float)
        shift = np.asarray(shift, dtype=float)

        m, n = base_points.shape
        K = len(scales)
        if m == 0 or K == 0:
            err = "an affine family needs at least one base point and one scale.\n"
            raise ValueError(err)
        if linear.ndim != 4 or linear.shape[:2] != (m, K) or linear.shape[3] != n:
            err = "linear parts have shape {}, expected ({}, {}, N, {}).\n".format(
                linear.shape, m, K, n)
            raise ValueError(err)
        N = linear.shape[2]
        if shift.shape != (m, K, N):
            err = "shifts have shape {}, expected ({}, {}, {}).\n".format(
                shift.shape, m, K, N)
            raise ValueError(err)
        if N < n:
            err = "maps must go from R^n to R^N with N >= n.\n"
            raise ValueError(err)
        if np.any(scales <= 0):
            err = "scales must be positive.\n"
            raise ValueError(err)
        expected = scales[0]*ratio**np.arange(K)
        if not np.allclose(scales, expected, rtol=1e-9, atol=0):
            err = "scales must form the grid r_min * {}^k in ascending order.\n".format(
                ratio)
            raise ValueError(err)

        self.base_points = base_points
        self.scales = scales
        self.linear = linear
        self.shift = shift
        self.eps_nominal = float(eps_nominal)
        self.ratio = float(ratio)
        self.meta = dict(meta or {})

    def __len__(self):
        return self.linear.shape[0]*self.linear.shape[1]

    def __repr__(self):
        return "AffineFamily(m={}, scales={}, n={}, N={}, eps_nominal={})".format(
            self.linear.shape[0], len(self.scales), self.n, self.N, self.eps_nominal)

    @property
    def n(self):
        return self.base_points.shape[1]

    @property
    def N(self):
        return self.linear.shape[2]

    @property
    def r_min(self):
        return float(self.scales[0])

    @property
    def r_max(self):
        return float(self.scales[-1])

    @cached_property
    def base_set(self):
        return SampledSet(self.base_points)

    @cached_property
    def norms(self):
        """Operator norms ||A'_{x,r}||, shape (m, K)."""
        return operator_norms(self.linear)

    @cached_property
    def compatibility(self):
        """(eps_measured, witness) from check_compatible."""
        return check_compatible(self)

    def is_compatible(self):
        return self.compatibility[0] <= self.eps_nominal*(1 + EPS_SLACK)

    def scale_index(self, r):
        """Index of the grid scale nearest to r in log scale."""
        if r <= 0:
            err = "scale must be positive, got {}.\n".format(r)
            raise ValueError(err)
        k = int(round(math.log(r/self.scales[0], self.ratio)))
        return min(max(k, 0), len(self.scales) - 1)

    def grid_index(self, r):
        """Index of r if it is a grid scale, else None."""
        k = self.scale_index(r)
        if abs(self.scales[k] - r) <= 1e-9*r:
            return k
        return None

    def base_index(self, x):
        if isinstance(x, (int, np.integer)):
            return int(x)
        return self.base_set.index_of(x)

    def map_at(self, i, k):
        return AffineMap(self.linear[i, k], self.shift[i, k])

    def map(self, x, r):
        """A_{x,r}, with r looked up on the grid."""
        return self.map_at(self.base_index(x), self.scale_index(r))

    def replace(self, linear=None, shift=None, eps_nominal=None, base_points=None,
                meta=None):
        return AffineFamily(self.base_points if base_points is None else base_points,
                            self.scales,
                            self.linear if linear is None else linear,
                            self.shift if shift is None else shift,
                            self.eps_nominal if eps_nominal is None else eps_nominal,
                            ratio=self.ratio,
                            meta=self.meta if meta is None else meta)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return self.replace(linear=self.linear[idx], shift=self.shift[idx],
                            base_points=self.base_points[idx])

    def post(self, outer):
        """Family outer o A_{x,r}."""
        linear = np.einsum("ab,mkbn->mkan", outer.linear, self.linear)
        shift = np.einsum("ab,mkb->mka", outer.linear, self.shift) + outer.shift
        return self.replace(linear=linear, shift=shift)

    @classmethod
    def constant(cls, base_points, scales, A, eps_nominal=0.0, ratio=2.0):
        """Every A_{x,r} equal to A."""
        base_points = np.asarray(base_points, dtype=float)
        if base_points.ndim == 1:
            base_points = base_points.reshape(-1, 1)
        m, K = base_points.shape[0], len(scales)
        linear = np.broadcast_to(A.linear, (m, K) + A.linear.shape).copy()
        shift = np.broadcast_to(A.shift, (m, K) + A.shift.shape).copy()
        return cls(base_points, scales, linear, shift, eps_nominal, ratio=ratio)

    @classmethod
    def from_function(cls, base_points, scales, func, eps_nominal=0.0, ratio=2.0,
                      meta=None):
        """Build the family from func(x, r) -> AffineMap."""
        base_points = np.asarray(base_points, dtype=float)
        if base_points.ndim == 1:
            base_points = base_points.reshape(-1, 1)
        maps = [[func(x, r) for r in scales] for x in base_points]
        linear = np.array([[A.linear for A in row] for row in maps])
        shift = np.array([[A.shift for A in row] for row in maps])
        return cls(base_points, scales, linear, shift, eps_nominal, ratio=ratio,
                   meta=meta)

    def to_records(self):
        """One dict per (base, scale) with the matrix and shift."""
        records = []
        for i, x in enumerate(self.base_points):
            for k, r in enumerate(self.scales):
                records.append({"base": x.tolist(),
                                "scale": float(r),
                                "matrix": self.linear[i, k].tolist(),
                                "shift": self.shift[i, k].tolist()})
        return records

    @classmethod
    def from_records(cls, records, eps_nominal=0.0, ratio=2.0, meta=None):
        bases = []
        for rec in records:
            b = tuple(rec["base"])
            if b not in bases:
                bases.append(b)
        scales = np.array(sorted({float(rec["scale"]) for rec in records}))
        lookup = {(tuple(rec["base"]), float(rec["scale"])): rec for rec in records}
        if len(lookup) != len(bases)*len(scales):
            err = "family records do not hold exactly one map per (base, scale).\n"
            raise ValueError(err)
        linear = np.array([[lookup[(b, r)]["matrix"] for r in scales] for b in bases],
                          dtype=float)
        shift = np.array([[lookup[(b, r)]["shift"] for r in scales] for b in bases],
                         dtype=float)
        return cls(np.array(bases), scales, linear, shift, eps_nominal, ratio=ratio,
                   meta=meta)


def T_eps(eps, t):
    """(2 log2 t + 1) t^(2 log2(1 + eps)) for t >= 1."""
    if t < 1:
        if t < 1 - 1e-12:
            err = "T_eps is defined for t >= 1, got {}.\n".format(t)
            raise DomainError(err)
        t = 1.0
    if eps < 0:
        err = "T_eps needs eps >= 0, got {}.\n".format(eps)
        raise DomainError(err)
    return (2*math.log2(t) + 1)*t**(2*math.log2(1 + eps))


def tau(x, r, y, s):
    """max{r, s, 2|x - y|} / min{r, s}."""
    d = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return max(r, s, 2*d)/min(r, s)


def psi(V, vol_tol=1e-12):
    """
    (diam V)^n over the measure of the convex hull of V, infinite when the
    hull is flat.  General point sets are handled up to n = 3; simplices in
    any dimension.
    """

    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    k, n = V.shape
    if k < 2:
        err = "Psi needs at least two points.\n"
        raise ValueError(err)

    diam = float(np.max(pdist(V)))
    if diam == 0:
        return math.inf

    if n == 1:
        vol = float(V.max() - V.min())
    elif k == n + 1:
        vol = abs(float(np.linalg.det(V[1:] - V[0])))/math.factorial(n)
    elif n <= 3:
        try:
            vol = float(ConvexHull(V).volume)
        except Exception:
            return math.inf
    else:
        err = "Psi of a general point set is only computed for n <= 3, got n = {}.\n".format(n)
        raise UnsupportedDimension(err)

    if vol <= vol_tol*diam**n:
        return math.inf
    return diam**n/vol


def P_adapt(n):
    """Blow-up factor of epsilon under adapt_small_scales: 18 (1 + 2 (2n)^((n+1)/2))."""
    return 18.0*(1 + 2*(2.0*n)**((n + 1)/2.0))


def post_constant(a, eps):
    """
    Constant in the estimate for affine maps approximating an almost affine
    map, given a >= 1 and eps <= a.
    """
    Ta = T_eps(eps, a)
    return (1 + eps)*(2 + 2*a*(1 + Ta*eps) + 4*a*Ta) + 2*a


def check_compatible(F, chunk=PAIR_CHUNK):
    """
    Largest ||A'_{x,r} - A'_{y,s}|| / min(||A'_{x,r}||, ||A'_{y,s}||) over
    pairs with |x - y| <= max(r, s) and 1/2 <= r/s <= 2.

    returns: (eps_measured, witness) with witness (i, k, j, l) the base and
             scale indices of the worst pair, or None if no pair qualifies
    """

    norms = F.norms
    if np.any(norms <= 0):
        i, k = (int(v) for v in np.argwhere(norms <= 0)[0])
        err = "A'_{{x,r}} vanishes at base {} scale {}.\n".format(i, k)
        raise ZeroLinearPart(err)

    m, K = norms.shape
    tree = F.base_set.tree
    best, witness = 0.0, None
    for k in range(K):
        for l in range(k, K):
            r, s = F.scales[k], F.scales[l]
            if s/r > 2*(1 + 1e-12):
                break
            pairs = tree.query_pairs(max(r, s)*(1 + BALL_SLACK), output_type="ndarray")
            pairs = pairs.reshape(-1, 2)
            if k == l:
                I, J = pairs[:, 0], pairs[:, 1]
            else:
                own = np.arange(m)
                I = np.concatenate([own, pairs[:, 0], pairs[:, 1]])
                J = np.concatenate([own, pairs[:, 1], pairs[:, 0]])
            if len(I) == 0:
                continue
            order = np.lexsort((J, I))
            I, J = I[order], J[order]
            for start in range(0, len(I), chunk):
                Ib = I[start:start + chunk]
                Jb = J[start:start + chunk]
                diff = operator_norms(F.linear[Ib, k] - F.linear[Jb, l])
                vals = diff/np.minimum(norms[Ib, k], norms[Jb, l])
                j = int(np.argmax(vals))
                if vals[j] > best:
                    best = float(vals[j])
                    witness = (int(Ib[j]), k, int(Jb[j]), l)
    return best, witness


def approximation_error(f, F, E=None):
    """
    Largest |f(z) - A_{x,r}(z)| / (||A'_{x,r}|| r) over base points x, grid
    scales r and z in E ∩ B(x, r).

    returns: (value, witness) with witness (i, k, z index in E)
    """

    if E is None:
        E = f.domain
    values = f.image if E is f.domain else f.values_at(E.points)
    norms = F.norms
    if np.any(norms <= 0):
        err = "family has a vanishing linear part.\n"
        raise ZeroLinearPart(err)

    best, witness = 0.0, None
    for i, x in enumerate(F.base_points):
        idx = E.ball(x, F.r_max)
        if len(idx) == 0:
            continue
        pts = E.points[idx]
        dist = np.sqrt(np.sum((pts - x)**2, axis=1))
        for k, r in enumerate(F.scales):
            keep = dist <= r*(1 + BALL_SLACK)
            if not np.any(keep):
                continue
            approx = pts[keep] @ F.linear[i, k].T + F.shift[i, k]
            err = np.sqrt(np.sum((values[idx[keep]] - approx)**2, axis=1))
            j = int(np.argmax(err))
            val = float(err[j])/(norms[i, k]*r)
            if val > best:
                best = val
                witness = (i, k, int(idx[keep][j]))
    return best, witness


def check_almost_affine(f, E, F):
    """
    Measured epsilon of (f, E, F): the larger of the compatibility constant
    and the approximation error.
    """
    compat, _ = F.compatibility
    approx, _ = approximation_error(f, F, E)
    return max(compat, approx)


@dataclass
class IneqReport:
    """Both sides of one inequality; a negative slack is a violation."""
    kind: str
    lhs: float
    rhs: float
    slack: float
    witness: dict = field(default_factory=dict)

    @classmethod
    def build(cls, kind, lhs, rhs, **witness):
        return cls(kind, float(lhs), float(rhs), float(rhs) - float(lhs), witness)

    def to_record(self):
        return {"kind": self.kind, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "witness": plain(self.witness)}


def _require(condition, message, precondition):
    if not condition:
        raise HypothesisViolated(message + "\n", precondition=precondition)


def _compat_hypothesis(F, eps, x, r, y, s):
    measured = F.compatibility[0]
    _require(measured <= eps*(1 + EPS_SLACK) + 1e-15,
             "family is {}-compatible, not {}-compatible.".format(measured, eps),
             "compatible")
    reach = max(r, s, 2*float(np.linalg.norm(x - y)))
    _require(reach <= F.r_max*(1 + 1e-12),
             "max(r, s, 2|x-y|) = {} exceeds the largest scale {}.".format(reach, F.r_max),
             "scale-chain")


def _pair(F, i, k, j, l):
    x, y = F.base_points[i], F.base_points[j]
    r, s = float(F.scales[k]), float(F.scales[l])
    return x, r, y, s


def _pre(F, i, k, j, l, eps, a, which):
    eps = F.eps_nominal if eps is None else float(eps)
    x, r, y, s = _pair(F, i, k, j, l)
    _compat_hypothesis(F, eps, x, r, y, s)
    t = tau(x, r, y, s)
    if a is None:
        T = T_eps(eps, t)
    else:
        _require(a >= 1, "a = {} is below 1.".format(a), "a>=1")
        _require(eps <= a, "eps = {} exceeds a = {}.".format(eps, a), "eps<=a")
        _require(t <= a*(1 + 1e-12), "tau = {} exceeds a = {}.".format(t, a), "tau<=a")
        T = T_eps(eps, a)

    nx, ny = F.norms[i, k], F.norms[j, l]
    lo, hi = min(nx, ny), max(nx, ny)
    wit = {"i": i, "k": k, "j": j, "l": l, "tau": t, "eps": eps}
    if which == "diff":
        lhs = float(operator_norms(F.linear[i, k] - F.linear[j, l]))
        return lhs, T*eps*lo, wit
    return hi, (1 + T*eps)*lo, wit


def _pre_a(family, i, k, j, l, eps=None):
    lhs, rhs, wit = _pre(family, i, k, j, l, eps, None, "diff")
    return IneqReport.build("pre_a", lhs, rhs, **wit)


def _pre_b(family, i, k, j, l, eps=None):
    lhs, rhs, wit = _pre(family, i, k, j, l, eps, None, "norm")
    return IneqReport.build("pre_b", lhs, rhs, **wit)


def _pre_c(family, i, k, j, l, a, eps=None):
    lhs, rhs, wit = _pre(family, i, k, j, l, eps, a, "diff")
    return IneqReport.build("pre_c", lhs, rhs, a=a, **wit)


def _pre_d(family, i, k, j, l, a, eps=None):
    lhs, rhs, wit = _pre(family, i, k, j, l, eps, a, "norm")
    return IneqReport.build("pre_d", lhs, rhs, a=a, **wit)


def _compat(family, i, k, j, l, eps=None):
    eps = family.eps_nominal if eps is None else float(eps)
    x, r, y, s = _pair(family, i, k, j, l)
    _require(float(np.linalg.norm(x - y)) <= max(r, s)*(1 + BALL_SLACK),
             "|x-y| exceeds max(r, s).", "|x-y|<=max(r,s)")
    _require(0.5*(1 - 1e-12) <= r/s <= 2*(1 + 1e-12),
             "r/s = {} is outside [1/2, 2].".format(r/s), "1/2<=r/s<=2")
    lhs = float(operator_norms(family.linear[i, k] - family.linear[j, l]))
    rhs = eps*min(family.norms[i, k], family.norms[j, l])
    return IneqReport.build("compat", lhs, rhs, i=i, k=k, j=j, l=l, eps=eps)


def _almost_affine_eps(f, family, E, eps):
    measured = check_almost_affine(f, E, family)
    if eps is None:
        return measured, measured
    _require(measured <= eps*(1 + EPS_SLACK) + 1e-15,
             "(f, E, family) is {}-almost affine, not {}-almost affine.".format(
                 measured, eps),
             "almost-affine")
    return float(eps), measured


def _post(f, family, i, k, j, l, z, a, eps, E, bounded_tau):
    E = f.domain if E is None else E
    eps, measured = _almost_affine_eps(f, family, E, eps)
    x, r, y, s = _pair(family, i, k, j, l)
    big = max(r, s)
    z = np.atleast_2d(np.asarray(z, dtype=float))

    E.index_of(x)
    E.index_of(y)
    _require(a >= 1, "a = {} is below 1.".format(a), "a>=1")
    _require(eps <= a, "eps = {} exceeds a = {}.".format(eps, a), "eps<=a")
    _require(float(np.linalg.norm(x - y)) <= a*big*(1 + 1e-12),
             "|x-y| exceeds a max(r, s).", "|x-y|<=a*max(r,s)")
    dz = np.minimum(np.linalg.norm(z - x, axis=1), np.linalg.norm(z - y, axis=1))
    _require(np.all(dz <= a*big*(1 + 1e-12)),
             "some z is farther than a max(r, s) from {x, y}.", "dist(z,{x,y})<=a*max(r,s)")
    _require(family.grid_index(a*big) is not None,
             "a max(r, s) = {} is not a scale of the family.".format(a*big), "a*max(r,s)-in-grid")
    _compat_hypothesis(family, eps, x, r, y, s)

    t = tau(x, r, y, s)
    if bounded_tau:
        _require(t <= a*(1 + 1e-12), "tau = {} exceeds a = {}.".format(t, a), "tau<=a")
        T = T_eps(eps, a)
    else:
        T = T_eps(eps, t)

    A = family.map_at(i, k)
    B = family.map_at(j, l)
    gaps = np.sqrt(np.sum((A(z) - B(z))**2, axis=1))
    w = int(np.argmax(gaps))
    lo = min(family.norms[i, k], family.norms[j, l])
    base = T*eps*lo*big
    kind = "post_b" if bounded_tau else "post_a"
    return IneqReport.build(kind, gaps[w], post_constant(a, eps)*base,
                            i=i, k=k, j=j, l=l, z=w, a=a, tau=t, eps=eps,
                            eps_measured=measured,
                            ratio=float(gaps[w]/base) if base > 0 else 0.0)


def _post_a(f, family, i, k, j, l, z, a, eps=None, E=None):
    return _post(f, family, i, k, j, l, z, a, eps, E, False)


def _post_b(f, family, i, k, j, l, z, a, eps=None, E=None):
    return _post(f, family, i, k, j, l, z, a, eps, E, True)


def _ab_bound(A, B, V, z, eps=None):
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    n = V.shape[1]
    _require(V.shape[0] == n + 1, "V must hold n+1 = {} points.".format(n + 1), "|V|=n+1")
    _require(A.n == n and B.n == n and A.N == B.N,
             "A and B must both map R^{} to the same R^N.".format(n), "shapes")

    diam = float(np.max(pdist(V)))
    gaps = np.sqrt(np.sum((A(V) - B(V))**2, axis=1))
    if eps is None:
        eps = float(np.max(gaps))/diam if diam > 0 else 0.0
    _require(np.all(gaps <= eps*diam*(1 + 1e-12) + 1e-300),
             "|A(v)-B(v)| exceeds eps diam V on V.", "|A-B|<=eps*diam(V)")

    z = np.atleast_2d(np.asarray(z, dtype=float))
    P = psi(V)
    lhs = np.sqrt(np.sum((A(z) - B(z))**2, axis=1))
    dist = cdist(z, V).min(axis=1)
    const = 4*n**((n + 1)/2.0)/math.factorial(n)
    with np.errstate(invalid="ignore"):
        rhs = eps*(diam + const*P*dist)
    rhs = np.where(np.isnan(rhs), math.inf, rhs)
    w = int(np.argmin(rhs - lhs))
    return IneqReport.build("AB_bound", lhs[w], rhs[w], z=w, eps=eps, psi=P, dist=dist[w])


def _holder(f, family, x0, r0, eps=None, E=None, max_points=2000):

    E = f.domain if E is None else E
    eps, measured = _almost_affine_eps(f, family, E, eps)
    _require(eps < math.sqrt(2) - 1,
             "eps = {} is not below sqrt(2) - 1.".format(eps), "eps<sqrt(2)-1")
    i0 = family.base_index(x0)
    k0 = family.grid_index(r0)
    _require(k0 is not None, "r0 = {} is not a scale of the family.".format(r0), "r0-in-grid")

    th = 1 - 2*math.log2(1 + eps)
    x0 = family.base_points[i0]
    idx = E.ball(x0, 0.5*r0)
    if len(idx) > max_points:
        idx = idx[farthest_point_order(E.points[idx], max_points)]
    pts = E.points[idx]
    vals = f.image[idx] if E is f.domain else f.values_at(pts)

    # the family resolves pairs no closer than its finest scale
    dx = pdist(pts)
    df = pdist(vals)
    keep = dx >= family.r_min
    _require(np.any(keep), "no sample pair in B(x0, r0/2) is resolved by the family.",
             "pairs")

    norm0 = family.norms[i0, k0]
    rhs = 4/(th*math.log(2))*(dx/r0)**((1 - eps)*th)*norm0*r0
    slack = np.where(keep, rhs - df, np.inf)
    w = int(np.argmin(slack))
    rows, cols = np.triu_indices(len(pts), 1)
    a, b = rows[w], cols[w]
    return IneqReport.build("holder", df[w], rhs[w], x=int(idx[a]), y=int(idx[b]),
                            eps=eps, eps_measured=measured, exponent=(1 - eps)*th,
                            pairs=int(np.sum(keep)))


def _inradius(f, A, x, r, t, eps=None, H=None, plane_grid=64):
    x = np.asarray(x, dtype=float).reshape(-1)
    ix = f.domain.index_of(x)
    idx = f.ball(x, r)
    pts = f.points[idx]
    vals = f.image[idx]
    norm = A.norm

    measured = float(np.max(np.sqrt(np.sum((vals - A(pts))**2, axis=1))))/(norm*r)
    if eps is None:
        eps = measured
    _require(measured <= eps*(1 + EPS_SLACK) + 1e-15,
             "f is {}-close to A on B(x, r), not {}.".format(measured, eps), "almost-affine")
    sv = singular_values(A)
    if H is None:
        H = float(sv[-1]/sv[0])
    _require(sv[-1] <= H*sv[0]*(1 + 1e-12),
             "lambda_n > H lambda_1 for H = {}.".format(H), "lambda_n<=H*lambda_1")
    _require(H*(t + 2*eps) <= 1 + 1e-12,
             "H (t + 2 eps) = {} exceeds 1.".format(H*(t + 2*eps)), "H(t+2eps)<=1")

    radial = np.sqrt(np.sum((pts - x)**2, axis=1))
    sphere = radial >= r*(1 - 1e-9)
    _require(np.any(sphere), "no samples on the sphere |y - x| = r.", "sphere-samples")

    image = SampledSet(vals)
    diam = image.diameter
    fx = f.image[ix]
    reach = np.sqrt(np.sum((vals[sphere] - fx)**2, axis=1))

    plane = Plane(fx, canonical_frame(A.linear))
    center = int(np.flatnonzero(idx == ix)[0])
    th = theta_number(image, center, diam/(3*H), n=A.n, plane_grid=plane_grid,
                      planes=[plane], search="none")

    common = {"eps": eps, "H": H, "t": t}
    return [IneqReport.build("inradius", norm*r, diam, part="ird_lower", **common),
            IneqReport.build("inradius", diam, 3*norm*r, part="ird_upper", **common),
            IneqReport.build("inradius", t*norm*r, float(reach.min()), part="irir_lower",
                             **common),
            IneqReport.build("inradius", float(reach.max()), 2*norm*r, part="irir_upper",
                             **common),
            IneqReport.build("inradius", th, 6*eps*H, part="irt", **common)]


_INEQUALITIES = {
    "compat": _compat,
    "pre_a": _pre_a,
    "pre_b": _pre_b,
    "pre_c": _pre_c,
    "pre_d": _pre_d,
    "post_a": _post_a,
    "post_b": _post_b,
    "AB_bound": _ab_bound,
    "holder": _holder,
    "inradius": _inradius,
}


def verify_inequality(kind, **inputs):
    """
    Evaluate both sides of a named estimate on concrete inputs, after
    checking its hypotheses (HypothesisViolated names the one that fails).

    kind: compat, pre_a, pre_b, pre_c, pre_d   family, i, k, j, l [, a, eps]
          post_a, post_b                       f, family, i, k, j, l, z, a [, eps, E]
          AB_bound                             A, B, V, z [, eps]
          holder                               f, family, x0, r0 [, eps, E]
          inradius                             f, A, x, r, t [, eps, H]

    returns: IneqReport; a list of five IneqReports for inradius
    """
    try:
        func = _INEQUALITIES[kind]
    except KeyError:
        err = "inequality kind '{}' not recognized. Should be one of:\n".format(kind)
        for k in sorted(_INEQUALITIES):
            err += "    {}\n".format(k)
        raise ValueError(err)
    return func(**inputs)


def stabilize_large_scales(F, x_star, diam=None):
    """
    Make F stable at large scales: keep A_{x,r} for grid scales r <= D and
    replace every map above D by A_{x_star, D}, where D is the smallest grid
    scale at or above diam E (E = the base points unless diam is given).
    """

    i_star = F.base_index(x_star)
    if diam is None:
        diam = F.base_set.diameter
    above = np.flatnonzero(F.scales >= diam*(1 - 1e-12))
    meta = dict(F.meta, stable_from=None, x_star=i_star)
    if len(above) == 0:
        return F.replace(meta=meta)

    kD = int(above[0])
    linear = F.linear.copy()
    shift = F.shift.copy()
    linear[:, kD + 1:] = F.linear[i_star, kD]
    shift[:, kD + 1:] = F.shift[i_star, kD]
    meta["stable_from"] = float(F.scales[kD])
    return F.replace(linear=linear, shift=shift, meta=meta)


def adapt_small_scales(f, F, x0, r0, E=None):
    """
    Adapt F to f at small scales around B(x0, r0): for grid scales r <= 2 r0
    the map at x interpolates f at x, x + r e_1, ..., x + r e_n; larger
    scales keep F.  The base points are those of F inside B(x0, r0).

    F must be eps-almost affine with f on E ∩ B(x0, 3 r0), and P(n) eps <= 1.
    The output claims P(n) eps.
    """

    E = f.domain if E is None else E
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = F.n

    outer = F.base_set.ball(x0, 3*r0)
    inner = F.base_set.ball(x0, r0)
    if len(inner) == 0:
        err = "no base point of the family lies in B(x0, r0).\n"
        raise ValueError(err)
    region = E.subset(E.ball(x0, 3*r0))
    eps = check_almost_affine(f, region, F.subset(outer))
    P = P_adapt(n)
    if P*eps > 1:
        err = "P(n) eps = {} * {} exceeds 1.\n".format(P, eps)
        raise EpsilonTooLarge(err)

    sub = F.subset(inner)
    linear = sub.linear.copy()
    shift = sub.shift.copy()
    eye = np.eye(n)
    for a, x in enumerate(sub.base_points):
        for k, r in enumerate(sub.scales):
            if r > 2*r0*(1 + 1e-12):
                continue
            nodes = np.vstack([x, x + r*eye])
            A = affine_from_samples(nodes, f.values_at(nodes))
            linear[a, k] = A.linear
            shift[a, k] = A.shift

    meta = dict(F.meta, adapted_at=x0.tolist(), adapted_radius=r0, eps_in=eps)
    return sub.replace(linear=linear, shift=shift, eps_nominal=P*eps, meta=meta)


def _smooth_field(N, n, rng, terms=4):
    """
    Matrix field u -> sum of c * sin(<w, u> + phase) with unit |w| and the
    per-entry sums of |c| having unit Euclidean norm: bounded by 1 and
    1-Lipschitz in the Frobenius norm.
    """
    w = rng.standard_normal((N, n, terms, n))
    w /= np.linalg.norm(w, axis=-1, keepdims=True)
    c = rng.standard_normal((N, n, terms))
    c /= np.sqrt(np.sum(np.sum(np.abs(c), axis=-1)**2))
    phase = rng.uniform(0, 2*np.pi, size=(N, n, terms))

    def field_at(u):
        return np.sum(c*np.sin(np.einsum("abtj,j->abt", w, u) + phase), axis=-1)
    return field_at


def random_compatible_family(base_points, scales, L0, eps, rng, b0=None, rho=None):
    """
    Random eps-compatible family around the linear map L0.

    The linear part at (x, r_k) is L0 + kappa (w_k + eta(r_k) psi(x / rho))
    with kappa = eps ||L0|| / 4, w_k a random walk in the unit ball with
    steps of size at most 1, psi a smooth matrix field bounded by 1 and
    1-Lipschitz, and eta(r) = min(1, rho / r).  A_{x,r} agrees with
    z -> L0 z + b0 at z = x.  Valid for eps <= 1/2.
    """

    L0 = np.asarray(L0, dtype=float)
    if L0.ndim == 1:
        L0 = L0.reshape(-1, 1)
    N, n = L0.shape
    base_points = np.asarray(base_points, dtype=float)
    if base_points.ndim == 1:
        base_points = base_points.reshape(-1, 1)
    scales = np.asarray(scales, dtype=float)
    if not 0 < eps <= 0.5:
        err = "random compatible families need 0 < eps <= 1/2, got {}.\n".format(eps)
        raise ValueError(err)
    if b0 is None:
        b0 = np.zeros(N)
    if rho is None:
        rho = float(np.sqrt(scales[0]*scales[-1]))

    kappa = eps*float(singular_values(L0)[-1])/4

    walk = [np.zeros((N, n))]
    for _ in range(len(scales) - 1):
        step = rng.standard_normal((N, n))
        step *= rng.uniform()/np.linalg.norm(step)
        nxt = walk[-1] + step
        size = np.linalg.norm(nxt)
        walk.append(nxt/size if size > 1 else nxt)
    walk = np.array(walk)

    field_at = _smooth_field(N, n, rng)
    eta = np.minimum(1.0, rho/scales)
    psis = np.array([field_at(x/rho) for x in base_points])

    linear = L0 + kappa*(walk[None, :] + eta[None, :, None, None]*psis[:, None])
    values = base_points @ L0.T + b0
    shift = values[:, None, :] - np.einsum("mkan,mn->mka", linear, base_points)

    F = AffineFamily(base_points, scales, linear, shift, eps_nominal=eps,
                     meta={"generator": "random_compatible", "kappa": kappa, "rho": rho})
    measured, witness = F.compatibility
    if measured > eps*(1 + EPS_SLACK):
        err = "generated family is only {}-compatible (witness {}).\n".format(measured,
                                                                            witness)
        raise ValueError(err)
    return F
