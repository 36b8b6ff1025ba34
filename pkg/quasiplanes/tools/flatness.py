__description__ = \
"""
Beta and theta numbers of sampled sets: one-sided (beta), centred one-sided
(beta_ctr) and bilateral (theta) flatness at a point and scale, with the
dyadic sums, Dini integrals and Reifenberg-type checks built from them.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.spatial import ConvexHull, QhullError

from ..errors import ScaleBelowResolution
from .geometry import Plane, minimax_fit, _complement

# plane-side grid for planes of dimension 3 and up: h_V = r/PLANE_GRID
PLANE_GRID = 64

# tilts (radians) of the centred fit screened for theta, taken with both signs
SCREEN_ANGLES = (0.0, 0.003, 0.01, 0.03, 0.1, 0.2, 0.35, 0.5, 0.7, 0.9, 1.15, 1.4)

# best screened planes that get a local polish, and the polish reach
N_POLISH = 2
POLISH_STEP = 0.12

SEARCHES = ("full", "none")


def _plane_dim(E, n):
    if n is not None:
        return int(n)
    return int(E.meta.get("n", E.dim - 1))


def _center_index(E, x):
    """Accept a sample index or a point; return (index, point)."""
    if isinstance(x, (int, np.integer)):
        return int(x), E.points[int(x)]
    i = E.index_of(x)
    return i, E.points[i]


# --------------------------------------------------------------------------- #
# planes through x, as orthonormal column bases Q (N x n)

def _principal(B, offsets):
    """
    The columns of B turned to the principal axes of offsets projected on
    span(B), each sign fixed by the third moment of the projections.
    """
    if B.shape[1] == 0 or len(offsets) == 0:
        return B
    _, _, vt = np.linalg.svd(offsets @ B, full_matrices=True)
    B = B @ vt.T
    skew = np.sum((offsets @ B)**3, axis=0)
    return B*np.where(skew < 0, -1.0, 1.0)


def _axes(Q, offsets):
    """Principal bases of span(Q) and of its orthogonal complement."""
    return _principal(Q, offsets), _principal(_complement(Q), offsets)


def _signed_angles(dim):
    a = np.array(SCREEN_ANGLES)
    a = np.concatenate([-a[:0:-1], a])
    if dim == 1:
        # lines of a plane: every direction
        a = np.union1d(a, np.linspace(-np.pi/2, np.pi/2, 181)[1:-1])
    return a


def _screen_charts(k, n):
    """Chart coordinates (c, k, n) of the screened tilts."""
    dim = k*n
    if dim == 0:
        return np.zeros((1, k, n))
    t = np.tan(_signed_angles(dim))
    if dim <= 2:
        mesh = np.stack(np.meshgrid(*([t]*dim), indexing="ij"), axis=-1).reshape(-1, dim)
    else:
        rows = [np.zeros(dim)]
        for j in range(dim):
            for v in t[t != 0]:
                row = np.zeros(dim)
                row[j] = v
                rows.append(row)
        mesh = np.array(rows)
    return mesh.reshape(-1, k, n)


def _planes_of(U, W, X):
    """Orthonormal bases (c, N, n) of the planes span(U + W X)."""
    M = U[None] + np.einsum("Nk,ckn->cNn", W, X)
    q, _ = np.linalg.qr(M)
    return q


def _one_sided(offsets, Qs):
    """Sup distance of the offsets to each plane span(Q) through the origin."""
    if len(offsets) == 0:
        return np.zeros(len(Qs))
    proj = np.einsum("mN,cNn->cmn", offsets, Qs)
    resid = offsets[None] - np.einsum("cmn,cNn->cmN", proj, Qs)
    return np.sqrt(np.max(np.sum(resid**2, axis=2), axis=1))


# --------------------------------------------------------------------------- #
# plane side: sup over V ∩ B(x, r) of dist(., E)

def _lower_envelope(p, c):
    """
    Vertices and adjacent pairs of the lower envelope of the affine maps
    y -> c_i - 2 <y, p_i>, from the lower hull of the lifted points (p_i, c_i).
    """
    m, n = p.shape
    lifted = np.column_stack([p, c])
    if m >= n + 2:
        for options in (None, "QJ"):
            try:
                hull = ConvexHull(lifted, qhull_options=options)
            except QhullError:
                continue
            eq = hull.equations
            lower = eq[:, n] < -1e-12
            vertices = -eq[lower, :n]/(2*eq[lower, n:n + 1])
            simplices = hull.simplices[lower]
            pairs = np.vstack([simplices[:, [a, b]]
                               for a, b in combinations(range(n + 1), 2)])
            return vertices, np.unique(np.sort(pairs, axis=1), axis=0)

    pairs = np.array(list(combinations(range(m), 2)), dtype=int).reshape(-1, 2)
    vertices = []
    for idx in combinations(range(m), n + 1):
        A = 2*(p[list(idx[1:])] - p[idx[0]])
        if abs(np.linalg.det(A)) > 1e-14:
            vertices.append(np.linalg.solve(A, c[list(idx[1:])] - c[idx[0]]))
    return np.array(vertices, dtype=float).reshape(-1, n), pairs


def _bisectors_on_circle(p, c, pairs, r):
    """Where the lines {c_i - 2<y, p_i> = c_j - 2<y, p_j>} meet the circle |y| = r."""
    d = 2*(p[pairs[:, 1]] - p[pairs[:, 0]])
    e = c[pairs[:, 1]] - c[pairs[:, 0]]
    dd = np.sum(d**2, axis=1)
    keep = dd > 0
    d, e, dd = d[keep], e[keep], dd[keep]
    foot = d*(e/dd)[:, None]
    left = r*r - np.sum(foot**2, axis=1)
    keep = left >= 0
    step = np.sqrt(left[keep]/dd[keep])[:, None]*np.column_stack([-d[keep, 1], d[keep, 0]])
    return np.vstack([foot[keep] + step, foot[keep] - step])


def _envelope_candidates(p, c, r):
    """
    Points of the ball |y| <= r of R^n, n <= 2, among them a maximiser of
    min_i |y - p_i|^2 + c_i - |p_i|^2: the envelope vertices inside the ball,
    where the envelope edges cross the circle, and the points of the circle
    opposite each p_i.
    """
    m, n = p.shape
    pieces = [r*np.eye(n), -r*np.eye(n)]
    vertices, pairs = _lower_envelope(p, c)
    pieces.append(vertices[np.sum(vertices**2, axis=1) <= r*r*(1 + 1e-12)])
    if n == 2:
        pieces.append(_bisectors_on_circle(p, c, pairs, r))
        norm = np.linalg.norm(p, axis=1)
        keep = norm > 0
        pieces.append(-r*p[keep]/norm[keep, None])
    return np.vstack(pieces)


class _Bilateral(object):
    """
    Bilateral sup distance of planes through x: the larger of the distance
    of E ∩ B(x, r) to the plane and the distance to E of the points of the
    plane in B(x, r).  The plane side is exact for planes of dimension 1
    and 2, and sampled on a grid of spacing r/plane_grid above.
    """

    def __init__(self, E, x, r, inner, plane_grid=PLANE_GRID):
        self.E = E
        self.x = x
        self.r = r
        self.inner = inner
        self.plane_grid = plane_grid
        # the nearest sample to any point of B(x, r) lies in B(x, 2r)
        self.near = E.points[E.ball(x, 2*r)] - x

    def __call__(self, Q):
        one = float(_one_sided(self.inner, Q[None])[0])
        return max(one, self.plane_side(Q))

    def plane_side(self, Q):
        if Q.shape[1] <= 2:
            ys = _envelope_candidates(self.near @ Q, np.sum(self.near**2, axis=1), self.r)
            pts = self.x + ys @ Q.T
        else:
            U = _principal(Q, self.near)
            pts = Plane(self.x, U.T).grid(self.x, self.r, self.r/self.plane_grid)
        d, _ = self.E.tree.query(pts)
        return float(np.max(d))


def _polish(objective, Q, start):
    """Local descent of the bilateral value from the plane span(Q)."""
    U, W = _axes(Q, objective.inner)
    k, n = W.shape[1], U.shape[1]
    dim = k*n
    if dim == 0:
        return start, Q

    def plane(t):
        return _planes_of(U, W, np.reshape(t, (1, k, n)))[0]

    def f(t):
        return objective(plane(t))/objective.r

    if dim == 1:
        res = optimize.minimize_scalar(f, bounds=(-POLISH_STEP, POLISH_STEP),
                                       method="bounded", options={"xatol": 1e-12})
        t = np.array([res.x])
    else:
        simplex = np.vstack([np.zeros(dim), POLISH_STEP*np.eye(dim)])
        res = optimize.minimize(f, np.zeros(dim), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12,
                                         "maxfev": 80*dim, "initial_simplex": simplex})
        t = res.x
    P = plane(t)
    return objective(P), P


def _theta_search(objective, Qs, one, search):
    """
    Least bilateral value over the candidate planes Qs, visited by
    increasing one-sided value until that alone exceeds the best found,
    then polished from the best few.

    returns: (value, Q)
    """
    best = math.inf
    tried = []
    for c in np.argsort(one, kind="stable"):
        if one[c] >= best:
            break
        value = max(float(one[c]), objective.plane_side(Qs[c]))
        tried.append((value, int(c)))
        best = min(best, value)
    tried.sort()

    value, Q = tried[0][0], Qs[tried[0][1]]
    if search == "full":
        for start, c in tried[:N_POLISH]:
            v, P = _polish(objective, Qs[c], start)
            if v < value:
                value, Q = v, P
    return value, Q


@dataclass
class _Measurement:
    beta: float
    beta_ctr: float
    theta: float
    plane_free: Plane
    plane_ctr: Plane
    plane_theta: Plane = None


def _measure(E, x, r, n, with_theta=False, tol_rel=1e-6, plane_grid=PLANE_GRID,
             seed=0, planes=(), search="full"):
    """
    beta, beta_ctr and (optionally) theta at (x, r).

    beta_ctr is the least one-sided value over the centred minimax fit, the
    planes given and, with search="full", the screened tilts of the fit.
    theta is searched over the same planes and never reported below
    beta_ctr, so beta <= beta_ctr <= theta holds by construction.  planes
    are re-based at x.
    """

    if r <= 0:
        err = "radius must be positive, got {}.\n".format(r)
        raise ValueError(err)
    if search not in SEARCHES:
        err = "theta search '{}' not recognized. Should be one of:\n".format(search)
        for k in SEARCHES:
            err += "    {}\n".format(k)
        raise ValueError(err)

    pts = E.points[E.ball(x, r)]
    tol = tol_rel*2*r

    free = minimax_fit(pts, n, tol=tol, seed=seed)
    ctr = minimax_fit(pts, n, anchor=x, seeds=[free.plane.frame.T], tol=tol, seed=seed)

    inner = pts - x
    Q0 = ctr.plane.frame.T
    Qs = [Q0[None]]
    if planes:
        Qs.append(np.array([np.asarray(V.frame, dtype=float).T for V in planes]))
    if search == "full":
        U, W = _axes(Q0, inner)
        Qs.append(_planes_of(U, W, _screen_charts(W.shape[1], U.shape[1])))
    Qs = np.concatenate(Qs)
    one = _one_sided(inner, Qs)

    best = int(np.argmin(one))
    beta_ctr = min(float(one[best]), ctr.supdist, r)/r
    beta = min(free.supdist/r, beta_ctr)

    theta = np.nan
    plane_theta = None
    if with_theta:
        objective = _Bilateral(E, x, r, inner, plane_grid=plane_grid)
        value, Q = _theta_search(objective, Qs, one, search)
        theta = min(max(value/r, beta_ctr), 1.0)
        plane_theta = Plane(x, Q.T)

    return _Measurement(min(beta, 1.0), min(beta_ctr, 1.0), theta,
                        free.plane, Plane(x, Qs[best].T), plane_theta)


def beta(E, x, r, centered=False, n=None, **kwargs):
    """
    One-sided flatness of E in the ball B(x, r): the sup distance of
    E ∩ B(x, r) to its best n-plane, divided by r.  centered constrains the
    plane through x.

    E: SampledSet
    x: a sample of E (point or index)
    r: radius
    n: plane dimension (default: E.meta["n"], else E.dim - 1)
    """
    _, x = _center_index(E, x)
    m = _measure(E, x, r, _plane_dim(E, n), **kwargs)
    return m.beta_ctr if centered else m.beta


def theta_fit(E, x, r, n=None, plane_grid=PLANE_GRID, **kwargs):
    """
    Bilateral flatness of E in B(x, r): over planes V through x, the larger
    of sup_{E∩B} dist(., V) and sup_{V∩B} dist(., E), minimised, over r.

    For planes of dimension 1 and 2 the plane side is exact on the sample:
    its maximiser is a vertex, edge crossing or circle point of the power
    diagram of E projected on V.  Higher dimensional planes use a grid of
    spacing r/plane_grid in the principal axes of the nearby samples.
    Passing the plane found at a larger radius in planes keeps theta
    monotone: theta(x, s r) <= theta(x, r)/s.

    returns: (theta, the plane through x attaining it)
    """
    _, x = _center_index(E, x)
    m = _measure(E, x, r, _plane_dim(E, n), with_theta=True,
                 plane_grid=plane_grid, **kwargs)
    return m.theta, m.plane_theta


def theta(E, x, r, n=None, plane_grid=PLANE_GRID, **kwargs):
    """theta_fit without the plane."""
    return theta_fit(E, x, r, n=n, plane_grid=plane_grid, **kwargs)[0]


def _check_scale(E, r, what):
    if r <= E.resolution:
        err = "{} {} is at or below the sampling resolution {} of the set.\n".format(
            what, r, E.resolution)
        raise ScaleBelowResolution(err)


def dyadic_beta_sq_sum(E, x, r0, base=10, kmax=3, n=None, **kwargs):
    """
    Sum over k = 0..kmax of beta_ctr(E, x, base^-k r0)^2.
    """
    _check_scale(E, base**(-kmax)*r0, "smallest dyadic radius")
    _, x = _center_index(E, x)
    n = _plane_dim(E, n)
    total = 0.0
    for k in range(kmax + 1):
        b = _measure(E, x, base**(-k)*r0, n, **kwargs).beta_ctr
        total += b*b
    return total


def log_grid(rmax, rmin, grid_per_decade):
    """Radii rmax*10^(-j/g), j = 0..J, with the last one at or below rmin."""
    if not 0 < rmin < rmax:
        err = "need 0 < rmin < rmax, got rmin={} and rmax={}.\n".format(rmin, rmax)
        raise ScaleBelowResolution(err)
    J = int(math.ceil(grid_per_decade*math.log10(rmax/rmin) - 1e-9))
    return rmax*10.0**(-np.arange(J + 1)/grid_per_decade)


def trapezoid_log(radii, values):
    """Trapezoid rule for the integral of values d(log r) on a descending grid."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(radii) < 2:
        return 0.0
    widths = np.log(radii[:-1]/radii[1:])
    return float(np.sum(0.5*(values[:-1] + values[1:])*widths))


def dini_beta_quadrature(E, x, rmax, grid_per_decade=8, rmin=None, n=None, **kwargs):
    """
    Log-grid quadrature of the Dini integral of beta^2 dr/r up to rmax.

    Below the distance from x to its nearest other sample the ball holds only
    x and beta vanishes, so that distance is the default lower limit.

    returns: (radii, beta values, integral)
    """
    i, x = _center_index(E, x)
    n = _plane_dim(E, n)
    if rmin is None:
        rmin = float(E.spacing[i]) if len(E) > 1 else 0.0
        if rmin == 0.0 or rmin >= rmax:
            return np.array([rmax]), np.array([0.0]), 0.0
    radii = log_grid(rmax, rmin, grid_per_decade)
    values = np.array([_measure(E, x, r, n, **kwargs).beta for r in radii])
    return radii, values, trapezoid_log(radii, values**2)


def dini_beta_integral(E, x, rmax, grid_per_decade=8, rmin=None, n=None, **kwargs):
    """Trapezoid approximation of the integral of beta_E(x, r)^2 dr/r on (0, rmax]."""
    return dini_beta_quadrature(E, x, rmax, grid_per_decade=grid_per_decade,
                                rmin=rmin, n=n, **kwargs)[2]


def _scan(E, centers, scale_grid, n, quantity, planes=(), **kwargs):
    """Worst (index, r, value) of a quantity; theta planes are carried down the scales."""
    worst = None
    for c in centers:
        i, x = _center_index(E, c)
        found = list(planes)
        for r in sorted(scale_grid, reverse=True):
            m = _measure(E, x, float(r), n, with_theta=(quantity == "theta"),
                         planes=found, **kwargs)
            if m.plane_theta is not None:
                found.append(m.plane_theta)
            value = getattr(m, quantity)
            if worst is None or value > worst[2]:
                worst = (i, float(r), float(value))
    return worst


def reifenberg_check(E, delta, R, centers, scale_grid, n=None, **kwargs):
    """
    (delta, R)-Reifenberg flatness on the tested locations and scales:
    passes iff theta_E(x, r) <= delta for every center and every r in
    scale_grid below R.

    returns: (passed, (index, r, theta) of the worst offender)
    """
    scales = [r for r in scale_grid if r <= R]
    worst = _scan(E, centers, scales, _plane_dim(E, n), "theta", **kwargs)
    if worst is None:
        return True, None
    return worst[2] <= delta, worst


def linear_approximation_check(E, delta, R, centers, scale_grid, n=None, **kwargs):
    """
    (delta, R)-linear approximation property on the tested locations and
    scales: beta_ctr_E(x, r) <= delta.  Weaker than Reifenberg flatness.
    """
    scales = [r for r in scale_grid if r <= R]
    worst = _scan(E, centers, scales, _plane_dim(E, n), "beta_ctr", **kwargs)
    if worst is None:
        return True, None
    return worst[2] <= delta, worst


@dataclass
class FlatnessProfile:
    """
    Flatness numbers of a set around one of its samples.

    Parameters
    ----------
    center : ndarray
        the sample x.
    scales : ndarray
        strictly decreasing radii.
    beta, beta_ctr, theta : ndarray
        values per scale, 0 <= beta <= beta_ctr <= theta <= 1.
    dyadic_sq_sum : float
        sum of beta_ctr^2 over radii scales[0]*base^-k, k <= kmax.
    dini_integral : float
        quadrature of beta^2 dr/r up to scales[0].
    """
    center: np.ndarray
    scales: np.ndarray
    beta: np.ndarray
    beta_ctr: np.ndarray
    theta: np.ndarray
    dyadic_sq_sum: float
    dini_integral: float
    index: int = -1
    resolution: float = 0.0
    kmax: int = 0
    tail_bound: float = 0.0

    def to_record(self):
        return {"center": [float(v) for v in self.center],
                "scales": [float(v) for v in self.scales],
                "beta": [float(v) for v in self.beta],
                "beta_ctr": [float(v) for v in self.beta_ctr],
                "theta": [float(v) for v in self.theta],
                "dyadic_sq_sum": float(self.dyadic_sq_sum),
                "dini_integral": float(self.dini_integral),
                "index": int(self.index),
                "resolution": float(self.resolution),
                "kmax": int(self.kmax),
                "tail_bound": float(self.tail_bound)}

    def to_frame(self):
        rows = {"index": self.index}
        for j, v in enumerate(self.center):
            rows["x{}".format(j)] = float(v)
        df = pd.DataFrame({"scale": self.scales,
                           "beta": self.beta,
                           "beta_ctr": self.beta_ctr,
                           "theta": self.theta})
        for k in reversed(list(rows)):
            df.insert(0, k, rows[k])
        df["resolution"] = self.resolution
        return df


def flatness_profile(E, x, scales, n=None, base=10, grid_per_decade=8,
                     plane_grid=PLANE_GRID, kmax=None, **kwargs):
    """
    Build a FlatnessProfile of E at x over the given scales.  The dyadic sum
    runs from the largest scale down as long as the radius stays above the
    sampling resolution, and at most kmax steps when kmax is given; the Dini
    integral runs up to the largest scale.  The theta plane of every scale
    is a candidate at the smaller ones.
    """

    i, x = _center_index(E, x)
    n = _plane_dim(E, n)
    scales = np.array(sorted({float(s) for s in scales}, reverse=True))
    if len(scales) == 0:
        err = "a flatness profile needs at least one scale.\n"
        raise ValueError(err)

    b, bc, th = [], [], []
    found = list(kwargs.pop("planes", ()))
    for r in scales:
        m = _measure(E, x, r, n, with_theta=True, plane_grid=plane_grid, planes=found,
                     **kwargs)
        found.append(m.plane_theta)
        b.append(m.beta)
        bc.append(m.beta_ctr)
        th.append(m.theta)

    r0 = scales[0]
    res = E.resolution
    cap = math.inf if kmax is None else int(kmax)
    kmax = 0
    while res > 0 and base**(-(kmax + 1))*r0 > res and kmax < cap:
        kmax += 1
    if res > 0 and r0 > res:
        dyadic = dyadic_beta_sq_sum(E, x, r0, base=base, kmax=kmax, n=n, **kwargs)
    else:
        dyadic = 0.0
    rlow = base**(-kmax)*r0
    tail = kmax*(res/rlow)**2 if rlow > 0 else 0.0
    dini = dini_beta_integral(E, x, r0, grid_per_decade=grid_per_decade, n=n, **kwargs)

    return FlatnessProfile(center=np.array(x), scales=scales, beta=np.array(b),
                           beta_ctr=np.array(bc), theta=np.array(th),
                           dyadic_sq_sum=dyadic, dini_integral=dini, index=i,
                           resolution=res, kmax=kmax, tail_bound=tail)


def run(E, centers=None, scales=None, n=None, **kwargs):
    """
    Flatness profiles of E at every center (sample indices; default all).

    returns: (DataFrame with one row per (center, scale), list of profiles)
    """
    if centers is None:
        centers = range(len(E))
    if scales is None:
        err = "no scales given for the flatness computation.\n"
        raise ValueError(err)

    profiles = [flatness_profile(E, int(c), scales, n=n, **kwargs) for c in centers]
    profiles.sort(key=lambda p: p.index)
    if profiles:
        df = pd.concat([p.to_frame() for p in profiles], ignore_index=True)
        df = df.sort_values(["index", "scale"], ascending=[True, False],
                            kind="mergesort").reset_index(drop=True)
    else:
        df = pd.DataFrame()
    return df, profiles
