__description__ = \
"""
Affine maps, planes, sampled sets and the minimax plane fit that every
flatness number rests on.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import pdist

from ..errors import DegenerateSimplex, PointNotInSet

# Relative slack used when deciding if a sample lies in a closed ball.
BALL_SLACK = 1e-12


class AffineMap(object):
    """
    Affine map x -> linear @ x + shift from R^n to R^N.

    Parameters
    ----------
    linear : array-like, shape (N, n)
        the linear part A'.
    shift : array-like, shape (N,)
        the value A(0).
    """

    __slots__ = ("linear", "shift")

    def __init__(self, linear, shift):

        linear = np.asarray(linear, dtype=float)
        if linear.ndim == 1:
            linear = linear.reshape(-1, 1)
        shift = np.asarray(shift, dtype=float).reshape(-1)

        if linear.ndim != 2 or linear.shape[0] != shift.shape[0]:
            err = "linear part {} does not match shift {}.\n".format(linear.shape,
                                                                   shift.shape)
            raise ValueError(err)
        if linear.shape[0] < linear.shape[1] or linear.shape[1] < 1:
            err = "affine maps must go from R^n to R^N with N >= n >= 1.\n"
            raise ValueError(err)
        if not (np.all(np.isfinite(linear)) and np.all(np.isfinite(shift))):
            err = "affine map has non-finite entries.\n"
            raise ValueError(err)

        self.linear = linear
        self.shift = shift

    @property
    def n(self):
        return self.linear.shape[1]

    @property
    def N(self):
        return self.linear.shape[0]

    @property
    def norm(self):
        """Operator norm of the linear part."""
        return float(singular_values(self)[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.shift

    def __repr__(self):
        return "AffineMap(linear={}, shift={})".format(self.linear.tolist(),
                                                        self.shift.tolist())

    @classmethod
    def taylor(cls, value, jacobian, at):
        """
        First-order Taylor map: z -> value + jacobian @ (z - at).
        """
        jacobian = np.asarray(jacobian, dtype=float)
        at = np.asarray(at, dtype=float)
        return cls(jacobian, np.asarray(value, dtype=float) - jacobian @ at)

    def compose(self, inner):
        """Return self o inner."""
        return AffineMap(self.linear @ inner.linear,
                         self.linear @ inner.shift + self.shift)

    def post(self, outer):
        """Return outer o self."""
        return outer.compose(self)


def singular_values(A):
    """
    Ascending singular values lambda_1 <= ... <= lambda_n of the linear part
    of A (an AffineMap or a plain N x n matrix).
    """
    linear = A.linear if isinstance(A, AffineMap) else np.asarray(A, dtype=float)
    s = np.linalg.svd(linear, compute_uv=False)
    return np.sort(s)


def operator_norms(mats):
    """
    Operator norms of a stack of matrices with shape (..., N, n).  The
    n = 1 and n = 2 cases use closed forms, everything else goes through SVD.
    """
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[-1]
    if n == 1:
        return np.sqrt(np.sum(mats[..., 0]**2, axis=-1))
    if n == 2:
        a = np.sum(mats[..., 0]**2, axis=-1)
        c = np.sum(mats[..., 1]**2, axis=-1)
        b = np.sum(mats[..., 0]*mats[..., 1], axis=-1)
        top = 0.5*(a + c) + np.sqrt((0.5*(a - c))**2 + b**2)
        return np.sqrt(np.maximum(top, 0.0))
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def simplex_volume(nodes):
    """Lebesgue measure of the simplex spanned by n+1 nodes in R^n."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.shape[1]
    edges = nodes[1:] - nodes[0]
    return abs(np.linalg.det(edges))/math.factorial(n)


def affine_from_samples(nodes, values, vol_tol=1e-12):
    """
    The unique affine map sending nodes[i] to values[i].

    nodes: (n+1, n) affinely independent points in R^n
    values: (n+1, N) target points
    vol_tol: nodes whose simplex volume is below vol_tol*diam^n are rejected
    """

    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes.reshape(-1, 1)
    if values.ndim == 1:
        values = values.reshape(-1, 1)

    n = nodes.shape[1]
    if nodes.shape[0] != n + 1 or values.shape[0] != n + 1:
        err = "need exactly n+1 = {} nodes and values, got {} and {}.\n".format(
            n + 1, nodes.shape[0], values.shape[0])
        raise ValueError(err)

    diam = float(np.max(pdist(nodes)))
    if diam == 0 or simplex_volume(nodes) <= vol_tol*diam**n:
        err = "interpolation nodes are affinely dependent.\n"
        raise DegenerateSimplex(err)

    edges = nodes[1:] - nodes[0]
    linear = np.linalg.solve(edges, values[1:] - values[0]).T
    shift = values[0] - linear @ nodes[0]

    return AffineMap(linear, shift)


def random_orthonormal(N, n, rng):
    """N x n matrix with orthonormal columns, Haar distributed."""
    q, r = np.linalg.qr(rng.standard_normal((N, n)))
    return q*np.sign(np.diag(r))


class Plane(object):
    """
    An n-dimensional affine plane in R^N.

    Parameters
    ----------
    base : array-like, shape (N,)
        a point on the plane.
    frame : array-like, shape (n, N)
        orthonormal direction vectors, one per row.
    """

    __slots__ = ("base", "frame")

    def __init__(self, base, frame):
        base = np.asarray(base, dtype=float).reshape(-1)
        frame = np.atleast_2d(np.asarray(frame, dtype=float))
        if frame.shape[1] != base.shape[0]:
            err = "plane frame lives in R^{} but base in R^{}.\n".format(
                frame.shape[1], base.shape[0])
            raise ValueError(err)
        gram = frame @ frame.T
        if not np.allclose(gram, np.eye(frame.shape[0]), atol=1e-12, rtol=0):
            err = "plane frame is not orthonormal.\n"
            raise ValueError(err)
        self.base = base
        self.frame = frame

    @property
    def n(self):
        return self.frame.shape[0]

    @property
    def N(self):
        return self.frame.shape[1]

    def project(self, points):
        diff = np.atleast_2d(points) - self.base
        return self.base + (diff @ self.frame.T) @ self.frame

    def distance(self, points):
        diff = np.atleast_2d(np.asarray(points, dtype=float)) - self.base
        along = (diff @ self.frame.T) @ self.frame
        return np.sqrt(np.sum((diff - along)**2, axis=1))

    def through(self, point):
        """Parallel plane through point."""
        return Plane(point, self.frame)

    def grid(self, center, radius, spacing):
        """
        Points of this plane on a square grid of the given spacing centred at
        the projection of center, kept if inside the closed ball B(center, radius).
        """
        c = self.project(center)[0]
        k = int(math.floor(radius/spacing))
        ticks = spacing*np.arange(-k, k + 1)
        mesh = np.stack(np.meshgrid(*([ticks]*self.n), indexing="ij"), axis=-1)
        mesh = mesh.reshape(-1, self.n)
        pts = c + mesh @ self.frame
        keep = np.sum((pts - center)**2, axis=1) <= radius**2*(1 + BALL_SLACK)
        return pts[keep]

    def __repr__(self):
        return "Plane(base={}, frame={})".format(self.base.tolist(),
                                                 self.frame.tolist())


def canonical_frame(U):
    """
    Orthonormal frame (rows) of the span of the columns of U, built by
    projecting the coordinate axes in order.  Two frames of the same plane
    give the same output.
    """
    U = np.atleast_2d(U)
    N, n = U.shape
    proj = U @ U.T
    rows = []
    for j in range(N):
        v = proj[:, j].copy()
        for w in rows:
            v -= (v @ w)*w
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            rows.append(v/norm)
        if len(rows) == n:
            break
    frame = np.array(rows)
    # a second Gram-Schmidt pass keeps orthonormality at 1e-15
    q, r = np.linalg.qr(frame.T)
    return (q*np.sign(np.diag(r))).T


def _complement(U):
    """Orthonormal basis (columns) of the orthogonal complement of span(U)."""
    N, n = U.shape
    q, _ = np.linalg.qr(U, mode="complete")
    return q[:, n:]


def _circle_from(a, b, c=None):
    if c is None:
        center = 0.5*(a + b)
        return center, 0.5*np.linalg.norm(a - b)
    ab = b - a
    ac = c - a
    d = 2.0*(ab[0]*ac[1] - ab[1]*ac[0])
    if abs(d) < 1e-300:
        # collinear: the widest pair decides
        pairs = [(a, b), (a, c), (b, c)]
        best = max(pairs, key=lambda p: np.linalg.norm(p[0] - p[1]))
        return _circle_from(*best)
    ab2 = ab @ ab
    ac2 = ac @ ac
    ux = (ac[1]*ab2 - ab[1]*ac2)/d
    uy = (ab[0]*ac2 - ac[0]*ab2)/d
    center = a + np.array([ux, uy])
    return center, float(np.linalg.norm(center - a))


def _min_circle(pts):
    """Smallest enclosing circle, incremental construction in a fixed order."""
    if len(pts) > 8:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass
    order = np.random.default_rng(0).permutation(len(pts))
    pts = pts[order]

    def outside(p, center, radius):
        return np.linalg.norm(p - center) > radius*(1 + 1e-12) + 1e-300

    center, radius = pts[0], 0.0
    for i in range(1, len(pts)):
        if outside(pts[i], center, radius):
            center, radius = pts[i], 0.0
            for j in range(i):
                if outside(pts[j], center, radius):
                    center, radius = _circle_from(pts[i], pts[j])
                    for k in range(j):
                        if outside(pts[k], center, radius):
                            center, radius = _circle_from(pts[i], pts[j], pts[k])
    return np.asarray(center, dtype=float), float(radius)


def enclosing_ball(coords):
    """
    Center and radius of the smallest ball containing coords (m x k).
    Exact for k <= 2; for k >= 3 a Nelder-Mead solve of the convex problem.
    """
    coords = np.atleast_2d(coords)
    k = coords.shape[1]
    if k == 1:
        lo, hi = coords[:, 0].min(), coords[:, 0].max()
        return np.array([0.5*(lo + hi)]), 0.5*float(hi - lo)
    if k == 2:
        return _min_circle(coords)

    def radius(c):
        return np.sqrt(np.max(np.sum((coords - c)**2, axis=1)))

    start = coords.mean(axis=0)
    res = optimize.minimize(radius, start, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    c = res.x if res.fun <= radius(start) else start
    return c, float(radius(c))


class PlaneFit(NamedTuple):
    """Result of minimax_fit."""
    plane: Plane
    supdist: float
    degenerate: bool
    tol: float


def _fibonacci_hemisphere(count):
    i = np.arange(count) + 0.5
    z = i/count
    phi = np.pi*(1 + 5**0.5)*i
    rho = np.sqrt(1 - z**2)
    return np.stack([rho*np.cos(phi), rho*np.sin(phi), z], axis=1)


def _alignment_key(frame):
    """Larger is more aligned with e_1, then e_2, ..."""
    diag = np.sum(frame**2, axis=0)
    return tuple(np.round(diag, 9))


class _Objective(object):
    """
    Sup distance of Q to the plane whose normal space is spanned by the
    columns of W.  Centered planes pass through the origin of Q; free planes
    use the smallest enclosing ball of the normal coordinates.
    """

    def __init__(self, Q, centered):
        self.Q = Q
        self.centered = centered

    def __call__(self, W):
        C = self.Q @ W
        if self.centered:
            return float(np.sqrt(np.max(np.sum(C**2, axis=1)))), np.zeros(W.shape[1])
        center, radius = enclosing_ball(C)
        return radius, center

    def screen(self, Ws):
        """Cheap vectorized values over a stack of normal frames (c, N, k)."""
        C = np.einsum("mN,cNk->cmk", self.Q, Ws)
        if self.centered:
            return np.sqrt(np.max(np.sum(C**2, axis=2), axis=1))
        if Ws.shape[2] == 1:
            return 0.5*(C[:, :, 0].max(axis=1) - C[:, :, 0].min(axis=1))
        mid = C.mean(axis=1, keepdims=True)
        return np.sqrt(np.max(np.sum((C - mid)**2, axis=2), axis=1))


def _principal_frame(Q):
    """
    Right singular vectors of Q as columns, each sign fixed by the third
    moment of the coordinates.  Orthogonal maps of Q carry the frame along.
    """
    _, _, vt = np.linalg.svd(Q, full_matrices=True)
    V = vt.T
    skew = np.sum((Q @ V)**3, axis=0)
    return V*np.where(skew < 0, -1.0, 1.0)


def _candidate_normals(Q, n, seeds, rng, n_starts):
    """Stack of normal frames (c, N, k) to screen."""
    N = Q.shape[1]
    k = N - n
    frames = []

    # principal directions
    _, _, vt = np.linalg.svd(Q, full_matrices=True)
    frames.append(vt[n:].T)

    for U in seeds:
        frames.append(_complement(np.asarray(U, dtype=float)))

    if N == 2:
        angles = np.linspace(0, np.pi, 720, endpoint=False)
        for a in angles:
            frames.append(np.array([[-np.sin(a)], [np.cos(a)]]))
    elif N == 3:
        for v in _fibonacci_hemisphere(800):
            if k == 1:
                frames.append(v.reshape(3, 1))
            else:
                frames.append(_complement(v.reshape(3, 1)))
    else:
        for _ in range(n_starts):
            frames.append(random_orthonormal(N, k, rng))

    return np.array(frames)


def _chart(W0):
    """Local chart theta -> W around the normal frame W0."""
    U0 = _complement(W0)
    n, k = U0.shape[1], W0.shape[1]

    def W_of(theta):
        M = W0 + U0 @ np.reshape(theta, (n, k))
        q, r = np.linalg.qr(M)
        return q*np.sign(np.diag(r))

    return W_of, n*k


def _polish(objective, W0, fatol):
    W_of, dim = _chart(W0)
    start_val = objective(W0)[0]

    def f(theta):
        return objective(W_of(theta))[0]

    if dim == 1:
        res = optimize.minimize_scalar(f, bounds=(-0.02, 0.02), method="bounded",
                                       options={"xatol": 1e-13})
        theta = np.array([res.x])
    else:
        simplex = np.vstack([np.zeros(dim), 0.01*np.eye(dim)])
        res = optimize.minimize(f, np.zeros(dim), method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": fatol,
                                         "maxiter": 400*dim,
                                         "initial_simplex": simplex})
        theta = res.x
    W = W_of(theta)
    if objective(W)[0] <= start_val:
        return W
    return W0


def minimax_fit(points, n, anchor=None, seeds=(), tol=None, seed=0, n_starts=16,
                n_polish=3):
    """
    Minimax (Chebyshev) fit of an n-plane to points in R^N.

    Candidate normal frames (principal directions, seeds, a hemisphere or
    circle of directions, random frames when N > 3), all taken in the
    principal frame of the points, are screened with a vectorised objective.
    The best few are then refined by a derivative-free descent on a chart of
    the Grassmannian: a bounded scalar search when the chart is
    one-dimensional, Nelder-Mead otherwise.  There is no exchange
    step over the active extreme points; the refinement stops at tol.

    points: (m, N) array
    n: plane dimension
    anchor: if given, the plane is constrained to pass through it
    seeds: extra candidate frames (N x n, orthonormal columns) to consider
    tol: solver tolerance; default 1e-6 * diameter of the input
    seed: seed for the random starts used when N > 3
    n_starts: random starts when N > 3
    n_polish: how many screened candidates get a local polish

    returns: PlaneFit(plane, supdist, degenerate, tol)
    """

    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, N = P.shape
    if m == 0:
        err = "cannot fit a plane to an empty point list.\n"
        raise ValueError(err)
    if not 1 <= n <= N:
        err = "plane dimension {} must be between 1 and {}.\n".format(n, N)
        raise ValueError(err)

    centered = anchor is not None
    allpts = P if not centered else np.vstack([P, np.asarray(anchor, dtype=float)])
    diam = float(np.max(pdist(allpts))) if len(allpts) > 1 else 0.0
    if tol is None:
        tol = 1e-6*diam

    ref = np.asarray(anchor, dtype=float) if centered else P.mean(axis=0)
    Q = P - ref

    if n == N:
        plane = Plane(ref, np.eye(N))
        return PlaneFit(plane, 0.0, False, tol)

    # affine rank <= n: a containing plane exists
    sv = np.linalg.svd(Q, compute_uv=False) if m > 0 else np.zeros(0)
    rank = int(np.sum(sv > 1e-12*max(diam, 1e-300)))
    if rank <= n:
        _, _, vt = np.linalg.svd(Q, full_matrices=True)
        plane = Plane(ref, canonical_frame(vt[:n].T))
        return PlaneFit(plane, float(np.max(plane.distance(P))), True, tol)

    # screening and descent run in the principal frame of the points, so the
    # fit commutes with isometries and scalings
    V = _principal_frame(Q)
    objective = _Objective(Q @ V, centered)
    rng = np.random.default_rng(seed)
    seeds = [V.T @ np.asarray(U, dtype=float) for U in seeds]
    normals = _candidate_normals(Q @ V, n, seeds, rng, n_starts)

    screened = objective.screen(normals)
    order = np.argsort(screened, kind="stable")

    # keep the principal and seeded frames in the race regardless of screening
    forced = list(range(1 + len(seeds)))
    picked = list(order[:n_polish]) + forced
    seen = set()
    results = []
    for i in picked:
        if i in seen:
            continue
        seen.add(i)
        W = normals[i]
        if i in order[:n_polish]:
            W = _polish(objective, W, fatol=max(tol*1e-3, 1e-300))
        value, center = objective(W)
        results.append((value, W, center))

    best = min(r[0] for r in results)
    ties = [r for r in results if r[0] <= best + tol]
    fits = []
    for value, W, center in ties:
        W = V @ W
        U = _complement(W)
        frame = canonical_frame(U)
        base = ref + W @ center
        plane = Plane(base, frame)
        fits.append((_alignment_key(frame), -float(np.max(plane.distance(P))), plane))
    fits.sort(key=lambda t: (t[1], t[0]), reverse=True)
    plane = fits[0][2]

    return PlaneFit(plane, float(np.max(plane.distance(P))), False, tol)


def fit_plane_minimax(points, n, anchor=None, **kwargs):
    """
    Best n-plane in the sup norm.  Returns (plane, supdist).  See minimax_fit
    for the keyword arguments and the degenerate flag.
    """
    fit = minimax_fit(points, n, anchor=anchor, **kwargs)
    return fit.plane, fit.supdist


def fit_line_angle_grid(points, anchor=None, step=1e-4):
    """
    Exhaustive angle scan for lines in the plane.  Returns (angle, supdist)
    with angle the direction of the best line in [0, pi).
    """

    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != 2:
        err = "the angle grid only handles lines in R^2.\n"
        raise ValueError(err)

    angles = np.arange(0.0, np.pi, step)
    best_angle, best_value = 0.0, np.inf
    for chunk in np.array_split(angles, max(1, len(angles)//2000)):
        normals = np.stack([-np.sin(chunk), np.cos(chunk)], axis=1)
        s = P @ normals.T
        if anchor is None:
            vals = 0.5*(s.max(axis=0) - s.min(axis=0))
        else:
            s0 = np.asarray(anchor, dtype=float) @ normals.T
            vals = np.abs(s - s0).max(axis=0)
        i = int(np.argmin(vals))
        if vals[i] < best_value:
            best_angle, best_value = float(chunk[i]), float(vals[i])

    return best_angle, best_value


class SampledSet(object):
    """
    Finite sample of a closed set, with an ambient bounding cube.

    Parameters
    ----------
    points : array-like, shape (m, d)
        the samples.  A 1D array is read as m points on the line.
    box : tuple (corner, side), optional
        lower corner and side length of an axis-aligned cube holding every
        point.  Defaults to the bounding cube of the points.
    meta : dict, optional
        generator tag and parameters.
    """

    def __init__(self, points, box=None, meta=None):

        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] == 0:
            err = "a sampled set needs at least one point.\n"
            raise ValueError(err)
        if not np.all(np.isfinite(points)):
            err = "sampled set has non-finite coordinates.\n"
            raise ValueError(err)

        if box is None:
            lo = points.min(axis=0)
            hi = points.max(axis=0)
            side = float(np.max(hi - lo))
            if side == 0:
                side = 1.0
            corner = 0.5*(lo + hi) - 0.5*side
        else:
            corner, side = box
            corner = np.asarray(corner, dtype=float).reshape(-1)
            side = float(side)

        slack = 1e-12*max(side, 1.0)
        if np.any(points < corner - slack) or np.any(points > corner + side + slack):
            err = "sampled set has points outside its box.\n"
            raise ValueError(err)

        self.points = points
        self.box = (corner, side)
        self.meta = dict(meta or {})

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @cached_property
    def tree(self):
        return cKDTree(self.points)

    @cached_property
    def spacing(self):
        """Nearest-neighbour distance of every sample (0 for a single point)."""
        if len(self) < 2:
            return np.zeros(len(self))
        d, _ = self.tree.query(self.points, k=2)
        return d[:, 1]

    @cached_property
    def resolution(self):
        """Largest nearest-neighbour gap of the sample."""
        return float(np.max(self.spacing))

    @cached_property
    def diameter(self):
        pts = self.points
        if len(pts) < 2:
            return 0.0
        if len(pts) > 2000 and self.dim >= 2:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:
                pass
        if self.dim == 1:
            return float(pts.max() - pts.min())
        return float(np.max(pdist(pts)))

    def nearest(self, queries):
        """
        Distance to and index of the nearest sample for each query, with ties
        going to the lowest index.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        k = min(4, len(self))
        d, i = self.tree.query(queries, k=k)
        d = d.reshape(len(queries), k)
        i = i.reshape(len(queries), k)
        tie = d <= d[:, :1]*(1 + 1e-12)
        idx = np.where(tie, i, np.iinfo(np.int64).max).min(axis=1)
        return d[:, 0], idx

    def index_of(self, x, tol=1e-12):
        """Index of the sample equal to x (within tol), else PointNotInSet."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            err = "point of dimension {} queried in a set of dimension {}.\n".format(
                x.shape[0], self.dim)
            raise PointNotInSet(err)
        d, idx = self.nearest(x)
        if d[0] > tol*max(1.0, float(np.max(np.abs(x)))):
            err = "point {} is not a sample of the set.\n".format(x.tolist())
            raise PointNotInSet(err)
        return int(idx[0])

    def ball(self, x, r):
        """Sorted indices of samples in the closed ball B(x, r)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        idx = self.tree.query_ball_point(x, r*(1 + BALL_SLACK))
        return np.array(sorted(idx), dtype=int)

    def subset(self, idx):
        return SampledSet(self.points[idx], box=self.box, meta=self.meta)
