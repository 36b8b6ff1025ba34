__description__ = \
"""
Distortion of sampled maps: the weak quasisymmetry constant H_f on finite
sample sets, its Dini and Carleson functionals over balls, and the best
similarity approximating a map on a ball.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..errors import (DegenerateSamples, MissingSamples, NotInjective,
                      ScaleBelowResolution)
from .flatness import log_grid, trapezoid_log
from .geometry import AffineMap, SampledSet

# triples are enumerated on at most this many samples per ball
TRIPLE_CAP = 400


class SampledMap(object):
    """
    A map known through its values on a finite sample.

    Parameters
    ----------
    domain : SampledSet or array-like, shape (m, d)
        the samples of the domain.
    image : array-like, shape (m, N)
        f at each domain sample, in the same order.
    meta : dict, optional
        generator tag and parameters.
    embedding : bool (default: True)
        check that distinct samples have distinct images.
    """

    def __init__(self, domain, image, meta=None, embedding=True):

        if not isinstance(domain, SampledSet):
            domain = SampledSet(domain)
        image = np.asarray(image, dtype=float)
        if image.ndim == 1:
            image = image.reshape(-1, 1)
        if image.shape[0] != len(domain):
            err = "map has {} domain samples but {} image points.\n".format(
                len(domain), image.shape[0])
            raise ValueError(err)
        if not np.all(np.isfinite(image)):
            err = "map has non-finite image points.\n"
            raise ValueError(err)

        self.domain = domain
        self.image = image
        self.meta = dict(meta or {})
        self.embedding = embedding

        if embedding and len(domain) > 1:
            pairs = cKDTree(image).query_pairs(1e-12, output_type="ndarray")
            if len(pairs):
                i, j = (int(v) for v in pairs[np.lexsort(pairs.T[::-1])][0])
                err = "samples {} and {} have the same image.\n".format(i, j)
                raise NotInjective(err, witness=(i, j))

    def __len__(self):
        return len(self.domain)

    @property
    def n(self):
        return self.domain.dim

    @property
    def N(self):
        return self.image.shape[1]

    @property
    def points(self):
        return self.domain.points

    @classmethod
    def from_callable(cls, domain, func, meta=None, embedding=True):
        if not isinstance(domain, SampledSet):
            domain = SampledSet(domain)
        return cls(domain, func(domain.points), meta=meta, embedding=embedding)

    def restrict(self, idx):
        idx = np.asarray(idx, dtype=int)
        return SampledMap(self.domain.subset(idx), self.image[idx], meta=self.meta,
                          embedding=False)

    def inverse(self):
        """The inverse map on the image samples."""
        return SampledMap(SampledSet(self.image), self.points, meta=self.meta,
                          embedding=self.embedding)

    def ball(self, y, s):
        return self.domain.ball(y, s)

    def values_at(self, points, tol=1e-9):
        """f at the given domain points, which must be samples."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d, idx = self.domain.nearest(points)
        scale = np.maximum(1.0, np.max(np.abs(points), axis=1))
        missing = np.flatnonzero(d > tol*scale)
        if len(missing):
            err = "{} requested points are not samples of the map, e.g. {}.\n".format(
                len(missing), points[missing[0]].tolist())
            raise MissingSamples(err)
        return self.image[idx]

    def image_set(self):
        return SampledSet(self.image, meta=self.meta)


@dataclass
class DistortionReport:
    """
    Weak quasisymmetry constant of a map on a sample.

    Htilde = H - 1.  witness is the triple (x, y, a) of domain sample indices
    realising H, or None when H = 1 by the floor.
    """
    H: float
    Htilde: float
    witness: tuple = None
    dini: float = float("nan")
    carleson: float = float("nan")
    n_samples: int = 0
    subsampled: bool = False
    cap: int = TRIPLE_CAP

    def to_record(self):
        return {"H": float(self.H),
                "Htilde": float(self.Htilde),
                "witness": None if self.witness is None else [int(v) for v in self.witness],
                "dini": float(self.dini),
                "carleson": float(self.carleson),
                "n_samples": int(self.n_samples),
                "subsampled": bool(self.subsampled),
                "cap": int(self.cap)}


def farthest_point_order(points, count):
    """
    Indices of count points chosen greedily, each the farthest from those
    already chosen.  Starts at index 0; ties go to the lowest index.
    """
    points = np.atleast_2d(points)
    count = min(count, len(points))
    chosen = [0]
    dist = np.sqrt(np.sum((points - points[0])**2, axis=1))
    for _ in range(count - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sqrt(np.sum((points - points[nxt])**2, axis=1)))
    return np.array(sorted(chosen), dtype=int)


def weak_qs_constant(f, X=None, cap=TRIPLE_CAP):
    """
    Weak quasisymmetry constant of f on the samples X.

    H is the largest ratio |f(x)-f(a)|/|f(y)-f(a)| over triples with
    |x-a| <= |y-a|, floored at 1.  Triples where both distances vanish are
    skipped.

    f: SampledMap
    X: domain sample indices (default: all); at least 3
    cap: above this many samples, a farthest-point subsample is used

    returns: DistortionReport
    """

    idx = np.arange(len(f)) if X is None else np.asarray(X, dtype=int)
    if len(idx) < 3:
        err = "the weak quasisymmetry constant needs at least 3 samples, got {}.\n".format(
            len(idx))
        raise ValueError(err)

    subsampled = False
    if len(idx) > cap:
        idx = idx[farthest_point_order(f.points[idx], cap)]
        subsampled = True

    D = cdist(f.points[idx], f.points[idx])
    G = cdist(f.image[idx], f.image[idx])
    m = len(idx)
    positions = np.arange(m)

    H, witness = 1.0, None
    for a in range(m):
        order = np.argsort(D[a], kind="stable")
        ds = D[a][order]
        gs = G[a][order]

        # every x with |x-a| <= |y-a|, ties included
        last = np.searchsorted(ds, ds, side="right") - 1
        prefmax = np.maximum.accumulate(gs)
        prefarg = np.maximum.accumulate(np.where(gs == prefmax, positions, 0))
        num = prefmax[last]
        den = gs

        bad = (den == 0) & (num > 0)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            trip = (int(idx[order[prefarg[last[j]]]]), int(idx[order[j]]), int(idx[a]))
            err = "samples {} and {} have the same image; H is infinite.\n".format(
                trip[1], trip[2])
            raise NotInjective(err, witness=trip)

        ok = den > 0
        if not np.any(ok):
            continue
        ratio = np.full(m, -np.inf)
        ratio[ok] = num[ok]/den[ok]
        j = int(np.argmax(ratio))
        if ratio[j] > H:
            H = float(ratio[j])
            witness = (int(idx[order[prefarg[last[j]]]]), int(idx[order[j]]), int(idx[a]))

    return DistortionReport(H=H, Htilde=H - 1.0, witness=witness, n_samples=m,
                            subsampled=subsampled, cap=cap)


def _ball_htilde(f, y, s, cap):
    idx = f.ball(y, s)
    if len(idx) < 3:
        return 0.0
    return weak_qs_constant(f, idx, cap=cap).Htilde


def dini_qs_quadrature(f, y, rmax, grid_per_decade=8, rmin=None, cap=TRIPLE_CAP):
    """
    Log-grid quadrature of the integral of Htilde_f(B(y, s))^2 ds/s on
    (rmin, rmax].  rmin defaults to twice the sampling resolution.

    returns: (radii, Htilde values, integral)
    """
    res = f.domain.resolution
    if rmin is None:
        rmin = 2.0*res
    if rmin <= res:
        err = "smallest radius {} is at or below the sampling resolution {}.\n".format(
            rmin, res)
        raise ScaleBelowResolution(err)
    if rmin >= rmax:
        return np.array([rmax]), np.array([0.0]), 0.0

    y = np.asarray(y, dtype=float).reshape(-1)
    radii = log_grid(rmax, rmin, grid_per_decade)
    values = np.array([_ball_htilde(f, y, s, cap) for s in radii])
    return radii, values, trapezoid_log(radii, values**2)


def dini_qs_integral(f, y, rmax, grid_per_decade=8, rmin=None, cap=TRIPLE_CAP):
    """Integral of Htilde_f(B(y, s))^2 ds/s up to rmax, on a log grid."""
    return dini_qs_quadrature(f, y, rmax, grid_per_decade=grid_per_decade,
                              rmin=rmin, cap=cap)[2]


def ball_volume(n, r):
    """Lebesgue measure of an n-ball of radius r."""
    return math.pi**(n/2.0)/math.gamma(n/2.0 + 1)*r**n


def carleson_qs_sum(f, x0, r0, center_grid, scale_grid, weights=None, n=None,
                    cap=TRIPLE_CAP):
    """
    Discretised Carleson functional: the integral over centers x in
    B^n(x0, r0) and scales s in scale_grid of Htilde_f(B(x, s))^2 ds/s,
    divided by the measure of B^n(x0, r0).

    center_grid: (k, d) centers inside B(x0, r0)
    scale_grid: radii, integrated with the log trapezoid rule; nothing below
                the smallest radius is counted
    weights: quadrature weights summing to the ball measure (default equal)
    n: dimension of the center ball (default f.meta["n"], else the domain dim)
    """

    x0 = np.asarray(x0, dtype=float).reshape(-1)
    centers = np.atleast_2d(np.asarray(center_grid, dtype=float))
    if n is None:
        n = int(f.meta.get("n", f.n))
    vol = ball_volume(n, r0)

    if np.any(np.sqrt(np.sum((centers - x0)**2, axis=1)) > r0*(1 + 1e-12)):
        err = "every center must lie in the ball B(x0, r0).\n"
        raise ValueError(err)
    if weights is None:
        weights = np.full(len(centers), vol/len(centers))
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - vol) > 1e-9*vol:
        err = "quadrature weights sum to {} instead of the ball measure {}.\n".format(
            weights.sum(), vol)
        raise ValueError(err)

    radii = np.array(sorted({float(s) for s in scale_grid}, reverse=True))
    if len(radii) and radii[-1] <= f.domain.resolution:
        err = "smallest scale {} is at or below the sampling resolution {}.\n".format(
            radii[-1], f.domain.resolution)
        raise ScaleBelowResolution(err)

    total = 0.0
    for c, w in zip(centers, weights):
        values = np.array([_ball_htilde(f, c, s, cap) for s in radii])
        total += w*trapezoid_log(radii, values**2)
    return total/vol


def fit_similarity(f, x, r):
    """
    Best similarity S on B(x, r) in the Procrustes sense: the polar factor of
    the cross-covariance gives the rotation or reflection, the projected
    spread gives the scale, the centroids give the translation.

    returns: (S, residual) with residual = sup |f - S| / (||S'|| r) over the
             samples in the ball
    """

    idx = f.ball(x, r)
    P = f.points[idx]
    Y = f.image[idx]
    n = P.shape[1]

    if len(idx) < n + 1:
        err = "{} samples in the ball; need at least {}.\n".format(len(idx), n + 1)
        raise DegenerateSamples(err)

    mp = P.mean(axis=0)
    my = Y.mean(axis=0)
    dP = P - mp
    dY = Y - my
    sv = np.linalg.svd(dP, compute_uv=False)
    if np.sum(sv > 1e-12*max(1.0, sv[0])) < n:
        err = "samples in the ball are affinely dependent.\n"
        raise DegenerateSamples(err)

    U, S, Vt = np.linalg.svd(dY.T @ dP, full_matrices=False)
    rotation = U @ Vt
    scale = S.sum()/np.sum(dP**2)
    if scale <= 0:
        err = "the map collapses the ball to a point.\n"
        raise DegenerateSamples(err)

    linear = scale*rotation
    sim = AffineMap(linear, my - linear @ mp)
    residual = float(np.max(np.sqrt(np.sum((Y - sim(P))**2, axis=1))))/(scale*r)
    return sim, residual


def distortion_profile(f, centers, scales, cap=TRIPLE_CAP):
    """
    One row per (center, scale): H and Htilde on the samples in the ball,
    with the number of samples used.
    """
    rows = []
    for c in centers:
        c = int(c)
        y = f.points[c]
        for s in sorted({float(v) for v in scales}, reverse=True):
            idx = f.ball(y, s)
            if len(idx) < 3:
                rep = DistortionReport(H=1.0, Htilde=0.0, n_samples=len(idx))
            else:
                rep = weak_qs_constant(f, idx, cap=cap)
            row = {"index": c}
            for j, v in enumerate(y):
                row["x{}".format(j)] = float(v)
            row.update({"scale": s, "H": rep.H, "Htilde": rep.Htilde,
                        "n_samples": rep.n_samples, "subsampled": rep.subsampled})
            rows.append(row)
    return pd.DataFrame(rows)


def run(f, centers, scales, rmax=None, grid_per_decade=8, carleson=None,
        cap=TRIPLE_CAP):
    """
    Distortion of f around each center.

    centers: domain sample indices
    scales: radii for the per-ball rows
    rmax: upper limit of the Dini integral (default: the largest scale)
    carleson: optional dict with x0, r0 and scale_grid; the centers inside
              B(x0, r0) form the center grid

    returns: (DataFrame of per-ball rows, list of DistortionReport per center)
    """

    scales = sorted({float(v) for v in scales}, reverse=True)
    if rmax is None:
        rmax = scales[0]

    car = float("nan")
    if carleson is not None:
        x0 = np.asarray(carleson["x0"], dtype=float)
        r0 = float(carleson["r0"])
        inside = f.ball(x0, r0)
        car = carleson_qs_sum(f, x0, r0, f.points[inside], carleson["scale_grid"],
                              cap=cap)

    reports = []
    for c in centers:
        y = f.points[int(c)]
        idx = f.ball(y, rmax)
        if len(idx) >= 3:
            rep = weak_qs_constant(f, idx, cap=cap)
        else:
            rep = DistortionReport(H=1.0, Htilde=0.0, n_samples=len(idx))
        rep.dini = dini_qs_integral(f, y, rmax, grid_per_decade=grid_per_decade, cap=cap)
        rep.carleson = car
        reports.append(rep)

    df = distortion_profile(f, centers, scales, cap=cap)
    if len(df):
        df = df.sort_values(["index", "scale"], ascending=[True, False],
                            kind="mergesort").reset_index(drop=True)
    return df, reports
