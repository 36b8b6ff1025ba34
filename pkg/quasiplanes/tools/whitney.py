__description__ = \
"""
Whitney decomposition of a box minus a sampled closed set into maximal
dyadic cubes Q with 3Q disjoint from the set, and the smooth partition of
unity subordinate to the doubled cubes.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import itertools
import math
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ResolutionTooCoarse

# subdivision depth used when the set has a single sample
DEFAULT_MIN_LEVEL = 10

# refuse to hold more pending cubes than this at one level
MAX_PENDING = 2000000


class WhitneyDecomposition(object):
    """
    Maximal closed dyadic cubes Q inside a box with 3Q ∩ E empty.

    Parameters
    ----------
    E : SampledSet
        the closed set.
    corners : array, shape (q, n)
        lower corners of the cubes.
    levels : array, shape (q,)
        dyadic level; side = box side * 2^-level.
    box : tuple (corner, side)
        the ambient cube.
    min_level : int
        deepest level of the subdivision.
    collar : array, shape (c, n)
        corners of the min_level cubes that still meet 3Q ∩ E; the region
        they cover and no Whitney cube does is the resolution collar.
    """

    def __init__(self, E, corners, levels, box, min_level, collar):
        self.E = E
        self.corners = np.asarray(corners, dtype=float).reshape(-1, E.dim)
        self.levels = np.asarray(levels, dtype=int)
        self.box = (np.asarray(box[0], dtype=float), float(box[1]))
        self.min_level = int(min_level)
        self.collar = np.asarray(collar, dtype=float).reshape(-1, E.dim)

    def __len__(self):
        return len(self.levels)

    def __repr__(self):
        return "WhitneyDecomposition(cubes={}, collar={}, min_level={})".format(
            len(self), len(self.collar), self.min_level)

    @property
    def n(self):
        return self.corners.shape[1]

    @cached_property
    def sides(self):
        return self.box[1]*2.0**(-self.levels)

    @cached_property
    def centers(self):
        return self.corners + 0.5*self.sides[:, None]

    @cached_property
    def diameters(self):
        """r_Q = diam Q."""
        return self.sides*math.sqrt(self.n)

    @property
    def collar_side(self):
        return self.box[1]*2.0**(-self.min_level)

    @cached_property
    def anchors(self):
        """
        (z, w): z[Q] is the index of the sample of E closest to Q (lowest
        index on ties) and w[Q] the point of Q closest to it.
        """
        E = self.E
        lo = self.corners
        hi = self.corners + self.sides[:, None]
        d0, _ = E.tree.query(self.centers)
        radii = d0 + 0.5*self.diameters
        z = np.empty(len(self), dtype=int)
        for q, cand in enumerate(E.tree.query_ball_point(self.centers, radii*(1 + 1e-12))):
            cand = np.array(sorted(cand), dtype=int)
            pts = E.points[cand]
            gap = pts - np.clip(pts, lo[q], hi[q])
            z[q] = cand[int(np.argmin(np.sum(gap**2, axis=1)))]
        w = np.clip(E.points[z], lo, hi)
        return z, w

    @cached_property
    def _level_trees(self):
        trees = {}
        for level in np.unique(self.levels):
            idx = np.flatnonzero(self.levels == level)
            trees[int(level)] = (cKDTree(self.centers[idx]), idx,
                                 self.box[1]*2.0**(-level))
        return trees

    def containing(self, x, dilation=2.0, strict=False):
        """
        Sorted indices of cubes Q with x in dilation*Q (open interior when
        strict).
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        found = []
        for tree, idx, side in self._level_trees.values():
            reach = 0.5*dilation*side
            hits = tree.query_ball_point(x, reach*(1 + 1e-12), p=np.inf)
            for h in hits:
                q = idx[h]
                gap = float(np.max(np.abs(x - self.centers[q])))
                if gap < reach or (not strict and gap <= reach*(1 + 1e-12)):
                    found.append(q)
        return np.array(sorted(found), dtype=int)

    def overlap_counts(self, points, dilation=2.0):
        """Number of cubes Q with the point in dilation*Q, for each point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        counts = np.zeros(len(points), dtype=int)
        for tree, _, side in self._level_trees.values():
            counts += tree.query_ball_point(points, 0.5*dilation*side*(1 + 1e-12), p=np.inf,
                                            return_length=True)
        return counts

    def locate(self, x):
        """Indices of the closed Whitney cubes holding x."""
        return self.containing(x, dilation=1.0)

    def inside_box(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        corner, side = self.box
        slack = 1e-12*max(1.0, side)
        return bool(np.all(x >= corner - slack) and np.all(x <= corner + side + slack))

    def in_collar(self, x):
        """x lies in the box but in no Whitney cube."""
        return self.inside_box(x) and len(self.locate(x)) == 0

    def distance(self, x):
        """d(x) and the index of x' (nearest sample, lowest index on ties)."""
        d, idx = self.E.nearest(x)
        return float(d[0]), int(idx[0])

    def touching_pairs(self):
        """Index pairs (i < j) of cubes whose doubles intersect."""
        pairs = set()
        trees = list(self._level_trees.values())
        for (ta, ia, sa), (tb, ib, sb) in itertools.combinations_with_replacement(trees, 2):
            reach = (sa + sb)*(1 + 1e-12)
            for a, hits in enumerate(ta.query_ball_tree(tb, reach, p=np.inf)):
                for h in hits:
                    i, j = int(ia[a]), int(ib[h])
                    if i != j:
                        pairs.add((min(i, j), max(i, j)))
        pairs = np.array(sorted(pairs), dtype=int).reshape(-1, 2)
        return pairs[:, 0], pairs[:, 1]

    def to_records(self):
        z, _ = self.anchors
        return [{"corner": c.tolist(), "side": float(s), "level": int(l), "z": int(zq)}
                for c, s, l, zq in zip(self.corners, self.sides, self.levels, z)]


def whitney_decompose(E, box=None, min_level=None):
    """
    Whitney cubes of box \\ E by top-down dyadic subdivision.

    A cube is accepted when 3Q misses E and split otherwise; cubes still
    meeting E at min_level form the collar.

    E: SampledSet
    box: (corner, side), default E.box
    min_level: deepest level; the sampling resolution of E must be below
               side * 2^-min_level

    returns: WhitneyDecomposition
    """

    corner, side = E.box if box is None else box
    corner = np.asarray(corner, dtype=float).reshape(-1)
    side = float(side)
    n = E.dim
    if corner.shape[0] != n:
        err = "box lives in R^{} but the set in R^{}.\n".format(corner.shape[0], n)
        raise ValueError(err)
    slack = 1e-12*max(1.0, side)
    if np.any(E.points < corner - slack) or np.any(E.points > corner + side + slack):
        err = "the set is not contained in the box.\n"
        raise ValueError(err)

    res = E.resolution if len(E) > 1 else 0.0
    if min_level is None:
        if res > 0:
            min_level = max(1, int(math.ceil(math.log2(side/res))) - 1)
        else:
            min_level = DEFAULT_MIN_LEVEL
    elif res >= side*2.0**(-min_level):
        err = "sampling resolution {} is not below the finest cube side {}.\n".format(
            res, side*2.0**(-min_level))
        raise ResolutionTooCoarse(err)

    offsets = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    pending = corner[None, :]
    corners, levels = [], []
    collar = np.zeros((0, n))
    for level in range(min_level + 1):
        s = side*2.0**(-level)
        d, _ = E.tree.query(pending + 0.5*s, p=np.inf)
        free = d > 1.5*s*(1 + 1e-12)
        corners.append(pending[free])
        levels.append(np.full(int(np.sum(free)), level))
        blocked = pending[~free]
        if level == min_level:
            collar = blocked
            break
        pending = (blocked[:, None, :] + 0.5*s*offsets[None]).reshape(-1, n)
        if len(pending) > MAX_PENDING:
            err = "subdivision to level {} needs more than {} cubes.\n".format(
                level + 1, MAX_PENDING)
            raise ValueError(err)

    corners = np.vstack(corners) if corners else np.zeros((0, n))
    levels = np.concatenate(levels) if levels else np.zeros(0, dtype=int)
    order = np.lexsort(corners.T[::-1].tolist() + [levels]) if len(levels) else levels
    collar = collar[np.lexsort(collar.T[::-1])] if len(collar) else collar

    return WhitneyDecomposition(E, corners[order], levels[order], (corner, side),
                                min_level, collar)


def check_properties(W, include_collar=False):
    """
    Measured ratios of the Whitney properties; each property holds with its
    stated constant when its ratio is at most 1.

      b_lower  (diam Q / sqrt n) / d(x)      x a vertex or the center of Q
      b_upper  d(x) / (4 diam Q)
      c_lower  (diam Q / 2 sqrt n) / d(y)    y a vertex or the center of 2Q
      c_upper  d(y) / (9/2 diam Q)
      d        diam R / (9 sqrt n diam Q)    over touching pairs
      e        largest number of doubled cubes holding a test point
      a_gap    box volume not covered by cubes and collar, relative
    """

    n = W.n
    root = math.sqrt(n)
    unit = np.array(list(itertools.product((-0.5, 0.5), repeat=n)) + [[0.0]*n])
    out = {"cubes": len(W), "collar": len(W.collar)}

    if len(W) == 0:
        out.update({"b_lower": 0.0, "b_upper": 0.0, "c_lower": 0.0, "c_upper": 0.0,
                    "d": 0.0, "e": 0, "a_gap": 1.0 - len(W.collar)*W.collar_side**n/W.box[1]**n})
        return out

    sides = W.sides[:, None, None]
    diam = W.diameters[:, None]
    pts_b = W.centers[:, None, :] + unit[None]*sides
    pts_c = W.centers[:, None, :] + 2*(1 - 1e-9)*unit[None]*sides
    shape = pts_b.shape[:2]
    d_b = W.E.nearest(pts_b.reshape(-1, n))[0].reshape(shape)
    d_c = W.E.nearest(pts_c.reshape(-1, n))[0].reshape(shape)

    with np.errstate(divide="ignore"):
        out["b_lower"] = float(np.max(diam/root/d_b))
        out["c_lower"] = float(np.max(diam/(2*root)/d_c))
    out["b_upper"] = float(np.max(d_b/(4*diam)))
    out["c_upper"] = float(np.max(d_c/(4.5*diam)))

    I, J = W.touching_pairs()
    if len(I):
        dq, dr = W.diameters[I], W.diameters[J]
        out["d"] = float(max(np.max(dr/(9*root*dq)), np.max(dq/(9*root*dr))))
    else:
        out["d"] = 0.0

    queries = pts_b.reshape(-1, n)
    if include_collar and len(W.collar):
        queries = np.vstack([queries, W.collar + 0.5*W.collar_side])
    out["e"] = int(np.max(W.overlap_counts(queries)))

    covered = float(np.sum(W.sides**n)) + len(W.collar)*W.collar_side**n
    out["a_gap"] = abs(W.box[1]**n - covered)/W.box[1]**n
    return out


def _bump_factors(t):
    """
    exp(-1/(1-t^2)) on (-1, 1) and the first two derivatives of its
    logarithm; zero outside.
    """
    inside = np.abs(t) < 1
    u = np.where(inside, 1 - t**2, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        psi = np.where(inside, np.exp(-1/u), 0.0)
        g1 = np.where(inside, -2*t/u**2, 0.0)
        g2 = np.where(inside, -2/u**2 - 8*t**2/u**3, 0.0)
    return psi, g1, g2


class PartitionOfUnity(object):
    """
    phi_Q = b_Q / sum_R b_R with b_Q the tensor bump of 2Q.  Values, gradients
    and Hessians are exact; sum phi = 1 wherever some 2Q holds x, and the
    derivative sums vanish there.

    Parameters
    ----------
    W : WhitneyDecomposition
    """

    def __init__(self, W):
        self.W = W

    def _bumps(self, x, idx):
        W = self.W
        side = W.sides[idx][:, None]
        t = (x[None, :] - W.centers[idx])/side
        psi, g1, g2 = _bump_factors(t)
        b = np.prod(psi, axis=1)
        live = b > 0
        g1 = np.where(live[:, None], g1, 0.0)
        g2 = np.where(live[:, None], g2, 0.0)
        Db = (g1/side)*b[:, None]
        D2b = (np.einsum("qi,qj->qij", g1, g1)
               + np.einsum("qi,ij->qij", g2, np.eye(W.n)))
        D2b *= (b/side[:, 0]**2)[:, None, None]
        return b, Db, D2b

    def __call__(self, x):
        """
        (idx, phi, Dphi, D2phi) at x: cube indices with x in the open 2Q,
        the values (k,), gradients (k, n) and Hessians (k, n, n).
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        n = self.W.n
        idx = self.W.containing(x, dilation=2.0, strict=True)
        if len(idx) == 0:
            return idx, np.zeros(0), np.zeros((0, n)), np.zeros((0, n, n))

        b, Db, D2b = self._bumps(x, idx)
        S = b.sum()
        if S <= 0:
            return idx[:0], np.zeros(0), np.zeros((0, n)), np.zeros((0, n, n))
        DS = Db.sum(axis=0)
        D2S = D2b.sum(axis=0)

        phi = b/S
        Dphi = Db/S - np.outer(b, DS)/S**2
        cross = np.einsum("qi,j->qij", Db, DS)
        D2phi = (D2b/S
                 - (cross + np.swapaxes(cross, 1, 2))/S**2
                 - b[:, None, None]*D2S[None]/S**2
                 + 2*b[:, None, None]*np.outer(DS, DS)[None]/S**3)
        return idx, phi, Dphi, D2phi

    def values(self, x):
        idx, phi, _, _ = self(x)
        return idx, phi

    def derivative_constants(self, points):
        """
        Largest |Dphi_Q| diam Q and |D2phi_Q| (diam Q)^2 over the given points.
        """
        c1 = c2 = 0.0
        for x in np.atleast_2d(points):
            idx, _, Dphi, D2phi = self(x)
            if len(idx) == 0:
                continue
            diam = self.W.diameters[idx]
            c1 = max(c1, float(np.max(np.linalg.norm(Dphi, axis=1)*diam)))
            c2 = max(c2, float(np.max(np.linalg.norm(D2phi, ord=2, axis=(1, 2))*diam**2)))
        return c1, c2


def partition_of_unity(W):
    return PartitionOfUnity(W)
