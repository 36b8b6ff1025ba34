__description__ = \
"""
Synthetic sets and maps: similarities, radial stretches, angle-parameterized
Koch curves, perturbed affine maps, grids and circles.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import math

import numpy as np

from ..config import GeneratorSpec
from ..errors import BadConfig, BadSpec
from .families import AffineFamily
from .geometry import AffineMap, SampledSet, random_orthonormal, singular_values
from .quasisymmetry import SampledMap

MAX_SNOWFLAKE_DEPTH = 12

DEFAULT_RESOLUTION = 1/16


def _spec(spec):
    if isinstance(spec, GeneratorSpec):
        return spec
    try:
        return GeneratorSpec.from_dict(spec)
    except BadConfig as e:
        raise BadSpec(str(e))


def _params(spec, allowed):
    extra = sorted(set(spec.params) - set(allowed))
    if extra:
        err = "{} does not take parameter(s) {}. Allowed parameters are:\n".format(
            spec.kind, ", ".join(extra))
        for k in sorted(allowed):
            err += "    {}\n".format(k)
        raise BadSpec(err)
    out = dict(allowed)
    out.update(spec.params)
    return out


def _dims(spec, n, N):
    n = n if spec.n is None else int(spec.n)
    N = N if spec.N is None else int(spec.N)
    if n < 1 or N < n:
        err = "{} needs 1 <= n <= N, got n = {}, N = {}.\n".format(spec.kind, n, N)
        raise BadSpec(err)
    return n, N


def _resolution(spec):
    res = DEFAULT_RESOLUTION if spec.resolution is None else float(spec.resolution)
    if not res > 0:
        err = "resolution must be positive, got {}.\n".format(res)
        raise BadSpec(err)
    return res


def _meta(spec, n, **extra):
    meta = {"generator": spec.kind, "n": n, "seed": spec.seed}
    meta.update(spec.params)
    meta.update(extra)
    return meta


def grid_points(n, spacing, center=None, radius=1.0, shape="cube"):
    """
    Regular grid of the cube [-radius, radius]^n (or of the ball of that
    radius) around center.
    """
    k = int(round(2*radius/spacing)) + 1
    if k < 2:
        err = "spacing {} is larger than the grid diameter {}.\n".format(spacing, 2*radius)
        raise BadSpec(err)
    ticks = np.linspace(-radius, radius, k)
    pts = np.stack(np.meshgrid(*[ticks]*n, indexing="ij"), axis=-1).reshape(-1, n)
    if shape == "ball":
        pts = pts[np.linalg.norm(pts, axis=1) <= radius*(1 + 1e-12)]
    elif shape != "cube":
        err = "grid shape '{}' not recognized. Should be one of:\n".format(shape)
        for s in ("ball", "cube"):
            err += "    {}\n".format(s)
        raise BadSpec(err)
    if center is not None:
        pts = pts + np.asarray(center, dtype=float).reshape(1, n)
    return pts


def cantor_points(n, spacing, depth=3, radius=1.0):
    """
    Product of n copies of a sampled middle-thirds Cantor set of the given
    depth, scaled to [-radius, radius].
    """
    intervals = [(-radius, radius)]
    for _ in range(depth):
        nxt = []
        for a, b in intervals:
            third = (b - a)/3
            nxt += [(a, a + third), (b - third, b)]
        intervals = nxt
    ticks = []
    for a, b in intervals:
        k = max(2, int(round((b - a)/spacing)) + 1)
        ticks.append(np.linspace(a, b, k))
    ticks = np.concatenate(ticks)
    return np.stack(np.meshgrid(*[ticks]*n, indexing="ij"), axis=-1).reshape(-1, n)


def _domain(spec, n, params):
    res = _resolution(spec)
    support = params["support"]
    center = params["center"]
    if center is not None and len(center) != n:
        err = "center has {} coordinates, expected {}.\n".format(len(center), n)
        raise BadSpec(err)
    if support == "cantor":
        pts = cantor_points(n, res, depth=int(params["cantor_depth"]),
                            radius=params["radius"])
        if center is not None:
            pts = pts + np.asarray(center, dtype=float)
    else:
        pts = grid_points(n, res, center=center, radius=params["radius"], shape=support)
    return SampledSet(pts, meta={"n": n})


# --------------------------------------------------------------------------- #
# maps

def similarity(spec):
    """x -> scale U x + shift with U a random isometric embedding."""
    p = _params(spec, {"scale": 1.0, "reflect": False, "shift": None,
                       "center": None, "radius": 1.0, "support": "cube",
                       "cantor_depth": 3})
    n, N = _dims(spec, 2, 2)
    if not p["scale"] > 0:
        err = "similarity scale must be positive, got {}.\n".format(p["scale"])
        raise BadSpec(err)
    rng = np.random.default_rng(spec.seed)
    U = random_orthonormal(N, n, rng)
    if p["reflect"]:
        U[:, 0] = -U[:, 0]
    shift = np.zeros(N) if p["shift"] is None else np.asarray(p["shift"], dtype=float)
    if shift.shape != (N,):
        err = "shift has {} coordinates, expected {}.\n".format(shift.size, N)
        raise BadSpec(err)
    A = AffineMap(p["scale"]*U, shift)
    return SampledMap.from_callable(_domain(spec, n, p), lambda x: A(x),
                                    meta=_meta(spec, n, N=N))


def radial_stretch(points, alpha):
    """x -> |x|^(alpha - 1) x, fixing the origin."""
    points = np.asarray(points, dtype=float)
    r = np.linalg.norm(points, axis=1)
    factor = np.ones_like(r)
    moved = r > 0
    factor[moved] = r[moved]**(alpha - 1)
    return points*factor[:, None]


def radial_qc(spec):
    """The radial stretch x -> |x|^(alpha - 1) x of R^n, 0 < alpha <= 1."""
    p = _params(spec, {"alpha": 1.0, "center": None, "radius": 1.0,
                       "support": "cube", "cantor_depth": 3})
    n = 2 if spec.n is None else int(spec.n)
    n, N = _dims(spec, n, n)
    if N != n:
        err = "radial_qc maps R^n to itself; got n = {}, N = {}.\n".format(n, N)
        raise BadSpec(err)
    alpha = float(p["alpha"])
    if not 0 < alpha <= 1:
        err = "radial_qc needs alpha in (0, 1], got {}.\n".format(alpha)
        raise BadSpec(err)
    return SampledMap.from_callable(_domain(spec, n, p),
                                    lambda x: radial_stretch(x, alpha),
                                    meta=_meta(spec, n, N=n))


def snowflake_angles(params, depth):
    """Per-level angles from 'angles', 'angle' or 'harmonic'."""
    given = [k for k in ("angles", "angle", "harmonic") if params.get(k) is not None]
    if len(given) > 1:
        err = "give only one of angles, angle, harmonic.\n"
        raise BadSpec(err)
    if not given or given[0] == "angle":
        value = params.get("angle")
        angles = [math.pi/3 if value is None else float(value)]*depth
    elif given[0] == "harmonic":
        c = float(params["harmonic"])
        angles = [c/j for j in range(1, depth + 1)]
    else:
        angles = [float(a) for a in params["angles"]]
        if len(angles) < depth:
            err = "{} angles given for depth {}.\n".format(len(angles), depth)
            raise BadSpec(err)
        angles = angles[:depth]
    for a in angles:
        if not 0 <= a < math.pi/2:
            err = "snowflake angles must lie in [0, pi/2), got {}.\n".format(a)
            raise BadSpec(err)
    return angles


def snowflake_vertices(angles, start=0.0, end=1.0):
    """
    Vertices of the Koch-type curve from start to end (complex numbers).
    Every level replaces each segment [p, q] by four segments of length
    |q - p| / (2 (1 + cos a)), the middle two forming a bump of angle a.
    Returns 4^depth + 1 complex points.
    """
    P = np.array([start, end], dtype=complex)
    for a in angles:
        p, q = P[:-1], P[1:]
        step = (q - p)/(2*(1 + math.cos(a)))
        left = p + step
        apex = left + step*np.exp(1j*a)
        right = q - step
        P = np.append(np.stack([p, left, apex, right], axis=1).reshape(-1), P[-1])
    return P


def snowflake_length_factor(angle):
    """Arc-length growth of one replacement step."""
    return 2/(1 + math.cos(angle))


def snowflake(spec):
    """
    Koch-type curve with per-level angles, parameterized by t = k / 4^depth
    on [0, 1].
    """
    p = _params(spec, {"depth": 5, "angles": None, "angle": None, "harmonic": None})
    n, N = _dims(spec, 1, 2)
    if n != 1 or N < 2:
        err = "snowflake is a curve in R^N, N >= 2; got n = {}, N = {}.\n".format(n, N)
        raise BadSpec(err)
    depth = int(p["depth"])
    if not 0 <= depth <= MAX_SNOWFLAKE_DEPTH:
        err = "snowflake depth must lie in [0, {}], got {}.\n".format(
            MAX_SNOWFLAKE_DEPTH, depth)
        raise BadSpec(err)
    angles = snowflake_angles(p, depth)
    z = snowflake_vertices(angles)
    image = np.zeros((len(z), N))
    image[:, 0] = z.real
    image[:, 1] = z.imag
    t = np.arange(len(z))/4**depth
    domain = SampledSet(t, box=(np.zeros(1), 1.0), meta={"n": 1})
    return SampledMap(domain, image, meta=_meta(spec, 1, N=N, angles=angles, depth=depth))


class PerturbedAffine(object):
    """
    f(z) = A0 z + b + delta rho u sin(<w, z> / rho), with |u| = |w| = 1.

    Df differs from A0 by at most delta, so f is a bi-Lipschitz
    embedding once delta is below the smallest singular value of A0.  The
    Taylor maps of f below rho and A0 above it form a family that is
    eps-compatible and eps-almost affine for f on all of R^n, with
    eps = delta / (s_min(A0) - delta).

    Parameters
    ----------
    A0 : array-like, shape (N, n)
    b : array-like, shape (N,)
    delta : float
    rho : float
        the wavelength of the perturbation.
    u : array-like, shape (N,)
    w : array-like, shape (n,)
    """

    def __init__(self, A0, b, delta, rho, u, w):

        self.A0 = np.atleast_2d(np.asarray(A0, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        self.delta = float(delta)
        self.rho = float(rho)
        self.u = np.asarray(u, dtype=float).reshape(-1)
        self.w = np.asarray(w, dtype=float).reshape(-1)
        self.s_min = float(singular_values(self.A0)[0])
        if not 0 <= self.delta < self.s_min:
            err = "delta = {} must lie in [0, s_min(A0) = {}).\n".format(self.delta,
                                                                          self.s_min)
            raise BadSpec(err)
        if not self.rho > 0:
            err = "rho must be positive.\n"
            raise BadSpec(err)

    @property
    def n(self):
        return self.A0.shape[1]

    @property
    def N(self):
        return self.A0.shape[0]

    @property
    def eps(self):
        return self.delta/(self.s_min - self.delta)

    def _phase(self, z):
        return (z @ self.w)/self.rho

    def __call__(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        wave = self.delta*self.rho*np.sin(self._phase(z))
        return z @ self.A0.T + self.b + wave[:, None]*self.u

    def jacobian(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        c = self.delta*np.cos(self._phase(z))
        return self.A0[None] + c[:, None, None]*np.outer(self.u, self.w)[None]

    def family_map(self, x, r):
        """Taylor map of f at x for r <= rho, z -> A0 z + b above."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if r > self.rho:
            return AffineMap(self.A0, self.b)
        return AffineMap.taylor(self(x)[0], self.jacobian(x)[0], x[0])

    def sample_family(self, base_points, scales, ratio=2.0):
        base_points = np.atleast_2d(np.asarray(base_points, dtype=float))
        scales = np.asarray(scales, dtype=float)
        m, K = len(base_points), len(scales)
        J = self.jacobian(base_points)
        taylor_shift = self(base_points) - np.einsum("man,mn->ma", J, base_points)
        small = scales <= self.rho
        linear = np.empty((m, K, self.N, self.n))
        shift = np.empty((m, K, self.N))
        linear[:, small] = J[:, None]
        shift[:, small] = taylor_shift[:, None]
        linear[:, ~small] = self.A0
        shift[:, ~small] = self.b
        return AffineFamily(base_points, scales, linear, shift, eps_nominal=self.eps,
                            ratio=ratio, meta={"generator": "perturbed_affine"})

    def sample(self, domain, meta=None):
        return SampledMap.from_callable(domain, self, meta=meta)

    @classmethod
    def from_spec(cls, spec):
        spec = _spec(spec)
        p = _params(spec, PERTURBED_AFFINE_PARAMS)
        n, N = _dims(spec, 1, 2)
        eps = p["eps"]
        if eps is None or not eps > 0:
            err = "perturbed_affine needs eps > 0, got {}.\n".format(eps)
            raise BadSpec(err)
        if not p["H"] >= 1:
            err = "perturbed_affine needs H >= 1, got {}.\n".format(p["H"])
            raise BadSpec(err)

        rng = np.random.default_rng(spec.seed)
        U = random_orthonormal(N, n, rng)
        V = random_orthonormal(n, n, rng)
        s = np.geomspace(p["H"], 1.0, n)*p["scale"]
        A0 = (U*s) @ V.T
        b = 0.1*rng.standard_normal(N)
        u = rng.standard_normal(N)
        w = rng.standard_normal(n)
        delta = eps*float(s[-1])/(1 + eps)
        return cls(A0, b, delta, p["rho"], u/np.linalg.norm(u), w/np.linalg.norm(w))


PERTURBED_AFFINE_PARAMS = {"eps": None, "rho": 0.25, "H": 1.0, "scale": 1.0,
                           "center": None, "radius": 1.0, "support": "cube",
                           "cantor_depth": 3}


def perturbed_affine(spec):
    f = PerturbedAffine.from_spec(spec)
    p = _params(spec, PERTURBED_AFFINE_PARAMS)
    return f.sample(_domain(spec, f.n, p), meta=_meta(spec, f.n, N=f.N, eps=f.eps))


# --------------------------------------------------------------------------- #
# sets

def grid_set(spec):
    """Grid of an n-dimensional cube, ball or Cantor product in R^N."""
    p = _params(spec, {"center": None, "radius": 1.0, "support": "cube",
                       "cantor_depth": 3})
    n, N = _dims(spec, 1, 2)
    D = _domain(spec, n, p)
    pts = np.zeros((len(D), N))
    pts[:, :n] = D.points
    return SampledSet(pts, meta=_meta(spec, n, N=N))


def circle_set(spec):
    """Circle of the given radius in the first coordinate plane of R^N."""
    p = _params(spec, {"radius": 1.0, "center": None})
    n, N = _dims(spec, 1, 2)
    if n != 1 or N < 2:
        err = "circle_set is a curve in R^N, N >= 2; got n = {}, N = {}.\n".format(n, N)
        raise BadSpec(err)
    R = float(p["radius"])
    count = max(3, int(math.ceil(2*math.pi*R/_resolution(spec))))
    t = 2*math.pi*np.arange(count)/count
    pts = np.zeros((count, N))
    pts[:, 0] = R*np.cos(t)
    pts[:, 1] = R*np.sin(t)
    if p["center"] is not None:
        pts = pts + np.asarray(p["center"], dtype=float).reshape(1, N)
    return SampledSet(pts, meta=_meta(spec, 1, N=N))


GENERATORS = {"similarity": similarity,
              "radial_qc": radial_qc,
              "snowflake": snowflake,
              "perturbed_affine": perturbed_affine,
              "grid_set": grid_set,
              "circle_set": circle_set}


def generate(spec):
    """
    Sample the set or map a GeneratorSpec (or its dict form) describes.
    The output depends on the spec alone.
    """
    spec = _spec(spec)
    try:
        function = GENERATORS[spec.kind]
    except KeyError:
        err = "generator kind '{}' not recognized. Should be one of:\n".format(spec.kind)
        for k in sorted(GENERATORS):
            err += "    {}\n".format(k)
        raise BadSpec(err)
    return function(spec)
