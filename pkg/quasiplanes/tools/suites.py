__description__ = \
"""
Named verification suites: randomized, hypothesis-satisfying instances of
every inequality the package measures, checked with a fixed slack.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import json
import math

import numpy as np
import pandas as pd

from ..config import TOLERANCES, GeneratorSpec
from ..errors import BadConfig, HypothesisViolated, PointNotInSet
from .extension import extend_map
from .families import (IneqReport, random_compatible_family, scale_grid,
                       verify_inequality)
from .flatness import beta, dini_beta_integral, dyadic_beta_sq_sum, theta, theta_fit
from .generators import PerturbedAffine, generate, grid_points
from .geometry import (AffineMap, SampledSet, affine_from_samples, random_orthonormal,
                       singular_values)
from .quasisymmetry import SampledMap, fit_similarity, weak_qs_constant
from .records import plain
from .whitney import check_properties, partition_of_unity, whitney_decompose

# redraws allowed per instance before a suite gives up on a hypothesis
MAX_DRAWS = 200


def _random_set(rng, m_range=(6, 30)):
    """Cloud near a random n-plane of R^N, N in {2, 3}, at a random noise level."""
    N = int(rng.integers(2, 4))
    n = int(rng.choice([1, N - 1]))
    m = int(rng.integers(*m_range))
    U = random_orthonormal(N, n, rng)
    noise = float(rng.choice([0.0, 0.01, 0.1, 1.0]))
    pts = rng.uniform(-1, 1, (m, n)) @ U.T + noise*rng.standard_normal((m, N))
    return SampledSet(pts, meta={"n": n})


def _report(kind, lhs, rhs, **witness):
    return IneqReport.build(kind, lhs, rhs, **witness)


# --------------------------------------------------------------------------- #
# flatness

def _betas_sandwich(rng, instances, tol):
    """beta <= beta_ctr <= 2 beta on random clouds."""
    fit = 2*tol["tol_fit_rel"]
    out = []
    for _ in range(instances):
        E = _random_set(rng)
        i = int(rng.integers(len(E)))
        r = float(rng.uniform(0.1, 2.0))*max(E.diameter, 1e-3)
        b = beta(E, i, r, tol_rel=tol["tol_fit_rel"])
        bc = beta(E, i, r, centered=True, tol_rel=tol["tol_fit_rel"])
        out.append(_report("beta<=beta_ctr", b, bc + fit, x=i, r=r))
        out.append(_report("beta_ctr<=2beta", bc, 2*b + fit, x=i, r=r))
    return out


def _monotonicity(rng, instances, tol):
    """
    beta(x, sr) <= beta(x, r) / s, also for beta_ctr, for theta (with the
    plane found at r among the candidates at sr) and for sub-balls.
    """
    out = []
    kw = {"tol_rel": tol["tol_fit_rel"]}
    for _ in range(instances):
        E = _random_set(rng)
        i = int(rng.integers(len(E)))
        r = float(rng.uniform(0.2, 2.0))*max(E.diameter, 1e-3)
        s = float(rng.uniform(0.1, 1.0))
        allow = 4*tol["tol_fit_rel"]/s
        for centered, name in ((False, "beta"), (True, "beta_ctr")):
            big = beta(E, i, r, centered=centered, **kw)
            small = beta(E, i, s*r, centered=centered, **kw)
            out.append(_report("mono_" + name, small, big/s + allow, x=i, r=r, s=s))

        big, plane = theta_fit(E, i, r, **kw)
        small = theta(E, i, s*r, planes=[plane], **kw)
        out.append(_report("mono_theta", small, big/s + allow, x=i, r=r, s=s))

        inner = [j for j in E.ball(E.points[i], (1 - s)*r)]
        j = int(rng.choice(inner))
        big = beta(E, i, r, **kw)
        small = beta(E, j, s*r, **kw)
        out.append(_report("monob_beta", small, big/s + allow, x=i, y=j, r=r, s=s))
    return out


def _dini_set(rng):
    if rng.uniform() < 0.5:
        return _random_set(rng, m_range=(20, 60))
    spec = GeneratorSpec(kind="snowflake", params={"depth": 4,
                                                  "angle": float(rng.uniform(0, 1.2))})
    return generate(spec).image_set()


def _dini_check(rng, instances, tol):
    """
    Dyadic sum of beta_ctr^2 at r0 / 10^k against (400 / log 10) times the
    Dini integral of beta^2 up to 10 r0.
    """
    gpd = int(tol["grid_per_decade"])
    out = []
    for _ in range(instances):
        E = _dini_set(rng)
        E.meta.setdefault("n", 1)
        i = int(rng.integers(len(E)))
        kmax = int(rng.choice([2, 3]))
        # the smallest dyadic radius stays above the sampling resolution
        r0 = 10**kmax*E.resolution*float(rng.uniform(1.05, 2.0))
        lhs = dyadic_beta_sq_sum(E, i, r0, base=10, kmax=kmax, tol_rel=tol["tol_fit_rel"])
        integral = dini_beta_integral(E, i, 10*r0, grid_per_decade=gpd,
                                      tol_rel=tol["tol_fit_rel"])
        allow = 1600*(kmax + 1)*tol["tol_fit_rel"]
        out.append(_report("dini_check", lhs, 400/math.log(10)*integral + allow,
                           x=i, r0=r0, kmax=kmax))
    return out


def _bflat_map(rng, which):
    """
    A map with the samples of a line V of its domain: a grid row under a
    radial stretch of R^2, or a snowflake curve over [0, 1].

    returns: (f, indices of the samples on V, axis of V)
    """
    if which % 2 == 0:
        alpha = float(rng.choice([0.9, 0.95, 0.99]))
        f = generate(GeneratorSpec(kind="radial_qc", n=2, resolution=0.1,
                                   params={"alpha": alpha}))
        fixed = int(rng.integers(2))
        c = float(rng.choice(np.unique(f.points[:, fixed])))
        on_V = np.flatnonzero(f.points[:, fixed] == c)
        return f, on_V, 1 - fixed

    # a curve parameterization only sees distortion of order angle^2, so
    # shallow angles are left out
    f = generate(GeneratorSpec(kind="snowflake",
                               params={"depth": int(rng.integers(3, 7)),
                                       "angle": float(rng.uniform(0.3, 1.0))}))
    return f, np.arange(len(f)), 0


def _bflat(rng, instances, tol, draws_per_map=25):
    """
    beta of f(V) at f(v) and radius |f(v + r e) - f(v)| / 2 against
    72 N Htilde_f(B(v, 2r)), with V a line and e its direction.
    """
    out = []
    maps = 0
    while len(out) < instances:
        f, on_V, axis = _bflat_map(rng, maps)
        maps += 1
        image = SampledSet(f.image[on_V], meta={"n": 1})
        h = float(np.min(f.domain.spacing))
        accepted = 0
        for _ in range(MAX_DRAWS):
            if accepted == draws_per_map or len(out) == instances:
                break
            p = int(rng.integers(len(on_V)))
            i = int(on_V[p])
            v = f.points[i]
            e = np.zeros(f.n)
            e[axis] = float(rng.choice([-1.0, 1.0]))
            r = h*int(rng.integers(1, 5))
            try:
                j = f.domain.index_of(v + r*e, tol=1e-9)
            except PointNotInSet:
                continue
            ball = f.ball(v, 2*r)
            if len(ball) < 3:
                continue
            rho = 0.5*float(np.linalg.norm(f.image[j] - f.image[i]))
            lhs = beta(image, p, rho, n=1, tol_rel=tol["tol_fit_rel"])
            Ht = weak_qs_constant(f, ball).Htilde
            out.append(_report("bflat", lhs, 72*f.N*Ht + 2*tol["tol_fit_rel"],
                               generator=f.meta.get("generator"), v=i, r=r))
            accepted += 1
    return out


# --------------------------------------------------------------------------- #
# quasisymmetry

def _similarity_instance(rng, which):
    n = int(rng.integers(1, 3))
    if which == 0:
        spec = GeneratorSpec(kind="similarity", n=n, N=n + int(rng.integers(0, 2)),
                             resolution=0.05, seed=int(rng.integers(2**31)),
                             params={"scale": float(rng.uniform(0.5, 2.0)),
                                     "reflect": bool(rng.integers(2)),
                                     "radius": 0.25, "support": "ball"})
    elif which == 1:
        center = rng.standard_normal(2)
        spec = GeneratorSpec(kind="radial_qc", n=2, resolution=0.05,
                             params={"alpha": 1 - float(rng.uniform(1e-4, 1e-3)),
                                     "center": (center/np.linalg.norm(center)).tolist(),
                                     "radius": 0.25, "support": "ball"})
    else:
        spec = GeneratorSpec(kind="perturbed_affine", n=n, N=n, resolution=0.05,
                             seed=int(rng.integers(2**31)),
                             params={"eps": float(rng.uniform(1e-4, 1e-3)),
                                     "rho": 0.25, "radius": 0.25, "support": "ball"})
    return generate(spec)


def _similarity(rng, instances, tol):
    """Maps with H = 1 + delta are 10 delta close to a similarity."""
    out = []
    for t in range(instances):
        f = _similarity_instance(rng, t % 3)
        H = weak_qs_constant(f).H
        center = f.domain.points.mean(axis=0)
        i = int(f.domain.nearest(center)[1][0])
        r = float(np.max(np.linalg.norm(f.points - f.points[i], axis=1)))
        _, residual = fit_similarity(f, f.points[i], r)
        out.append(_report("similarity", residual, 10*(H - 1) + 1e-10,
                           generator=f.meta.get("generator"), H=H))
    return out


# --------------------------------------------------------------------------- #
# affine families

def _random_family(rng):
    n = int(rng.integers(1, 3))
    N = n + int(rng.integers(0, 2))
    m = int(rng.integers(6, 16))
    base = rng.uniform(0, 1, (m, n))
    scales = scale_grid(1/16, 7)
    L0 = random_orthonormal(N, n, rng)*rng.uniform(0.5, 2.0, n)
    eps = float(rng.uniform(1e-3, 0.5))
    return random_compatible_family(base, scales, L0, eps, rng)


def _draw(attempt):
    """Call attempt() until its hypotheses hold."""
    for _ in range(MAX_DRAWS):
        try:
            return attempt()
        except HypothesisViolated:
            continue
    err = "no hypothesis-satisfying instance in {} draws.\n".format(MAX_DRAWS)
    raise HypothesisViolated(err, precondition="draws")


def _pre_est(rng, instances, tol, per_family=50):
    out = []
    F = None
    for t in range(instances):
        if t % per_family == 0:
            F = _random_family(rng)
        m, K = F.linear.shape[:2]

        def attempt():
            i, j = (int(v) for v in rng.integers(m, size=2))
            k, l = (int(v) for v in rng.integers(K, size=2))
            a = float(rng.uniform(1, 8))
            return [verify_inequality("pre_a", family=F, i=i, k=k, j=j, l=l),
                    verify_inequality("pre_b", family=F, i=i, k=k, j=j, l=l),
                    verify_inequality("pre_c", family=F, i=i, k=k, j=j, l=l, a=a),
                    verify_inequality("pre_d", family=F, i=i, k=k, j=j, l=l, a=a)]
        out += _draw(attempt)
    return out


def _perturbed_instance(rng, n=None, eps=None, K=8):
    n = int(rng.integers(1, 3)) if n is None else n
    h = 0.05 if n == 1 else 0.25
    spec = GeneratorSpec(kind="perturbed_affine", n=n, N=n + 1, resolution=h,
                         seed=int(rng.integers(2**31)),
                         params={"eps": float(rng.uniform(1e-3, 0.1)) if eps is None else eps,
                                 "rho": 0.25, "H": float(rng.uniform(1.0, 2.0))})
    pa = PerturbedAffine.from_spec(spec)
    f = generate(spec)
    F = pa.sample_family(f.points, scale_grid(h, K))
    return pa, f, F


def _post_est(rng, instances, tol, per_family=50):
    out = []
    for t in range(instances):
        if t % per_family == 0:
            _, f, F = _perturbed_instance(rng)
        m, K = F.linear.shape[:2]

        def attempt():
            i, j = (int(v) for v in rng.integers(m, size=2))
            k, l = (int(v) for v in rng.integers(K, size=2))
            a = float(2**int(rng.integers(0, 3)))
            x = F.base_points[i]
            big = max(F.scales[k], F.scales[l])
            u = rng.standard_normal((4, F.n))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            z = x + a*big*rng.uniform(0, 1, (4, 1))*u
            kind = "post_b" if rng.uniform() < 0.5 else "post_a"
            return [verify_inequality(kind, f=f, family=F, i=i, k=k, j=j, l=l, z=z, a=a)]
        out += _draw(attempt)
    return out


def _ab_bound(rng, instances, tol):
    out = []
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        N = n + int(rng.integers(0, 2))
        V = rng.standard_normal((n + 1, n))
        diam = max(float(np.max(np.linalg.norm(V[:, None] - V[None], axis=-1))), 1e-9)
        eps = float(rng.uniform(1e-3, 0.5))
        A = AffineMap(rng.standard_normal((N, n)), rng.standard_normal(N))
        d = rng.standard_normal((n + 1, N))
        d *= eps*diam*rng.uniform(0, 1, (n + 1, 1))/np.linalg.norm(d, axis=1, keepdims=True)
        try:
            D = affine_from_samples(V, d)
        except ValueError:
            continue
        B = AffineMap(A.linear + D.linear, A.shift + D.shift)
        z = V.mean(axis=0) + 3*diam*rng.standard_normal((8, n))
        out.append(verify_inequality("AB_bound", A=A, B=B, V=V, z=z, eps=eps))
    return out


def _holder(rng, instances, tol, per_family=25):
    out = []
    for t in range(instances):
        if t % per_family == 0:
            _, f, F = _perturbed_instance(rng, eps=float(rng.uniform(1e-3, 0.2)))

        def attempt():
            i = int(rng.integers(len(F.base_points)))
            k = int(rng.integers(2, len(F.scales)))
            return [verify_inequality("holder", f=f, family=F, x0=F.base_points[i],
                                      r0=float(F.scales[k]), max_points=400)]
        out += _draw(attempt)
    return out


def _inradius(rng, instances, tol):
    """Inradius estimates of f(B(x, r)) for perturbed affine maps and A = A0."""
    out = []
    for _ in range(instances):
        n = int(rng.integers(1, 3))
        spec = GeneratorSpec(kind="perturbed_affine", n=n, N=n + 1,
                             seed=int(rng.integers(2**31)),
                             params={"eps": float(rng.uniform(0.1, 0.2)), "rho": 0.5,
                                     "H": float(rng.uniform(1.0, 1.5))})
        pa = PerturbedAffine.from_spec(spec)
        r = 1.0
        h = r/200 if n == 1 else r/20
        x = np.zeros(n)
        f = pa.sample(SampledSet(grid_points(n, h, radius=r, shape="ball"), meta={"n": n}))
        A = pa.family_map(x, r)
        sv = singular_values(A.linear)
        H = float(sv[-1]/sv[0])
        vals = f.image[f.ball(x, r)]
        eps = float(np.max(np.linalg.norm(vals - A(f.points[f.ball(x, r)]), axis=1)))/(A.norm*r)
        t = 0.5*(1/H - 2*eps)
        if t <= 0:
            continue
        reports = verify_inequality("inradius", f=f, A=A, x=x, r=r, t=t, H=H,
                                    plane_grid=int(tol["plane_grid"]))
        image = SampledSet(vals)
        allow = image.resolution/(image.diameter/(3*H))
        for rep in reports:
            if rep.witness.get("part") == "irt":
                rep = IneqReport(rep.kind, rep.lhs, rep.rhs + allow, rep.slack + allow,
                                 dict(rep.witness, sampling_allowance=allow))
            out.append(rep)
    return out


# --------------------------------------------------------------------------- #
# whitney and extension

def _random_compact(rng, n):
    """Random cloud, Cantor product or grid patch in [0, 1]^n."""
    which = int(rng.integers(3))
    if which == 0:
        pts = rng.uniform(0.1, 0.9, (int(rng.integers(3, 20)), n))
    elif which == 1:
        spec = GeneratorSpec(kind="grid_set", n=n, N=n, resolution=0.05 if n == 1 else 0.1,
                             params={"support": "cantor", "cantor_depth": 2, "radius": 0.4,
                                     "center": [0.5]*n})
        pts = generate(spec).points
    else:
        pts = grid_points(n, 0.1, center=[0.5]*n, radius=0.2)
    return SampledSet(pts, box=(np.zeros(n), 1.0), meta={"n": n})


def _whitney(rng, instances, tol):
    out = []
    for _ in range(instances):
        n = int(rng.integers(1, 3))
        E = _random_compact(rng, n)
        W = whitney_decompose(E)
        props = check_properties(W)
        for key in ("b_lower", "b_upper", "c_lower", "c_upper", "d"):
            out.append(_report("whitney_" + key, props[key], 1.0, cubes=len(W)))
        out.append(_report("whitney_a_gap", props["a_gap"], 1e-9, cubes=len(W)))

        pou = partition_of_unity(W)
        queries = rng.uniform(0, 1, (16, n))
        worst = 0.0
        for x in queries:
            if W.in_collar(x) or E.nearest(x)[0][0] == 0:
                continue
            idx, phi = pou.values(x)
            if len(idx):
                worst = max(worst, abs(float(phi.sum()) - 1))
        out.append(_report("pou_sum", worst, 1e-12, cubes=len(W)))
    return out


def _finite_difference(ev, x, h):
    n = len(x)
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        hi, _ = ev.F(x + e)
        lo, _ = ev.F(x - e)
        cols.append((hi[0] - lo[0])/(2*h))
    return np.stack(cols, axis=1)


def _extension(rng, instances, tol):
    """F restricts to f on E, and DF matches central differences."""
    out = []
    for _ in range(instances):
        n = int(rng.integers(1, 3))
        N = n + 1
        E = _random_compact(rng, n)
        W = whitney_decompose(E)
        scales = scale_grid(float(np.min(W.diameters)) if len(W) else 1/64,
                            int(W.min_level) + 3)
        eps = float(rng.choice([1e-3, 1e-2]))
        L0 = random_orthonormal(N, n, rng)
        F = random_compatible_family(E.points, scales, L0, eps, rng)
        f = SampledMap(E, E.points @ L0.T)
        ev = extend_map(f, F, W=W)

        values, _ = ev.F(E.points)
        out.append(_report("restriction", float(np.max(np.abs(values - f.image))), 0.0,
                           eps=eps))

        worst = 0.0
        for x in rng.uniform(0, 1, (8, n)):
            d, _ = W.distance(x)
            e = ev.evaluate(x)
            if e.flag != "interior" or d <= 0:
                continue
            h = 1e-5*d
            fd = _finite_difference(ev, x, h)
            scale = max(float(np.linalg.norm(e.jacobian)), 1.0)
            worst = max(worst, float(np.linalg.norm(fd - e.jacobian))/scale)
        out.append(_report("DF_finite_difference", worst, 1e-6, eps=eps))
    return out


# name -> (suite, default number of instances)
SUITES = {"betas-sandwich": (_betas_sandwich, 200),
          "monotonicity": (_monotonicity, 200),
          "dini-check": (_dini_check, 50),
          "bflat": (_bflat, 300),
          "similarity": (_similarity, 30),
          "pre-est": (_pre_est, 500),
          "post-est": (_post_est, 500),
          "ab-bound": (_ab_bound, 500),
          "holder": (_holder, 500),
          "inradius": (_inradius, 500),
          "whitney": (_whitney, 20),
          "extension": (_extension, 8)}


def run(suite, instances=None, seed=0, tolerances=None):
    """
    Run a named suite.

    suite: name of the suite
    instances: number of random instances (default: the suite's own)
    seed: seed of the instance generator
    tolerances: dict overriding the default tolerances

    returns: (DataFrame with one row per checked inequality, summary dict)
    """
    try:
        function, default = SUITES[suite]
    except KeyError:
        err = "suite '{}' not recognized. Should be one of:\n".format(suite)
        for k in sorted(SUITES):
            err += "    {}\n".format(k)
        raise BadConfig(err)

    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    count = default if instances is None else int(instances)
    rng = np.random.default_rng(seed)
    reports = function(rng, count, tol)

    rows = []
    for number, rep in enumerate(reports):
        rows.append({"suite": suite,
                     "check": number,
                     "kind": rep.kind,
                     "lhs": rep.lhs,
                     "rhs": rep.rhs,
                     "slack": rep.slack,
                     "witness": json.dumps(plain(rep.witness), sort_keys=True)})
    df = pd.DataFrame(rows, columns=["suite", "check", "kind", "lhs", "rhs", "slack",
                                     "witness"])

    violations = int(np.sum(df["slack"] < -tol["slack_tol"])) if len(df) else 0
    summary = {"suite": suite,
               "instances": count,
               "seed": int(seed),
               "checks": len(df),
               "violations": violations,
               "worst_slack": float(df["slack"].min()) if len(df) else 0.0,
               "passed": violations == 0}
    return df, summary
