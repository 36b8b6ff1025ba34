__description__ = \
"""
ExperimentProject: runs the computations a config describes and writes
their results, tagged with the config hash, into the output directory.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import os
import sys

import numpy as np

from quasiplanes.tools import (extension, families, flatness, generators, geometry,
                               quasisymmetry, records, suites, whitney)

from .errors import BadConfig
from .history import track_in_history

# centers picked by farthest-point selection when the config names none
DEFAULT_CENTERS = 8

# number of default scales per profile
DEFAULT_SCALES = 6


class ExperimentProject(object):
    """
    Runs the computations of one experiment config.

    Parameters
    ----------
    config : ExperimentConfig
        the validated config; its out_dir receives every artifact.
    quiet : bool (default: False)
        do not report progress on standard error.
    """

    def __init__(self, config, quiet=False):

        self.config = config
        self.out_dir = config.out_dir
        self.config_hash = config.config_hash()
        self.quiet = quiet
        self.history = list()

        if not os.path.exists(self.out_dir):
            os.makedirs(self.out_dir)

    def _say(self, message):
        if not self.quiet:
            print(message, file=sys.stderr)

    def _write(self, filename, data):
        path = os.path.join(self.out_dir, filename)
        records.to_external(path, data, self.config_hash, overwrite=True)
        return path

    def load(self, name):
        """
        The sample called name: read from config.inputs, or generated from
        config.generators.
        """
        if name is None:
            err = "no sample named in the config section of this command.\n"
            raise BadConfig(err)
        if name in self.config.inputs:
            return records.load_sample(self.config.inputs[name])
        if name in self.config.generators:
            return generators.generate(self.config.generator(name))

        err = "sample '{}' is neither an input nor a generator. Known samples:\n".format(name)
        for k in sorted(set(self.config.inputs) | set(self.config.generators)):
            err += "    {}\n".format(k)
        raise BadConfig(err)

    def _centers(self, points, centers):
        if centers is None:
            return sorted(int(i) for i in
                          quasisymmetry.farthest_point_order(points, DEFAULT_CENTERS))
        centers = [int(c) for c in centers]
        bad = [c for c in centers if not 0 <= c < len(points)]
        if bad:
            err = "center indices {} are outside the {} samples.\n".format(bad, len(points))
            raise BadConfig(err)
        return centers

    def _scales(self, sample, scales, top):
        if scales is not None:
            scales = [float(s) for s in scales]
            if not scales or min(scales) <= 0:
                err = "scales must be a nonempty list of positive radii.\n"
                raise BadConfig(err)
            return scales
        diam = sample.diameter
        if diam == 0:
            err = "the sample is a single point; give the scales explicitly.\n"
            raise BadConfig(err)
        rmax = top*diam
        rmin = max(4*sample.resolution, rmax/100)
        return [float(s) for s in np.geomspace(rmax, min(rmin, rmax), DEFAULT_SCALES)]

    @track_in_history
    def compute_flatness(self):
        """
        Flatness profiles (beta, beta_ctr and theta per scale, the dyadic
        sum and the Dini integral) of the set named in config.flatness.
        When delta and R are set, also checks Reifenberg flatness and the
        linear approximation property at the tested centers and scales.
        """

        self._say("Computing flatness...")
        cfg = self.config.flatness
        tol = self.config.tolerances

        E = self.load(cfg["set"])
        if hasattr(E, "image"):
            E = E.image_set()
        centers = self._centers(E.points, cfg["centers"])
        scales = self._scales(E, cfg["scales"], 0.5)
        kwargs = {"tol_rel": tol["tol_fit_rel"], "plane_grid": int(tol["plane_grid"])}

        df, profiles = flatness.run(E, centers, scales, base=cfg["base"], kmax=cfg["kmax"],
                                    grid_per_decade=int(tol["grid_per_decade"]), **kwargs)

        summary = {"set": cfg["set"],
                   "n": int(E.meta.get("n", E.dim - 1)),
                   "N": E.dim,
                   "samples": len(E),
                   "resolution": E.resolution,
                   "profiles": [p.to_record() for p in profiles]}

        if cfg["delta"] is not None and cfg["R"] is not None:
            for key, check in (("reifenberg", flatness.reifenberg_check),
                               ("linear_approximation", flatness.linear_approximation_check)):
                passed, worst = check(E, cfg["delta"], cfg["R"], centers, scales, **kwargs)
                summary[key] = {"delta": cfg["delta"], "R": cfg["R"], "passed": passed,
                                "worst": None if worst is None else list(worst)}

        csv_path = self._write("flatness.csv", df)
        self._write("flatness.json", summary)
        self._say("Writing flatness results to " + csv_path + "...Done.\n")
        return df

    @track_in_history
    def compute_distortion(self):
        """
        Weak quasisymmetry constants of the map named in config.qs: per
        (center, scale) ball, and per center with the Dini integral of
        Htilde^2 (and the Carleson sum when asked for).
        """

        self._say("Computing distortion...")
        cfg = self.config.qs
        tol = self.config.tolerances

        f = self.load(cfg["map"])
        if not hasattr(f, "image"):
            err = "qs.map must name a map, but '{}' is a set.\n".format(cfg["map"])
            raise BadConfig(err)
        centers = self._centers(f.points, cfg["centers"])
        scales = self._scales(f.domain, cfg["scales"], 0.25)
        rmax = max(scales) if cfg["rmax"] is None else float(cfg["rmax"])

        carleson = None
        if cfg["carleson"]:
            carleson = {"x0": f.points[centers[0]], "r0": rmax, "scale_grid": scales}

        df, reports = quasisymmetry.run(f, centers, scales, rmax=rmax,
                                        grid_per_decade=int(tol["grid_per_decade"]),
                                        carleson=carleson)

        summary = {"map": cfg["map"],
                   "n": f.n,
                   "N": f.N,
                   "samples": len(f),
                   "rmax": rmax,
                   "reports": [dict(index=c, **r.to_record()) for c, r in zip(centers, reports)]}

        csv_path = self._write("qs.csv", df)
        self._write("qs.json", summary)
        self._say("Writing distortion results to " + csv_path + "...Done.\n")
        return df

    def _extension_instance(self, cfg):
        """(f, family, W) for config.extend."""

        name = cfg["map"]
        kind = cfg["family"]
        sample = self.load(name)
        E = sample.domain if hasattr(sample, "image") else sample

        corner, side = E.box
        margin = float(cfg["margin"])
        if margin < 0:
            err = "extend.margin must be non-negative.\n"
            raise BadConfig(err)
        box = (corner - margin*side, side*(1 + 2*margin))
        W = whitney.whitney_decompose(E, box=box, min_level=cfg["min_level"])
        r_min = float(np.min(W.diameters)) if len(W) else box[1]*2.0**(-W.min_level)
        scales = families.scale_grid(r_min, int(W.min_level) + 3)

        if kind == "analytic":
            spec = self.config.generators.get(name)
            if spec is None or spec.kind != "perturbed_affine":
                err = "the analytic family needs extend.map to name a perturbed_affine generator.\n"
                raise BadConfig(err)
            pa = generators.PerturbedAffine.from_spec(spec)
            F = pa.sample_family(E.points, scales)
            f = pa.sample(E)
        elif kind == "random":
            eps = cfg["eps"]
            if eps is None or not 0 < eps <= 0.5:
                err = "the random family needs 0 < extend.eps <= 1/2, got {}.\n".format(eps)
                raise BadConfig(err)
            n = E.dim
            N = n + 1 if cfg["N"] is None else int(cfg["N"])
            if N < n:
                err = "extend.N = {} is below the domain dimension {}.\n".format(N, n)
                raise BadConfig(err)
            rng = np.random.default_rng(self.config.seed)
            L0 = geometry.random_orthonormal(N, n, rng)
            F = families.random_compatible_family(E.points, scales, L0, eps, rng)
            f = quasisymmetry.SampledMap(E, E.points @ L0.T)
        else:
            err = "extend.family '{}' not recognized. Should be one of:\n".format(kind)
            for k in ("analytic", "random"):
                err += "    {}\n".format(k)
            raise BadConfig(err)

        return f, F, W

    @track_in_history
    def compute_extension(self):
        """
        Whitney decomposition, extension F and extended family A+ for the
        map named in config.extend, with the measured constants of the
        extension estimates and F at random points of the box.
        """

        self._say("Computing extension...")
        cfg = self.config.extend
        tol = self.config.tolerances

        f, F, W = self._extension_instance(cfg)
        ev = extension.extend_map(f, F, W=W)
        report = extension.measure_extension_theorems(
            ev, scales=F.scales, n_base=int(cfg["points"]),
            grid_per_decade=int(tol["grid_per_decade"]), seed=self.config.seed,
            H=cfg["H"], rho=cfg["rho"])

        rng = np.random.default_rng(self.config.seed)
        corner, side = W.box
        queries = corner + side*rng.uniform(size=(int(cfg["points"]), W.n))
        df = extension.point_frame(ev, queries)

        summary = {"map": cfg["map"],
                   "family": cfg["family"],
                   "n": ev.n,
                   "N": ev.N,
                   "eps": ev.eps,
                   "eps_nominal": F.eps_nominal,
                   "box": {"corner": corner, "side": side},
                   "min_level": int(W.min_level),
                   "cubes": len(W),
                   "collar": len(W.collar),
                   "whitney": whitney.check_properties(W),
                   "report": report.to_record()}

        csv_path = self._write("points.csv", df)
        self._write("extension.json", summary)
        self._write("whitney.jsonl", W.to_records())
        self._say("Writing extension results to " + csv_path + "...Done.\n")
        return report

    @track_in_history
    def compute_verification(self, suite=None):
        """
        Run a named inequality suite.  Returns True when no check has slack
        below -tolerances.slack_tol.
        """

        suite = self.config.verify["suite"] if suite is None else suite
        if suite is None:
            err = "no suite given; set verify.suite or pass --suite.\n"
            raise BadConfig(err)

        self._say("Computing verification of suite {}...".format(suite))
        df, summary = suites.run(suite, instances=self.config.verify["instances"],
                                 seed=self.config.seed, tolerances=self.config.tolerances)

        csv_path = self._write("verify.csv", df)
        self._write("verify.json", summary)
        self._say("{} checks, {} violations, worst slack {}.".format(
            summary["checks"], summary["violations"], summary["worst_slack"]))
        self._say("Writing verification results to " + csv_path + "...Done.\n")
        return summary["passed"]

    @track_in_history
    def compute_generation(self):
        """Sample every generator of the config into <name>.json."""

        self._say("Computing generation...")
        if not self.config.generators:
            err = "the config has no generators.\n"
            raise BadConfig(err)

        paths = []
        for name in sorted(self.config.generators):
            sample = generators.generate(self.config.generator(name))
            paths.append(self._write(name + ".json", records.sample_to_dict(sample)))
        self._say("Writing generation results to " + self.out_dir + "...Done.\n")
        return paths
