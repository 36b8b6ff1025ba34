__description__ = \
"""
Experiment configuration: the JSON file every CLI command reads, and the
hash that tags every artifact written from it.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .errors import BadConfig

TOLERANCES = {"tol_fit_rel": 1e-6,
              "plane_grid": 64,
              "grid_per_decade": 8,
              "slack_tol": 1e-9}

FLATNESS = {"set": None,
            "centers": None,
            "scales": None,
            "kmax": 3,
            "base": 10,
            "delta": None,
            "R": None}

QS = {"map": None,
      "centers": None,
      "scales": None,
      "rmax": None,
      "carleson": False}

EXTEND = {"map": None,
          "family": "analytic",
          "eps": None,
          "N": None,
          "margin": 0.5,
          "min_level": None,
          "points": 32,
          "H": None,
          "rho": None}

VERIFY = {"suite": None,
          "instances": None}


def _unknown(keys, allowed, where):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        err = "unknown key(s) in {}: {}\n".format(where, ", ".join(extra))
        err += "Allowed keys are:\n"
        for k in sorted(allowed):
            err += "    {}\n".format(k)
        raise BadConfig(err)


def _section(value, defaults, where):
    if value is None:
        value = {}
    if not isinstance(value, dict):
        err = "config section '{}' must be an object.\n".format(where)
        raise BadConfig(err)
    _unknown(value.keys(), defaults.keys(), where)
    out = copy.deepcopy(defaults)
    out.update(value)
    return out


@dataclass
class GeneratorSpec:
    """
    Recipe for one synthetic set or map.

    Parameters
    ----------
    kind : str
        one of similarity, radial_qc, snowflake, perturbed_affine, grid_set,
        circle_set.
    n : int, optional
        domain dimension (default depends on kind).
    N : int, optional
        ambient dimension of the image (default depends on kind).
    resolution : float, optional
        sample spacing.
    seed : int
        seed of every random choice the generator makes.
    params : dict
        kind-specific parameters.
    """

    kind: str
    n: int = None
    N: int = None
    resolution: float = None
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            err = "a generator spec must be an object with a 'kind'.\n"
            raise BadConfig(err)
        _unknown(d.keys(), [f.name for f in fields(cls)], "generator spec")
        return cls(**copy.deepcopy(d))

    def to_dict(self):
        return asdict(self)


@dataclass
class ExperimentConfig:
    """
    Everything a run depends on.  Sections missing from the file take their
    defaults; unknown keys raise BadConfig.
    """

    seed: int = 0
    out_dir: str = "quasiplanes_out"
    inputs: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    flatness: dict = field(default_factory=dict)
    qs: dict = field(default_factory=dict)
    extend: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)

    def __post_init__(self):

        try:
            self.seed = int(self.seed)
        except (TypeError, ValueError):
            err = "seed must be an integer, got {!r}.\n".format(self.seed)
            raise BadConfig(err)
        if self.seed < 0:
            err = "seed must be non-negative.\n"
            raise BadConfig(err)

        if not isinstance(self.inputs, dict):
            err = "inputs must map names to file paths.\n"
            raise BadConfig(err)
        if not isinstance(self.generators, dict):
            err = "generators must map names to generator specs.\n"
            raise BadConfig(err)

        self.generators = {name: spec if isinstance(spec, GeneratorSpec)
                           else GeneratorSpec.from_dict(spec)
                           for name, spec in self.generators.items()}
        self.tolerances = _section(self.tolerances, TOLERANCES, "tolerances")
        self.flatness = _section(self.flatness, FLATNESS, "flatness")
        self.qs = _section(self.qs, QS, "qs")
        self.extend = _section(self.extend, EXTEND, "extend")
        self.verify = _section(self.verify, VERIFY, "verify")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            err = "a config file must hold a JSON object.\n"
            raise BadConfig(err)
        _unknown(d.keys(), [f.name for f in fields(cls)], "config")
        return cls(**copy.deepcopy(d))

    @classmethod
    def from_json(cls, path):
        """Load a config file.  Missing files and bad JSON propagate."""
        with open(path) as f:
            d = json.load(f)
        return cls.from_dict(d)

    def override(self, seed=None, out_dir=None, suite=None):
        """Copy with the command-line overrides applied."""
        d = self.to_dict()
        if seed is not None:
            d["seed"] = seed
        if out_dir is not None:
            d["out_dir"] = out_dir
        if suite is not None:
            d["verify"]["suite"] = suite
        return ExperimentConfig.from_dict(d)

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        """sha256 of the canonical JSON dump.  out_dir is not part of it."""
        d = self.to_dict()
        d.pop("out_dir")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def generator(self, name):
        try:
            return self.generators[name]
        except KeyError:
            err = "no generator named '{}' in the config. Known generators:\n".format(name)
            for k in sorted(self.generators):
                err += "    {}\n".format(k)
            raise BadConfig(err)
