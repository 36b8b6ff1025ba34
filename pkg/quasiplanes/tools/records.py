__description__ = \
"""
Reading and writing result files: CSV tables, JSON documents and JSON-lines
record streams, each tagged with the hash of the config that produced it.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import json
import os

import numpy as np
import pandas as pd

from ..errors import BadConfig
from .geometry import SampledSet
from .quasisymmetry import SampledMap

FLOAT_FORMAT = "%.17g"

FILE_EXTENSION_SYNONYM = {"txt": "csv",
                          "ndjson": "jsonl",
                          "jsonlines": "jsonl"}


def plain(obj):
    """numpy scalars and arrays (at any depth) to builtin python types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(out_file, data, config_hash):
    df = data.copy() if isinstance(data, pd.DataFrame) else pd.DataFrame(plain(data))
    df["config_hash"] = config_hash
    df.to_csv(out_file, index=False, float_format=FLOAT_FORMAT)


def _write_json(out_file, data, config_hash):
    doc = {"config_hash": config_hash}
    doc.update(plain(data))
    with open(out_file, "w") as f:
        json.dump(doc, f, sort_keys=True, indent=2)
        f.write("\n")


def _write_jsonl(out_file, data, config_hash):
    if isinstance(data, pd.DataFrame):
        data = data.to_dict(orient="records")
    with open(out_file, "w") as f:
        for record in data:
            record = dict(plain(record))
            record["config_hash"] = config_hash
            f.write(json.dumps(record, sort_keys=True) + "\n")


def _read_csv(input_file):
    return pd.read_csv(input_file, float_precision="round_trip")


def _read_json(input_file):
    with open(input_file) as f:
        return json.load(f)


def _read_jsonl(input_file):
    with open(input_file) as f:
        return [json.loads(line) for line in f if line.strip()]


OUT_METHODS = {"csv": _write_csv,
               "json": _write_json,
               "jsonl": _write_jsonl}

IN_METHODS = {"csv": _read_csv,
              "json": _read_json,
              "jsonl": _read_jsonl}


def _file_type(path, file_type, methods):

    if file_type is None:
        file_type = path.split(".")[-1].lower()
        file_type = FILE_EXTENSION_SYNONYM.get(file_type, file_type)
        if file_type not in methods:
            err = "\nCould not recognize file type from file extension of '{}'.\n".format(path)
            err += "Specify the type explicitly.\n"
            raise ValueError(err)

    try:
        return methods[file_type]
    except KeyError:
        err = "\n\nfile type '{}' not recognized. Must be one of:\n".format(file_type)
        for m in sorted(methods):
            err += "    {}\n".format(m)
        raise ValueError(err)


def to_external(out_file, data, config_hash, out_type=None, overwrite=False):
    """
    Write results to a file.

    out_file: output file.
    data: DataFrame or list of dicts (csv, jsonl) or dict (json)
    config_hash: hash of the config that produced data; stored in every row,
                 document or record
    out_type: csv, json or jsonl.  if None, taken from the file extension.
    overwrite: overwrite an existing output file.
    """

    if os.path.isfile(out_file) and not overwrite:
        err = "out_file '{}' already exists.\n".format(out_file)
        raise FileExistsError(err)

    out_method = _file_type(out_file, out_type, OUT_METHODS)
    out_method(out_file, data, config_hash)


def from_external(input_file, input_type=None):
    """
    Read a file written by to_external.  CSV comes back as a DataFrame, JSON
    as a dict and JSON lines as a list of dicts.
    """
    in_method = _file_type(input_file, input_type, IN_METHODS)
    return in_method(input_file)


def sample_to_dict(sample):
    """JSON form of a SampledSet or SampledMap, with explicit dimensions."""
    if hasattr(sample, "image"):
        return {"type": "map",
                "n": int(sample.meta.get("n", sample.n)),
                "N": int(sample.N),
                "domain": sample.points,
                "image": sample.image,
                "meta": sample.meta}
    corner, side = sample.box
    return {"type": "set",
            "n": int(sample.meta.get("n", sample.dim - 1)),
            "N": int(sample.dim),
            "points": sample.points,
            "box": {"corner": corner, "side": side},
            "meta": sample.meta}


def sample_from_dict(doc):
    """Inverse of sample_to_dict."""

    kind = doc.get("type") if isinstance(doc, dict) else None
    if kind == "set":
        box = doc.get("box")
        box = None if box is None else (box["corner"], box["side"])
        meta = dict(doc.get("meta", {}))
        meta["n"] = doc["n"]
        return SampledSet(np.array(doc["points"], dtype=float).reshape(-1, doc["N"]),
                          box=box, meta=meta)
    if kind == "map":
        meta = dict(doc.get("meta", {}))
        meta["n"] = doc["n"]
        domain = np.array(doc["domain"], dtype=float).reshape(len(doc["domain"]), -1)
        image = np.array(doc["image"], dtype=float).reshape(-1, doc["N"])
        return SampledMap(SampledSet(domain, meta={"n": domain.shape[1]}), image,
                          meta=meta, embedding=False)

    err = "document is not a sampled set or map (type '{}').\n".format(kind)
    raise BadConfig(err)


def load_sample(path):
    return sample_from_dict(from_external(path, input_type="json"))
