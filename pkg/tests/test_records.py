import json

import numpy as np
import numpy.testing as npt
import pandas as pd

from pytest import raises
from pytest import mark

from quasiplanes.errors          import BadConfig
from quasiplanes.tools           import generators
from quasiplanes.tools           import records


def test_plain():
    doc = records.plain({"a": np.float64(0.5), 1: [np.int32(3), np.arange(2)],
                         "b": (np.bool_(True), None)})
    assert doc == {"a": 0.5, "1": [3, [0, 1]], "b": [True, None]}
    assert type(doc["a"]) is float


def test_csv_keeps_full_precision(tmp_path):
    path = str(tmp_path/"values.csv")
    df = pd.DataFrame({"r": [1/3, 2**-40], "flag": ["a", "b"]})
    records.to_external(path, df, "abc")
    back = records.from_external(path)
    assert back["r"].tolist() == [1/3, 2**-40]
    assert back["config_hash"].tolist() == ["abc", "abc"]
    assert "config_hash" not in df.columns


def test_json_and_jsonl(tmp_path):
    doc_path = str(tmp_path/"doc.json")
    records.to_external(doc_path, {"x": np.array([1.0, 2.0])}, "h")
    with open(doc_path) as f:
        text = f.read()
    assert text.endswith("}\n")
    assert json.loads(text) == {"config_hash": "h", "x": [1.0, 2.0]}

    lines_path = str(tmp_path/"rows.ndjson")
    records.to_external(lines_path, [{"a": 1}, {"a": 2}], "h")
    assert records.from_external(lines_path) == [{"a": 1, "config_hash": "h"},
                                                 {"a": 2, "config_hash": "h"}]


def test_overwrite(tmp_path):
    path = str(tmp_path/"doc.json")
    records.to_external(path, {}, "h")
    with raises(FileExistsError):
        records.to_external(path, {}, "h")
    records.to_external(path, {"k": 1}, "h", overwrite=True)
    assert records.from_external(path)["k"] == 1


@mark.parametrize("name", ["table.xlsx", "table"])
def test_unknown_file_type(tmp_path, name):
    with raises(ValueError):
        records.to_external(str(tmp_path/name), {}, "h")
    with raises(ValueError):
        records.to_external(str(tmp_path/"t.csv"), {}, "h", out_type="parquet")


def test_sample_documents(tmp_path):
    E = generators.generate({"kind": "circle_set", "N": 3, "resolution": 0.5})
    path = str(tmp_path/"circle.json")
    records.to_external(path, records.sample_to_dict(E), "h")
    back = records.load_sample(path)
    npt.assert_array_equal(back.points, E.points)
    assert back.meta["n"] == 1
    npt.assert_array_equal(back.box[0], E.box[0])

    f = generators.generate({"kind": "snowflake", "params": {"depth": 2}})
    g = records.sample_from_dict(json.loads(json.dumps(records.plain(records.sample_to_dict(f)))))
    npt.assert_array_equal(g.image, f.image)
    npt.assert_array_equal(g.points, f.points)
    assert (g.n, g.N) == (1, 2)


def test_not_a_sample():
    with raises(BadConfig):
        records.sample_from_dict({"type": "tree"})
    with raises(BadConfig):
        records.sample_from_dict([1, 2])
