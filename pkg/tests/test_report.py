import json

import numpy as np
import pytest

from qlinksim.report import software_versions, write_csv, write_json, write_manifest


def test_csv_formatting(tmp_path):
    path = tmp_path / "table.csv"
    write_csv(["name", "flag", "count", "value"], [["a", True, np.int64(3), 1.0 / 3.0], ["b", False, 0, 2.5]], path)
    assert path.read_text(encoding="utf-8") == "name,flag,count,value\na,1,3,0.333333333333\nb,0,0,2.5\n"


def test_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValueError):
        write_csv(["a", "b"], [[1]], tmp_path / "table.csv")


def test_json_is_stamped_and_plain(tmp_path):
    path = tmp_path / "report.json"
    write_json({"z": 1 - 2j, "arr": np.arange(3), "ok": np.bool_(True), (1, 2): np.float64(0.5)}, path, "abc")
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["config_hash"] == "abc"
    assert document["z"] == {"re": 1.0, "im": -2.0}
    assert document["arr"] == [0, 1, 2]
    assert document["ok"] is True
    assert document["(1, 2)"] == 0.5


def test_manifest_lists_artifacts(tmp_path):
    path = write_manifest(tmp_path, "gauge-sector", {"seed": 0}, "abc", 0, ["b.csv", "a.json"])
    manifest = json.loads(path.read_text(encoding="utf-8"))
    assert path.name == "manifest.json"
    assert manifest["command"] == "gauge-sector"
    assert [a["file"] for a in manifest["artifacts"]] == ["a.json", "b.csv"]
    assert all(a["config_hash"] == "abc" for a in manifest["artifacts"])
    assert set(manifest["versions"]) == set(software_versions())
