from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from raagkit import cli
from raagkit.io import file_digest
from raagkit.metric import ball_cache_path
from raagkit.group import z2_free_z


def run_cli(args, tmp_path, capsys):
    code = cli.main([*args, "--out-dir", str(tmp_path), "--workers", "1"])
    out = capsys.readouterr()
    return code, out.out, out.err


def manifest(tmp_path, command):
    return json.loads((tmp_path / f"{command}.manifest.json").read_text())


def test_group_info(tmp_path, capsys):
    code, out, _ = run_cli(["group-info", "--group", "Z2*Z", "--max-n", "3"], tmp_path, capsys)
    assert code == 0
    info = json.loads(out)
    assert info["spheres"] == [1, 6, 26, 110]
    assert info["edges"] == [["a", "b"]]
    m = manifest(tmp_path, "group-info")
    assert m["status"] == "ok" and m["group_digest"] == info["digest"]
    assert m["outputs"]["group-info.json"] == file_digest(tmp_path / "group-info.json")


def test_group_file(tmp_path, capsys):
    path = tmp_path / "square.txt"
    path.write_text("# a 4-cycle\nvertices: a b c d\nedge: a b\nedge: b c\nedge: c d\nedge: d a\n")
    code, out, _ = run_cli(["group-info", "--group", str(path), "--max-n", "2"], tmp_path, capsys)
    assert code == 0 and json.loads(out)["spheres"][:2] == [1, 8]


def test_growth(tmp_path, capsys):
    code, out, _ = run_cli(["growth", "--group", "F2", "--max-n", "5"], tmp_path, capsys)
    assert code == 0
    lines = (tmp_path / "growth.csv").read_text().splitlines()
    assert lines[0] == "n,sphere,ball" and lines[3] == "2,12,17"
    summary = json.loads(out)
    assert summary["sphere_ratio"] == 3.0 and 2.9 < summary["lambda_hat"] < 3.2


def test_geodesics(tmp_path, capsys):
    code, out, _ = run_cli(["geodesics", "--group", "Z2", "--target", "a^2 b^2"], tmp_path, capsys)
    assert code == 0
    res = json.loads(out)
    assert res["count"] == 6 and res["distance"] == 4 and not res["truncated"]
    assert len(json.loads((tmp_path / "geodesics.json").read_text())["geodesics"]) == 6


def test_contract_test(tmp_path, capsys):
    args = ["contract-test", "--group", "Z2", "--word", "a^6", "--R", "8", "--D", "3", "--grid", "1,2,4,8"]
    code, out, _ = run_cli(args, tmp_path, capsys)
    assert code == 0
    assert json.loads(out) == {"D_star": 8, "passed": False}
    art = json.loads((tmp_path / "contract-test.json").read_text())
    assert art["test"]["witness"] is not None and art["elapsed_ms"] is None


def test_classify(tmp_path, capsys):
    args = ["classify", "--group", "F2", "--element", "a", "--element", "1", "--m", "3"]
    code, _, _ = run_cli(args, tmp_path, capsys)
    assert code == 0
    rows = (tmp_path / "classify.csv").read_text().splitlines()
    assert rows[1].startswith("a,contracting-at-scale,1,")
    assert rows[2].split(",")[1] == "elliptic-at-scale"


def test_genericity(tmp_path, capsys):
    code, out, _ = run_cli(["genericity", "--group", "F2", "--n", "2,4", "--D", "1"], tmp_path, capsys)
    assert code == 0
    assert json.loads(out)["rows"] == [[2, "16/17"], [4, "160/161"]]
    rows = (tmp_path / "genericity.csv").read_text().splitlines()
    assert rows[0] == "n,ball_size,sampled,contracting,fraction,D,R,m,seed"
    assert len(rows) == 3


def test_lemma_check(tmp_path, capsys):
    args = ["lemma-check", "--group", "F2", "--lemma", "thin-bigons", "--trials", "20", "--seed", "1"]
    code, out, _ = run_cli(args, tmp_path, capsys)
    assert code == 0 and json.loads(out)["violation_count"] == 0


def test_excursion(tmp_path, capsys):
    args = ["excursion", "--group", "Z2*Z", "--lambda", "ab", "--n", "4,8", "--samples", "20", "--seed", "7"]
    code, out, _ = run_cli(args, tmp_path, capsys)
    assert code == 0
    assert set(json.loads(out)["medians"]) == {"4", "8"}
    assert len((tmp_path / "excursion.csv").read_text().splitlines()) == 41


def test_probe(tmp_path, capsys):
    args = ["probe-independence", "--group", "Z2*Z", "--f", "c", "--lambda", "a,b", "--r", "3,4"]
    code, out, _ = run_cli(args, tmp_path, capsys)
    assert code == 0 and json.loads(out)["values"] == {"3": 0, "4": 0}


def test_cache_cycle(tmp_path, capsys):
    cache = tmp_path / "cache"
    base = ["cache", "--group", "Z2*Z", "--cache-dir", str(cache)]
    assert run_cli([*base[:1], "build", *base[1:], "--radius", "3"], tmp_path, capsys)[0] == 0
    code, out, _ = run_cli([base[0], "validate", *base[1:]], tmp_path, capsys)
    assert json.loads(out) == {"valid": True, "radius": 3}
    # corrupt the file: validation rejects it and removes it, build recreates it
    path = ball_cache_path(z2_free_z(), cache)
    path.write_text(path.read_text()[:-5])
    code, out, _ = run_cli([base[0], "validate", *base[1:]], tmp_path, capsys)
    assert json.loads(out)["valid"] is False and not path.exists()
    run_cli([base[0], "build", *base[1:], "--radius", "3"], tmp_path, capsys)
    code, out, _ = run_cli([base[0], "validate", *base[1:]], tmp_path, capsys)
    assert json.loads(out)["valid"] is True
    code, out, _ = run_cli([base[0], "evict", *base[1:]], tmp_path, capsys)
    assert json.loads(out) == {"evicted": True} and not path.exists()
    # the cache directory is a runtime setting and stays out of the recorded config
    assert "cache_dir" not in manifest(tmp_path, "cache")["config"]


def test_cache_needs_directory(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("RAAGKIT_CACHE_DIR", raising=False)
    code, _, err = run_cli(["cache", "validate", "--group", "F2"], tmp_path, capsys)
    assert code == 2 and "cache directory" in err


@pytest.mark.parametrize(
    "args",
    [
        ["growth", "--group", "F2", "--max-n", "-1"],
        ["growth", "--group", "no-such-file.txt"],
        ["geodesics", "--group", "F2", "--target", "q"],
        ["genericity", "--group", "F2", "--n", "2", "--D", "3", "--R", "3"],
        ["excursion", "--group", "F2", "--lambda", "z", "--n", "2", "--seed", "1"],
        ["frobnicate", "--group", "F2"],
    ],
)
def test_usage_and_input_errors(args, tmp_path, capsys):
    code, _, err = run_cli(args, tmp_path, capsys)
    assert code == 2
    assert err.startswith("raagkit: error:")


def test_resource_limit_exit_code(tmp_path, capsys):
    args = ["genericity", "--group", "Z2*Z", "--n", "1,2,3,4", "--mode", "exhaustive", "--limit", "200"]
    code, _, err = run_cli(args, tmp_path, capsys)
    assert code == 3 and "largest completed value: 3" in err
    m = manifest(tmp_path, "genericity")
    assert m["status"] == "partial"
    # rows finished before the limit are kept
    assert len((tmp_path / "genericity.csv").read_text().splitlines()) == 4


def test_internal_error_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*_):
        raise RuntimeError("kaput")

    monkeypatch.setitem(cli._HANDLERS, "growth", boom)
    code, _, err = run_cli(["growth", "--group", "F2"], tmp_path, capsys)
    assert code == 1 and "kaput" in err
    assert manifest(tmp_path, "growth")["status"] == "failed"


COMMANDS = [
    ["genericity", "--group", "Z2*Z", "--n", "2,4", "--mode", "sampled", "--samples", "30", "--seed", "5"],
    ["excursion", "--group", "Z2*Z", "--lambda", "ab", "--n", "8", "--samples", "25", "--seed", "2"],
    ["lemma-check", "--group", "Z2*Z", "--lemma", "projection-lipschitz", "--trials", "30", "--seed", "9"],
]


@pytest.mark.parametrize("args", COMMANDS, ids=lambda a: a[0])
def test_artifacts_byte_identical(args, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(args, a, capsys)[0] == 0
    assert run_cli(args, b, capsys)[0] == 0
    ma, mb = manifest(a, args[0]), manifest(b, args[0])
    assert ma["outputs"] == mb["outputs"] and ma["config_digest"] == mb["config_digest"]
    for name in ma["outputs"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("args", COMMANDS[:2], ids=lambda a: a[0])
def test_manifest_replays(args, tmp_path, capsys):
    first = tmp_path / "first"
    run_cli(args, first, capsys)
    m = manifest(first, args[0])
    again = tmp_path / "again"
    assert cli.run(m["config"], again, workers=1) == 0
    capsys.readouterr()
    assert manifest(again, args[0])["outputs"] == m["outputs"]


def test_workers_do_not_change_output(tmp_path, capsys):
    args = ["genericity", "--group", "Z2*Z", "--n", "4"]
    cli.main([*args, "--out-dir", str(tmp_path / "one"), "--workers", "1"])
    cli.main([*args, "--out-dir", str(tmp_path / "two"), "--workers", "2"])
    capsys.readouterr()
    for name in ("genericity.csv", "genericity.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    assert manifest(tmp_path / "one", "genericity")["config"] == manifest(tmp_path / "two", "genericity")["config"]


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "raagkit.cli", "group-info", "--group", "F2", "--max-n", "2", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["spheres"] == [1, 4, 12]
    assert Path(tmp_path / "group-info.manifest.json").exists()
