import json

import numpy as np
import pytest

from phasedet.cli import main
from phasedet.config import parse_config
from phasedet.output import read_table

COUNT_COLUMNS = ("raw_count", "count_0", "count_1")


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_single_packet_default_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--scenario", "single_packet", "--particles", "20000", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    profiles = [f for f in manifest["files"] if f.startswith("profile_")]
    assert len(profiles) == 7
    for f in manifest["files"]:
        assert (out / f).exists()
    meta, cols = read_table(out / profiles[3])
    for name in ("bin_center", "raw_count", "raw_density", "recorded_count", "recorded_density",
                 "reference_exact", "reference_approx"):
        assert name in cols
    assert meta["kind"] == "single_packet"
    assert cols["raw_count"].sum() + int(meta["overflow"]) == 20000
    assert parse_config(manifest["config"]).particles == 20000
    assert manifest["seed"] == 0 and "version" in manifest and "timings" in manifest


def test_same_seed_same_bytes(tmp_path):
    cfg = write(tmp_path, "c.ini", "[run]\nkind = two_packets\nparticles = 70000\nseed = 3\ntimes = 4\n")
    outs = []
    for i, w in enumerate(("1", "3")):
        out = tmp_path / f"o{i}"
        assert main(["run", cfg, "--workers", w, "--out", str(out)]) == 0
        outs.append(out)
    a = (outs[0] / "profile_t4_dx0.01.csv").read_text().splitlines()
    b = (outs[1] / "profile_t4_dx0.01.csv").read_text().splitlines()
    # identical apart from the echoed worker count
    diff = [(x, y) for x, y in zip(a, b) if x != y]
    assert diff == [("#   workers = 1", "#   workers = 3")]


def test_manifest_round_trip(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scenario", "wall", "--particles", "30000", "--seed", "9", "--out", str(out1)]) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    cfg = write(tmp_path, "echo.ini", manifest["config"])
    assert main(["run", cfg, "--out", str(out2)]) == 0
    for f in manifest["files"]:
        if f.endswith(".csv"):
            _, c1 = read_table(out1 / f)
            _, c2 = read_table(out2 / f)
            for name in COUNT_COLUMNS:
                assert np.array_equal(c1[name], c2[name])


def test_two_packet_report_has_visibility(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", "two_packets", "--particles", "50000", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    snap = [s for s in rep["snapshots"] if s["time"] == 4.0][0]
    assert "visibility_simulated" in snap["vs_exact"] and "visibility_raw" in snap


def test_validation_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "bad.ini", "[run]\nkind = wall\n\n[detector]\ndelta_x = -1\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "line 5" in err and "delta_x" in err
    assert main(["run", "--out", str(tmp_path / "o")]) == 1
    assert main(["run", "--scenario", "wall", "--particles", "0", "--out", str(tmp_path / "o")]) == 1


def test_runtime_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--scenario", "wall", "--particles", "10", "--out", str(blocker / "sub")]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_check_mode_exit_codes(tmp_path, capsys):
    ok = main(["check", "--scenario", "single_packet", "--particles", "1000000", "--out",
               str(tmp_path / "a"), "--seed", "1"])
    lines = capsys.readouterr().out.splitlines()
    assert all(l.startswith(("PASS", "FAIL")) for l in lines) and lines
    assert ok == (3 if any(l.startswith("FAIL") for l in lines) else 0)
    bad = main(["check", "--scenario", "two_packets", "--particles", "5000", "--out", str(tmp_path / "b")])
    assert bad == 3


def test_sweep_bin(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["sweep-bin", "--scenario", "two_packets", "--particles", "100000", "--out", str(out)]) == 0
    data = json.loads((out / "sweep_bin.json").read_text())
    assert [r["delta_x"] for r in data["rows"]] == [0.001, 0.01, 0.1, 0.2, 0.4]
    assert len([f for f in json.loads((out / "manifest.json").read_text())["files"]
                if f.startswith("sweep_t4")]) == 5
    totals = {r["delta_x"]: r["recorded_total"] for r in data["rows"]}
    assert totals[0.4] < totals[0.01]
    assert main(["sweep-bin", "--scenario", "double_slit", "--out", str(out)]) == 1


def test_sweep_buildup_double_slit(tmp_path):
    out = tmp_path / "b"
    assert main(["sweep-buildup", "--scenario", "double_slit", "--checkpoints", "100,1000,10000",
                 "--out", str(out)]) == 0
    for m in (100, 1000, 10000):
        _, seg = read_table(out / f"segments_n{m}.csv")
        assert len(seg["segment_center"]) == 28
    assert main(["sweep-buildup", "--scenario", "double_slit", "--checkpoints", "1000,100",
                 "--out", str(out)]) == 1


def test_sweep_buildup_full_budget_equals_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep-buildup", "--scenario", "single_packet", "--particles", "30000",
                 "--checkpoints", "1000,30000", "--out", str(a)]) == 0
    assert main(["run", "--scenario", "single_packet", "--particles", "30000", "--out", str(b)]) == 0
    _, c1 = read_table(a / "buildup_n30000_t4_dx0.01.csv")
    _, c2 = read_table(b / "profile_t4_dx0.01.csv")
    assert np.array_equal(c1["raw_count"], c2["raw_count"])
    assert np.array_equal(c1["recorded_density"], c2["recorded_density"])


def test_double_slit_run(tmp_path):
    out = tmp_path / "d"
    assert main(["run", "--scenario", "double_slit", "--particles", "20000", "--out", str(out)]) == 0
    _, pix = read_table(out / "pixels.csv")
    assert len(pix["bin_center"]) == 2800
    meta, _ = read_table(out / "segments.csv")
    assert meta["photons"] == "20000"


def test_config_command(capsys):
    assert main(["config", "--scenario", "two_packets"]) == 0
    text = capsys.readouterr().out
    assert parse_config(text).physics.x2 == 20.0


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
