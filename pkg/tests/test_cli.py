import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from gcmmc import cli
from gcmmc.model import EncodingMatrix, Scheme, SchemeConfig
from gcmmc.simulator import ClusterCode, SchemeInstance, build_scheme

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent


def run(tmp_path, *extra, config=DATA / "golden.ini"):
    out = tmp_path / "out"
    code = cli.main([str(config), "-o", str(out), *extra])
    return code, out


@pytest.mark.parametrize("name", ["trials.csv", "plot_data.csv", "summary.json"])
def test_outputs_match_golden(tmp_path, name):
    code, out = run(tmp_path)
    assert code == 0
    assert (out / name).read_bytes() == (DATA / "golden" / name).read_bytes()


def test_schema(tmp_path):
    code, out = run(tmp_path)
    header = (out / "trials.csv").read_text().splitlines()[0]
    assert header == "trial_id,scheme,completion_time,comm_load"
    assert (out / "plot_data.csv").read_text().splitlines()[0] == ",".join(cli.PLOT_COLUMNS)
    summary = json.loads((out / "summary.json").read_text())
    assert [s["name"] for s in summary["schemes"]] == ["GC", "corr-m2", "unc-3-2"]
    assert set(summary["schemes"][0]) >= {"mean_completion_time", "stderr_completion_time", "mean_comm_load",
                                          "stderr_comm_load", "trials", "undecodable", "config"}


def test_rerun_is_byte_identical(tmp_path):
    digests = []
    for i in range(2):
        code = cli.main([str(DATA / "golden.ini"), "-o", str(tmp_path / f"o{i}"), "--trials", "300"])
        assert code == 0
        digests.append(hashlib.sha256((tmp_path / f"o{i}" / "trials.csv").read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_overrides_and_distinct(tmp_path):
    code, out = run(tmp_path, "--trials", "7", "--seed", "3", "--distinct-comm-load")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["comm_load_mode"] == "distinct"
    assert all(s["trials"] == 7 and s["config"]["seed"] == 3 for s in summary["schemes"])


def test_figure_written(tmp_path):
    code, out = run(tmp_path, "--trials", "50", config=ROOT / "configs" / "example1.ini")
    assert code == 0
    assert (out / "figure1.png").stat().st_size > 0


def test_headline_config_four_rows(tmp_path):
    code, out = run(tmp_path, "--trials", "500", "--no-plot", config=ROOT / "configs" / "figure1.ini")
    assert code == 0
    rows = (out / "plot_data.csv").read_text().splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == ["GC", "UC-MMC", "GC-MMC-1", "GC-MMC-2"]


def test_empty_scheme_list(tmp_path, capsys):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("[shared]\nK = 6\nr = 3\nmu = 10\nalpha = 0.01\niterations = 5\nseed = 1\n")
    assert cli.main([str(cfg)]) != 0
    assert "no schemes" in capsys.readouterr().err


@pytest.mark.parametrize("body, fragment", [
    ("[shared]\nK = 6\n", "missing"),
    ("[shared]\nK = 6\nr = 3\nmu = 10\nalpha = 0.01\niterations = 5\nseed = 1\n[scheme x]\nscheme = Nope\n", "Nope"),
    ("[shared]\nK = 6\nr = 3\nmu = 10\nalpha = 0.01\niterations = 5\nseed = 1\n[scheme x]\nscheme = GC\nP = 4\n", "K mod P"),
    ("[shared]\nK = 6\nr = 3\nmu = 10\nalpha = 0.01\niterations = 5\nseed = 1\n[scheme x]\nscheme = GC\nspeed = 2\n", "unknown"),
    ("[shared]\nK = 6\nr = 3\nmu = 10\nalpha = 0.01\niterations = 5\nseed = 1\n[scheme x]\nscheme = GC\n[scheme x]\nscheme = GC\n", "already exists"),
    ("not an ini", "cannot read"),
])
def test_config_errors(tmp_path, capsys, body, fragment):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    assert cli.main([str(cfg)]) == 2
    assert fragment in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main([str(tmp_path / "nope.ini")]) == 2


def test_verify_example1(capsys):
    assert cli.main([str(ROOT / "configs" / "example1.ini"), "--verify"]) == 0
    out = capsys.readouterr().out
    assert "threshold=8" in out
    assert out.count("PASS") == 6


def test_verify_detects_corrupted_code(capsys):
    inst = build_scheme(SchemeConfig(Scheme.GC_MMC_CORRELATED, K=6, r=3, m=2))
    enc = inst.code.encoding
    B = np.array(enc.B)
    B[2] *= -3.0
    B[2, 2] += 1.0
    bad = EncodingMatrix(B, enc.eval_points, enc.target_point, enc.degree, enc.support)
    code = ClusterCode(inst.code.support, bad, inst.code.schedule, inst.code.threshold)
    broken = SchemeInstance(inst.scheme, inst.config, inst.partition, code)
    assert not cli.verify_instance("broken", broken)
    assert "FAIL on rows" in capsys.readouterr().out
