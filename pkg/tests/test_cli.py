import json

import pytest

from uwbtbd.cli import main


@pytest.fixture(scope="module")
def small_file(tmp_path_factory):
    from .conftest import SMALL_DOC
    p = tmp_path_factory.mktemp("scn") / "small.yaml"
    p.write_text(SMALL_DOC)
    return p


def _run(small_file, out, *extra):
    return main(["--scenario", str(small_file), "--runs", "2", "--seed", "5", "--out-dir", str(out),
                 "--workers", "1", *extra])


def test_outputs_and_byte_identical_metrics(small_file, tmp_path, capsys):
    assert _run(small_file, tmp_path / "a", "--method", "both") == 0
    assert _run(small_file, tmp_path / "b", "--method", "both") == 0
    a, b = tmp_path / "a", tmp_path / "b"
    for name in ("metrics.json", "ospa_series.csv", "trajectories_proposed.csv", "trajectories_simple-baseline.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    doc = json.loads((a / "metrics.json").read_text())
    assert set(doc["methods"]) == {"proposed", "simple-baseline"}
    assert doc["paired"]["runs"] == 2 and len(doc["per_run"]["proposed"]) == 2
    timing = json.loads((a / "timing.json").read_text())
    assert set(timing["mean_run_time_s"]) == {"proposed", "simple-baseline"}
    header = (a / "ospa_series.csv").read_text().splitlines()[0]
    assert header == "scan,proposed,simple-baseline"
    assert "proposed" in capsys.readouterr().out


def test_delta_override_and_dumps(small_file, tmp_path):
    assert _run(small_file, tmp_path, "--delta", "0.2", "--dump-maps", "--dump-points") == 0
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["delta_m"] == 0.2
    assert (tmp_path / "maps_run0000.bin").exists() and (tmp_path / "points_run0001.csv").exists()


def test_no_clutter_suppression_flag(small_file, tmp_path):
    assert _run(small_file, tmp_path, "--no-clutter-suppression", "--runs", "1") == 0


@pytest.mark.parametrize("args", [
    ["--scenario", "does_not_exist"],
    ["--scenario", "exp1_test1", "--runs", "0"],
    ["--scenario", "exp1_test1", "--delta", "-1"],
    ["--scenario", "exp1_test1", "--out-dir", "/proc/forbidden"],
])
def test_failures_exit_nonzero(args, capsys):
    assert main(args) != 0
    assert "uwbtbd: error:" in capsys.readouterr().err


def test_unreadable_scenario_document(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [1, 2\n")
    assert main(["--scenario", str(bad), "--out-dir", str(tmp_path)]) == 1
    assert "parse error" in capsys.readouterr().err


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as e:
        main(["--scenario", "exp1_test1", "--bogus"])
    assert e.value.code != 0
