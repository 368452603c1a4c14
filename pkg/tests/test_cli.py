"""Command line: exit codes, artifacts, determinism and configuration."""
import json

import numpy as np
import pytest

from koopman_lab import cli, verify
from koopman_lab.linflow import hyperbolic_generator


def run(*args):
    return cli.main([str(a) for a in args])


@pytest.mark.parametrize("argv,code", [
    (["verify", "--l", 2, "--suites", "all"], 0),
    (["verify", "--l", 4, "--suites", "taming", "--M", 2, "--M-box=-1,1,0,3"], 1),
    (["verify", "--suites", "obstruction", "--turns", 5, "--degree", 4], 1),
    (["verify", "--suites", "obstruction", "--turns", 1, "--degree", 3], 0),
    (["verify", "--l", 3, "--suites", "taming,transversality"], 0),
    (["verify", "--l", 2, "--suites", "nonsense"], 2),
    (["verify", "--l", 2, "--a", 1.5], 2),
    (["build", "--l", 1], 2),
    (["build", "--l", 2, "--M-box=1,-1,0,1"], 2),
    (["plot", "--l", 2, "--kind", "hologram"], 2),
])
def test_exit_codes(tmp_path, argv, code):
    assert run(*argv, "--out", tmp_path) == code


def test_verify_report_written_on_failure(tmp_path):
    assert run("verify", "--suites", "obstruction", "--turns", 5, "--degree", 4, "--out", tmp_path) == 1
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["pass"] is False and rep["exit_code"] == 1
    assert "degree < turns+1" in rep["reports"][0]["details"][0]["explanation"]
    assert rep["conventions"] and len(rep["config_hash"]) == 16


def test_m2_failure_comes_from_the_bound(tmp_path):
    run("verify", "--l", 4, "--suites", "taming", "--M", 2, "--M-box=-1,1,0,3", "--out", tmp_path)
    reports = json.loads((tmp_path / "report.json").read_text())["reports"]
    by_suite = {r["suite"]: r for r in reports}
    assert by_suite["m_bound"]["pass"] is False
    assert by_suite["m_bound"]["metrics"]["bound"] == pytest.approx(5.75)


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise verify.NumericalFailure("no convergence")
    monkeypatch.setattr(cli, "run_suites", boom)
    assert run("verify", "--l", 2, "--out", tmp_path) == 3


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("build", "--l", 2, "--out", blocker / "sub") == 2


def test_build_artifacts(tmp_path):
    assert run("build", "--l", 2, "--a", 0.5, "--out", tmp_path) == 0
    obj = (tmp_path / "surface.obj").read_text()
    assert obj.count("# equilibrium") == 2
    assert "\nf " in obj and "\ng plane_0" in obj
    assert (tmp_path / "snake.csv").read_text().startswith("bridge,s,x,z\n")
    tam = json.loads((tmp_path / "taming.json").read_text())
    assert tam["m"] == 3 and tam["M"] > tam["M_box_bound"]
    assert "p_example2" in tam


def test_build_l4_figure_polynomial(tmp_path):
    assert run("build", "--l", 4, "--M", 4, "--out", tmp_path) == 0
    tam = json.loads((tmp_path / "taming.json").read_text())
    terms = {tuple(t["exp"]): t["coef"] for t in tam["p"]["terms"]}
    assert terms[(0, 6, 1)] == 4.0 and terms[(0, 0, 1)] == 4.0
    assert terms[(1, 0, 3)] == 1.0 and terms[(1, 0, 0)] == -1.875


@pytest.mark.parametrize("l", [2, 4])
def test_plot_is_byte_identical(tmp_path, l):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("plot", "--l", l, "--kind", "cross_section", "--y", 0, "--out", a) == 0
    assert run("plot", "--l", l, "--kind", "cross_section", "--y", 0, "--out", b) == 0
    name = f"cross_section_l{l}_y0.svg"
    svg = (a / name).read_bytes()
    assert svg == (b / name).read_bytes()
    assert svg.count(b'stroke-width="3"') == 1 and b"<polyline data-level" in svg


def test_plot_other_kinds(tmp_path):
    assert run("plot", "--l", 2, "--kind", "contour_csv", "--out", tmp_path) == 0
    assert (tmp_path / "contours_l2_y0.csv").read_text().startswith("level,line_id,x,z\n")
    assert run("plot", "--l", 3, "--kind", "surface_obj", "--out", tmp_path) == 0
    assert (tmp_path / "surface_l3.obj").exists()


def test_verify_report_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("verify", "--l", 2, "--suites", "transversality,graphlike", "--seed", 7, "--out", tmp_path / d) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_config_file_and_overrides(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"l": 3, "seed": 5, "output_dir": str(tmp_path / "from_file")}))
    assert run("verify", "--config", cfg, "--suites", "obstruction") == 0
    rep = json.loads((tmp_path / "from_file" / "report.json").read_text())
    assert rep["config"]["l"] == 3 and rep["seed"] == 5
    # flags beat the file, the environment beats the file, --out beats both
    monkeypatch.setenv("KOOPMAN_LAB_OUT", str(tmp_path / "env"))
    assert run("verify", "--config", cfg, "--l", 2, "--suites", "obstruction") == 0
    rep = json.loads((tmp_path / "env" / "report.json").read_text())
    assert rep["config"]["l"] == 2
    assert run("verify", "--config", cfg, "--suites", "obstruction", "--out", tmp_path / "flag") == 0
    assert (tmp_path / "flag" / "report.json").exists()


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"l": 2, "colour": "blue"}))
    assert run("verify", "--config", cfg, "--out", tmp_path) == 2
    cfg.write_text("{not json")
    assert run("verify", "--config", cfg, "--out", tmp_path) == 2


def test_config_hash_ignores_output_dir():
    a, b = cli.RunConfig(output_dir="x"), cli.RunConfig(output_dir="y")
    assert a.hashed() == b.hashed()
    assert cli.RunConfig(l=3).hashed() != a.hashed()


def test_lift(tmp_path, capsys):
    assert run("lift", "--n", 1, "--m", 3, "--A", "[[1]]") == 0
    data = json.loads(capsys.readouterr().out)
    assert np.array_equal(data["rows"], np.diag([0.0, 1, 2, 3]))
    assert run("lift", "--n", 3, "--m", 3) == 0
    assert json.loads(capsys.readouterr().out)["dim"] == 20
    out = tmp_path / "l.json"
    assert run("lift", "--n", 3, "--m", 1, "--out", out) == 0
    rows = np.array(json.loads(out.read_text())["rows"])
    assert np.array_equal(rows[1:, 1:], hyperbolic_generator(0)) and not rows[0].any()


@pytest.mark.parametrize("argv", [
    ["lift", "--n", 3, "--m", 40],
    ["lift", "--n", 2, "--m", 2, "--A", "[[1]]"],
    ["lift", "--n", 2, "--m", 2, "--A", "not json"],
    ["lift", "--n", 0, "--m", 2],
])
def test_lift_errors(argv):
    assert run(*argv) == 2


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as exc:
        run("verify", "--l", "two")
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "koopman_lab", "verify", "--suites", "obstruction",
                           "--turns", "3", "--degree", "3", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "FAIL obstruction" in proc.stdout
