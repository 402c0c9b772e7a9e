import csv
import json

from quadsmc import control_qsmc as cq
from quadsmc import verify
from quadsmc.cli import main


def _only_dir(root):
    dirs = [p for p in root.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def test_run_hover_writes_artifacts(tmp_path, capsys):
    assert main(["run", "--scenario", "hover", "--controller", "qsmc", "--out", str(tmp_path)]) == 0
    run_dir = _only_dir(tmp_path)
    for name in ("trial.csv", "summary.json", "manifest.json"):
        assert (run_dir / name).is_file()
    assert sorted(p.name for p in (run_dir / "plots").iterdir()) == \
        ["errors.svg", "gains.svg", "lyapunov.svg", "npwm.svg"]
    assert json.loads((run_dir / "summary.json").read_text())["verdict"] == "success"


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("QUADSMC_OUT_DIR", str(tmp_path / "env_out"))
    from quadsmc import cli
    assert cli._default_out() == str(tmp_path / "env_out")


def test_manifest_reproduces_run(tmp_path):
    assert main(["run", "--scenario", "gimbal1", "--controller", "qpd", "--seed", "4", "--no-plot",
                 "--out", str(tmp_path / "a")]) == 0
    first = _only_dir(tmp_path / "a")
    assert main(["run", "--config", str(first / "manifest.json"), "--no-plot", "--out", str(tmp_path / "b")]) == 0
    second = _only_dir(tmp_path / "b")
    assert (first / "trial.csv").read_bytes() == (second / "trial.csv").read_bytes()


def test_malformed_config_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nscenario = hover\nseed = twelve\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "run.seed" in err and "bad.ini:3" in err


def test_unknown_choice_exits_1(capsys):
    assert main(["run", "--controller", "pid"]) == 1


def test_gimbal2_esmc_exits_2(tmp_path, capsys):
    code = main(["run", "--scenario", "gimbal2", "--controller", "esmc", "--no-plot", "--out", str(tmp_path)])
    summary = json.loads((_only_dir(tmp_path) / "summary.json").read_text())
    assert summary["verdict"] == "unstable"
    assert code == 2


def _trials(run_dir):
    with open(run_dir / "trials.csv") as fh:
        return list(csv.DictReader(fh))


def test_degenerate_sweep_matches_run(tmp_path):
    assert main(["sweep", "--scenario", "hover", "--controller", "qsmc", "--trials", "1", "--deviation", "0",
                 "--out", str(tmp_path / "s")]) == 0
    assert main(["run", "--scenario", "hover", "--controller", "qsmc", "--no-plot", "--out", str(tmp_path / "r")]) == 0
    row = _trials(_only_dir(tmp_path / "s"))[0]
    metrics = json.loads((_only_dir(tmp_path / "r") / "summary.json").read_text())["metrics"]
    for key in ("q_e_rms", "xi_e_rms", "psi_e_rms", "npwm_rms"):
        assert float(row[key]) == metrics[key]


def test_repeated_sweep_identical(tmp_path):
    args = ["sweep", "--scenario", "gimbal1", "--controller", "qsmc", "--controller", "gtc", "--trials", "2",
            "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = _only_dir(tmp_path / "a"), _only_dir(tmp_path / "b")
    for name in ("summary.csv", "trials.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_four_controller_lemniscate_sweep_rows(tmp_path):
    n = 2
    assert main(["sweep", "--scenario", "lemniscate", "--trials", str(n), "--out", str(tmp_path)]) == 0
    rows = _trials(_only_dir(tmp_path))
    assert len(rows) == 4 * n
    assert {r["controller"] for r in rows} == {"qsmc", "esmc", "gtc", "qpd"}
    assert all(r["verdict"] for r in rows)


def test_study_command(tmp_path):
    assert main(["study", "--parameter", "mu", "--values", "0.02,0.2", "--out", str(tmp_path)]) == 0
    run_dir = _only_dir(tmp_path)
    assert (run_dir / "study.csv").is_file() and (run_dir / "study.svg").is_file()


def test_verify_detects_sign_mutation(monkeypatch, capsys):
    monkeypatch.setattr(cq, "sgn_plus", lambda x: 1.0)
    code = main(["verify", "--only", "control_qsmc.unwinding_invariance"])
    out = capsys.readouterr().out
    assert code >= 1
    assert "FAIL" in out


def test_verify_tightened_tolerance_reports_measurements(capsys):
    main(["verify", "--verify-tolerance-scale", "0.01", "--only", "refgen", "--only", "math3d"])
    out = capsys.readouterr().out
    assert "max heading error" in out and "max |RᵀṘ + (RᵀṘ)ᵀ|" in out
    assert out.count("limit") >= 9


def test_verify_green_on_fresh_checkout(run_check):
    """Every check of the full suite must pass for ``quadsmc verify`` to exit 0."""
    failed = [n for n in verify.check_names("all") if not run_check(n)[0]]
    assert failed == []
