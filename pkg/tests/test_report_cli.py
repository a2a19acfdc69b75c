import dataclasses
import subprocess
import sys
from pathlib import Path

import pytest

from repeaterlab.chain import ChainConfig
from repeaterlab.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from repeaterlab.report import (
    CHAIN_COLUMNS,
    PHASE_COLUMNS,
    csv_text,
    emit_csv,
    format_value,
    render_report,
    run_scenario,
)
from repeaterlab.scenario import parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

CHAIN = """\
[scenario]
name = thousand-km
[link]
L_att = 22
eta_d = 1
p = 1
[chain]
L = 1000
n = 4
eta_m = 1
"""

CONVERT_DECOUPLED = """\
[rates]
G = 0
chi = 1
k = 1
[pulse]
sigma_t = 50
"""

PHASE = "[phase]\nsigma = 0\n"


def write(tmp_path, text, name="s.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_chain_report_in_band():
    report = run_scenario(parse_scenario(CHAIN), seed=42, trials=10_000)
    assert 0.3 <= report.summary["T_analytic_s"] <= 30
    assert report.columns == CHAIN_COLUMNS
    assert len(report.rows) == 1


def test_report_embeds_every_chain_field():
    report = run_scenario(parse_scenario(CHAIN), seed=1, trials=10)
    chain_fields = {f.name for f in dataclasses.fields(ChainConfig)} - {"link"}
    assert chain_fields <= set(report.resolved["chain"])
    assert {"L0", "L_att", "eta_d", "p", "c_fiber", "dlcz"} <= set(report.resolved["link"])
    assert report.resolved["dlcz"] == {"p": 0.01, "eta_m": 1.0}


def test_decoupled_conversion_reports_zero():
    report = run_scenario(parse_scenario(CONVERT_DECOUPLED), seed=0, trials=0)
    assert report.summary["p"] == pytest.approx(0.0, abs=1e-12)
    assert report.summary["p_analytic"] == 0.0
    assert report.summary["waveform_fidelity"] != report.summary["waveform_fidelity"]  # nan


def test_repeat_is_byte_identical():
    s = parse_scenario(CHAIN)
    a = run_scenario(s, seed=5, trials=300)
    b = run_scenario(s, seed=5, trials=300)
    assert render_report(a) == render_report(b)
    assert csv_text(a) == csv_text(b)


def test_chain_sweep_rows(tmp_path):
    s = parse_scenario(CHAIN + "[sweep]\ntarget = chain\naxis1 = chain.n 2 4 3\n")
    report = run_scenario(s, seed=3, trials=50)
    out = tmp_path / "sweep.csv"
    emit_csv(report, out)
    lines = out.read_text().split("\n")
    assert lines[0].split(",") == ["chain.n", *CHAIN_COLUMNS]
    assert [line.split(",")[0] for line in lines[1:4]] == ["2", "3", "4"]
    assert lines[4] == ""
    assert len(lines) == 5


def test_empty_sweep_is_header_only(tmp_path):
    s = parse_scenario(CHAIN + "[sweep]\ntarget = chain\naxis1 = chain.n 2 4 0\n")
    out = tmp_path / "empty.csv"
    emit_csv(run_scenario(s, seed=3, trials=50), out)
    assert out.read_text() == ",".join(["chain.n", *CHAIN_COLUMNS]) + "\n"


def test_phase_sweep_values(tmp_path):
    s = parse_scenario(PHASE + "[sweep]\naxis1 = phase.sigma 0 1 2\n")
    out = tmp_path / "phase.csv"
    emit_csv(run_scenario(s, seed=3, trials=1000), out)
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == ["phase.sigma", *PHASE_COLUMNS]
    f_analytic = [float(line.split(",")[2]) for line in lines[1:]]
    assert f_analytic[0] == 1.0
    assert f_analytic[1] == pytest.approx(0.803, abs=5e-4)


def test_number_format():
    assert format_value(0.578568180578938404) == "0.578568181"
    assert format_value(2.998e12) == "2.998e+12"
    assert format_value(4) == "4"
    assert format_value(True) == "true"
    assert format_value(float("inf")) == "inf"


def test_convert_timeseries_csv(tmp_path):
    s = parse_scenario(CONVERT_DECOUPLED + "[solver]\nn_grid = 21\n")
    text = csv_text(run_scenario(s, seed=0, trials=0))
    lines = text.splitlines()
    assert lines[0] == "t,re_f,im_f,abs_phi1_sq,abs_phi2_sq,n1_cum,n2_cum"
    assert len(lines) == 22


def test_scenario_without_sweep_cannot_sweep():
    with pytest.raises(Exception, match="no \\[sweep\\]"):
        run_scenario(parse_scenario(CHAIN), seed=0, trials=0, command="sweep")


class TestCli:
    def test_chain_runs(self, tmp_path, capsys):
        path = write(tmp_path, CHAIN)
        assert main(["chain", str(path), "--seed", "42", "--trials", "200"]) == EXIT_OK
        assert "T_analytic_s = 0.578568181" in capsys.readouterr().out

    def test_global_flags_before_subcommand(self, tmp_path, capsys):
        path = write(tmp_path, CHAIN)
        assert main(["--seed", "4", "--trials", "10", "chain", str(path)]) == EXIT_OK
        assert "seed = 4" in capsys.readouterr().out

    def test_chain_flags_without_file(self, capsys):
        assert main(["chain", "--L", "250", "--n", "2", "--trials", "100", "--no-include-comm-delay"]) == EXIT_OK
        assert "L = 250" in capsys.readouterr().out

    def test_chain_flags_override_file(self, tmp_path, capsys):
        path = write(tmp_path, CHAIN)
        assert main(["chain", str(path), "--n", "3", "--eta-m", "0.9", "--trials", "0"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "n = 3" in out and "eta_m = 0.9" in out

    def test_deterministic_csv(self, tmp_path):
        path = write(tmp_path, CHAIN + "[sweep]\naxis1 = chain.n 3 4 2\n")
        for name in ("a.csv", "b.csv"):
            assert main(["sweep", str(path), "--seed", "9", "--trials", "200", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_configuration_error(self, tmp_path, capsys):
        path = write(tmp_path, "[link]\nL0 = 10\neta_d = 1.5\n")
        assert main(["link", str(path)]) == EXIT_CONFIG
        assert "line 3" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path):
        path = write(tmp_path, "[link]\nL0 = 10\np = 0\n")
        assert main(["link", str(path)]) == EXIT_NUMERIC

    def test_trial_budget_is_numerical_failure(self, tmp_path):
        path = write(tmp_path, CHAIN.replace("n = 4", "n = 4\ncap_slots = 3"))
        assert main(["chain", str(path), "--trials", "5"]) == EXIT_NUMERIC

    def test_missing_file_is_io_error(self, tmp_path):
        assert main(["link", str(tmp_path / "absent.ini")]) == EXIT_IO

    def test_unwritable_output_is_io_error(self, tmp_path):
        path = write(tmp_path, "[link]\nL0 = 10\n")
        assert main(["link", str(path), "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == EXIT_IO

    def test_shipped_scenarios_run(self, capsys):
        for path in sorted(SCENARIOS.glob("*.ini")):
            command = "sweep" if "sweep" in path.stem else None
            text = path.read_text()
            s = parse_scenario(text)
            report = run_scenario(s, seed=0, trials=100, command=command)
            assert report.rows or report.command == "sweep", path

    def test_module_entry_point(self, tmp_path):
        path = write(tmp_path, "[link]\nL0 = 60\n")
        out = tmp_path / "link.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "repeaterlab.cli", "link", str(path), "--out", str(out)],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.read_text().splitlines()[1] == "60,22,0.0653974032,0.0653974032,0.00306026558"
