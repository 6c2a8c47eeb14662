import json
import math
import os

import pytest

from asymptotics import ConvergenceTrace
from config import ExperimentConfig, config_hash, load_config, validate_config
from dashboard import calculate_verdict, generate_html
from errors import ConfigError
from harness import RunReport, load_report, record_trend, run_experiment
from traces import decay_rate, load_trace_csv, summarize_traces, trace_table, write_trace_csv
from wedgewave import EXIT_CONFIG, EXIT_PASS, main

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_PATH = os.path.join(ROOT, "config.json")


def _write_config(tmp_path, **sections):
    with open(CONFIG_PATH) as f:
        data = json.load(f)
    for section, values in sections.items():
        if isinstance(values, dict):
            data[section].update(values)
        else:
            data[section] = values
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


def _trace(gap=1.5):
    schedule = (8.0, 16.0, 32.0, 64.0)
    residuals = tuple(math.exp(-0.5 * gap * gap * T) for T in schedule)
    return ConvergenceTrace("ergodic+", schedule, residuals, residuals, (1e-15,) * 4,
                            residuals[-1], gap, True)


# --- configuration ------------------------------------------------------------

def test_default_config_loads():
    config = load_config(CONFIG_PATH)
    assert config.model.modes == 3
    assert config.kernel.schedule_T == (8.0, 16.0, 32.0, 64.0)
    assert config.tolerance.interaction_phase == 0.5
    assert validate_config(ExperimentConfig()) == ExperimentConfig()


def test_kernel_exponent_out_of_range(tmp_path):
    path = _write_config(tmp_path, kernel={"kernel_exponent": 1.2})
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert excinfo.value.field == "kernel.kernel_exponent"


def test_unknown_key_is_rejected(tmp_path):
    path = _write_config(tmp_path, model={"colour": "red"})
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert excinfo.value.field == "model.colour"


def test_schedule_must_grow(tmp_path):
    path = _write_config(tmp_path, kernel={"schedule_T": [16.0, 8.0]})
    with pytest.raises(ConfigError):
        load_config(path)


def test_overrides_apply_and_change_hash():
    base = load_config(CONFIG_PATH)
    changed = load_config(CONFIG_PATH, kappa=0.75, schedule_T=[4, 8], seed=7)
    assert changed.deformation.kappas == (0.75,)
    assert changed.kernel.schedule_T == (4.0, 8.0)
    assert changed.seed == 7
    assert config_hash(base) != config_hash(changed)
    assert config_hash(base) == config_hash(load_config(CONFIG_PATH))


def test_bad_override_is_validated():
    with pytest.raises(ConfigError):
        load_config(CONFIG_PATH, kappa=-1.0)


# --- reports ----------------------------------------------------------------------

def test_duplicate_check_names():
    report = RunReport("ergodic", "0" * 64, 1)
    report.add_check("final_residual", 1e-4, 1e-3)
    with pytest.raises(ValueError):
        report.add_check("final_residual", 1e-4, 1e-3)


def test_check_comparisons():
    report = RunReport("deform", "0" * 64, 1)
    assert report.add_check("gap", 0.8, 0.5, comparison="ge").passed
    assert not report.add_check("error", 0.8, 0.5).passed
    report.add_check("leakage", 3.0, 1.0, hard=False)
    assert [c.name for c in report.failures] == ["error"]
    assert not report.passed
    with pytest.raises(ValueError):
        report.add_check("other", 1.0, 1.0, comparison="eq")
    with pytest.raises(KeyError):
        report.check("missing")


def test_complex_diagnostics_serialize():
    report = RunReport("deform", "0" * 64, 1)
    report.add_diagnostic("eigenvalue", 1j)
    assert report.to_dict()["diagnostics"]["eigenvalue"] == {"re": 0.0, "im": 1.0}


def test_modular_demo_run(tmp_path):
    config = load_config(CONFIG_PATH)
    report = run_experiment(config, "modular-demo", str(tmp_path))
    assert report.passed
    assert report.check("standard_form.delta_oracle").value <= 1e-10
    assert "toy.algebra_rank" in report.diagnostics

    stored = load_report(tmp_path / "report.json")
    assert stored["family"] == "modular-demo"
    assert stored["config_hash"] == config_hash(config)
    assert stored["passed"] is True


def test_unknown_family():
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(), "teleport")


def test_increasing_trend_fails_the_report():
    report = RunReport("deform", "0" * 64, 1)
    trend = {"values": [1.0, 0.5, 0.9], "largest_increase": 0.4, "non_increasing": False}
    record = record_trend(report, "commutant_trend", trend)
    assert not record.passed
    assert not report.passed
    assert report.diagnostics["commutant_trend.values"] == [1.0, 0.5, 0.9]

    soft = RunReport("smatrix", "0" * 64, 1)
    record_trend(soft, "locality_trend", trend, hard=False)
    assert soft.passed


SMALL_MODEL = {"spacing": 0.5, "modes": 2, "per_mode_cap": 2, "energy_cap": 1.0}


def _small_config(tmp_path, **sections):
    return load_config(_write_config(tmp_path, model=SMALL_MODEL, cache_dir=str(tmp_path / "cache"), **sections))


def test_smatrix_run_is_reproducible(tmp_path):
    config = _small_config(tmp_path)
    report = run_experiment(config, "smatrix")
    assert report.check("S_identity_residual").value <= 1e-6
    assert report.check("completeness_defect").value == 0.0
    locality = report.check("locality_trend.largest_increase")
    assert not locality.hard
    assert len(report.diagnostics["locality_trend.values"]) == 3

    again = run_experiment(config, "smatrix")
    assert [(c.name, c.value, c.passed) for c in again.checks] == [(c.name, c.value, c.passed) for c in report.checks]
    assert again.diagnostics == report.diagnostics


def test_deform_run_without_interaction(tmp_path):
    report = run_experiment(_small_config(tmp_path, deformation={"kappas": [0.0]}), "deform")
    assert report.check("kappa=0.correction").value <= 1e-6
    assert report.check("kappa=0.no_interaction").passed
    assert report.check("kappa=0.pair11_real_part_error").passed
    assert not any(name.startswith("kappa=0.commutant_trend") for name in report.diagnostics)


def test_warp_oracle_run(tmp_path):
    report = run_experiment(_small_config(tmp_path, deformation={"kappas": [0.25]}), "warp-oracle")
    assert report.check("oracle_dimension").passed
    for label in ("phi1", "affine"):
        assert report.check(f"kappa=0.25.{label}.oracle_distance").value <= 1e-4
    assert "kappa=0.25.affine" in report.regulator_traces


# --- command line -----------------------------------------------------------------

def test_cli_config_error_exit_code(tmp_path):
    path = _write_config(tmp_path, kernel={"kernel_exponent": 1.2})
    assert main(["modular-demo", "--config", path, "--no-plots"]) == EXIT_CONFIG


def test_cli_modular_demo(tmp_path):
    out = tmp_path / "modular-demo"
    assert main(["modular-demo", "--config", CONFIG_PATH, "--out", str(out), "--no-plots"]) == EXIT_PASS
    assert (out / "report.json").exists()


# --- traces and dashboard ---------------------------------------------------------

def test_trace_table_ratio():
    table = trace_table(_trace())
    assert list(table.columns) == ["kind", "T", "residual", "bound", "quadrature_error", "ratio"]
    assert math.isnan(table["ratio"].iloc[0])
    assert table["ratio"].iloc[1] == pytest.approx(math.exp(-0.5 * 1.5 ** 2 * 8.0))


def test_decay_rate_recovers_gap():
    rate = decay_rate(_trace(0.5))
    assert rate["gap"] == pytest.approx(0.5)
    assert rate["points"] == 4


def test_decay_rate_needs_two_points():
    flat = ConvergenceTrace("ergodic-", (8.0, 16.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), 0.0, None, True)
    assert decay_rate(flat) == {"slope": None, "gap": None, "points": 0}


def test_trace_csv(tmp_path):
    path = write_trace_csv(_trace(), str(tmp_path), "ergodic+/F0")
    assert os.path.basename(path) == "trace_ergodic__F0.csv"
    assert len(load_trace_csv(path)) == 4
    summary = summarize_traces([_trace(0.5)])
    assert summary["empirical_gap"].iloc[0] == pytest.approx(0.5)


def test_dashboard(tmp_path):
    assert calculate_verdict([])[1] == "verdict-neutral"
    run_experiment(load_config(CONFIG_PATH), "modular-demo", str(tmp_path / "modular-demo"))
    path = generate_html(str(tmp_path))
    with open(path) as f:
        page = f.read()
    assert "MODULAR-DEMO" in page
    assert "ALL HARD CHECKS PASS" in page
