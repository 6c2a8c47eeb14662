#!/usr/bin/env python3
"""
Experiment runner.

Each family builds its model from the configuration, runs one group of
experiments and records every measured quantity either as a hard check
(decides the exit status) or as a diagnostic (reported only). Reports are
written as report.json plus trace_*.csv and table CSVs in the output
directory.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from asymptotics import (
    AsymptoticKind,
    AsymptoticsSetup,
    ScatteringContext,
    asymptotic_field,
    asymptotic_triple_generators,
    check_clustering,
    ergodic_trace,
    factorization_residual,
    field_properties,
    intertwiner_report,
    kernel_profile,
    scattering_context,
    scattering_operator,
    two_wave_basis,
)
from config import ExperimentConfig, ModelConfig, config_hash
from errors import NumericalError
from fock_core import ModeGrid, build_fock_space, locality_trend, trend_slack, wave_packet
from modular import (
    diagonal_example,
    double_commutant,
    geometric_vs_modular_report,
    modular_flow_residual,
    modular_objects,
    span_distance,
    standard_form_example,
    toy_wedge_net,
)
from spacetime_net import (
    TwoDNet,
    Wedge,
    affine_element,
    build_two_d_net,
    field_power_element,
    reflection,
    sample_wedge_elements,
    structural_report,
    wedge_element,
)
from spectrum_cache import cached_spectrum
from traces import summarize_traces, write_trace_csv
from warp import (
    DeformationContext,
    DeformationMatrix,
    commutant_trend,
    deform_element,
    deformed_context,
    deformed_out_state,
    deformed_scattering_operator,
    mollifier,
    mollifier_independence,
    warp_covariance_residual,
)

logger = logging.getLogger(__name__)

FAMILIES = ("ergodic", "clustering", "smatrix", "deform", "warp-oracle", "modular-demo")

ERGODIC_SAMPLES = 10
CLUSTERING_QUADRUPLES = 20
TRIPLE_SAMPLES = 2
WEYL_SAMPLES = 3
POWER_SAMPLES = 2
ORACLE_MAX_DIM = 81


# --- report -----------------------------------------------------------------

@dataclass(frozen=True)
class CheckRecord:
    """One measured quantity against its bound; comparison is 'le' or 'ge'."""

    name: str
    value: float
    bound: float
    passed: bool
    hard: bool = True
    comparison: str = "le"


@dataclass
class RunReport:
    family: str
    config_hash: str
    seed: int
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    regulator_traces: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def add_check(self, name, value, bound, hard=True, comparison="le") -> CheckRecord:
        """
        Record a check; names are unique within a report.

        Raises:
            ValueError: a check of this name was already recorded
        """
        if any(c.name == name for c in self.checks):
            raise ValueError(f"check '{name}' recorded twice")
        value, bound = float(value), float(bound)
        if comparison == "le":
            passed = value <= bound
        elif comparison == "ge":
            passed = value >= bound
        else:
            raise ValueError(f"comparison must be 'le' or 'ge', got {comparison!r}")
        record = CheckRecord(name, value, bound, bool(passed), hard, comparison)
        self.checks.append(record)
        if hard and not passed:
            logger.warning("Hard check %s failed: %.3e vs %.3e", name, value, bound)
        return record

    def add_diagnostic(self, name, value):
        self.diagnostics[name] = value

    def add_trace(self, name, trace):
        self.traces[name] = trace

    def check(self, name) -> CheckRecord:
        for record in self.checks:
            if record.name == name:
                return record
        raise KeyError(name)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [dataclasses.asdict(c) for c in self.checks],
            "diagnostics": _jsonable(self.diagnostics),
            "traces": {name: _jsonable(dataclasses.asdict(t)) for name, t in self.traces.items()},
            "regulator_traces": _jsonable(self.regulator_traces),
            "timings": self.timings,
        }


def _jsonable(value):
    """Plain JSON types; complex numbers become {"re", "im"}."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_report(report: RunReport, output_dir: str) -> str:
    """
    Write report.json, one CSV per convergence trace and one per table.

    Returns:
        str: path of report.json
    """
    os.makedirs(output_dir, exist_ok=True)
    for name, trace in report.traces.items():
        write_trace_csv(trace, output_dir, name)
    if report.traces:
        summarize_traces(report.traces.values()).to_csv(
            os.path.join(output_dir, "trace_summary.csv"), index=False, float_format="%.12e"
        )
    for name, table in report.tables.items():
        table.to_csv(os.path.join(output_dir, f"{name}.csv"), index=False, float_format="%.12e")

    path = os.path.join(output_dir, "report.json")
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    logger.info("Report written to %s (%d checks, %d failures)", path, len(report.checks), len(report.failures))
    return path


def load_report(path) -> dict:
    with open(path, "r") as f:
        return json.load(f)


@contextmanager
def _timed(report: RunReport, stage: str):
    start = time.perf_counter()
    logger.info("%s: %s", report.family, stage)
    try:
        yield
    finally:
        report.timings[stage] = round(time.perf_counter() - start, 3)


# --- model construction -----------------------------------------------------

def build_model(model: ModelConfig, cache_dir: str = "cache") -> TwoDNet:
    """Two identical chiral factors, with the joint spectrum served from the cache."""
    grid = ModeGrid(model.spacing, model.modes)
    space = build_fock_space(grid, model.per_mode_cap, model.energy_bound, model.max_dim)
    spectrum = cached_spectrum(space, space, cache_dir)
    return build_two_d_net(space, space, model.max_dim, spectrum)


def asymptotics_setup(config: ExperimentConfig) -> AsymptoticsSetup:
    kernel, tolerance = config.kernel, config.tolerance
    return AsymptoticsSetup(
        profile=kernel_profile(kernel.profile),
        exponent=kernel.kernel_exponent,
        schedule=tuple(kernel.schedule_T),
        budget=kernel.quadrature_budget,
        n_jobs=config.n_jobs,
        cross_tolerance=tolerance.cross_check,
        approximant_tolerance=tolerance.approximant,
    )


def _floor(setup: AsymptoticsSetup, F) -> float:
    return setup.floor * max(1.0, float(np.linalg.norm(F)))


def record_trend(report: RunReport, name: str, trend: dict, hard: bool = True) -> CheckRecord:
    """Largest step up of a trend as a check, with the sequence itself as a diagnostic."""
    record = report.add_check(f"{name}.largest_increase", trend["largest_increase"], trend_slack(trend["values"]),
                              hard=hard)
    report.add_diagnostic(f"{name}.values", list(trend["values"]))
    return record


def _reference_residual(trace):
    """Residual at |T_final| / 4 when scheduled, otherwise the first one."""
    target = abs(trace.schedule[-1]) / 4.0
    for T, residual in zip(trace.schedule, trace.residuals):
        if math.isclose(abs(T), target):
            return residual
    return trace.residuals[0]


# --- families ---------------------------------------------------------------

def _weyl_elements(net, samples):
    """exp(i phi1(f)) x exp(i phi2(g)) on the packets of affine samples."""
    elements = []
    for i, F in enumerate(samples):
        f, g = F.factors[0][0], F.factors[1][1]
        elements.append(wedge_element(net, [(f, None), (None, g)], wedge=F.wedge, weyl=True, label=f"weyl[{i}]"))
    return elements


def _power_elements(net, samples):
    """phi1(f)^2 x phi2(g)^2 on the packets of affine samples."""
    return [field_power_element(net, F.factors[0][0], F.factors[1][1], 2, F.wedge, label=f"power[{i}]")
            for i, F in enumerate(samples)]


def run_ergodic(config: ExperimentConfig, report: RunReport, rng):
    """Ray averages against the ergodic limit, and chiral factorization of the limits."""
    tol = config.tolerance
    with _timed(report, "model"):
        net = build_model(config.model, config.cache_dir)
    setup = asymptotics_setup(config)
    elements = sample_wedge_elements(net, Wedge.RIGHT, ERGODIC_SAMPLES, rng)
    if config.model.weyl:
        elements += _weyl_elements(net, elements[:WEYL_SAMPLES])

    with _timed(report, "ergodic traces"):
        for i, F in enumerate(elements):
            tag = F.label if F.weyl else f"[{i}]"
            floor = _floor(setup, F.operator)
            for sign, ray in ((+1, "plus"), (-1, "minus")):
                trace = ergodic_trace(net, F.operator, sign, setup)
                name = f"ergodic_{ray}{tag}"
                report.add_trace(name, trace)
                report.add_check(f"{name}.final_residual", trace.final_residual, tol.ergodic_residual)
                report.add_check(f"{name}.within_bound", trace.final_residual, trace.bounds[-1] + floor)
                reference = _reference_residual(trace)
                ratio = 0.0 if trace.final_residual <= floor else trace.final_residual / max(reference, floor)
                report.add_check(f"{name}.ratio", ratio, tol.ergodic_ratio)

    with _timed(report, "factorization"):
        for i, F in enumerate(elements):
            floor = _floor(setup, F.operator)
            for kind in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS):
                phi, trace = asymptotic_field(net, F, kind, setup)
                name = f"factorization_{kind.value}[{i}]"
                if F.weyl:
                    report.add_diagnostic(f"{name}.operator_residual", trace.final_residual)
                    continue
                residual = factorization_residual(net, F, phi, kind)
                report.add_check(name, residual, tol.factorization)
                report.add_check(f"{name}.within_estimate", residual, trace.bounds[-1] + floor)
                report.add_diagnostic(f"{name}.extrapolation_shift", trace.extrapolation_shift)

        for F in _power_elements(net, elements[:POWER_SAMPLES]):
            for kind in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS):
                phi, _ = asymptotic_field(net, F, kind, setup)
                name = f"factorization_{kind.value}{F.label}"
                report.add_check(f"{name}.pinched", factorization_residual(net, F, phi, kind, pinched=True),
                                 tol.factorization)
                report.add_diagnostic(f"{name}.vacuum_form", factorization_residual(net, F, phi, kind))

    with _timed(report, "field properties"):
        partners = sample_wedge_elements(net, Wedge.LEFT, 3, rng)
        properties = field_properties(net, elements[0], AsymptoticKind.OUT_PLUS, setup, partners=partners)
        for name, value in properties.items():
            report.add_diagnostic(f"field_properties.{name}", value)


def run_clustering(config: ExperimentConfig, report: RunReport, rng):
    """Clustering of outgoing two-wave states over sampled quadruples."""
    with _timed(report, "model"):
        net = build_model(config.model, config.cache_dir)
    ctx = ScatteringContext(net, reflection(net), asymptotics_setup(config), {})
    values = []
    with _timed(report, "quadruples"):
        for i in range(CLUSTERING_QUADRUPLES):
            F, G = sample_wedge_elements(net, Wedge.RIGHT, 2, rng)
            Fp, Gp = sample_wedge_elements(net, Wedge.LEFT, 2, rng)
            value = check_clustering(ctx, F, G, Fp, Gp)
            values.append(value)
            report.add_check(f"clustering[{i}]", value, config.tolerance.clustering)
    report.add_diagnostic("clustering.max", max(values))


def _triple_samples(net, rng):
    """Full affine pairs plus pairs with one scalar leg, for which the commutators are exact."""
    samples = list(zip(sample_wedge_elements(net, Wedge.RIGHT, TRIPLE_SAMPLES, rng),
                       sample_wedge_elements(net, Wedge.RIGHT, TRIPLE_SAMPLES, rng)))
    primed = list(zip(sample_wedge_elements(net, Wedge.LEFT, TRIPLE_SAMPLES, rng),
                      sample_wedge_elements(net, Wedge.LEFT, TRIPLE_SAMPLES, rng)))
    samples += list(zip(sample_wedge_elements(net, Wedge.RIGHT, TRIPLE_SAMPLES, rng, leg_mask=(True, False)),
                        sample_wedge_elements(net, Wedge.RIGHT, TRIPLE_SAMPLES, rng, leg_mask=(True, False))))
    primed += list(zip(sample_wedge_elements(net, Wedge.LEFT, TRIPLE_SAMPLES, rng, leg_mask=(False, True)),
                       sample_wedge_elements(net, Wedge.LEFT, TRIPLE_SAMPLES, rng, leg_mask=(False, True))))
    return samples, primed


def run_smatrix(config: ExperimentConfig, report: RunReport, rng):
    """Structure of the net, the scattering operator and the asymptotic triple."""
    tol = config.tolerance
    with _timed(report, "model"):
        net = build_model(config.model, config.cache_dir)

    with _timed(report, "structure"):
        for name, value in structural_report(net).items():
            report.add_check(f"structure.{name}", value, tol.structural)
        J = reflection(net)
        for name, value in J.checks.items():
            report.add_check(f"reflection.{name}", value, tol.structural)

    with _timed(report, "dictionary"):
        ctx = scattering_context(net, asymptotics_setup(config), J=J)

    with _timed(report, "scattering operator"):
        S = scattering_operator(ctx, rng=rng, rank_tolerance=tol.rank)
    checks = S.checks
    report.add_check("S_identity_residual", checks["identity"], tol.s_identity)
    report.add_check("S_unitarity", checks["unitarity"], tol.s_identity)
    report.add_check("S_vacuum", checks["vacuum"], tol.s_identity)
    report.add_check("S_covariance", checks["covariance"], tol.s_identity)
    report.add_check("gram_out", checks["gram_out"], tol.gram)
    report.add_check("gram_in", checks["gram_in"], tol.gram)
    report.add_check("in_duality", checks["in_duality"], tol.s_identity)
    report.add_check("exact_chiral", checks["exact_chiral"], tol.s_identity)
    report.add_check("norm_factorization", checks["norm_factorization"], tol.s_identity)
    report.add_check("random_isometry", checks["random_isometry"], tol.gram)
    report.add_check("state_covariance", checks["state_covariance"], tol.s_identity)
    report.add_check("completeness_defect", checks["completeness_defect"], 0.0)
    report.add_diagnostic("out_span_rank", S.rank)
    report.add_diagnostic("dimension", S.dim)

    with _timed(report, "asymptotic triple"):
        samples, primed = _triple_samples(net, rng)
        triple = asymptotic_triple_generators(ctx, samples, primed)
        intertwiner = intertwiner_report(net, triple, samples)
    t = triple.checks
    report.add_check("triple.commutator_exact_legs", t["commutator_exact_legs"], tol.s_identity)
    report.add_check("triple.vacuum_action", t["vacuum_action"], tol.s_identity)
    report.add_check("triple.chiral_structure", t["chiral_structure"], tol.s_identity)
    report.add_check("triple.spectrum_in_cone", t["asymptotic_spectrum_in_cone"], tol.structural)
    report.add_check("triple.vacuum_defect", t["asymptotic_vacuum_defect"], 0.0)
    report.add_check("triple.scattering_identity", t["scattering_identity"], tol.s_identity)
    report.add_diagnostic("triple.commutator_leakage", t["commutator_leakage"])
    report.add_check("intertwiner.unitarity", intertwiner["unitarity"], tol.intertwiner_unitarity)
    report.add_check("intertwiner.covariance", intertwiner["covariance"], tol.intertwiner_covariance)
    report.add_check("intertwiner.vacuum", intertwiner["vacuum"], tol.structural)
    report.add_check("intertwiner.generator_mapping", intertwiner["generator_mapping"], tol.s_identity)

    with _timed(report, "locality trend"):
        trend = locality_trend(-math.pi / 2.0, math.pi / 2.0, width=0.5)
    record_trend(report, "locality_trend", trend, hard=False)


def spot_pair_index(net: TwoDNet) -> int:
    """Position in two_wave_basis of the pair (one lowest-mode quantum in each factor)."""
    first = (1,) + (0,) * (net.net1.grid.count - 1)
    second = (1,) + (0,) * (net.net2.grid.count - 1)
    return net.net1.index[first] * net.net2.dim + net.net2.index[second]


def _widest_phase_gap(rows) -> float:
    values = np.array([r["eigenvalue"] for r in rows])
    values = values[np.abs(values) > 0]
    angles = np.angle(values[:, None] / values[None, :])
    return float(np.max(np.abs(angles)))


def _eigenphase_table(rows) -> pd.DataFrame:
    table = pd.DataFrame(rows)
    for column in ("eigenvalue", "expected"):
        table[f"{column}_re"] = table[column].map(lambda z: z.real)
        table[f"{column}_im"] = table[column].map(lambda z: z.imag)
    return table.drop(columns=["eigenvalue", "expected"])


def run_deform(config: ExperimentConfig, report: RunReport, rng):
    """Deformed scattering operators and the deformed commutant trend per kappa."""
    tol = config.tolerance
    with _timed(report, "model"):
        net = build_model(config.model, config.cache_dir)
    with _timed(report, "dictionary"):
        ctx = scattering_context(net, asymptotics_setup(config))
    basis = two_wave_basis(net)
    spot = spot_pair_index(net)
    spacing1, spacing2 = net.net1.grid.spacing, net.net2.grid.spacing
    sample = sample_wedge_elements(net, Wedge.RIGHT, 1, rng)[0]

    for kappa in config.deformation.kappas:
        prefix = f"kappa={kappa:g}"
        Q = DeformationMatrix(kappa)
        report.add_check(f"{prefix}.Q_antisymmetry", Q.antisymmetry_residual([(1.0, 0.3), (-0.7, 2.0), (0.4, -1.1)]),
                         tol.structural)
        report.add_check(f"{prefix}.warp_covariance", warp_covariance_residual(net, sample, Q),
                         tol.intertwiner_covariance)

        with _timed(report, f"{prefix} deformed S"):
            deformed = deformed_context(ctx, kappa)
            result = deformed_scattering_operator(ctx, kappa, basis, deformed=deformed, rank_tolerance=tol.rank)
        checks = result.checks
        report.add_check(f"{prefix}.phase_error", checks["phase_error"], tol.phase)
        report.add_check(f"{prefix}.correction", checks["correction"], tol.s_identity)
        report.add_check(f"{prefix}.unitarity", checks["unitarity"], tol.s_identity)
        report.add_check(f"{prefix}.gram", checks["gram"], tol.gram)
        report.add_check(f"{prefix}.covariance", checks["covariance"], tol.s_identity)
        report.add_diagnostic(f"{prefix}.rank", checks["rank"])
        report.add_diagnostic(f"{prefix}.interaction_gap", checks["interaction_gap"])
        report.tables[f"eigenphases_{prefix}"] = _eigenphase_table(result.eigenphases)

        value = result.eigenphases[spot]["eigenvalue"]
        expected = math.cos(2.0 * kappa * spacing1 * spacing2)
        report.add_diagnostic(f"{prefix}.pair11_real_part", value.real)
        report.add_check(f"{prefix}.pair11_real_part_error", abs(value.real - expected), tol.phase)
        widest = _widest_phase_gap(result.eigenphases)
        if kappa > 0:
            report.add_check(f"{prefix}.interaction_phase", widest, tol.interaction_phase, comparison="ge")
        else:
            report.add_check(f"{prefix}.no_interaction", widest, tol.s_identity)

        with _timed(report, f"{prefix} paths"):
            for index in (spot, len(basis) - 1):
                plus, minus = basis[index]
                for direction in ("out", "in"):
                    state = deformed_out_state(ctx, plus, minus, kappa, direction, deformed, tol.path)
                    report.add_check(f"{prefix}.path_{direction}[{index}]", state.checks["path_distance"],
                                     tol.path * max(1.0, float(np.linalg.norm(state.composed))))

        if kappa > 0:
            with _timed(report, f"{prefix} commutant trend"):
                trend = commutant_trend(net.net1.grid, kappa, config.deformation.caps,
                                        config.model.energy_bound, n_jobs=config.n_jobs)
            record_trend(report, f"{prefix}.commutant_trend", trend)
            report.add_diagnostic(f"{prefix}.commutant_trend.operator_norms", trend["operator_norms"])


def run_warp_oracle(config: ExperimentConfig, report: RunReport, rng):
    """Oscillatory warped convolution against the spectral form on the oracle model."""
    tol, deformation = config.tolerance, config.deformation
    with _timed(report, "model"):
        net = build_model(deformation.oracle_model, config.cache_dir)
    report.add_check("oracle_dimension", net.dim, ORACLE_MAX_DIM)

    grid = net.net1.grid
    quarter = grid.period / 4.0
    f, g = wave_packet(grid, -quarter, 0.4), wave_packet(grid, quarter, 0.4)
    elements = [
        wedge_element(net, [(f, None)], label="phi1"),
        affine_element(net, f, g, 1.0, 1.0, Wedge.RIGHT, label="affine"),
    ]
    elements += sample_wedge_elements(net, Wedge.RIGHT, 1, rng)

    moll = mollifier(deformation.mollifier)
    for kappa in deformation.kappas:
        Q = DeformationMatrix(kappa)
        context = DeformationContext(Q, moll, tuple(deformation.reg_epsilon), deformation.quadrature_budget,
                                     config.n_jobs)
        with _timed(report, f"kappa={kappa:g}"):
            for F in elements:
                prefix = f"kappa={kappa:g}.{F.label}"
                deformed = deform_element(net, F, Q, context)
                report.add_check(f"{prefix}.oracle_distance", deformed.oracle_distance, tol.warp_oracle)
                report.add_diagnostic(f"{prefix}.error_estimate", deformed.error)
                report.regulator_traces[prefix] = list(deformed.regulator_trace)
                swap = mollifier_independence(net, F, Q, tuple(deformation.reg_epsilon),
                                              deformation.quadrature_budget)
                report.add_check(f"{prefix}.mollifier_swap", swap, tol.mollifier)


def run_modular_demo(config: ExperimentConfig, report: RunReport, rng):
    """Modular objects of the worked examples and the geometric comparison on the toy net."""
    tol = config.tolerance.modular
    for name, example in (("diagonal", diagonal_example), ("standard_form", standard_form_example)):
        with _timed(report, name):
            alg, omega, expected_delta, expected_V = example()
            data = modular_objects(alg, omega, tolerance=tol)
        report.add_check(f"{name}.delta_oracle", np.abs(data.delta - expected_delta).max(), tol)
        report.add_check(f"{name}.J_oracle", np.abs(data.conjugation - expected_V).max(), tol)
        for check, value in data.checks.items():
            report.add_check(f"{name}.{check}", value, tol)
        report.add_check(f"{name}.modular_flow", modular_flow_residual(alg, data), tol)
        report.add_check(f"{name}.double_commutant", span_distance(double_commutant(alg), alg), tol)

    with _timed(report, "toy wedge net"):
        net, elements = toy_wedge_net()
        comparison = geometric_vs_modular_report(net, elements)
    for name, value in comparison.items():
        report.add_diagnostic(f"toy.{name}", value)


RUNNERS = {
    "ergodic": run_ergodic,
    "clustering": run_clustering,
    "smatrix": run_smatrix,
    "deform": run_deform,
    "warp-oracle": run_warp_oracle,
    "modular-demo": run_modular_demo,
}


def run_experiment(config: ExperimentConfig, family: str, output_dir: str | None = None) -> RunReport:
    """
    Run one experiment family on a validated configuration.

    Args:
        config: validated ExperimentConfig
        family: one of FAMILIES
        output_dir: where report.json and the CSVs go; None skips writing

    Returns:
        RunReport

    Raises:
        NumericalError: with the failing family attached as exc.family
    """
    if family not in RUNNERS:
        raise ValueError(f"unknown family '{family}', expected one of {list(FAMILIES)}")
    report = RunReport(family, config_hash(config), config.seed)
    rng = np.random.default_rng(config.seed)
    logger.info("Running %s (config %s)", family, report.config_hash[:12])

    start = time.perf_counter()
    try:
        RUNNERS[family](config, report, rng)
    except NumericalError as exc:
        exc.family = family
        logger.error("%s failed after %s: %s", family, list(report.timings), exc)
        raise
    report.timings["total"] = round(time.perf_counter() - start, 3)

    if output_dir is not None:
        write_report(report, output_dir)
    return report


def main():
    from config import load_config

    print("🧪 Experiment harness")
    print("-" * 40)
    report = run_experiment(load_config(), "modular-demo", "out/modular-demo")
    for check in report.checks:
        print(f"  {'✅' if check.passed else '❌'} {check.name:<36} {check.value:.2e}")


if __name__ == "__main__":
    main()
