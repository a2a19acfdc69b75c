"""Run scenarios through the physics modules and format the results.

A :class:`Report` carries the resolved inputs (every default filled in),
scalar results and a table. Nothing in it depends on wall-clock time or
process state, so identical (scenario, seed, trials) give identical bytes.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .chain import (
    DEFAULT_CAP_SLOTS,
    ChainConfig,
    analytic_total_time,
    dlcz_comparison,
    dlcz_config,
    monte_carlo_total_time,
)
from .conversion import (
    TIMESERIES_COLUMNS,
    PulseEnvelope,
    SolverSettings,
    leak_fraction,
    simulate_conversion,
    stokes_probability,
    timeseries_rows,
    waveform_fidelity,
)
from .errors import DegenerateInputError, ScenarioError
from .link import LinkParams, expected_link_time, link_success_probability
from .params import C_VACUUM, AtomCavityParams, DerivedRates, derive_rates, fluorescence_ratio, preset
from .phase import PhaseModel, analytic_mean_fidelity, phase_exposure_window, sampled_fidelity
from .scenario import COMMANDS, Scenario, serialize_scenario

LINK_COLUMNS = ("L0_km", "L_att_km", "eta_t", "P0", "tau_s")
CHAIN_COLUMNS = ("L_km", "n", "L0_km", "P0", "T_analytic_s", "T_mc_mean_s", "T_mc_stderr_s", "speedup_vs_dlcz")
DLCZ_COLUMNS = ("L_km", "n", "L0_km", "P0", "P0_dlcz", "T_ours_s", "T_dlcz_s", "speedup")
PHASE_COLUMNS = ("sigma_phi_rad", "f_analytic", "f_sampled", "stderr")
CONVERT_COLUMNS = ("eta", "p_analytic", "p_ode", "n1_out", "n2_out", "n_fluor", "waveform_fidelity")

DEFAULT_P_DLCZ = 0.01
NAN = float("nan")


@dataclass
class Report:
    command: str
    scenario: Scenario
    seed: int
    trials: int
    resolved: dict[str, dict[str, Any]] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    columns: tuple[str, ...] = ()
    rows: list[tuple] = field(default_factory=list)


# -- builders ---------------------------------------------------------------

def build_rates(s: Scenario) -> DerivedRates:
    if s.has("rates"):
        r = s.sections["rates"]
        return DerivedRates(G=r["G"], chi=r["chi"], Gamma=r.get("Gamma", 0.0), N=r.get("N", 1.0), k=r["k"])
    return derive_rates(build_block(s))


def build_block(s: Scenario) -> AtomCavityParams:
    values = dict(s.sections["block"])
    name = values.pop("preset", None)
    if name is not None:
        return preset(name, **values)
    return AtomCavityParams(**values)


def build_pulse(s: Scenario) -> PulseEnvelope:
    p = s.sections["pulse"]
    if p.get("kind", "gaussian") == "gaussian":
        return PulseEnvelope.gaussian(p["sigma_t"], t0=p.get("t0", 0.0))
    return PulseEnvelope.square(p["duration"], t0=p.get("t0", 0.0))


def build_solver(s: Scenario) -> SolverSettings:
    return SolverSettings(**s.sections.get("solver", {}))


def build_link(s: Scenario, L0: float | None = None) -> LinkParams:
    values = dict(s.sections.get("link", {}))
    if L0 is not None:
        values["L0"] = L0
    if "L0" not in values:
        raise ScenarioError("[link] needs L0 (km) unless a [chain] section sets the link length",
                            s.line_of("link"))
    return LinkParams(**values)


def build_chain(s: Scenario) -> ChainConfig:
    if not s.has("chain"):
        raise ScenarioError("missing required section [chain]")
    values = dict(s.sections["chain"])
    values.pop("cap_slots", None)
    L0 = values["L"] / 2 ** values["n"]
    return ChainConfig(link=build_link(s, L0=L0), **values)


def build_phase(s: Scenario) -> PhaseModel:
    values = dict(s.sections["phase"])
    kwargs: dict[str, Any] = {"sigma": values["sigma"]}
    if "kind" in values:
        kwargs["jitter_kind"] = values["kind"]
    if "omega" in values:
        kwargs["omega"] = values["omega"]
    elif "wavelength" in values:
        kwargs["omega"] = 2 * math.pi * C_VACUUM / values["wavelength"]
    if "window" in values:
        kwargs["window"] = values["window"]
    elif s.has("link") and "L0" in s.sections["link"]:
        kwargs["window"] = phase_exposure_window(build_link(s))
    return PhaseModel(**kwargs)


def _dlcz_inputs(s: Scenario, config: ChainConfig) -> tuple[float, float]:
    return s.get("dlcz", "p", DEFAULT_P_DLCZ), s.get("dlcz", "eta_m", config.eta_m)


# -- pipelines --------------------------------------------------------------
# Each returns (resolved inputs, summary, columns, rows).

def _run_convert(s: Scenario, seed: int, trials: int, sweep_row: bool):
    rates = build_rates(s)
    resolved = {"rates": asdict(rates)}
    if s.has("block"):
        block = build_block(s)
        resolved["block"] = asdict(block)
        resolved["rates"]["fluorescence_ratio"] = fluorescence_ratio(block)
        resolved["rates"]["far_detuned"] = block.far_detuned
    summary = {
        "eta": rates.eta,
        "p_analytic": stokes_probability(rates.eta),
        "leak_analytic": leak_fraction(rates.eta),
    }
    row = [rates.eta, summary["p_analytic"], NAN, NAN, NAN, NAN, NAN]
    rows: list[tuple] = []
    if s.has("pulse"):
        pulse = build_pulse(s)
        solver = build_solver(s)
        resolved["pulse"] = {"kind": pulse.kind, "t0": pulse.t0, "width_s": pulse.width}
        resolved["solver"] = asdict(solver)
        result = simulate_conversion(rates, pulse, solver)
        try:
            fidelity = waveform_fidelity(result)
        except DegenerateInputError:
            fidelity = NAN
        summary.update({
            "p": result.p,
            "n1_out": result.n1_out,
            "n2_out": result.n2_out,
            "n_fluor": result.n_fluor,
            "spin_excitations": result.spin_excitations,
            "amplitude_no_excitation": result.amplitudes[0],
            "amplitude_one_excitation": result.amplitudes[1],
            "waveform_fidelity": fidelity,
            "balance_error": result.balance_error,
        })
        row[2:] = [result.p, result.n1_out, result.n2_out, result.n_fluor, fidelity]
        rows = timeseries_rows(result)
    if sweep_row:
        return resolved, summary, CONVERT_COLUMNS, [tuple(row)]
    if rows:
        return resolved, summary, TIMESERIES_COLUMNS, rows
    return resolved, summary, CONVERT_COLUMNS, [tuple(row)]


def _run_link(s: Scenario, seed: int, trials: int, sweep_row: bool):
    link = build_link(s)
    p0 = link_success_probability(link)
    tau = expected_link_time(link)
    resolved = {"link": asdict(link)}
    summary = {"eta_t": link.eta_t, "P0": p0, "tau_s": tau, "attempt_period_s": link.attempt_period}
    return resolved, summary, LINK_COLUMNS, [(link.L0, link.L_att, link.eta_t, p0, tau)]


def _chain_resolved(s: Scenario, config: ChainConfig, p_dlcz: float, eta_m_dlcz: float) -> dict:
    chain = {k: v for k, v in asdict(config).items() if k != "link"}
    chain["cap_slots"] = s.get("chain", "cap_slots", DEFAULT_CAP_SLOTS)
    chain.update(L0=config.L0, P0=config.P0, p_swap=config.p_swap, p_post=config.p_post)
    return {
        "link": asdict(config.elementary_link),
        "chain": chain,
        "dlcz": {"p": p_dlcz, "eta_m": eta_m_dlcz},
    }


def _run_chain(s: Scenario, seed: int, trials: int, sweep_row: bool):
    config = build_chain(s)
    p_dlcz, eta_m_dlcz = _dlcz_inputs(s, config)
    analytic = analytic_total_time(config)
    speedup = dlcz_comparison(config, p_dlcz, eta_m_dlcz)
    summary: dict[str, Any] = {"T_analytic_s": analytic, "speedup_vs_dlcz": speedup}
    mean = stderr = NAN
    if trials > 0:
        cap = s.get("chain", "cap_slots", DEFAULT_CAP_SLOTS)
        mc = monte_carlo_total_time(config, trials, seed, cap_slots=cap)
        mean, stderr = mc.t_mc_mean, mc.t_mc_stderr
        summary.update(T_mc_mean_s=mean, T_mc_stderr_s=stderr, mc_over_analytic=mean / analytic)
        for level, t in enumerate(mc.per_level_stats):
            summary[f"level{level}_mean_s"] = t
    row = (config.L, config.n, config.L0, config.P0, analytic, mean, stderr, speedup)
    return _chain_resolved(s, config, p_dlcz, eta_m_dlcz), summary, CHAIN_COLUMNS, [row]


def _run_compare(s: Scenario, seed: int, trials: int, sweep_row: bool):
    config = build_chain(s)
    p_dlcz, eta_m_dlcz = _dlcz_inputs(s, config)
    theirs = dlcz_config(config, p_dlcz, eta_m_dlcz)
    t_ours = analytic_total_time(config)
    t_theirs = analytic_total_time(theirs)
    speedup = dlcz_comparison(config, p_dlcz, eta_m_dlcz)
    summary = {"T_ours_s": t_ours, "T_dlcz_s": t_theirs, "speedup": speedup,
               "P0_ratio": config.P0 / theirs.P0}
    row = (config.L, config.n, config.L0, config.P0, theirs.P0, t_ours, t_theirs, speedup)
    return _chain_resolved(s, config, p_dlcz, eta_m_dlcz), summary, DLCZ_COLUMNS, [row]


def _run_phase(s: Scenario, seed: int, trials: int, sweep_row: bool):
    model = build_phase(s)
    analytic = analytic_mean_fidelity(model.sigma_phi)
    sampled, stderr = sampled_fidelity(model, trials, seed) if trials > 0 else (NAN, NAN)
    resolved = {"phase": {**asdict(model), "sigma_phi": model.sigma_phi}}
    summary = {"sigma_phi_rad": model.sigma_phi, "f_analytic": analytic, "f_sampled": sampled, "stderr": stderr}
    return resolved, summary, PHASE_COLUMNS, [(model.sigma_phi, analytic, sampled, stderr)]


PIPELINES = {
    "convert": _run_convert,
    "link": _run_link,
    "chain": _run_chain,
    "compare-dlcz": _run_compare,
    "phase": _run_phase,
}


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def run_scenario(s: Scenario, seed: int, trials: int, command: str | None = None) -> Report:
    """Run ``command`` (or the scenario's natural command) and collect a report.

    ``command="sweep"`` evaluates the sweep target at every grid point; each
    point draws from a seed derived from ``seed`` and the point index.
    """
    if trials < 0:
        raise ScenarioError(f"trials must be >= 0, got {trials}")
    if command is None:
        command = "sweep" if s.sweep else s.default_command()
    if command == "sweep":
        return _run_sweep(s, seed, trials)
    if command not in PIPELINES:
        raise ScenarioError(f"unknown command {command!r}; choose from {COMMANDS + ('sweep',)}")
    resolved, summary, columns, rows = PIPELINES[command](s, seed, trials, False)
    return Report(command, s, seed, trials, resolved, summary, tuple(columns), rows)


def _run_sweep(s: Scenario, seed: int, trials: int) -> Report:
    if not s.sweep:
        raise ScenarioError("sweep requested but the scenario has no [sweep] section")
    target = s.sweep_target or s.default_command()
    if target not in PIPELINES:
        raise ScenarioError(f"unknown sweep target {target!r}")
    pipeline = PIPELINES[target]
    axis_names = tuple(axis.name for axis in s.sweep)
    grid = list(itertools.product(*(axis.values() for axis in s.sweep)))
    rows: list[tuple] = []
    resolved: dict[str, dict[str, Any]] = {}
    columns: tuple[str, ...] | None = None
    for index, point in enumerate(grid):
        updates = {(axis.section, axis.key): value for axis, value in zip(s.sweep, point)}
        point_scenario = s.with_values(updates)
        res, _, cols, point_rows = pipeline(point_scenario, _point_seed(seed, index), trials, True)
        if index == 0:
            resolved = res
        columns = cols
        rows.extend(tuple(point) + tuple(r) for r in point_rows)
    if columns is None:
        columns = _empty_sweep_columns(target)
    resolved["sweep"] = {
        "target": target,
        **{axis.name: axis.serialize() for axis in s.sweep},
        "points": len(grid),
    }
    summary = {"points": len(grid)}
    return Report("sweep", s, seed, trials, resolved, summary, axis_names + tuple(columns), rows)


def _empty_sweep_columns(target: str) -> tuple[str, ...]:
    return {
        "convert": CONVERT_COLUMNS, "link": LINK_COLUMNS, "chain": CHAIN_COLUMNS,
        "compare-dlcz": DLCZ_COLUMNS, "phase": PHASE_COLUMNS,
    }[target]


# -- formatting -------------------------------------------------------------

def format_value(value: Any) -> str:
    """Nine significant digits for reals; ints, bools and strings verbatim."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    if value is None:
        return ""
    return str(value)


def csv_text(report: Report) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def emit_csv(report: Report, destination: str | Path) -> None:
    """Write the report table as CSV (header plus one line per row)."""
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(report))


MAX_TABLE_ROWS = 50


def render_report(report: Report) -> str:
    """Human-readable report: echoed scenario, resolved inputs, results, table."""
    out = [
        "# repeaterlab report",
        f"command = {report.command}",
        f"seed = {report.seed}",
        f"trials = {report.trials}",
        "",
        "## scenario",
        serialize_scenario(report.scenario).rstrip("\n"),
        "",
        "## resolved parameters",
    ]
    for section, values in report.resolved.items():
        out.append(f"[{section}]")
        out.extend(f"{key} = {format_value(value)}" for key, value in values.items())
    out += ["", "## results"]
    out.extend(f"{key} = {format_value(value)}" for key, value in report.summary.items())
    out += ["", f"## table ({len(report.rows)} rows)"]
    if len(report.rows) <= MAX_TABLE_ROWS:
        table = [list(report.columns)] + [[format_value(v) for v in row] for row in report.rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(report.columns))]
        out.extend("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in table)
    else:
        out.append("(table omitted; write it with --out)")
    return "\n".join(out) + "\n"
