"""Seeded parameter sweeps over schemes, written to CSV for comparison.

A sweep varies one axis (transmit power, surface size, uplink vector budget,
or surface placement) over a list of values, solves every requested scheme on
every (value, seed) cell, and writes one row per solve plus a per-(scheme,
value) mean summary.  Rows are deterministic for fixed inputs: scenarios are
keyed by seed, solvers are deterministic, and rows are emitted in sorted
order, so two runs differ only in the runtime column.

Within a cell the schemes that refine the shared-vector design (adaptive,
hybrid, general) are warm-started from one static solve, which both matches
how they are meant to be used and keeps sweeps affordable.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .channel import effective_gain
from .optimizers import (
    ScaOptions,
    baseline_no_irs,
    baseline_random_phases,
    round_association,
    solve_general,
    solve_hybrid,
    solve_static,
    solve_ul_adaptive,
    solve_user_adaptive,
)
from .scenario import ConfigError, Scenario, SystemConfig, generate_scenario, watts_to_dbm
from .sdr import solve_relaxed

AXES = ("hap_power_dbm", "num_elements", "num_slots", "irs_x")

SCHEMES = (
    "static",
    "ul_adaptive",
    "user_adaptive",
    "hybrid",
    "general",
    "general_rounded",
    "random",
    "no_irs",
    "upper_bound",
)

# schemes warm-started from the shared static solve of their cell
_WARM_SCHEMES = ("user_adaptive", "hybrid", "general", "general_rounded")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: an axis, its values, and what to solve at each point."""

    base_config: SystemConfig
    axis: str
    values: tuple
    schemes: tuple
    seeds: tuple
    output: str                 # CSV path; the summary lands next to it
    j_default: int = 1          # uplink vector budget when axis != num_slots
    store_plans: bool = False   # also write solved plans to <output stem>_plans.npz
    random_trials: int = 100    # draws for the random-phase baseline
    sca: ScaOptions | None = None  # solver options; None = defaults

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; choose one of {AXES}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; choose from {SCHEMES}")
        if not self.values:
            raise ConfigError("values must be a nonempty list")
        if not self.seeds:
            raise ConfigError("seeds must be a nonempty list")
        if not self.schemes:
            raise ConfigError("schemes must be a nonempty list")
        if self.j_default < 0:
            raise ConfigError("j_default must be >= 0")
        if self.random_trials < 1:
            raise ConfigError("random_trials must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class ResultRow:
    """One solve: the instance descriptors and the solution scalars."""

    scheme: str
    axis: str
    axis_value: float
    seed: int
    num_elements: int
    num_devices: int
    num_ul_vectors: int
    hap_power_dbm: float
    throughput: float           # weighted sum throughput [bits/Hz]
    tau0_s: float               # harvest duration [s]
    harvested_energy_j: float   # total energy picked up by all devices [J]
    hap_energy_j: float         # energy spent by the access point [J]
    outer_iters: int
    runtime_ms: float
    status: str


_COLUMNS = tuple(f.name for f in fields(ResultRow))


def _apply_axis(config: SystemConfig, axis: str, value) -> SystemConfig:
    if axis == "hap_power_dbm":
        return replace(config, hap_power_w=10.0 ** ((float(value) - 30.0) / 10.0))
    if axis == "num_elements":
        return replace(config, num_elements=int(value))
    if axis == "irs_x":
        _, y, z = config.irs_pos
        return replace(config, irs_pos=(float(value), y, z))
    return config  # num_slots changes the solve call, not the instance


def _harvested(scenario: Scenario, solution) -> float:
    total = 0.0
    for k in range(scenario.num_devices):
        g_dl = effective_gain(0.0, scenario.q_bar[k], solution.plan.v0)
        total += scenario.eta[k] * scenario.hap_power * g_dl * solution.alloc.tau0
    return total


def _bound_cell(scenario: Scenario, runtime_ms: float, bound) -> dict:
    w0 = bound.lifted.w0
    harvested = sum(
        scenario.eta[k]
        * scenario.hap_power
        * float(np.real(scenario.q_bar[k].conj() @ w0 @ scenario.q_bar[k]))
        for k in range(scenario.num_devices)
    )
    return dict(
        scheme="upper_bound",
        num_elements=scenario.num_elements,
        num_devices=scenario.num_devices,
        num_ul_vectors=scenario.num_devices,
        hap_power_dbm=watts_to_dbm(scenario.hap_power),
        throughput=bound.value,
        tau0_s=bound.lifted.tau0,
        harvested_energy_j=harvested,
        hap_energy_j=scenario.hap_power * bound.lifted.tau0,
        outer_iters=bound.iterations,
        runtime_ms=runtime_ms,
        status=bound.status,
        plan=None,
    )


def _solve_cell(config: SystemConfig, schemes, j: int, options, random_trials: int):
    """All requested schemes on one instance; returns row dicts plus plans."""
    scenario = generate_scenario(config)
    static = None
    static_ms = 0.0
    if "static" in schemes or any(s in _WARM_SCHEMES for s in schemes):
        t0 = time.perf_counter()
        static = solve_static(scenario, options)
        static_ms = 1e3 * (time.perf_counter() - t0)
    warm = static.plan if static is not None else None

    out = []
    for scheme in schemes:
        t0 = time.perf_counter()
        eval_scenario = scenario
        if scheme == "static":
            sol, runtime = static, static_ms
        elif scheme == "ul_adaptive":
            sol = solve_ul_adaptive(scenario, options)
            runtime = 1e3 * (time.perf_counter() - t0)
        elif scheme == "user_adaptive":
            sol = solve_user_adaptive(scenario, options, warm_plan=warm)
            runtime = 1e3 * (time.perf_counter() - t0)
        elif scheme == "hybrid":
            # the dedicated-vector budget saturates at one per device
            sol = solve_hybrid(scenario, min(j, scenario.num_devices), options, warm_plan=warm)
            runtime = 1e3 * (time.perf_counter() - t0)
        elif scheme in ("general", "general_rounded"):
            sol = solve_general(scenario, j, options, warm_plan=warm)
            if scheme == "general_rounded":
                sol = round_association(scenario, sol)
            runtime = 1e3 * (time.perf_counter() - t0)
        elif scheme == "random":
            sol = baseline_random_phases(scenario, trials=random_trials)
            runtime = 1e3 * (time.perf_counter() - t0)
        elif scheme == "no_irs":
            sol = baseline_no_irs(scenario)
            runtime = 1e3 * (time.perf_counter() - t0)
            eval_scenario = scenario.without_irs()  # harvest over direct links only
        else:  # upper_bound carries no plan; its row is assembled separately
            bound = solve_relaxed(scenario)
            out.append(_bound_cell(scenario, 1e3 * (time.perf_counter() - t0), bound))
            continue
        diag = sol.diagnostics
        out.append(
            dict(
                scheme=scheme,
                num_elements=scenario.num_elements,
                num_devices=scenario.num_devices,
                num_ul_vectors=len(sol.plan.ul_vectors),
                hap_power_dbm=watts_to_dbm(scenario.hap_power),
                throughput=sol.throughput,
                tau0_s=sol.alloc.tau0,
                harvested_energy_j=_harvested(eval_scenario, sol),
                hap_energy_j=scenario.hap_power * sol.alloc.tau0,
                outer_iters=diag.outer_iters if diag is not None else 0,
                runtime_ms=runtime,
                status=diag.status if diag is not None else "closed-form",
                plan=sol.plan,
            )
        )
    return out


def _run_task(args):
    spec, value, seed = args
    config = replace(_apply_axis(spec.base_config, spec.axis, value), seed=seed)
    j = int(value) if spec.axis == "num_slots" else spec.j_default
    cells = _solve_cell(config, spec.schemes, j, spec.sca, spec.random_trials)
    return [(value, seed, cell) for cell in cells]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def run_sweep(spec: ExperimentSpec):
    """Execute the sweep and write `<output>` plus `<output stem>_summary.csv`.

    Honors IRS_WPCN_WORKERS (default 1) for process-level parallelism across
    (value, seed) cells; results are identical for any worker count.
    Returns the rows as a list of ResultRow.
    """
    tasks = [(spec, value, seed) for value in spec.values for seed in spec.seeds]
    workers = int(os.environ.get("IRS_WPCN_WORKERS", "1"))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]

    rows = []
    plans = {}
    for chunk in chunks:
        for value, seed, cell in chunk:
            plan = cell.pop("plan")
            row = ResultRow(axis=spec.axis, axis_value=float(value), seed=seed, **cell)
            rows.append(row)
            if spec.store_plans and plan is not None:
                key = f"{row.scheme}|{_fmt(row.axis_value)}|{seed}"
                plans[key + "|v0"] = plan.v0.values
                plans[key + "|uls"] = (
                    np.stack([v.values for v in plan.ul_vectors])
                    if plan.ul_vectors
                    else np.zeros((0, len(plan.v0)), dtype=complex)
                )
                plans[key + "|assignment"] = np.asarray(plan.assignment)
    rows.sort(key=lambda r: (r.scheme, r.axis_value, r.seed))

    with open(spec.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in _COLUMNS])

    stem, ext = os.path.splitext(spec.output)
    summary_path = stem + "_summary" + (ext or ".csv")
    groups = {}
    for row in rows:
        groups.setdefault((row.scheme, row.axis_value), []).append(row)
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scheme", "axis", "axis_value", "runs", "mean_throughput", "mean_tau0_s",
             "mean_harvested_energy_j", "mean_runtime_ms"]
        )
        for (scheme, value), grp in sorted(groups.items()):
            writer.writerow(
                [
                    scheme,
                    spec.axis,
                    _fmt(value),
                    len(grp),
                    _fmt(float(np.mean([r.throughput for r in grp]))),
                    _fmt(float(np.mean([r.tau0_s for r in grp]))),
                    _fmt(float(np.mean([r.harvested_energy_j for r in grp]))),
                    _fmt(float(np.mean([r.runtime_ms for r in grp]))),
                ]
            )

    if spec.store_plans:
        np.savez(stem + "_plans.npz", **plans)
    return rows
