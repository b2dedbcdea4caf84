"""Property suite: the package's claims, each checked end to end with margins.

Every check re-derives one claim from scratch on seeded instances: orderings
between schemes, small-instance oracle equivalence, upper-bound domination,
surrogate validity, convergence behavior, trend shapes, and the near-far
fairness effect.  Checks return a CheckResult carrying the measured margin,
so a report shows how much headroom each claim has, not just pass/fail.

The full suite sizes match the package's acceptance gate; `quick=True` runs
the same checks on fewer instances for a fast smoke signal.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .allocation import allocate
from .allocation_types import EffectiveRates
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
from .scenario import SystemConfig, default_config, generate_scenario
from .sdr import solve_relaxed
from .surrogates import surrogate_dl_energy, surrogate_exp_product, surrogate_quartic

_LN2 = math.log(2.0)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    metrics: dict

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{self.criterion:2d}] {flag} {self.name}: {self.detail}"


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _rng(tag: int) -> np.random.Generator:
    # suite-local streams, independent of scenario streams
    ss = np.random.SeedSequence(entropy=515377520732011331, spawn_key=(tag,))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# evidence packs


@dataclass
class _Run:
    """One solved instance with everything later checks need."""

    seed: int
    throughputs: dict
    core_seconds: float  # shared-vector and per-device solves only
    traces: list  # (label, trace tuple, status, outer_iters)
    ub_value: float
    ub_gap: float
    round_margin: float = float("nan")  # rounded minus unrounded, packB only
    nest_ratio: float = float("nan")  # general(K+2) / general(K), packB only


def _collect(sol, label, bag):
    d = sol.diagnostics
    if d is not None:
        for tr in d.traces:
            bag.append((label, tuple(tr), d.status, d.outer_iters))


def _pack_wide(config: SystemConfig, seeds) -> list:
    """N=16, K=4 instances: shared, per-device, single-reconfiguration, bound."""
    runs = []
    opts = ScaOptions()  # full restarts, the defaults the claims are made for
    for seed in seeds:
        s = generate_scenario(replace(config, num_elements=16, num_devices=4, seed=seed))
        t0 = time.perf_counter()
        static = solve_static(s, opts)
        ua = solve_user_adaptive(s, opts, warm_plan=static.plan)
        core = time.perf_counter() - t0
        g1 = solve_general(s, 1, opts, warm_plan=static.plan)
        ub = solve_relaxed(s)
        traces = []
        for sol, label in ((static, "static"), (ua, "user_adaptive"), (g1, "general_1")):
            _collect(sol, label, traces)
        runs.append(
            _Run(
                seed=seed,
                throughputs={
                    "static": static.throughput,
                    "user_adaptive": ua.throughput,
                    "general_1": g1.throughput,
                },
                core_seconds=core,
                traces=traces,
                ub_value=ub.value,
                ub_gap=ub.gap,
            )
        )
    return runs


def _pack_small(config: SystemConfig, seeds, random_trials: int) -> list:
    """N=8, K=2 instances: every scheme, rounding, nesting, bound."""
    runs = []
    opts = ScaOptions()
    for seed in seeds:
        s = generate_scenario(replace(config, num_elements=8, num_devices=2, seed=seed))
        t0 = time.perf_counter()
        static = solve_static(s, opts)
        ua = solve_user_adaptive(s, opts, warm_plan=static.plan)
        core = time.perf_counter() - t0
        ul = solve_ul_adaptive(s, opts)
        h1 = solve_hybrid(s, 1, opts, warm_plan=static.plan)
        g2 = solve_general(s, 2, opts, warm_plan=static.plan)
        g2r = round_association(s, g2)
        g4 = solve_general(s, 4, opts, warm_plan=g2.plan)
        rnd = baseline_random_phases(s, trials=random_trials)
        rnd1 = baseline_random_phases(s, trials=1)
        bare = baseline_no_irs(s)
        ub = solve_relaxed(s)
        traces = []
        for sol, label in (
            (static, "static"),
            (ua, "user_adaptive"),
            (h1, "hybrid_1"),
            (g2, "general_2"),
            (g4, "general_4"),
        ):
            _collect(sol, label, traces)
        runs.append(
            _Run(
                seed=seed,
                throughputs={
                    "static": static.throughput,
                    "ul_adaptive": ul.throughput,
                    "user_adaptive": ua.throughput,
                    "hybrid_1": h1.throughput,
                    "general_2": g2.throughput,
                    "general_2_rounded": g2r.throughput,
                    "general_4": g4.throughput,
                    "random": rnd.throughput,
                    "random_single": rnd1.throughput,
                    "no_irs": bare.throughput,
                },
                core_seconds=core,
                traces=traces,
                ub_value=ub.value,
                ub_gap=ub.gap,
                round_margin=g2r.throughput - g2.throughput,
                nest_ratio=g4.throughput / g2.throughput,
            )
        )
    return runs


def _pack_single(config: SystemConfig, seeds) -> list:
    """N=16, K=1 instances where the relaxation must be tight."""
    runs = []
    opts = ScaOptions()
    for seed in seeds:
        s = generate_scenario(replace(config, num_elements=16, num_devices=1, seed=seed))
        t0 = time.perf_counter()
        static = solve_static(s, opts)
        ua = solve_user_adaptive(s, opts, warm_plan=static.plan)
        core = time.perf_counter() - t0
        ub = solve_relaxed(s)
        traces = []
        for sol, label in ((static, "static"), (ua, "user_adaptive")):
            _collect(sol, label, traces)
        runs.append(
            _Run(
                seed=seed,
                throughputs={"static": static.throughput, "user_adaptive": ua.throughput},
                core_seconds=core,
                traces=traces,
                ub_value=ub.value,
                ub_gap=ub.gap,
            )
        )
    return runs


# ---------------------------------------------------------------------------
# criteria


def _check_1(wide) -> CheckResult:
    margins = [r.throughputs["user_adaptive"] - r.throughputs["static"] for r in wide]
    total = sum(r.core_seconds for r in wide)
    worst = min(margins)
    ok = worst >= -1e-4 and total < 300.0
    return CheckResult(
        1,
        "per-device adaptation dominates the shared design",
        ok,
        f"worst margin {worst:+.3e} bits/Hz over {len(wide)} instances, {total:.1f}s total",
        {"worst_margin": worst, "total_seconds": total, "instances": len(wide)},
    )


def _check_2(wide) -> CheckResult:
    rel = [
        abs(r.throughputs["general_1"] - r.throughputs["static"]) / r.throughputs["static"]
        for r in wide
    ]
    hits = sum(1 for v in rel if v <= 0.01)
    need = max(len(wide) - 2, 1)  # 18 of 20 at full size
    ok = hits >= need
    return CheckResult(
        2,
        "one decoupled uplink vector collapses onto the shared design",
        ok,
        f"{hits}/{len(wide)} within 1% (worst {max(rel):.2%}), need >= {need}",
        {"hits": hits, "instances": len(wide), "worst_rel": max(rel)},
    )


def _check_3(small) -> CheckResult:
    rel = [
        abs(r.throughputs["general_2"] - r.throughputs["user_adaptive"])
        / r.throughputs["user_adaptive"]
        for r in small
    ]
    round_worst = min(r.round_margin for r in small)
    ok = max(rel) <= 0.01 and round_worst >= -1e-9
    return CheckResult(
        3,
        "a full budget of uplink vectors reaches per-device adaptation",
        ok,
        f"worst gap {max(rel):.2%} over {len(small)} instances; "
        f"rounding margin >= {round_worst:+.2e}",
        {"worst_rel": max(rel), "round_worst": round_worst, "instances": len(small)},
    )


def _check_4(small) -> CheckResult:
    worst = max(r.nest_ratio for r in small)
    ok = worst <= 1.01
    return CheckResult(
        4,
        "uplink vectors beyond one per device are idle",
        ok,
        f"max ratio of budget K+2 over budget K: {worst:.6f} (cap 1.01)",
        {"worst_ratio": worst, "instances": len(small)},
    )


def _check_5(wide, small, single) -> CheckResult:
    worst = float("inf")
    for r in wide + small + single:
        ceiling = max(r.throughputs.values())
        worst = min(worst, r.ub_value - ceiling)
    gaps = [
        (r.ub_value - r.throughputs["user_adaptive"]) / r.throughputs["user_adaptive"]
        for r in single
    ]
    ok = worst >= -1e-9 and max(gaps) <= 1e-4
    return CheckResult(
        5,
        "the lifted relaxation dominates every scheme",
        ok,
        f"min slack {worst:+.3e} over {len(wide) + len(small) + len(single)} instances; "
        f"single-device gap <= {max(gaps):.2e}",
        {"min_slack": worst, "single_device_worst_gap": max(gaps)},
    )


def _grid_value(c, weights, total_time, points) -> float:
    """Nested grid search for the allocation optimum, `points` per dimension."""
    k = len(c)
    c = np.asarray(c, dtype=float)
    w = np.asarray(weights, dtype=float)
    tau0 = np.linspace(total_time / (2 * points), total_time * (1 - 1.0 / (2 * points)), points)
    best = 0.0
    if k == 1:
        t1 = total_time - tau0
        vals = w[0] * t1 * np.log1p(c[0] * tau0 / t1) / _LN2
        return float(vals.max())
    frac = np.linspace(0.0, 1.0, points)
    if k == 2:
        t_ul = (total_time - tau0)[:, None]
        a = c[None, :] * tau0[:, None]  # (points, 2)
        t1 = t_ul * frac[None, :]
        t2 = t_ul - t1
        with np.errstate(divide="ignore", invalid="ignore"):
            v = w[0] * np.where(t1 > 0, t1 * np.log1p(a[:, :1] / np.where(t1 > 0, t1, 1)), 0.0)
            v += w[1] * np.where(t2 > 0, t2 * np.log1p(a[:, 1:] / np.where(t2 > 0, t2, 1)), 0.0)
        return float(v.max()) / _LN2
    f1 = frac[:, None]
    f2 = frac[None, :]
    f3 = 1.0 - f1 - f2
    valid = f3 >= 0
    for t0 in tau0:
        t_ul = total_time - t0
        a = c * t0
        v = np.zeros((points, points))
        for coef_a, coef_w, f in ((a[0], w[0], f1), (a[1], w[1], f2), (a[2], w[2], f3)):
            t = t_ul * f
            with np.errstate(divide="ignore", invalid="ignore"):
                v += coef_w * np.where(t > 0, t * np.log1p(coef_a / np.where(t > 0, t, 1)), 0.0)
        v = np.where(valid, v, -np.inf)
        best = max(best, float(v.max()))
    return best / _LN2


def _check_6(instances: int, points: int) -> CheckResult:
    rng = _rng(6)
    worst_rel = 0.0
    worst_under = 0.0
    for i in range(instances):
        k = 1 + i % 3
        c = 10.0 ** rng.uniform(-1.5, 1.5, size=k)
        w = rng.uniform(0.5, 2.0, size=k)
        _, value = allocate(EffectiveRates(c=c, weights=w), 1.0)
        ref = _grid_value(c, w, 1.0, points)
        worst_rel = max(worst_rel, abs(value - ref) / max(ref, 1e-12))
        worst_under = min(worst_under, value - ref)
    alloc, rate = allocate(EffectiveRates(c=np.ones(1), weights=np.ones(1)), 1.0)
    tau0_err = abs(alloc.tau0 - (1.0 - 1.0 / math.e))
    rate_err = abs(rate - 0.5307)
    ok = worst_rel <= 1e-3 and worst_under >= -1e-9 and tau0_err <= 1e-6 and rate_err <= 1e-4
    return CheckResult(
        6,
        "the allocator matches a nested grid oracle",
        ok,
        f"worst rel diff {worst_rel:.2e} over {instances} instances "
        f"({points} points/dim); closed-form errors tau0 {tau0_err:.1e}, rate {rate_err:.1e}",
        {
            "worst_rel": worst_rel,
            "worst_under": worst_under,
            "tau0_err": tau0_err,
            "rate_err": rate_err,
            "instances": instances,
        },
    )


def _check_7(samples: int) -> CheckResult:
    rng = _rng(7)
    batches = 50
    per = samples // batches
    worst = {"quartic": 0.0, "dl_energy": 0.0, "exp_product": 0.0}
    tight = {"quartic": 0.0, "dl_energy": 0.0, "exp_product": 0.0}
    for _ in range(batches):
        n = int(rng.integers(2, 7))
        q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w0 = np.exp(2j * np.pi * rng.uniform(size=n))
        t0 = float(rng.uniform(0.05, 0.95))
        radius = np.sqrt(rng.uniform(size=(per, n)))
        v = radius * np.exp(2j * np.pi * rng.uniform(size=(per, n)))
        tau = 10.0 ** rng.uniform(-3, 0, size=per)
        amp2 = np.abs(v @ np.conj(q)) ** 2

        su = surrogate_quartic(q, w0, t0)
        truth = tau * amp2**2
        bound = (v @ np.conj(su.lin)).real - su.inv_sqrt_coef / np.sqrt(tau) - su.offset
        scale = np.maximum(1.0, np.abs(truth))
        worst["quartic"] = max(worst["quartic"], float(((bound - truth) / scale).max()))
        tight["quartic"] = max(
            tight["quartic"], abs(su.value(w0, t0) - t0 * abs(np.vdot(q, w0)) ** 4)
        )

        sd = surrogate_dl_energy(q, w0, t0)
        truth = tau * amp2
        bound = (v @ np.conj(sd.lin)).real - sd.inv_coef / tau
        scale = np.maximum(1.0, np.abs(truth))
        worst["dl_energy"] = max(worst["dl_energy"], float(((bound - truth) / scale).max()))
        tight["dl_energy"] = max(
            tight["dl_energy"], abs(sd.value(w0, t0) - t0 * abs(np.vdot(q, w0)) ** 2)
        )

        x0, y0 = rng.uniform(-4, 4, size=2)
        se = surrogate_exp_product(x0, y0)
        x = rng.uniform(-5, 5, size=per)
        y = rng.uniform(-5, 5, size=per)
        truth = np.exp(x + y)
        bound = se.value(x, y)
        scale = np.maximum(1.0, truth)
        worst["exp_product"] = max(
            worst["exp_product"], float(((bound - truth) / scale).max())
        )
        tight["exp_product"] = max(
            tight["exp_product"], abs(se.value(x0, y0) - math.exp(x0 + y0))
        )
    ok = max(worst.values()) <= 1e-9 and max(tight.values()) <= 1e-9
    return CheckResult(
        7,
        "every convex surrogate lower-bounds its target and is tight",
        ok,
        f"worst violation {max(worst.values()):.2e}, worst expansion error "
        f"{max(tight.values()):.2e} over {batches * per} samples each",
        {"worst": worst, "tightness": tight, "samples": batches * per},
    )


def _check_8(wide, small, single) -> CheckResult:
    worst_drop = 0.0
    max_rounds = 0  # per-restart refinement rounds; each trace starts at round 0
    capped = 0  # exploratory restarts that used the full budget (winner still converged)
    bad_status = []
    n_traces = 0
    for r in wide + small + single:
        for label, trace, status, _ in r.traces:
            n_traces += 1
            if len(trace) > 1:
                worst_drop = min(worst_drop, float(np.diff(trace).min()))
            max_rounds = max(max_rounds, len(trace) - 1)
            capped += len(trace) - 1 >= 50
            if status != "optimal":
                bad_status.append((r.seed, label, status))
    ok = worst_drop >= -1e-9 and max_rounds <= 50 and not bad_status
    return CheckResult(
        8,
        "refinement traces never decrease and converge",
        ok,
        f"worst step {worst_drop:+.2e} over {n_traces} traces, max {max_rounds} rounds "
        f"per restart ({capped} capped), {len(bad_status)} non-converged",
        {
            "worst_drop": worst_drop,
            "max_rounds": max_rounds,
            "capped_restarts": capped,
            "bad": bad_status,
        },
    )


def _check_9(config: SystemConfig, quick: bool, small) -> CheckResult:
    opts = ScaOptions(restarts=2)
    seeds = (0, 1) if quick else (0, 1, 2)
    powers = (30.0, 40.0) if quick else (30.0, 35.0, 40.0, 45.0)
    sizes = (8, 16) if quick else (8, 16, 24, 32)
    # budgets end past the device count so the plateau step exists
    slots_k, budgets = ((2, (1, 2, 4)) if quick else (4, (1, 2, 4, 6)))
    n_within = sum(1 for j in budgets if j <= slots_k)

    def static_for(**over):
        out = []
        for seed in seeds:
            s = generate_scenario(replace(config, seed=seed, **over))
            sol = solve_static(s, opts)
            # equal weights: every device transmits and spends its full harvest
            harvested = float(np.sum(sol.alloc.e))
            out.append((sol.throughput, sol.alloc.tau0, harvested))
        return np.mean(np.asarray(out), axis=0)

    base = dict(num_elements=16, num_devices=4)
    power_curve = [
        static_for(hap_power_w=10.0 ** ((p - 30.0) / 10.0), **base)[0] for p in powers
    ]
    size_rows = [static_for(num_elements=n, num_devices=4) for n in sizes]
    size_tp = [row[0] for row in size_rows]
    size_tau0 = [row[1] for row in size_rows]
    size_harv = [row[2] for row in size_rows]

    slot_tp = []
    slot_tau0 = []
    for seed in seeds:
        s = generate_scenario(replace(config, num_elements=8, num_devices=slots_k, seed=seed))
        warm = solve_static(s, opts).plan
        tps, taus = [], []
        for j in budgets:
            sol = solve_general(s, j, opts, warm_plan=warm)
            warm = sol.plan
            tps.append(sol.throughput)
            taus.append(sol.alloc.tau0)
        slot_tp.append(tps)
        slot_tau0.append(taus)
    slot_tp = np.asarray(slot_tp).mean(axis=0)
    slot_tau0 = np.asarray(slot_tau0).mean(axis=0)

    gain_static = np.mean([r.throughputs["static"] - r.throughputs["no_irs"] for r in small])
    gain_random = np.mean(
        [r.throughputs["random_single"] - r.throughputs["no_irs"] for r in small]
    )

    checks = {
        "throughput_up_in_power": bool(np.all(np.diff(power_curve) > 0)),
        "throughput_up_in_elements": bool(np.all(np.diff(size_tp) > 0)),
        "tau0_down_in_elements": bool(np.all(np.diff(size_tau0) < 0)),
        "harvested_up_in_elements": bool(np.all(np.diff(size_harv) > 0)),
        "throughput_nondecreasing_in_budget": bool(np.all(np.diff(slot_tp) >= -1e-9)),
        "budget_plateau_at_devices": bool(slot_tp[-1] <= 1.01 * slot_tp[n_within - 1]),
        "tau0_down_in_budget": bool(np.all(np.diff(slot_tau0[:n_within]) < 0)),
        "random_gain_negligible": bool(gain_random <= 0.5 * gain_static),
    }
    ok = all(checks.values())
    failing = [k for k, v in checks.items() if not v]
    return CheckResult(
        9,
        "mean curves reproduce the expected shapes",
        ok,
        ("all 8 trend shapes hold" if ok else f"failing: {failing}")
        + f"; random gain fraction {gain_random / max(gain_static, 1e-300):.2f}",
        {
            "checks": checks,
            "power_curve": power_curve,
            "size_throughput": size_tp,
            "size_tau0": size_tau0,
            "size_harvested": size_harv,
            "slot_throughput": slot_tp,
            "slot_tau0": slot_tau0,
            "gain_static": float(gain_static),
            "gain_random_single": float(gain_random),
        },
    )


def _check_10(config: SystemConfig, quick: bool) -> CheckResult:
    seeds = (0, 1) if quick else (0, 1, 2, 3, 4)
    opts = ScaOptions(restarts=3)
    far_rel, near_rel = [], []
    for seed in seeds:
        cfg = replace(
            config,
            num_elements=16,
            num_devices=2,
            device_positions=((7.0, 0.0, 0.0), (10.0, 0.0, 0.0)),
            irs_pos=(10.0, 0.0, 2.0),  # mounted by the far device
            seed=seed,
        )
        s = generate_scenario(cfg)
        ua = solve_user_adaptive(s, opts)
        bare = baseline_no_irs(s)
        near_rel.append(ua.device_rates[0] / bare.device_rates[0] - 1.0)
        far_rel.append(ua.device_rates[1] / bare.device_rates[1] - 1.0)
    far_mean = float(np.mean(far_rel))
    near_mean = float(np.mean(near_rel))
    ok = far_mean > near_mean
    return CheckResult(
        10,
        "a surface by the far device mitigates the near-far gap",
        ok,
        f"far device gains {far_mean:+.1%}, near device {near_mean:+.1%} "
        f"over {len(seeds)} drops",
        {"far_mean_rel_gain": far_mean, "near_mean_rel_gain": near_mean},
    )


def _check_11(samples: int) -> CheckResult:
    rng = _rng(11)
    a = rng.uniform(-3.0, 3.0, size=samples)
    b = rng.uniform(-3.0, 3.0, size=samples)
    b[: samples // 10] = a[: samples // 10]  # force the equality branch
    lhs = 1.0 + a * b
    rhs = np.sqrt((1.0 + a**2) * (1.0 + b**2))
    diff = rhs - lhs
    worst = float(diff.min())
    eq = diff[np.abs(a - b) <= 1e-9]
    strict = diff[np.abs(a - b) >= 1e-3]
    ok = worst >= -1e-9 and float(eq.max(initial=0.0)) <= 1e-9 and float(strict.min(initial=1.0)) > 0
    return CheckResult(
        11,
        "the product-of-roots inequality holds with equality only on the diagonal",
        ok,
        f"min slack {worst:+.2e}, equality error {float(eq.max(initial=0.0)):.1e}, "
        f"{samples} draws",
        {
            "min_slack": worst,
            "equality_error": float(eq.max(initial=0.0)),
            "strict_min": float(strict.min(initial=1.0)),
            "samples": samples,
        },
    )


def run_property_suite(
    config: SystemConfig | None = None,
    quick: bool = False,
    report_path: str | None = None,
) -> list:
    """Run all checks; optionally write a machine-readable JSON report.

    Returns the list of CheckResult in criterion order.  `config` seeds the
    instance geometry and powers (sizes are pinned per check); None uses the
    package defaults.
    """
    config = config if config is not None else default_config()
    started = time.perf_counter()
    n_wide, n_small, n_single = (4, 4, 2) if quick else (20, 20, 5)
    wide = _pack_wide(config, range(100, 100 + n_wide))
    small = _pack_small(config, range(200, 200 + n_small), random_trials=100)
    single = _pack_single(config, range(300, 300 + n_single))

    results = [
        _check_1(wide),
        _check_2(wide),
        _check_3(small),
        _check_4(small),
        _check_5(wide, small, single),
        _check_6(instances=20 if quick else 100, points=100 if quick else 200),
        _check_7(samples=10_000 if quick else 100_000),
        _check_8(wide, small, single),
        _check_9(config, quick, small),
        _check_10(config, quick),
        _check_11(samples=10_000 if quick else 100_000),
    ]

    if report_path is not None:
        payload = {
            "passed": all(r.passed for r in results),
            "quick": quick,
            "elapsed_s": time.perf_counter() - started,
            "criteria": [_jsonable(asdict(r)) for r in results],
        }
        with open(report_path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return results
