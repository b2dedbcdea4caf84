"""Joint phase-shift and time/energy optimizers for the harvest-then-transmit frame.

All schedules run the same safeguarded successive convex refinement loop: each
round replaces the nonconvex coupling terms with tangent minorants expanded at
the current iterate, the interior-point kernel maximizes the resulting concave
subproblem, and the step is accepted only if the exact relaxed objective
improves.  Accepted-objective traces are therefore nondecreasing by
construction, and the previous iterate is always strictly feasible for the
re-expanded subproblem (tangent minorants never exceed the true terms), so no
phase-1 feasibility search is ever needed.

Schedules:
- static: one reflection pattern held for the whole frame
- hybrid: closed-form per-device patterns for a chosen device subset, the
  shared pattern for everyone else
- user-adaptive: a dedicated pattern for every device (hybrid, full subset)
- general: a budget of J uplink patterns with free device-to-slot association
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .allocation import (
    EffectiveRates,
    allocate,
    finish_solution,
    inner_split,
    weighted_throughput,
)
from .channel import PhaseVector, align_phases, project_unit_modulus
from .kernel import ConvexSubproblem, InfeasibleStartError, solve_subproblem
from .plan import PhasePlan, SolveDiagnostics, Solution
from .scenario import Scenario, stream
from .surrogates import surrogate_dl_energy, surrogate_quartic

__all__ = [
    "ScaOptions",
    "solve_static",
    "solve_ul_adaptive",
    "solve_user_adaptive",
    "solve_hybrid",
    "solve_general",
    "round_association",
    "baseline_random_phases",
    "baseline_no_irs",
]

_TINY = 1e-280          # squared-gain threshold below which a tangent is unusable
_SHRINK = 0.999         # pull unit-modulus starts strictly inside the disks


@dataclass(frozen=True)
class ScaOptions:
    """Knobs for the successive-refinement drivers."""

    max_outer_iters: int = 50      # refinement rounds per restart
    convergence_tol: float = 1e-6  # stop once the relative gain drops below this
    restarts: int = 5              # independent starting reflection patterns
    subproblem_tol: float = 1e-6   # interior-point duality-gap target
    trace_csv: str | None = None   # optional CSV dump of accepted objectives

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.convergence_tol < 0 or self.subproblem_tol <= 0:
            raise ValueError("tolerances must be positive")


class _Workspace:
    """Per-scenario precomputation shared by every scheme."""

    def __init__(self, s: Scenario):
        self.s = s
        self.K = s.num_devices
        self.N1 = s.q_bar.shape[1]
        self.Qc = np.conj(s.q_bar)  # row k maps v to q_bar_k^H v
        pairs = [align_phases(0.0, s.q_bar[k]) for k in range(self.K)]
        self.gamma = np.array([g for _, g in pairs])  # best per-device gain
        self.aligned = [project_unit_modulus(v.values, augmented=True) for v, _ in pairs]
        self.active = [k for k in range(self.K) if self.gamma[k] > 0 and s.weights[k] > 0]
        self.gamma_scale = float(self.gamma.max()) if self.active else 0.0
        if self.gamma_scale > 0:
            self.q_hat = s.q_bar / np.sqrt(self.gamma_scale)
        else:
            self.q_hat = s.q_bar.copy()

    def gains(self, v: np.ndarray) -> np.ndarray:
        return np.abs(self.Qc @ v) ** 2


def _eval_split(ws: _Workspace, g0: np.ndarray, gul: np.ndarray, tau0: float) -> float:
    """Exact relaxed objective at fixed gains and charging time.

    The inner time split is re-optimized exactly, so this is the value the
    safeguard compares between refinement rounds.
    """
    s = ws.s
    if not 0.0 < tau0 < s.total_time:
        return 0.0
    a = s.eta * s.hap_power * tau0 * g0 * gul / s.noise_power
    tau = inner_split(a, s.total_time - tau0, s.weights)
    return weighted_throughput(a, tau, s.weights)


@dataclass
class _VecState:
    """Iterate of a shared-vector run (static / hybrid / user-adaptive)."""

    w0: np.ndarray        # expansion vector (raw, possibly inside the disks)
    tau0: float           # expansion charging time
    surrs: list           # per-run-device tangents backing the constraint rows
    start: np.ndarray | None


class _SharedVectorScheme:
    """One optimized shared vector; a device subset may get closed-form
    dedicated uplink patterns (their uplink gain is then the aligned maximum).

    Subproblem layout: x = [tau0, t_1..t_Ka, S_1..S_Ka, Re v, Im v] where S_k
    is the scaled product of harvested energy and uplink gain for device k.
    """

    def __init__(self, ws: _Workspace, dedicated=()):
        self.ws = ws
        self.dedicated = tuple(int(d) for d in dedicated)
        self._ded = set(self.dedicated)
        self.run: list[int] = []

    @property
    def ready(self) -> bool:
        return bool(self.run)

    def _tangents(self, w0, tau0, prev):
        out = []
        for i, k in enumerate(self.run):
            usable = np.abs(np.vdot(self.ws.q_hat[k], w0)) ** 2 > _TINY
            if not usable and prev is not None:
                out.append(prev[i])  # orthogonal iterate: keep the last tangent
                continue
            if k in self._ded:
                out.append(surrogate_dl_energy(self.ws.q_hat[k], w0, tau0))
            else:
                out.append(surrogate_quartic(self.ws.q_hat[k], w0, tau0))
        return out

    def initial(self, init) -> _VecState:
        ws, s = self.ws, self.ws.s
        T = s.total_time
        w0 = np.asarray(init, dtype=complex)
        self.run = [k for k in ws.active if np.abs(np.vdot(ws.q_hat[k], w0)) ** 2 > _TINY]
        if not self.run:
            return _VecState(w0=w0, tau0=0.5 * T, surrs=[], start=None)
        g0 = ws.gains(w0)
        gul = np.array([ws.gamma[k] if k in self._ded else g0[k] for k in range(ws.K)])
        c = s.eta * s.hap_power * g0 * gul / s.noise_power
        warm, _ = allocate(EffectiveRates(c, s.weights), T)
        tau0 = max(float(warm.tau0), 0.02 * T)
        floor = 0.02 * T / len(self.run)
        t = np.array([max(float(warm.t[k, 0]), floor) for k in self.run])
        scale = (1.0 - 1e-3) * T / (tau0 + t.sum())
        tau0 *= scale
        t *= scale
        surrs = self._tangents(w0, tau0, prev=None)
        v_start = _SHRINK * w0
        S = np.array([0.5 * su.value(v_start, tau0) / T for su in surrs])
        start = np.concatenate([[tau0], t, S, v_start.real, v_start.imag])
        return _VecState(w0=w0, tau0=tau0, surrs=surrs, start=start)

    def build(self, state: _VecState):
        ws, s = self.ws, self.ws.s
        T = s.total_time
        Ka = len(self.run)
        prob = ConvexSubproblem(1 + 2 * Ka, ws.N1)
        re0, im0 = prob.idx_re(0), prob.idx_im(0)
        for i, k in enumerate(self.run):
            su = state.surrs[i]
            t_idx, s_idx = 1 + i, 1 + Ka + i
            if k in self._ded:
                s_scale = s.eta[k] * s.hap_power * ws.gamma[k] * ws.gamma_scale * T
                beta, power, ub = su.inv_coef / T, 1.0, 0.0
            else:
                s_scale = s.eta[k] * s.hap_power * ws.gamma_scale**2 * T
                beta, power, ub = su.inv_sqrt_coef / T, 0.5, -su.offset / T
            prob.add_perspective(t_idx, s_idx, weight=float(s.weights[k]),
                                 noise=s.noise_power / s_scale)
            row = np.zeros(prob.n)
            row[s_idx] = 1.0
            row[re0:re0 + ws.N1] = -su.lin.real / T
            row[im0:im0 + ws.N1] = -su.lin.imag / T
            prob.add_ratio(beta=beta, denom_index=0, power=power, coeffs=row, ub=ub)
        trow = np.zeros(prob.n)
        trow[0] = 1.0
        trow[1:1 + Ka] = 1.0
        prob.add_linear_ineq(trow, T)
        for idx in range(ws.N1):
            prob.add_disk(idx)
        prob.add_nonneg(0, floor=1e-12)
        return prob, state.start

    def unpack(self, x: np.ndarray, state: _VecState) -> _VecState:
        ws = self.ws
        re0 = 1 + 2 * len(self.run)
        v = x[re0:re0 + ws.N1] + 1j * x[re0 + ws.N1:re0 + 2 * ws.N1]
        tau0 = float(x[0])
        surrs = self._tangents(v, tau0, prev=state.surrs)
        return _VecState(w0=v, tau0=tau0, surrs=surrs, start=x.copy())

    def evaluate(self, state: _VecState) -> float:
        ws = self.ws
        g0 = ws.gains(state.w0)
        gul = np.array([ws.gamma[k] if k in self._ded else g0[k] for k in range(ws.K)])
        return _eval_split(ws, g0, gul, state.tau0)

    def plan(self, state: _VecState) -> PhasePlan:
        ws = self.ws
        v0 = project_unit_modulus(state.w0, augmented=True)
        uls = tuple(ws.aligned[d] for d in self.dedicated)
        assignment = np.zeros(ws.K, dtype=int)
        for pos, d in enumerate(self.dedicated):
            assignment[d] = pos + 1
        return PhasePlan(v0=v0, ul_vectors=uls, assignment=assignment)


@dataclass
class _GenState:
    """Iterate of a general run: J+1 vectors plus log-domain expansion data."""

    vecs: list            # J+1 raw vectors, slot 0 is the downlink
    tau0: float
    xhat: np.ndarray      # per-pair log-energy expansion point
    yhat: np.ndarray      # per-pair log-gain expansion point
    dl_surrs: list        # per-run-device harvested-energy tangents
    ul_rows: list         # per-pair (ghat, const) linearizing the uplink gain
    start: np.ndarray | None


class _GeneralScheme:
    """J uplink patterns with free device-to-slot association.

    Subproblem layout: x = [tau0 | t_p | e_p | S_p | x_p | y_p | Re z | Im z]
    over live (device, slot) pairs p; z stacks the J+1 vectors slot-major.
    The product of energy and gain is handled in the log domain: e^x <= e,
    e^y <= linearized gain, and S <= exp(xhat+yhat)(1 + x + y - xhat - yhat).
    """

    def __init__(self, ws: _Workspace, num_slots: int):
        self.ws = ws
        self.J = int(num_slots)
        self.run: list[int] = []
        self.pairs: list[tuple[int, int, int]] = []  # (run position, device, slot)

    @property
    def ready(self) -> bool:
        return bool(self.pairs)

    def _indices(self):
        P = len(self.pairs)
        return (1, 1 + P, 1 + 2 * P, 1 + 3 * P, 1 + 4 * P, 1 + 5 * P)

    def _re_block(self, j):  # packed offset of slot j's real parts
        t0 = 1 + 5 * len(self.pairs)
        return t0 + j * self.ws.N1

    def _im_block(self, j):
        t0 = 1 + 5 * len(self.pairs)
        return t0 + (self.J + 1) * self.ws.N1 + j * self.ws.N1

    def _ul_tangent(self, k, w):
        qw = np.vdot(self.ws.q_hat[k], w)
        return qw * self.ws.q_hat[k], float(np.abs(qw) ** 2)

    def initial(self, init) -> _GenState:
        vectors, warm_sol = init
        ws, s = self.ws, self.ws.s
        T = s.total_time
        vecs = [np.asarray(v, dtype=complex) for v in vectors]
        amat = np.stack([np.abs(np.conj(ws.q_hat) @ v) ** 2 for v in vecs], axis=1)
        cand = [k for k in ws.active if amat[k, 0] > _TINY]
        self.run = [k for k in cand if np.any(amat[k, 1:] > _TINY)]
        self.pairs = [
            (i, k, j)
            for i, k in enumerate(self.run)
            for j in range(1, self.J + 1)
            if amat[k, j] > _TINY
        ]
        if not self.pairs:
            return _GenState(vecs=vecs, tau0=0.5 * T, xhat=np.empty(0), yhat=np.empty(0),
                             dl_surrs=[], ul_rows=[], start=None)
        P = len(self.pairs)
        tau0 = max(float(warm_sol.alloc.tau0), 0.02 * T)
        t_dev = warm_sol.alloc.t.sum(axis=1)
        best_slot = {}
        for i, k, j in self.pairs:
            if k not in best_slot or amat[k, j] > amat[k, best_slot[k]]:
                best_slot[k] = j
        floor = 0.01 * T / P
        t = np.full(P, floor)
        for p, (i, k, j) in enumerate(self.pairs):
            if j == best_slot[k]:
                t[p] = max(0.9 * float(t_dev[k]), floor)
        scale = (1.0 - 1e-3) * T / (tau0 + t.sum())
        tau0 *= scale
        t *= scale
        dl_surrs = [surrogate_dl_energy(ws.q_hat[k], vecs[0], tau0) for k in self.run]
        ul_rows = [self._ul_tangent(k, vecs[j]) for _, k, j in self.pairs]
        v0_start = _SHRINK * vecs[0]
        budget = np.array([max(su.value(v0_start, tau0) / T, 0.0) for su in dl_surrs])
        t_sum = np.zeros(len(self.run))
        for p, (i, _, _) in enumerate(self.pairs):
            t_sum[i] += t[p]
        e = np.empty(P)
        for p, (i, _, _) in enumerate(self.pairs):
            e[p] = 0.8 * budget[i] * t[p] / t_sum[i]
        xhat = np.log(e) - 0.05
        yhat = np.array([np.log(0.95 * (2.0 * _SHRINK - 1.0) * a) for _, a in ul_rows])
        S = 0.9 * np.exp(xhat + yhat)
        blocks = [v0_start] + [_SHRINK * v for v in vecs[1:]]
        z = np.concatenate(blocks)
        start = np.concatenate([[tau0], t, e, S, xhat, yhat, z.real, z.imag])
        return _GenState(vecs=vecs, tau0=tau0, xhat=xhat, yhat=yhat,
                         dl_surrs=dl_surrs, ul_rows=ul_rows, start=start)

    def build(self, state: _GenState):
        ws, s = self.ws, self.ws.s
        T = s.total_time
        P = len(self.pairs)
        o_t, o_e, o_s, o_x, o_y, _ = self._indices()
        n_real = 1 + 5 * P
        prob = ConvexSubproblem(n_real, (self.J + 1) * ws.N1)
        n = prob.n
        for p, (i, k, j) in enumerate(self.pairs):
            s_scale = s.eta[k] * s.hap_power * ws.gamma_scale**2 * T
            prob.add_perspective(o_t + p, o_s + p, weight=float(s.weights[k]),
                                 noise=s.noise_power / s_scale)
            prob.add_exp(lhs={o_x + p: 1.0}, lhs_const=0.0, rhs={o_e + p: 1.0}, rhs_const=0.0)
            ghat, const = state.ul_rows[p]
            row = np.zeros(n)
            rb, ib = self._re_block(j), self._im_block(j)
            row[rb:rb + ws.N1] = 2.0 * ghat.real
            row[ib:ib + ws.N1] = 2.0 * ghat.imag
            prob.add_exp(lhs={o_y + p: 1.0}, lhs_const=0.0, rhs=row, rhs_const=-const)
            big_e = float(np.exp(state.xhat[p] + state.yhat[p]))
            prob.add_linear_ineq({o_s + p: 1.0, o_x + p: -big_e, o_y + p: -big_e},
                                 big_e * (1.0 - state.xhat[p] - state.yhat[p]))
            prob.add_nonneg(o_e + p, floor=0.0)
        for i, k in enumerate(self.run):
            su = state.dl_surrs[i]
            row = np.zeros(n)
            for p, (ip, _, _) in enumerate(self.pairs):
                if ip == i:
                    row[o_e + p] = 1.0
            rb, ib = self._re_block(0), self._im_block(0)
            row[rb:rb + ws.N1] = -su.lin.real / T
            row[ib:ib + ws.N1] = -su.lin.imag / T
            prob.add_ratio(beta=su.inv_coef / T, denom_index=0, power=1.0, coeffs=row, ub=0.0)
        trow = np.zeros(n)
        trow[0] = 1.0
        trow[o_t:o_t + P] = 1.0
        prob.add_linear_ineq(trow, T)
        for idx in range((self.J + 1) * ws.N1):
            prob.add_disk(idx)
        prob.add_nonneg(0, floor=1e-12)
        return prob, state.start

    def unpack(self, x: np.ndarray, state: _GenState) -> _GenState:
        ws = self.ws
        P = len(self.pairs)
        _, o_e, _, o_x, o_y, o_z = self._indices()
        tau0 = float(x[0])
        vecs = []
        for j in range(self.J + 1):
            rb, ib = self._re_block(j), self._im_block(j)
            vecs.append(x[rb:rb + ws.N1] + 1j * x[ib:ib + ws.N1])
        dl_surrs = []
        for i, k in enumerate(self.run):
            if np.abs(np.vdot(ws.q_hat[k], vecs[0])) ** 2 > _TINY:
                dl_surrs.append(surrogate_dl_energy(ws.q_hat[k], vecs[0], tau0))
            else:
                dl_surrs.append(state.dl_surrs[i])
        ul_rows = []
        for p, (_, k, j) in enumerate(self.pairs):
            ghat, const = self._ul_tangent(k, vecs[j])
            ul_rows.append((ghat, const) if const > _TINY else state.ul_rows[p])
        return _GenState(vecs=vecs, tau0=tau0, xhat=x[o_x:o_x + P].copy(),
                         yhat=x[o_y:o_y + P].copy(), dl_surrs=dl_surrs,
                         ul_rows=ul_rows, start=x.copy())

    def evaluate(self, state: _GenState) -> float:
        ws = self.ws
        all_gains = np.stack([ws.gains(v) for v in state.vecs], axis=1)  # (K, J+1)
        g0 = all_gains[:, 0]
        gul = all_gains[:, 1:].max(axis=1)  # devices pick among the J uplink patterns
        return _eval_split(ws, g0, gul, state.tau0)

    def plan(self, state: _GenState) -> PhasePlan:
        ws = self.ws
        proj = [project_unit_modulus(v, augmented=True) for v in state.vecs]
        gains = np.stack([ws.gains(p.values) for p in proj], axis=1)
        assignment = 1 + np.argmax(gains[:, 1:], axis=1)  # ties go to the lower slot
        return PhasePlan(v0=proj[0], ul_vectors=tuple(proj[1:]), assignment=assignment)


def _sca_run(scheme, state, options: ScaOptions):
    """Safeguarded refinement loop: returns the best accepted iterate."""
    f_best = scheme.evaluate(state)
    trace = [f_best]
    iters = failures = 0
    converged = False
    for _ in range(options.max_outer_iters):
        prob, start = scheme.build(state)
        try:
            x, report = solve_subproblem(prob, start, options.subproblem_tol)
        except InfeasibleStartError:
            failures += 1
            break
        iters += 1
        if report.status == "numerical-failure":
            failures += 1
            break
        new_state = scheme.unpack(x, state)
        f_new = scheme.evaluate(new_state)
        if f_new < f_best:
            converged = True  # the surrogate step cannot improve the exact value
            break
        gain = f_new - f_best
        state, f_best = new_state, f_new
        trace.append(f_new)
        if gain <= options.convergence_tol * max(1.0, abs(f_best)):
            converged = True
            break
    return state, trace, iters, failures, converged


def _write_trace_csv(path, traces):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["restart", "iteration", "objective"])
        for r, tr in enumerate(traces):
            for i, val in enumerate(tr):
                writer.writerow([r, i, f"{val:.12g}"])


def _drive(s: Scenario, factory, inits, options: ScaOptions, note: str) -> Solution:
    tic = time.perf_counter()
    traces, conv_flags, candidates = [], [], []
    total_iters = total_failures = 0
    for r, init in enumerate(inits):
        scheme = factory()
        state = scheme.initial(init)
        candidates.append((finish_solution(s, scheme.plan(state)), r))
        if scheme.ready:
            state, trace, iters, fails, conv = _sca_run(scheme, state, options)
            candidates.append((finish_solution(s, scheme.plan(state)), r))
        else:
            trace, iters, fails, conv = [scheme.evaluate(state)], 0, 0, True
        traces.append(tuple(trace))
        conv_flags.append(conv)
        total_iters += iters
        total_failures += fails
    best_sol, best_r = max(candidates, key=lambda c: c[0].throughput)
    if options.trace_csv:
        _write_trace_csv(options.trace_csv, traces)
    status = "optimal" if conv_flags[best_r] else "max-iters"
    if total_failures and not conv_flags[best_r]:
        status = "numerical-failure"
    diag = SolveDiagnostics(
        traces=tuple(traces),
        best_restart=best_r,
        outer_iters=total_iters,
        status=status,
        subproblem_failures=total_failures,
        runtime_s=time.perf_counter() - tic,
        notes=note,
    )
    return replace(best_sol, diagnostics=diag)


def _static_inits(ws: _Workspace, options: ScaOptions):
    """Strongest-device alignment first, then seeded random patterns."""
    k_star = int(np.argmax(ws.gamma))
    inits = [ws.aligned[k_star].values]
    n = ws.N1 - 1
    for r in range(1, options.restarts):
        rng = stream(ws.s.config.seed, "sca_restart", r)
        phases = rng.uniform(0.0, 2.0 * np.pi, n)
        inits.append(np.concatenate([np.exp(1j * phases), [1.0 + 0.0j]]))
    return inits


def _trivial_plan(s: Scenario) -> PhasePlan:
    v0 = PhaseVector(np.ones(s.q_bar.shape[1], dtype=complex), augmented=True)
    return PhasePlan(v0=v0, ul_vectors=(), assignment=np.zeros(s.num_devices, dtype=int))


def solve_static(scenario: Scenario, options: ScaOptions | None = None) -> Solution:
    """One reflection pattern for the whole frame, multi-start refined."""
    options = options or ScaOptions()
    ws = _Workspace(scenario)
    if not ws.active:
        return finish_solution(scenario, _trivial_plan(scenario))
    return _drive(scenario, lambda: _SharedVectorScheme(ws), _static_inits(ws, options),
                  options, note="static")


def solve_ul_adaptive(scenario: Scenario, options: ScaOptions | None = None) -> Solution:
    """Single uplink re-configuration allowed; provably collapses onto the
    static optimum, so this reports the static solution relabeled with an
    explicit (identical) uplink slot."""
    base = solve_static(scenario, options)
    plan = PhasePlan(
        v0=base.plan.v0,
        ul_vectors=(base.plan.v0,),
        assignment=np.ones(scenario.num_devices, dtype=int),
    )
    diag = replace(base.diagnostics, notes=base.diagnostics.notes + "; relabeled uplink slot")
    return finish_solution(scenario, plan, diagnostics=diag)


def _solve_shared(scenario, options, dedicated, warm_plan, note):
    options = options or ScaOptions()
    ws = _Workspace(scenario)
    if not ws.active:
        return finish_solution(scenario, _trivial_plan(scenario))
    if warm_plan is None:
        warm_plan = solve_static(scenario, options).plan
    init = np.asarray(warm_plan.v0.values, dtype=complex)
    return _drive(scenario, lambda: _SharedVectorScheme(ws, dedicated), [init], options, note)


def solve_user_adaptive(scenario: Scenario, options: ScaOptions | None = None,
                        warm_plan: PhasePlan | None = None) -> Solution:
    """Dedicated aligned uplink pattern for every device; the shared vector
    then only serves the downlink charging phase."""
    dedicated = tuple(range(scenario.num_devices))
    return _solve_shared(scenario, options, dedicated, warm_plan, note="user-adaptive")


def solve_hybrid(scenario: Scenario, num_dedicated: int,
                 options: ScaOptions | None = None,
                 warm_plan: PhasePlan | None = None) -> Solution:
    """Dedicated aligned patterns for the `num_dedicated` strongest devices,
    the shared pattern for the rest."""
    K = scenario.num_devices
    if not 0 <= num_dedicated <= K:
        raise ValueError(f"num_dedicated must lie in [0, {K}]")
    if num_dedicated == 0:
        return solve_static(scenario, options)
    ws = _Workspace(scenario)
    order = np.argsort(-ws.gamma, kind="stable")
    dedicated = tuple(int(d) for d in order[:num_dedicated])
    return _solve_shared(scenario, options, dedicated, warm_plan,
                         note=f"hybrid dedicated={num_dedicated}")


def solve_general(scenario: Scenario, num_slots: int,
                  options: ScaOptions | None = None,
                  warm_plan: PhasePlan | None = None) -> Solution:
    """A budget of `num_slots` uplink patterns with optimized association.

    Passing the plan of a previous solve with fewer slots warm-nests the
    search, which keeps throughput nondecreasing in the slot budget.
    """
    if num_slots < 0:
        raise ValueError("num_slots must be nonnegative")
    if num_slots == 0:
        return solve_static(scenario, options)
    options = options or ScaOptions()
    ws = _Workspace(scenario)
    if not ws.active:
        return finish_solution(scenario, _trivial_plan(scenario))
    if warm_plan is None:
        warm_sol = solve_static(scenario, options)
        warm_plan = warm_sol.plan
    else:
        warm_sol = finish_solution(scenario, warm_plan)
    v0 = np.asarray(warm_plan.v0.values, dtype=complex)
    kept = [np.asarray(u.values, dtype=complex) for u in warm_plan.ul_vectors[:num_slots]]
    order = np.argsort(-ws.gamma, kind="stable")
    # two fill-ins for the missing slots: copies of the downlink pattern (the
    # static point stays reachable, so the slot budget never hurts) and
    # per-device alignments by strength (the user-adaptive end of the range)
    inits = []
    copies = kept + [v0.copy() for _ in range(num_slots - len(kept))]
    inits.append(([v0] + copies, warm_sol))
    if len(kept) < num_slots:
        aligned = list(kept)
        pos = 0
        while len(aligned) < num_slots:
            aligned.append(ws.aligned[int(order[pos % ws.K])].values)
            pos += 1
        inits.append(([v0] + aligned, warm_sol))
    return _drive(scenario, lambda: _GeneralScheme(ws, num_slots), inits, options,
                  note=f"general slots={num_slots}")


def round_association(scenario: Scenario, solution: Solution) -> Solution:
    """Send each device to its best-gain slot and re-optimize the allocation.

    Re-solving the time/energy split after pooling can only help, so the
    result never falls below the input solution.
    """
    plan = solution.plan
    if plan.num_slots == 1:
        return solution
    ws = _Workspace(scenario)
    gains = np.stack(
        [ws.gains(plan.vector_for_slot(j).values) for j in range(1, plan.num_slots)], axis=1
    )
    assignment = 1 + np.argmax(gains, axis=1)
    rounded = PhasePlan(v0=plan.v0, ul_vectors=plan.ul_vectors, assignment=assignment)
    diag = replace(solution.diagnostics, notes=solution.diagnostics.notes + "; rounded")
    out = finish_solution(scenario, rounded, diagnostics=diag)
    return out if out.throughput >= solution.throughput else solution


def baseline_random_phases(scenario: Scenario, trials: int = 100) -> Solution:
    """Best of `trials` uniformly random static reflection patterns."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = stream(scenario.config.seed, "baseline_random")
    n = scenario.num_elements
    zeros = np.zeros(scenario.num_devices, dtype=int)
    best = None
    for _ in range(trials):
        values = np.concatenate([np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n)), [1.0 + 0.0j]])
        plan = PhasePlan(v0=PhaseVector(values, augmented=True), ul_vectors=(), assignment=zeros)
        sol = finish_solution(scenario, plan)
        if best is None or sol.throughput > best.throughput:
            best = sol
    return replace(best, diagnostics=replace(best.diagnostics, notes=f"random trials={trials}"))


def baseline_no_irs(scenario: Scenario) -> Solution:
    """Direct links only: the reflect channel is zeroed and phases are moot."""
    bare = scenario.without_irs()
    sol = finish_solution(bare, _trivial_plan(bare))
    return replace(sol, diagnostics=replace(sol.diagnostics, notes="no reflect path"))
