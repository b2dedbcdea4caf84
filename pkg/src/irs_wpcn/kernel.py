"""Log-barrier interior-point solver for the recurring subproblem shape.

Every convexified subproblem in this package fits one template: maximize a
sum of perspective-log rate terms t * log2(1 + s/(t*noise)) plus a linear
functional, over real variables and complex variables constrained to unit
disks, subject to linear rows, scalar exponential-cone rows
exp(<a,x>+b) <= <c,x>+d, and ratio rows beta/x_d^p + <c,x> <= d (p in
{1/2, 1}).  The solver is a damped-Newton barrier method: minimize
-mu*f(x) + phi(x) along the usual mu*=10 schedule, where phi collects
-log(slack) terms (and -log(1-|z|^2) for the disks).  Iterates stay strictly
feasible, so returned points satisfy every constraint by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

_LN2 = float(np.log(2.0))

T_FLOOR = 1e-9          # lower floor kept on every perspective time variable
_RIDGES = (0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1.0)
_MAX_INNER = 80
_MAX_TOTAL_NEWTON = 4000
_ARMIJO = 1e-4


class InfeasibleStartError(ValueError):
    """The supplied start violates a constraint (must be strictly interior)."""


@dataclass(frozen=True)
class PerspectiveTerm:
    t_index: int
    s_index: int
    weight: float = 1.0
    noise: float = 1.0


@dataclass(frozen=True)
class SolverReport:
    status: str              # optimal | max-iters | numerical-failure
    objective: float
    newton_iters: int
    stationarity: float      # residual duality-gap estimate (barrier m / mu)


class ConvexSubproblem:
    """Builder for one subproblem instance.

    Packed layout: x = [real variables | Re(z) | Im(z)], so a complex variable
    i occupies (idx_re(i), idx_im(i)).  All add_* coefficients address the
    packed vector.
    """

    def __init__(self, n_real: int, n_complex: int = 0):
        if n_real < 0 or n_complex < 0 or n_real + n_complex == 0:
            raise ValueError("need at least one variable")
        self.n_real = int(n_real)
        self.n_complex = int(n_complex)
        self.n = self.n_real + 2 * self.n_complex
        self.pairs: list[PerspectiveTerm] = []
        self.linear_objective = np.zeros(self.n)
        self._ineq_rows: list[np.ndarray] = []
        self._ineq_rhs: list[float] = []
        self._eq_rows: list[np.ndarray] = []
        self._eq_rhs: list[float] = []
        self._exp: list[tuple[np.ndarray, float, np.ndarray, float]] = []
        self._ratio: list[tuple[float, int, float, np.ndarray, float]] = []
        self._disks: list[int] = []
        self._nonneg: list[tuple[int, float]] = []

    # --- variable indexing ---
    def idx_re(self, i: int) -> int:
        if not 0 <= i < self.n_complex:
            raise IndexError("complex index out of range")
        return self.n_real + i

    def idx_im(self, i: int) -> int:
        if not 0 <= i < self.n_complex:
            raise IndexError("complex index out of range")
        return self.n_real + self.n_complex + i

    def _row(self, coeffs) -> np.ndarray:
        row = np.zeros(self.n)
        if isinstance(coeffs, dict):
            for idx, val in coeffs.items():
                row[idx] = val
        else:
            arr = np.asarray(coeffs, dtype=float)
            if arr.shape != (self.n,):
                raise ValueError(f"coefficient vector must have shape ({self.n},)")
            row[:] = arr
        return row

    # --- builders ---
    def add_perspective(self, t_index: int, s_index: int, weight: float = 1.0, noise: float = 1.0):
        if weight < 0:
            raise ValueError("perspective weight must be nonnegative")
        if noise <= 0:
            raise ValueError("perspective noise must be positive")
        self.pairs.append(PerspectiveTerm(int(t_index), int(s_index), float(weight), float(noise)))

    def set_linear_objective(self, coeffs) -> None:
        self.linear_objective = self._row(coeffs)

    def add_linear_ineq(self, coeffs, ub: float) -> None:
        self._ineq_rows.append(self._row(coeffs))
        self._ineq_rhs.append(float(ub))

    def add_linear_eq(self, coeffs, rhs: float) -> None:
        self._eq_rows.append(self._row(coeffs))
        self._eq_rhs.append(float(rhs))

    def add_exp(self, lhs, lhs_const: float, rhs, rhs_const: float) -> None:
        """exp(<lhs,x> + lhs_const) <= <rhs,x> + rhs_const"""
        self._exp.append((self._row(lhs), float(lhs_const), self._row(rhs), float(rhs_const)))

    def add_ratio(self, beta: float, denom_index: int, power: float, coeffs, ub: float) -> None:
        """beta * x[denom]^(-power) + <coeffs,x> <= ub   (beta >= 0, power > 0)"""
        if beta < 0:
            raise ValueError("ratio coefficient beta must be nonnegative (convexity)")
        if power <= 0:
            raise ValueError("ratio power must be positive")
        self._ratio.append((float(beta), int(denom_index), float(power), self._row(coeffs), float(ub)))

    def add_disk(self, complex_index: int) -> None:
        if not 0 <= complex_index < self.n_complex:
            raise IndexError("complex index out of range")
        self._disks.append(int(complex_index))

    def add_nonneg(self, index: int, floor: float = 0.0) -> None:
        self._nonneg.append((int(index), float(floor)))

    # --- objective ---
    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = float(self.linear_objective @ x)
        for p in self.pairs:
            t, s = x[p.t_index], x[p.s_index]
            if t > 0 and p.weight > 0:
                total += p.weight * t * np.log1p(s / (t * p.noise)) / _LN2
        return total

    def dump(self, path: str) -> None:
        """Structured text snapshot for offline inspection."""
        data = {
            "n_real": self.n_real,
            "n_complex": self.n_complex,
            "pairs": [[p.t_index, p.s_index, p.weight, p.noise] for p in self.pairs],
            "linear_objective": self.linear_objective.tolist(),
            "ineq": [[row.tolist(), ub] for row, ub in zip(self._ineq_rows, self._ineq_rhs)],
            "eq": [[row.tolist(), rhs] for row, rhs in zip(self._eq_rows, self._eq_rhs)],
            "exp": [[l.tolist(), lc, r.tolist(), rc] for l, lc, r, rc in self._exp],
            "ratio": [[b, d, p, row.tolist(), ub] for b, d, p, row, ub in self._ratio],
            "disks": list(self._disks),
            "nonneg": [[i, f] for i, f in self._nonneg],
        }
        with open(path, "w") as fh:
            json.dump(data, fh)
            fh.write("\n")


class _Compiled:
    """Array view of a subproblem plus scratch buffers for Newton steps."""

    def __init__(self, p: ConvexSubproblem):
        self.p = p
        n = p.n
        self.n = n
        self.A = np.array(p._ineq_rows).reshape(len(p._ineq_rows), n)
        self.b = np.array(p._ineq_rhs)
        self.E_lhs = np.array([e[0] for e in p._exp]).reshape(len(p._exp), n)
        self.E_lc = np.array([e[1] for e in p._exp])
        self.E_rhs = np.array([e[2] for e in p._exp]).reshape(len(p._exp), n)
        self.E_rc = np.array([e[3] for e in p._exp])
        self.R_beta = np.array([r[0] for r in p._ratio])
        self.R_den = np.array([r[1] for r in p._ratio], dtype=int)
        self.R_pow = np.array([r[2] for r in p._ratio])
        self.R_lin = np.array([r[3] for r in p._ratio]).reshape(len(p._ratio), n)
        self.R_ub = np.array([r[4] for r in p._ratio])
        self.disk_re = np.array([p.idx_re(i) for i in p._disks], dtype=int)
        self.disk_im = np.array([p.idx_im(i) for i in p._disks], dtype=int)
        self.nn_idx = np.array([i for i, _ in p._nonneg], dtype=int)
        self.nn_floor = np.array([f for _, f in p._nonneg])
        self.P_t = np.array([q.t_index for q in p.pairs], dtype=int)
        self.P_s = np.array([q.s_index for q in p.pairs], dtype=int)
        self.P_w = np.array([q.weight for q in p.pairs])
        self.P_c = np.array([q.noise for q in p.pairs])
        self.A_eq = np.array(p._eq_rows).reshape(len(p._eq_rows), n)
        self.b_eq = np.array(p._eq_rhs)

        counts = [len(self.b), len(self.E_lc), len(self.R_beta), len(self.disk_re),
                  len(self.nn_idx), len(self.P_t), len(self.P_t)]
        self.m = int(sum(counts))
        offsets = np.cumsum([0] + counts)
        (self.o_lin, self.o_exp, self.o_ratio, self.o_disk,
         self.o_nn, self.o_pt, self.o_ps, _) = [int(v) for v in offsets[:8]]

        # constraint-gradient matrix; constant rows are filled once
        self.G = np.zeros((self.m, n))
        if len(self.b):
            self.G[self.o_lin:self.o_exp] = -self.A
        if len(self.nn_idx):
            self.G[self.o_nn + np.arange(len(self.nn_idx)), self.nn_idx] = 1.0
        if len(self.P_t):
            self.G[self.o_pt + np.arange(len(self.P_t)), self.P_t] = 1.0
            self.G[self.o_ps + np.arange(len(self.P_s)), self.P_s] = 1.0

    def slacks(self, x: np.ndarray):
        """All barrier slacks at x, or None if x is not strictly feasible."""
        s = np.empty(self.m)
        u_exp = None
        if len(self.b):
            s[self.o_lin:self.o_exp] = self.b - self.A @ x
        if len(self.E_lc):
            with np.errstate(over="ignore"):
                u_exp = np.exp(self.E_lhs @ x + self.E_lc)
            s[self.o_exp:self.o_ratio] = self.E_rhs @ x + self.E_rc - u_exp
        if len(self.R_beta):
            xd = x[self.R_den]
            if np.any(xd <= 0):
                return None, None
            s[self.o_ratio:self.o_disk] = self.R_ub - self.R_lin @ x - self.R_beta * xd ** (-self.R_pow)
        if len(self.disk_re):
            s[self.o_disk:self.o_nn] = 1.0 - x[self.disk_re] ** 2 - x[self.disk_im] ** 2
        if len(self.nn_idx):
            s[self.o_nn:self.o_pt] = x[self.nn_idx] - self.nn_floor
        if len(self.P_t):
            s[self.o_pt:self.o_ps] = x[self.P_t] - T_FLOOR
            s[self.o_ps:] = x[self.P_s]
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            return None, None
        return s, u_exp

    def objective_parts(self, x: np.ndarray):
        """(f, grad f) plus the 2x2 curvature blocks of the perspective terms."""
        n = self.n
        f = float(self.p.linear_objective @ x)
        g = self.p.linear_objective.copy()
        blocks = None
        if len(self.P_t):
            t = x[self.P_t]
            s = x[self.P_s]
            u = s / (t * self.P_c)
            wl = self.P_w / _LN2
            f += float(np.sum(wl * t * np.log1p(u)))
            gt = wl * (np.log1p(u) - u / (1.0 + u))
            gs = wl / (self.P_c * (1.0 + u))
            np.add.at(g, self.P_t, gt)
            np.add.at(g, self.P_s, gs)
            denom = t * (1.0 + u) ** 2
            htt = wl * u**2 / denom                  # -d2f/dt2
            hts = -wl * u / (self.P_c * denom)       # -d2f/dtds
            hss = wl / (self.P_c**2 * denom)         # -d2f/ds2
            blocks = (htt, hts, hss)
        return f, g, blocks


def _assemble(c: _Compiled, x, s, u_exp, mu, blocks, g_obj):
    """Gradient and Hessian of psi = -mu f + phi at a strictly feasible x."""
    n = c.n
    G = c.G
    if len(c.E_lc):
        G[c.o_exp:c.o_ratio] = c.E_rhs - u_exp[:, None] * c.E_lhs
    if len(c.R_beta):
        xd = x[c.R_den]
        G[c.o_ratio:c.o_disk] = -c.R_lin
        rows = c.o_ratio + np.arange(len(c.R_beta))
        G[rows, c.R_den] += c.R_pow * c.R_beta * xd ** (-c.R_pow - 1.0)
    if len(c.disk_re):
        rows = c.o_disk + np.arange(len(c.disk_re))
        G[rows] = 0.0
        G[rows, c.disk_re] = -2.0 * x[c.disk_re]
        G[rows, c.disk_im] = -2.0 * x[c.disk_im]

    inv_s = 1.0 / s
    grad = -mu * g_obj - G.T @ inv_s
    W = G * inv_s[:, None]
    H = W.T @ W

    if len(c.E_lc):
        sl = s[c.o_exp:c.o_ratio]
        scaled = c.E_lhs * (u_exp / sl)[:, None]
        H += scaled.T @ c.E_lhs
    if len(c.R_beta):
        xd = x[c.R_den]
        sl = s[c.o_ratio:c.o_disk]
        extra = c.R_pow * (c.R_pow + 1.0) * c.R_beta * xd ** (-c.R_pow - 2.0) / sl
        np.add.at(H, (c.R_den, c.R_den), extra)
    if len(c.disk_re):
        sl = s[c.o_disk:c.o_nn]
        np.add.at(H, (c.disk_re, c.disk_re), 2.0 / sl)
        np.add.at(H, (c.disk_im, c.disk_im), 2.0 / sl)
    if blocks is not None:
        htt, hts, hss = blocks
        np.add.at(H, (c.P_t, c.P_t), mu * htt)
        np.add.at(H, (c.P_s, c.P_s), mu * hss)
        np.add.at(H, (c.P_t, c.P_s), mu * hts)
        np.add.at(H, (c.P_s, c.P_t), mu * hts)
    return grad, H


def _newton_direction(H, grad, null_basis):
    """Solve for the damped Newton step, Jacobi-scaled with ridge escalation.

    Equality constraints are handled by reducing onto `null_basis` (an
    orthonormal basis of their null space), which keeps the system positive
    definite instead of solving an indefinite saddle-point matrix.
    """
    if null_basis is not None:
        Hr = null_basis.T @ H @ null_basis
        gr = null_basis.T @ grad
        step = _newton_direction(Hr, gr, None)
        return None if step is None else null_basis @ step
    n = H.shape[0]
    d = np.sqrt(np.clip(np.diag(H), 1e-300, None))
    Hs = H / np.outer(d, d)
    for ridge in _RIDGES:
        try:
            cho = sla.cho_factor(Hs + ridge * np.eye(n), lower=True, check_finite=False)
            y = sla.cho_solve(cho, -grad / d, check_finite=False)
            return y / d
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            continue
    return None


def solve_subproblem(
    problem: ConvexSubproblem,
    start: np.ndarray,
    tol: float = 1e-8,
) -> tuple[np.ndarray, SolverReport]:
    """Maximize the subproblem objective from a strictly feasible start.

    Returns the final iterate and a report; the iterate satisfies every
    constraint strictly (interior method) and, on status "optimal", lies
    within `tol` of the maximum in objective value.
    """
    c = _Compiled(problem)
    x = np.array(start, dtype=float)
    if x.shape != (c.n,):
        raise ValueError(f"start must have shape ({c.n},)")
    null_basis = None
    if c.A_eq.size:
        resid = c.A_eq @ x - c.b_eq
        if np.max(np.abs(resid)) > 1e-12:
            # least-norm correction onto the equality manifold
            x -= c.A_eq.T @ np.linalg.lstsq(c.A_eq @ c.A_eq.T, resid, rcond=None)[0]
        null_basis = sla.null_space(c.A_eq)
        if null_basis.shape[1] == 0:
            raise ValueError("equality constraints pin every variable")
    s, u_exp = c.slacks(x)
    if s is None:
        raise InfeasibleStartError("start point is not strictly feasible")
    if c.m == 0:
        raise ValueError("subproblem has no inequality structure (nothing to solve)")

    mu = 1.0
    total_newton = 0
    stalled = False
    while True:
        inner_tol = 1e-10 * max(1.0, mu)
        for _ in range(_MAX_INNER):
            if total_newton >= _MAX_TOTAL_NEWTON:
                break
            s, u_exp = c.slacks(x)
            f, g_obj, blocks = c.objective_parts(x)
            grad, H = _assemble(c, x, s, u_exp, mu, blocks, g_obj)
            dx = _newton_direction(H, grad, null_basis)
            if dx is None:
                stalled = True
                break
            dec = float(-grad @ dx)
            if dec <= 0:  # at numerical stationarity for this stage
                break
            total_newton += 1
            if dec / 2.0 <= inner_tol:
                break
            psi0 = -mu * f - float(np.sum(np.log(s)))
            alpha = 1.0
            accepted = False
            for _ in range(60):
                x_try = x + alpha * dx
                s_try, _ = c.slacks(x_try)
                if s_try is not None:
                    f_try = problem.objective(x_try)
                    psi_try = -mu * f_try - float(np.sum(np.log(s_try)))
                    if psi_try <= psi0 - _ARMIJO * alpha * dec:
                        x = x_try
                        accepted = True
                        break
                alpha *= 0.5
            if not accepted:
                if dec / 2.0 <= 1e-5 * max(1.0, mu):
                    break  # step is noise-level; the stage is converged enough
                stalled = True
                break
        gap = c.m / mu
        if stalled or total_newton >= _MAX_TOTAL_NEWTON or gap <= tol:
            break
        mu *= 10.0

    gap = c.m / mu
    if gap <= tol and not stalled:
        status = "optimal"
    elif stalled and gap > 10.0 * tol:
        status = "numerical-failure"
    else:
        status = "max-iters"
    report = SolverReport(
        status=status,
        objective=problem.objective(x),
        newton_iters=total_newton,
        stationarity=gap,
    )
    return x, report
