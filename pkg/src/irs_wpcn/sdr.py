"""Semidefinite-relaxation upper bound on the weighted sum throughput.

Every scheme in `optimizers` is dominated by one convex program obtained from
three relaxations applied at once:

  * the downlink pattern is lifted: the rank-one outer product v0 v0^H scaled
    by the harvest duration becomes a free PSD matrix with constant diagonal,
  * each device transmits through its phase-aligned uplink optimum, which is a
    closed-form gain no reachable pattern exceeds,
  * per-slot time/energy splits are pooled into a single slot per device; the
    rate perspective is concave and positively homogeneous, so pooling at the
    best gain never loses throughput.

The result is a smooth convex program in (lifted matrix, harvest duration,
per-device times and energies).  It is solved here with a log-barrier Newton
method specialized to the single matrix variable: the PSD cone contributes
a -log det barrier whose gradient and Hessian have closed forms in the
inverse matrix, and every other constraint is a scalar log over an affine
slack.  The reported `value` adds the residual barrier gap to the interior
objective, so it upper-bounds the true optimum (up to Newton centering
error), not just the iterate's objective.

`gaussian_randomize` maps the lifted matrix back to feasible plans (dominant
eigenvector plus gaussian samples drawn from it as a covariance), which
sandwiches the relaxation gap from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .allocation import finish_solution
from .channel import align_phases, project_unit_modulus
from .plan import PhasePlan, Solution
from .scenario import Scenario, stream

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LiftedMatrix:
    """Downlink pattern outer product scaled by the harvest duration.

    Feasible plans correspond to the rank-one case w0 = tau0 * v0 v0^H, whose
    diagonal is constant because every entry of v0 has unit modulus.  The
    relaxation keeps only what is convex: Hermitian, PSD, diagonal == tau0.
    """

    w0: np.ndarray
    tau0: float

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=complex)
        if w0.ndim != 2 or w0.shape[0] != w0.shape[1] or w0.size == 0:
            raise ValueError("lifted matrix must be a nonempty square matrix")
        tau0 = float(self.tau0)
        scale = max(1.0, abs(tau0))
        if not np.allclose(w0, w0.conj().T, atol=1e-9 * scale):
            raise ValueError("lifted matrix must be Hermitian")
        if float(np.linalg.eigvalsh(w0).min()) < -1e-9 * scale:
            raise ValueError("lifted matrix must be positive semidefinite")
        if not np.allclose(w0.diagonal().real, tau0, atol=1e-6 * scale):
            raise ValueError("lifted diagonal must equal the harvest duration")
        w0 = w0.copy()
        w0.setflags(write=False)
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "tau0", tau0)


@dataclass(frozen=True)
class RelaxedBound:
    """Output of `solve_relaxed`: a certified throughput upper bound."""

    value: float  # interior objective plus barrier gap (bits/Hz over the block)
    lifted: LiftedMatrix
    tau: np.ndarray  # per-device uplink durations (s)
    energy: np.ndarray  # per-device spent energy (J)
    gap: float  # residual barrier duality gap folded into `value`
    iterations: int  # total Newton steps
    status: str  # "optimal", "max-iters", or "numerical-failure"


def solve_relaxed(scenario: Scenario, tol: float = 1e-8) -> RelaxedBound:
    """Solve the lifted convex relaxation by a log-barrier Newton method.

    Deterministic: no randomness is involved, only the scenario's channels.
    `tol` bounds the final barrier gap relative to max(1, objective).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = scenario
    T = s.total_time
    n1 = s.q_bar.shape[1]
    K = s.num_devices

    aligned_gain = np.empty(K)
    for k in range(K):
        aligned_gain[k] = align_phases(s.h_d[k], s.q[k])[1]
    norms = np.linalg.norm(s.q_bar, axis=1)
    active = [k for k in range(K) if s.weights[k] > 0 and norms[k] > 0]
    if not active:
        lifted = LiftedMatrix(w0=(T / 3.0) * np.eye(n1, dtype=complex), tau0=T / 3.0)
        return RelaxedBound(0.0, lifted, np.zeros(K), np.zeros(K), 0.0, 0, "optimal")

    # scaled units: unit-norm channel rows, energies in noise-normalized SNR
    # seconds (e_hat = e * aligned_gain / sigma^2), so rate_k = tau log2(1+e_hat/tau)
    q_hat = s.q_bar[active] / norms[active, None]
    rho = (
        s.eta[active]
        * s.hap_power
        * aligned_gain[active]
        * norms[active] ** 2
        / s.noise_power
    )
    w = s.weights[active]
    ka = len(active)

    iu, ju = np.triu_indices(n1, k=1)
    npair = iu.size
    # layout: [tau0 | tau_1..tau_ka | e_1..e_ka | Re w0 pairs | Im w0 pairs]
    o_tau = 1
    o_e = 1 + ka
    o_x = 1 + 2 * ka
    o_y = o_x + npair
    n = o_y + npair
    m_pair = np.conj(q_hat[:, iu]) * q_hat[:, ju]  # (ka, npair)
    cx = 2.0 * m_pair.real  # d(q^H W q)/dx per pair
    cy = -2.0 * m_pair.imag
    nu_total = n1 + 3 * ka + 1  # log det parameter + scalar log count

    def build_w(z: np.ndarray) -> np.ndarray:
        mat = np.zeros((n1, n1), dtype=complex)
        mat[iu, ju] = z[o_x:o_y] + 1j * z[o_y:]
        mat = mat + mat.conj().T
        mat[np.diag_indices(n1)] = z[0]
        return mat

    def eval_point(z: np.ndarray):
        # None when z leaves the barrier domain
        tau0 = z[0]
        tau = z[o_tau:o_e]
        e = z[o_e:o_x]
        if tau0 <= 0 or np.any(tau <= 0) or np.any(e <= 0):
            return None
        mat = build_w(z)
        try:
            cf = sla.cho_factor(mat, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return None
        quad = tau0 + cx @ z[o_x:o_y] + cy @ z[o_y:]  # q_hat^H W q_hat
        sh = rho * quad - e  # harvest slack
        st = T - tau0 - tau.sum()  # frame slack
        if st <= 0 or np.any(sh <= 0):
            return None
        u = e / tau
        f = float(w @ (tau * np.log1p(u))) / _LN2
        logdet = 2.0 * float(np.log(np.diag(cf[0]).real).sum())
        phi = (
            -logdet
            - float(np.log(sh).sum())
            - math.log(st)
            - float(np.log(tau).sum())
            - float(np.log(e).sum())
        )
        if not (np.isfinite(f) and np.isfinite(phi)):
            return None
        return f, phi, cf, sh, st, u

    def psi(parts, mu: float) -> float:
        return -mu * parts[0] + parts[1]

    def assemble(z: np.ndarray, mu: float, parts):
        _, _, cf, sh, st, u = parts
        tau = z[o_tau:o_e]
        e = z[o_e:o_x]
        sinv = sla.cho_solve(cf, np.eye(n1, dtype=complex), check_finite=False)
        sinv = 0.5 * (sinv + sinv.conj().T)
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        it_ = np.arange(o_tau, o_e)
        ie_ = np.arange(o_e, o_x)

        # objective -mu * sum w tau log2(1+e/tau): concave, rank-one curvature
        one_u = 1.0 + u
        grad[it_] -= mu * w * (np.log1p(u) - u / one_u) / _LN2
        grad[ie_] -= mu * w / (one_u * _LN2)
        curv = mu * w / (tau * one_u**2 * _LN2)
        hess[it_, it_] += curv * u**2
        hess[ie_, ie_] += curv
        hess[it_, ie_] -= curv * u
        hess[ie_, it_] -= curv * u

        # -log det barrier: gradient -Tr(S dW), Hessian Tr(S dW S dW), S = W^-1
        grad[0] -= float(np.trace(sinv).real)
        grad[o_x:o_y] -= 2.0 * sinv[iu, ju].real
        grad[o_y:] -= 2.0 * sinv[iu, ju].imag
        s2 = sinv @ sinv
        sii = sinv[np.ix_(iu, iu)]
        sjj = sinv[np.ix_(ju, ju)]
        sji = sinv[np.ix_(ju, iu)]
        t1 = sji * sji.T  # S[j,k] S[l,i] over pair rows p=(i,j), cols q=(k,l)
        t2 = sjj * sii.T  # S[j,l] S[k,i]
        hess[0, 0] += float((np.abs(sinv) ** 2).sum())
        hx = 2.0 * s2[iu, ju].real
        hy = 2.0 * s2[iu, ju].imag
        hess[0, o_x:o_y] += hx
        hess[o_x:o_y, 0] += hx
        hess[0, o_y:] += hy
        hess[o_y:, 0] += hy
        hess[o_x:o_y, o_x:o_y] += 2.0 * (t1 + t2).real
        hess[o_y:, o_y:] += 2.0 * (t2 - t1).real
        hxy = 2.0 * (t2 - t1).imag
        hess[o_x:o_y, o_y:] += hxy
        hess[o_y:, o_x:o_y] += hxy.T

        # harvest slacks rho_k q^H W q - e_k > 0
        for i in range(ka):
            gvec = np.zeros(n)
            gvec[0] = rho[i]
            gvec[o_e + i] = -1.0
            gvec[o_x:o_y] = rho[i] * cx[i]
            gvec[o_y:] = rho[i] * cy[i]
            grad -= gvec / sh[i]
            hess += np.outer(gvec, gvec) / sh[i] ** 2

        # frame length and positivity
        gvec = np.zeros(n)
        gvec[0] = -1.0
        gvec[it_] = -1.0
        grad -= gvec / st
        hess += np.outer(gvec, gvec) / st**2
        grad[it_] -= 1.0 / tau
        grad[ie_] -= 1.0 / e
        hess[it_, it_] += 1.0 / tau**2
        hess[ie_, ie_] += 1.0 / e**2
        return grad, hess

    def newton(z: np.ndarray, mu: float):
        parts = eval_point(z)
        steps = 0
        for _ in range(60):
            grad, hess = assemble(z, mu, parts)
            scale = 1.0 / np.sqrt(np.maximum(np.diag(hess), 1e-30))
            hs = hess * scale[:, None] * scale[None, :]
            gs = grad * scale
            step = None
            ridge = 0.0
            for _ in range(12):
                try:
                    cf = sla.cho_factor(
                        hs + ridge * np.eye(n), lower=True, check_finite=False
                    )
                    step = scale * sla.cho_solve(cf, -gs, check_finite=False)
                    break
                except np.linalg.LinAlgError:
                    ridge = 1e-12 if ridge == 0.0 else ridge * 100.0
            if step is None:
                return z, parts, steps, "numerical-failure"
            decrement = float(-grad @ step)
            if not np.isfinite(decrement) or decrement < 0:
                return z, parts, steps, "numerical-failure"
            if 0.5 * decrement <= 1e-11:
                return z, parts, steps, "centered"
            base = psi(parts, mu)
            alpha = 1.0
            accepted = False
            while alpha > 1e-18:
                trial_parts = eval_point(z + alpha * step)
                if trial_parts is not None:
                    if psi(trial_parts, mu) <= base - 0.01 * alpha * decrement:
                        z = z + alpha * step
                        parts = trial_parts
                        accepted = True
                        break
                alpha *= 0.5
            steps += 1
            if not accepted:
                # line search exhausted: already as centered as the arithmetic allows
                return z, parts, steps, "centered"
        return z, parts, steps, "max-steps"

    z = np.zeros(n)
    z[0] = T / 3.0
    z[o_tau:o_e] = 0.9 * (T - z[0]) / ka
    z[o_e:o_x] = 0.5 * rho * z[0]  # half the harvest cap of W = tau0 I
    assert eval_point(z) is not None

    mu = 1.0
    total_steps = 0
    status = "optimal"
    while True:
        z, parts, steps, inner = newton(z, mu)
        total_steps += steps
        if inner == "numerical-failure":
            status = "numerical-failure"
            break
        gap = nu_total / mu
        if gap <= tol * max(1.0, abs(parts[0])):
            break
        if mu >= 1e14:
            status = "max-iters"
            break
        mu *= 10.0

    gap = nu_total / mu
    tau_full = np.zeros(K)
    energy_full = np.zeros(K)
    tau_full[active] = z[o_tau:o_e]
    energy_full[active] = z[o_e:o_x] * s.noise_power / aligned_gain[active]
    lifted = LiftedMatrix(w0=build_w(z), tau0=float(z[0]))
    return RelaxedBound(
        value=float(parts[0] + gap),
        lifted=lifted,
        tau=tau_full,
        energy=energy_full,
        gap=float(gap),
        iterations=total_steps,
        status=status,
    )


def gaussian_randomize(
    lifted: LiftedMatrix, scenario: Scenario, samples: int = 200
) -> Solution:
    """Feasible plan recovered from the lifted matrix; best of many draws.

    Candidates are the dominant eigenvector of w0/tau0 plus `samples` complex
    gaussian vectors with that matrix as covariance, each projected entrywise
    onto unit modulus and finished with the exact allocation.  Uplink slots
    use each device's aligned pattern, so only the downlink choice is randomized.
    Deterministic for a fixed scenario seed (stream "sdr_sampling").
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if lifted.tau0 <= 0:
        raise ValueError("harvest duration must be positive")
    s = scenario
    if lifted.w0.shape[0] != s.q_bar.shape[1]:
        raise ValueError("lifted matrix size does not match the scenario")
    cov = lifted.w0 / lifted.tau0
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, 0.0)
    cands = [vecs[:, -1] * math.sqrt(max(vals[-1], 1e-12))]
    rng = stream(s.config.seed, "sdr_sampling")
    n1 = cov.shape[0]
    root = vecs * np.sqrt(vals)[None, :]
    draws = (
        rng.standard_normal((samples, n1)) + 1j * rng.standard_normal((samples, n1))
    ) / math.sqrt(2.0)
    cands.extend(list(draws @ root.T))

    uls = tuple(align_phases(s.h_d[k], s.q[k])[0].as_augmented() for k in range(s.num_devices))
    assignment = np.arange(1, s.num_devices + 1)
    best = None
    for cand in cands:
        v0 = project_unit_modulus(cand, augmented=True)
        plan = PhasePlan(v0=v0, ul_vectors=uls, assignment=assignment)
        sol = finish_solution(s, plan)
        if best is None or sol.throughput > best.throughput:
            best = sol
    return best
