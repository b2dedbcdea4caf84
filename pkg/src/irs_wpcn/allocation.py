"""Exact time and energy allocation for a fixed phase configuration.

With phases frozen, each device k has a rate coefficient c_k such that
spending harvest time tau0 and transmit time tau_k yields
tau_k * log2(1 + c_k * tau0 / tau_k).  The weighted sum is concave in
(tau0, tau), so the inner split over tau has a shared-multiplier solution and
the outer line search over tau0 is unimodal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from .allocation_types import EffectiveRates  # re-export path kept simple
from .plan import Allocation, PhasePlan, SolveDiagnostics, Solution
from .channel import effective_gain

__all__ = [
    "EffectiveRates",
    "inner_split",
    "allocate",
    "finish_solution",
    "weighted_throughput",
]

_LN2 = float(np.log(2.0))
_GOLDEN_ITERS = 100  # fixed iteration count keeps results deterministic
_SPLIT_ATOL = 1e-10


def _multiplier_to_snr(m: np.ndarray) -> np.ndarray:
    """Inverse of phi(u) = ln(1+u) - u/(1+u) (strictly increasing, phi(0) = 0).

    Closed form through the Lambert W function: with s = ln(1+u),
    phi(u) = m  <=>  s + e^{-s} = m + 1  <=>  s = m + 1 + W0(-e^{-(m+1)}).
    """
    m = np.asarray(m, dtype=float)
    arg = -np.exp(-(m + 1.0))
    s = m + 1.0 + np.real(lambertw(arg))
    return np.maximum(np.expm1(s), 0.0)


def _phi(u: np.ndarray) -> np.ndarray:
    return np.log1p(u) - u / (1.0 + u)


def inner_split(a: np.ndarray, total_ul_time: float, weights: np.ndarray | None = None) -> np.ndarray:
    """Optimal transmit times for fixed per-device products a_k = c_k * tau0.

    Maximizes sum_k w_k tau_k log2(1 + a_k/tau_k) over tau >= 0 with
    sum tau = total_ul_time.  At the optimum every served device satisfies
    w_k [ln(1+a_k/tau_k) - a_k/(tau_k+a_k)] = nu for a shared multiplier nu;
    nu is found by bracketed bisection with Newton acceleration and the
    per-device equation is inverted in closed form.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("a must be nonnegative")
    if total_ul_time < 0:
        raise ValueError("total_ul_time must be nonnegative")
    K = a.size
    w = np.ones(K) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != a.shape:
        raise ValueError("weights must match a in shape")
    tau = np.zeros(K)
    active = (a > 0) & (w > 0)
    if total_ul_time == 0 or not np.any(active):
        return tau
    aa, ww = a[active], w[active]
    if aa.size == 1:
        tau[active] = total_ul_time
        return tau

    T = float(total_ul_time)
    atol = _SPLIT_ATOL * max(1.0, T)

    def times(nu):
        u = _multiplier_to_snr(nu / ww)
        with np.errstate(divide="ignore"):
            return np.where(u > 0, aa / u, np.inf), u

    # bracket nu so that sum(tau) straddles T
    nu_lo, nu_hi = 1e-12, 1.0
    while times(nu_hi)[0].sum() > T:
        nu_hi *= 8.0
        if nu_hi > 1e18:
            break
    while np.isfinite(times(nu_lo)[0].sum()) and times(nu_lo)[0].sum() < T:
        nu_lo /= 8.0
        if nu_lo < 1e-300:
            break

    nu = np.sqrt(nu_lo * nu_hi)
    for _ in range(200):
        t, u = times(nu)
        total = t.sum()
        gap = total - T
        if np.isfinite(gap) and abs(gap) <= atol:
            break
        if not np.isfinite(total) or gap > 0:
            nu_lo = nu
        else:
            nu_hi = nu
        step = None
        if np.isfinite(total):
            # Newton on g(nu) = sum tau(nu) - T; dtau/dnu = -a (1+u)^2 / (w u^3)
            slope = -np.sum(aa * (1.0 + u) ** 2 / (ww * u**3))
            cand = nu - gap / slope
            if np.isfinite(cand) and nu_lo < cand < nu_hi:
                step = cand
        nu = step if step is not None else np.sqrt(nu_lo * nu_hi)

    t, _ = times(nu)
    if not np.all(np.isfinite(t)):
        t = np.full_like(aa, T / aa.size)
    t *= T / t.sum()  # land exactly on the budget
    tau[active] = t
    return tau


def weighted_throughput(a: np.ndarray, tau: np.ndarray, weights: np.ndarray) -> float:
    """sum_k w_k tau_k log2(1 + a_k / tau_k) with the tau -> 0 limit handled."""
    a = np.asarray(a, dtype=float)
    tau = np.asarray(tau, dtype=float)
    mask = tau > 0
    if not np.any(mask):
        return 0.0
    snr = a[mask] / tau[mask]
    return float(np.sum(np.asarray(weights)[mask] * tau[mask] * np.log1p(snr)) / _LN2)


def allocate(
    rates: EffectiveRates,
    total_time: float,
    energy_rates: np.ndarray | None = None,
) -> tuple[Allocation, float]:
    """Jointly optimal (tau0, tau_1..tau_K) for composite rate coefficients.

    Golden-section search over tau0 in [0, total_time] (the value function is
    concave), with the inner split solved exactly at every probe.  Returns the
    allocation and the optimal weighted throughput.  `energy_rates[k]` (watts)
    fills in transmit energies as e_k = energy_rates[k] * tau0.
    """
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    c = rates.c
    w = rates.weights
    K = c.size

    def value(tau0):
        tau = inner_split(c * tau0, total_time - tau0, w)
        return weighted_throughput(c * tau0, tau, w), tau

    if not np.any((c > 0) & (w > 0)):
        return Allocation(0.0, np.zeros((K, 1)), np.zeros((K, 1))), 0.0

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, float(total_time)
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, _ = value(x1)
    f2, _ = value(x2)
    for _ in range(_GOLDEN_ITERS):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2, _ = value(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1, _ = value(x1)
    tau0 = 0.5 * (lo + hi)
    throughput, tau = value(tau0)

    if energy_rates is None:
        energy = np.zeros(K)
    else:
        energy = np.where(tau > 0, np.asarray(energy_rates, dtype=float) * tau0, 0.0)
    alloc = Allocation(tau0, tau[:, None], energy[:, None])
    return alloc, throughput


def finish_solution(scenario, plan: PhasePlan, diagnostics: SolveDiagnostics | None = None) -> Solution:
    """Exact allocation (and throughput) for a frozen phase plan.

    Composite coefficients: c_k = eta_k P_A gDL_k gUL_k / sigma^2 where gDL is
    the downlink gain through v0 and gUL the gain through the assigned uplink
    vector.  Transmit energies are pinned to the harvested energy
    eta_k P_A gDL_k tau0 (spending less is never optimal).
    """
    K = scenario.num_devices
    assignment = np.asarray(plan.assignment, dtype=int)
    if assignment.shape != (K,):
        raise ValueError(f"assignment must have shape ({K},)")
    if assignment.size and assignment.max() >= plan.num_slots:
        raise ValueError("assignment references a missing uplink slot")

    g_dl = np.array([effective_gain(0.0, scenario.q_bar[k], plan.v0) for k in range(K)])
    g_ul = np.array(
        [effective_gain(0.0, scenario.q_bar[k], plan.vector_for_slot(assignment[k])) for k in range(K)]
    )
    eta = scenario.eta
    p_a = scenario.hap_power
    sigma2 = scenario.noise_power
    c = eta * p_a * g_dl * g_ul / sigma2
    rates = EffectiveRates(c=c, weights=scenario.weights)
    alloc1, throughput = allocate(rates, scenario.total_time, energy_rates=eta * p_a * g_dl)

    S = plan.num_slots
    t = np.zeros((K, S))
    e = np.zeros((K, S))
    t[np.arange(K), assignment] = alloc1.t[:, 0]
    e[np.arange(K), assignment] = alloc1.e[:, 0]
    tau = alloc1.t[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(tau > 0, c * alloc1.tau0 / np.where(tau > 0, tau, 1.0), 0.0)
    device_rates = np.where(tau > 0, tau * np.log1p(snr) / _LN2, 0.0)

    return Solution(
        plan=plan,
        alloc=Allocation(alloc1.tau0, t, e),
        throughput=throughput,
        device_rates=device_rates,
        diagnostics=diagnostics or SolveDiagnostics(),
    )
