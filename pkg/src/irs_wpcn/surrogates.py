"""Concave global lower bounds used by the successive-approximation loops.

Each bound is affine in the decision variables (after the indicated change of
variables), tight at its expansion point, and never exceeds the function it
replaces, which is exactly what a maximization-side surrogate needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _validate(q_bar: np.ndarray, w0: np.ndarray, t0: float):
    q = np.asarray(q_bar, dtype=complex)
    w = np.asarray(w0, dtype=complex)
    if q.ndim != 1 or q.shape != w.shape:
        raise ValueError("q_bar and w0 must be 1-D arrays of equal length")
    if t0 <= 0:
        raise ValueError("expansion time t0 must be positive")
    return q, w


@dataclass(frozen=True)
class QuarticSurrogate:
    """Lower bound on tau0 * |q_bar^H v|^4 around (w0, t0).

    value(v, tau0) = Re(lin^H v) - inv_sqrt_coef / sqrt(tau0) - offset.
    The bound is affine in (v, 1/sqrt(tau0)); equality holds at (w0, t0).
    """

    lin: np.ndarray
    inv_sqrt_coef: float
    offset: float

    def value(self, v: np.ndarray, tau0: float) -> float:
        if tau0 <= 0:
            raise ValueError("tau0 must be positive")
        return float(np.real(np.vdot(self.lin, v)) - self.inv_sqrt_coef / np.sqrt(tau0) - self.offset)


def surrogate_quartic(q_bar: np.ndarray, w0: np.ndarray, t0: float) -> QuarticSurrogate:
    """Tangent minorant of the quartic through-gain energy term.

    With A = |q_bar^H w0|^2:
    bound = 4 t0 A Re{w0^H Q v} - 2 A^2 t0^{3/2} / sqrt(tau0) - A^2 t0,
    where Q = q_bar q_bar^H, so Re{w0^H Q v} = Re{conj(q_bar^H w0) (q_bar^H v)}.
    """
    q, w = _validate(q_bar, w0, t0)
    qw = np.vdot(q, w)          # q_bar^H w0
    a = float(np.abs(qw) ** 2)
    lin = 4.0 * t0 * a * qw * q  # lin^H v = 4 t0 A conj(qw) q_bar^H v
    return QuarticSurrogate(lin=lin, inv_sqrt_coef=2.0 * a**2 * t0**1.5, offset=a**2 * t0)


@dataclass(frozen=True)
class DlEnergySurrogate:
    """Lower bound on tau0 * |q_bar^H v|^2 around (w0, t0).

    value(v, tau0) = Re(lin^H v) - inv_coef / tau0; affine in (v, 1/tau0).
    """

    lin: np.ndarray
    inv_coef: float

    def value(self, v: np.ndarray, tau0: float) -> float:
        if tau0 <= 0:
            raise ValueError("tau0 must be positive")
        return float(np.real(np.vdot(self.lin, v)) - self.inv_coef / tau0)


def surrogate_dl_energy(q_bar: np.ndarray, w0: np.ndarray, t0: float) -> DlEnergySurrogate:
    """Tangent minorant of the harvested-energy term:
    2 t0 Re{w0^H Q v} - t0^2 (w0^H Q w0) / tau0."""
    q, w = _validate(q_bar, w0, t0)
    qw = np.vdot(q, w)
    a = float(np.abs(qw) ** 2)
    lin = 2.0 * t0 * qw * q
    return DlEnergySurrogate(lin=lin, inv_coef=t0**2 * a)


@dataclass(frozen=True)
class ExpProductSurrogate:
    """Lower bound on exp(x + y) around (x0, y0): scale * (1 + x + y - x0 - y0)."""

    scale: float
    x0: float
    y0: float

    def value(self, x: float, y: float) -> float:
        return self.scale * (1.0 + x + y - self.x0 - self.y0)


def surrogate_exp_product(x0: float, y0: float) -> ExpProductSurrogate:
    """First-order minorant of exp(x+y) at (x0, y0) (exp is convex, so the
    tangent plane lies below everywhere)."""
    return ExpProductSurrogate(scale=float(np.exp(x0 + y0)), x0=float(x0), y0=float(y0))
