"""Effective channels through the reflecting surface and phase operations.

The surface applies one unit-modulus coefficient per element.  With the
cascaded row q (see Scenario) the end-to-end amplitude for a phase vector v
is h_d + q^H v, and the augmented form q_bar^H [v; 1] carries the direct path
inside the inner product so optimizers can treat everything as one vector.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

_MODULUS_TOL = 1e-9

# Running count of zero entries mapped to phase 0 by project_unit_modulus,
# kept for diagnostics; read/reset from tests via the helpers below.
_degenerate_entries = 0


class PhaseVectorError(ValueError):
    """Vector fails the unit-modulus (or augmented last-entry) contract."""


@dataclass(frozen=True)
class PhaseVector:
    """Unit-modulus coefficient vector; `augmented` appends the fixed 1 entry.

    Bare vectors have length N (one coefficient per element).  Augmented
    vectors have length N+1 with the last entry exactly 1, so that
    q_bar^H values = h_d + q^H values[:-1].
    """

    values: np.ndarray
    augmented: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or values.size == 0:
            raise PhaseVectorError("phase vector must be a nonempty 1-D array")
        if np.any(np.abs(np.abs(values) - 1.0) > _MODULUS_TOL):
            worst = float(np.max(np.abs(np.abs(values) - 1.0)))
            raise PhaseVectorError(f"entries must be unit modulus (worst deviation {worst:.2e})")
        if self.augmented and values[-1] != 1.0:
            raise PhaseVectorError("augmented vector must end with exactly 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def as_augmented(self) -> "PhaseVector":
        if self.augmented:
            return self
        return PhaseVector(np.concatenate([self.values, [1.0 + 0.0j]]), augmented=True)

    def bare_values(self) -> np.ndarray:
        return self.values[:-1] if self.augmented else self.values


def effective_gain(h_d: complex, q: np.ndarray, v: PhaseVector) -> float:
    """|h_d + q^H v|^2 for a bare v, or |h_d + q_bar^H v_bar|^2 when v is augmented.

    `q` must match the length of `v` (augmented callers pass the augmented row
    and h_d = 0 to avoid double counting the direct path).
    """
    if not isinstance(v, PhaseVector):
        raise TypeError("v must be a PhaseVector")
    q = np.asarray(q, dtype=complex)
    if q.shape != (len(v),):
        raise ValueError(f"q has shape {q.shape}, expected ({len(v)},)")
    amp = h_d + np.vdot(q, v.values)
    return float(np.abs(amp) ** 2)


def align_phases(h_d: complex, q: np.ndarray) -> tuple[PhaseVector, float]:
    """Best single-link phase vector and the gain it achieves.

    Each element is rotated so its cascaded term adds in phase with the direct
    path: v_n = exp(j(arg(h_d) + arg(q_n))), giving |h_d + q^H v|^2 =
    (|h_d| + sum_n |q_n|)^2.  h_d = 0 falls back to phase reference 0.
    """
    q = np.asarray(q, dtype=complex)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("q must be a nonempty 1-D array")
    phases = np.angle(h_d) + np.angle(q)
    v = PhaseVector(np.exp(1j * phases))
    gamma = float((np.abs(h_d) + np.abs(q).sum()) ** 2)
    return v, gamma


def project_unit_modulus(values: np.ndarray, augmented: bool = False) -> PhaseVector:
    """Entrywise projection z/|z| onto the unit-modulus set.

    Augmented input is first rotated so the last entry has phase 0, then
    projected, and the last entry is pinned to exactly 1.  Zero entries have
    no phase; they map to 1 (phase 0), counted and warned as degenerate.
    """
    global _degenerate_entries
    z = np.asarray(values, dtype=complex).copy()
    if z.ndim != 1 or z.size == 0:
        raise ValueError("values must be a nonempty 1-D array")
    if augmented:
        ref = z[-1]
        if ref != 0:
            z = z * (np.conj(ref) / np.abs(ref))
    mags = np.abs(z)
    zero = mags == 0
    n_zero = int(zero.sum())
    if n_zero:
        _degenerate_entries += n_zero
        warnings.warn(f"{n_zero} zero entries projected to phase 0", RuntimeWarning, stacklevel=2)
        z[zero] = 1.0
        mags[zero] = 1.0
    out = z / mags
    if augmented:
        out[-1] = 1.0
    return PhaseVector(out, augmented=augmented)


def degenerate_projection_count() -> int:
    return _degenerate_entries


def reset_degenerate_projection_count() -> None:
    global _degenerate_entries
    _degenerate_entries = 0
