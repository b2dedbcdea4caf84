"""Composite rate coefficients consumed by the allocation layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EffectiveRates:
    """Per-device composite coefficients c_k [1/s] and objective weights.

    c_k folds harvest efficiency, downlink power, both channel gains, and the
    noise floor into one number: the uplink SNR of device k equals
    c_k * tau0 / tau_k.
    """

    c: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).copy()
        w = np.asarray(self.weights, dtype=float).copy()
        if c.ndim != 1 or c.shape != w.shape:
            raise ValueError("c and weights must be 1-D arrays of equal length")
        if np.any(c < 0) or np.any(w < 0):
            raise ValueError("c and weights must be nonnegative")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "weights", w)
