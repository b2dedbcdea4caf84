"""Result containers shared by the allocation and optimizer layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import PhaseVector


@dataclass(frozen=True)
class PhasePlan:
    """Phase configuration over the whole block.

    Slot 0 is the downlink vector v0 (also reused on the uplink by any device
    assigned to slot 0).  Slots 1..J hold the uplink reconfigurations.
    `assignment[k]` is the slot whose vector serves device k's uplink.
    """

    v0: PhaseVector
    ul_vectors: tuple = ()
    assignment: np.ndarray = None

    def __post_init__(self):
        if not (isinstance(self.v0, PhaseVector) and self.v0.augmented):
            raise ValueError("v0 must be an augmented PhaseVector")
        uls = tuple(self.ul_vectors)
        for v in uls:
            if not (isinstance(v, PhaseVector) and v.augmented):
                raise ValueError("ul_vectors must be augmented PhaseVectors")
            if len(v) != len(self.v0):
                raise ValueError("ul_vectors must match v0 length")
        object.__setattr__(self, "ul_vectors", uls)
        a = np.asarray(self.assignment, dtype=int)
        if a.ndim != 1:
            raise ValueError("assignment must be a 1-D integer array")
        if a.size and (a.min() < 0 or a.max() > len(uls)):
            raise ValueError(f"assignment slots must lie in [0, {len(uls)}]")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def num_slots(self) -> int:
        return len(self.ul_vectors) + 1

    def vector_for_slot(self, j: int) -> PhaseVector:
        if j == 0:
            return self.v0
        return self.ul_vectors[j - 1]


@dataclass(frozen=True)
class Allocation:
    """Time and energy split: tau0 for harvesting, t[k, j]/e[k, j] per uplink use.

    e holds transmit energies (e = p * t), so e is zero wherever t is zero.
    """

    tau0: float
    t: np.ndarray   # (K, S) seconds
    e: np.ndarray   # (K, S) joules

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        e = np.asarray(self.e, dtype=float)
        if t.shape != e.shape or t.ndim != 2:
            raise ValueError("t and e must share a (K, S) shape")
        if self.tau0 < 0 or np.any(t < 0) or np.any(e < 0):
            raise ValueError("times and energies must be nonnegative")
        if np.any(e[t == 0] != 0):
            raise ValueError("transmit energy requires transmit time")
        t = t.copy(); t.setflags(write=False)
        e = e.copy(); e.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "e", e)

    @property
    def power(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(self.t > 0, self.e / np.where(self.t > 0, self.t, 1.0), 0.0)
        return p

    @property
    def total_time(self) -> float:
        return float(self.tau0 + self.t.sum())


@dataclass
class SolveDiagnostics:
    """Bookkeeping from an iterative solve."""

    traces: tuple = ()          # per-restart tuples of accepted objective values
    best_restart: int = 0
    outer_iters: int = 0
    status: str = "optimal"     # optimal | max-iters | numerical-failure
    subproblem_failures: int = 0
    runtime_s: float = 0.0
    notes: str = ""

    @property
    def trace(self) -> tuple:
        if not self.traces:
            return ()
        return self.traces[self.best_restart]


@dataclass(frozen=True)
class Solution:
    """A feasible operating point with its exact weighted throughput."""

    plan: PhasePlan
    alloc: Allocation
    throughput: float            # weighted sum rate [bits/Hz, normalized by T]
    device_rates: np.ndarray     # (K,) unweighted per-device rates
    diagnostics: SolveDiagnostics = field(default_factory=SolveDiagnostics)

    def __post_init__(self):
        r = np.asarray(self.device_rates, dtype=float).copy()
        r.setflags(write=False)
        object.__setattr__(self, "device_rates", r)
