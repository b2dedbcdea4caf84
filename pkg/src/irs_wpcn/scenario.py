"""Problem instances: system parameters, geometry, and fading channel draws.

A scenario describes one harvest-then-transmit network: a power-and-access
point, a reflecting surface with N passive elements, and K single-antenna
devices that first harvest RF energy on the downlink and then transmit their
data one by one on the uplink.  All internal math is in linear units (watts,
meters, seconds); dBm/dB appear only at the config boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent configuration values."""


class GeometryError(ValueError):
    """Geometry that makes a pathloss undefined (non-positive distance)."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(watts) + 30.0


def pathloss(distance_m: float, exponent: float, ref_loss_db: float) -> float:
    """Average channel power gain at `distance_m` meters.

    Distance-power law with a reference loss at 1 m:
    gain = 10^(-ref_loss_db/10) * d^(-exponent).
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise GeometryError(f"non-positive link distance {distance_m!r}")
    return 10.0 ** (-ref_loss_db / 10.0) * d ** (-exponent)


def _as_pos(value, name) -> tuple[float, float, float]:
    arr = tuple(float(v) for v in value)
    if len(arr) != 3:
        raise ConfigError(f"{name} must be a 3-D position, got {value!r}")
    return arr


def _per_device(raw, K: int, name: str) -> np.ndarray:
    """Broadcast a scalar or per-device field to K entries.

    A uniform tuple of the wrong length collapses back to its scalar, so
    dataclasses.replace(cfg, num_devices=...) keeps working; mixed values of
    the wrong length are ambiguous and rejected.
    """
    vals = np.asarray(raw, dtype=float)
    if vals.ndim == 1 and vals.size > 1 and vals.size != K and np.all(vals == vals.flat[0]):
        vals = vals.flat[:1]
    try:
        return np.broadcast_to(vals, (K,))
    except ValueError:
        raise ConfigError(f"{name} must be a scalar or one value per device") from None


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one network instance.

    Powers are stored in watts (configs on disk carry them in dBm), distances
    in meters, times in seconds.  `eta` and `weights` accept a scalar and are
    broadcast to per-device tuples.
    """

    num_elements: int                     # N, reflecting elements
    num_devices: int                      # K, energy-harvesting devices
    hap_power_w: float                    # P_A, downlink transmit power [W]
    noise_power_w: float                  # sigma^2 at the access point [W]
    total_time_s: float = 1.0             # block length T [s]
    eta: tuple = 0.8                      # per-device harvest efficiency in (0, 1]
    weights: tuple = 1.0                  # per-device rate weights, >= 0
    hap_pos: tuple = (0.0, 0.0, 0.0)      # [m]
    irs_pos: tuple = (10.0, 0.0, 4.0)     # [m]
    device_center: tuple = (10.0, 0.0, 0.0)   # disk center for random drops [m]
    device_radius: float = 1.5            # disk radius [m]
    device_positions: tuple | None = None     # explicit (K,3) positions, overrides disk
    alpha_hap_irs: float = 2.2            # pathloss exponents per link class
    alpha_irs_device: float = 2.2
    alpha_hap_device: float = 3.4
    ref_loss_db: float = 30.0             # loss at 1 m reference distance [dB]
    seed: int = 0                         # root seed for all random draws

    def __post_init__(self):
        if int(self.num_elements) < 1 or int(self.num_devices) < 1:
            raise ConfigError("num_elements and num_devices must be >= 1")
        object.__setattr__(self, "num_elements", int(self.num_elements))
        object.__setattr__(self, "num_devices", int(self.num_devices))
        if self.hap_power_w <= 0 or self.noise_power_w <= 0:
            raise ConfigError("hap_power_w and noise_power_w must be positive")
        if self.total_time_s <= 0:
            raise ConfigError("total_time_s must be positive")
        K = self.num_devices
        eta = _per_device(self.eta, K, "eta")
        if np.any(eta <= 0) or np.any(eta > 1):
            raise ConfigError("eta entries must lie in (0, 1]")
        object.__setattr__(self, "eta", tuple(eta))
        w = _per_device(self.weights, K, "weights")
        if np.any(w < 0):
            raise ConfigError("weights must be nonnegative")
        object.__setattr__(self, "weights", tuple(w))
        object.__setattr__(self, "hap_pos", _as_pos(self.hap_pos, "hap_pos"))
        object.__setattr__(self, "irs_pos", _as_pos(self.irs_pos, "irs_pos"))
        object.__setattr__(self, "device_center", _as_pos(self.device_center, "device_center"))
        if self.device_radius < 0:
            raise ConfigError("device_radius must be >= 0")
        if self.device_positions is not None:
            pos = tuple(_as_pos(p, "device_positions entry") for p in self.device_positions)
            if len(pos) != K:
                raise ConfigError(f"device_positions must list {K} positions")
            object.__setattr__(self, "device_positions", pos)
        object.__setattr__(self, "seed", int(self.seed))


def default_config(**overrides) -> SystemConfig:
    """Reference parameter set; override any SystemConfig field by name.

    `hap_power_dbm` / `noise_power_dbm` overrides are accepted and converted.
    """
    values = dict(
        num_elements=16,
        num_devices=4,
        hap_power_w=dbm_to_watts(40.0),
        noise_power_w=dbm_to_watts(-80.0),
    )
    if "hap_power_dbm" in overrides:
        overrides["hap_power_w"] = dbm_to_watts(overrides.pop("hap_power_dbm"))
    if "noise_power_dbm" in overrides:
        overrides["noise_power_w"] = dbm_to_watts(overrides.pop("noise_power_dbm"))
    values.update(overrides)
    return SystemConfig(**values)


# Named, order-independent random streams.  Each stream owns a Philox
# generator keyed by (root seed, stream id, *index), so adding devices,
# growing the surface, or drawing streams in a different order never shifts
# existing draws; instances of different sizes share their channel prefixes.
_STREAM_IDS = {
    "hap_irs": 0,
    "position": 1,
    "device": 2,
    "baseline_random": 3,
    "sca_restart": 4,
    "sdr_sampling": 5,
}


def stream(seed: int, kind: str, *index: int) -> np.random.Generator:
    if kind not in _STREAM_IDS:
        raise KeyError(f"unknown stream kind {kind!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAM_IDS[kind], *index))
    return np.random.Generator(np.random.Philox(ss))


def _cn(rng: np.random.Generator, size) -> np.ndarray:
    # circularly-symmetric complex gaussian, unit variance per entry; each
    # entry consumes two consecutive draws, so a longer vector extends a
    # shorter one instead of reshuffling it
    shape = (size,) if isinstance(size, int) else tuple(size)
    draws = rng.standard_normal(shape + (2,))
    return (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2.0)


@dataclass(frozen=True)
class Scenario:
    """One realized instance: geometry plus fading draws.

    `q[k]` is stored so that q[k]^H v equals h_r[k]^H diag(v) g, i.e. the
    reflected cascade as a linear form in the phase vector v; `q_bar[k]` is the
    augmented row [q[k]; conj(h_d[k])] so that q_bar[k]^H [v; 1] = h_d[k] + q[k]^H v.
    """

    config: SystemConfig
    positions: np.ndarray    # (K, 3) device positions [m]
    g: np.ndarray            # (N,) HAP->IRS channel
    h_r: np.ndarray          # (K, N) IRS->device channels
    h_d: np.ndarray          # (K,) direct HAP->device coefficients (additive term)
    q: np.ndarray            # (K, N) cascaded rows
    q_bar: np.ndarray        # (K, N+1) augmented rows

    def __post_init__(self):
        for name in ("positions", "g", "h_r", "h_d", "q", "q_bar"):
            getattr(self, name).setflags(write=False)

    @property
    def num_elements(self) -> int:
        return self.config.num_elements

    @property
    def num_devices(self) -> int:
        return self.config.num_devices

    @property
    def eta(self) -> np.ndarray:
        return np.asarray(self.config.eta)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.config.weights)

    @property
    def hap_power(self) -> float:
        return self.config.hap_power_w

    @property
    def noise_power(self) -> float:
        return self.config.noise_power_w

    @property
    def total_time(self) -> float:
        return self.config.total_time_s

    def without_irs(self) -> "Scenario":
        """Copy with every reflected path zeroed; direct links unchanged."""
        q_bar = np.array(self.q_bar)
        q_bar[:, :-1] = 0.0
        return Scenario(
            config=self.config,
            positions=np.array(self.positions),
            g=np.zeros_like(self.g),
            h_r=np.zeros_like(self.h_r),
            h_d=np.array(self.h_d),
            q=np.zeros_like(self.q),
            q_bar=q_bar,
        )


def generate_scenario(config: SystemConfig) -> Scenario:
    """Draw device drops and Rayleigh fading for `config` (deterministic in seed)."""
    N, K = config.num_elements, config.num_devices
    hap = np.asarray(config.hap_pos)
    irs = np.asarray(config.irs_pos)

    if config.device_positions is not None:
        positions = np.asarray(config.device_positions, dtype=float)
    else:
        center = np.asarray(config.device_center)
        positions = np.empty((K, 3))
        for k in range(K):
            rng = stream(config.seed, "position", k)
            radius = config.device_radius * np.sqrt(rng.uniform())
            angle = 2.0 * np.pi * rng.uniform()
            positions[k] = center + np.array([radius * np.cos(angle), radius * np.sin(angle), 0.0])

    d_hap_irs = float(np.linalg.norm(hap - irs))
    pl_hap_irs = pathloss(d_hap_irs, config.alpha_hap_irs, config.ref_loss_db)
    g = np.sqrt(pl_hap_irs) * _cn(stream(config.seed, "hap_irs"), N)

    h_r = np.empty((K, N), dtype=complex)
    h_d = np.empty(K, dtype=complex)
    for k in range(K):
        d_irs_dev = float(np.linalg.norm(irs - positions[k]))
        d_hap_dev = float(np.linalg.norm(hap - positions[k]))
        pl_irs_dev = pathloss(d_irs_dev, config.alpha_irs_device, config.ref_loss_db)
        pl_hap_dev = pathloss(d_hap_dev, config.alpha_hap_device, config.ref_loss_db)
        rng = stream(config.seed, "device", k)
        # direct link first: its draw must not move when the surface grows
        h_d[k] = np.sqrt(pl_hap_dev) * _cn(rng, ())
        h_r[k] = np.sqrt(pl_irs_dev) * _cn(rng, N)

    q = h_r * np.conj(g)[None, :]
    q_bar = np.concatenate([q, np.conj(h_d)[:, None]], axis=1)
    return Scenario(config=config, positions=positions, g=g, h_r=h_r, h_d=h_d, q=q, q_bar=q_bar)


# --- config file I/O -------------------------------------------------------
#
# On-disk format: flat JSON object mirroring SystemConfig fields, except that
# powers are carried in dBm (hap_power_dbm, noise_power_dbm).

_POWER_FIELDS = {"hap_power_w": "hap_power_dbm", "noise_power_w": "noise_power_dbm"}


def save_config(config: SystemConfig, path: str) -> None:
    data = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name in _POWER_FIELDS:
            data[_POWER_FIELDS[f.name]] = watts_to_dbm(value)
        else:
            data[f.name] = value
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path: str) -> SystemConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a flat object")
    known = {f.name for f in fields(SystemConfig)} - set(_POWER_FIELDS)
    kwargs = {}
    for key, value in data.items():
        if key == "hap_power_dbm":
            kwargs["hap_power_w"] = dbm_to_watts(float(value))
        elif key == "noise_power_dbm":
            kwargs["noise_power_w"] = dbm_to_watts(float(value))
        elif key in known:
            kwargs[key] = value if not isinstance(value, list) else _listify(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    missing = {"num_elements", "num_devices", "hap_power_w", "noise_power_w"} - set(kwargs)
    if missing:
        raise ConfigError(f"config file {path!r} missing required keys: {sorted(missing)}")
    return SystemConfig(**kwargs)


def _listify(value):
    # JSON arrays arrive as lists; nested lists (positions) become tuples
    if value and isinstance(value[0], list):
        return tuple(tuple(v) for v in value)
    return tuple(value)
