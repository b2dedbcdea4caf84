import json

import numpy as np
import pytest

from irs_wpcn.scenario import (
    ConfigError,
    GeometryError,
    SystemConfig,
    dbm_to_watts,
    default_config,
    generate_scenario,
    load_config,
    pathloss,
    save_config,
    watts_to_dbm,
)


def test_dbm_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(40.0) == pytest.approx(10.0)
    assert dbm_to_watts(-80.0) == pytest.approx(1e-11)
    assert watts_to_dbm(10.0) == pytest.approx(40.0)
    with pytest.raises(ValueError):
        watts_to_dbm(0.0)


def test_pathloss_reference_and_decay():
    # frozen oracle values: 1e-3 at 1 m with 30 dB reference loss,
    # then 10^-2.2 decay per decade of distance at exponent 2.2
    assert pathloss(1.0, 2.2, 30.0) == pytest.approx(1e-3, rel=1e-12)
    assert pathloss(10.0, 2.2, 30.0) == pytest.approx(6.309573444801933e-06, rel=1e-9)
    assert pathloss(5.0, 0.0, 0.0) == pytest.approx(1.0)
    with pytest.raises(GeometryError):
        pathloss(0.0, 2.2, 30.0)
    with pytest.raises(GeometryError):
        pathloss(-1.0, 2.2, 30.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        default_config(num_devices=0)
    with pytest.raises(ConfigError):
        default_config(hap_power_dbm=40.0, noise_power_w=-1.0)
    with pytest.raises(ConfigError):
        default_config(eta=1.5)
    with pytest.raises(ConfigError):
        default_config(weights=(-1.0, 1.0, 1.0, 1.0))
    with pytest.raises(ConfigError):
        default_config(num_devices=2, device_positions=((0, 0, 0),))
    cfg = default_config(num_devices=3, eta=0.5, weights=(1.0, 2.0, 0.5))
    assert cfg.eta == (0.5, 0.5, 0.5)
    assert cfg.weights == (1.0, 2.0, 0.5)


def test_generation_is_deterministic_and_frozen():
    cfg = default_config(seed=11)
    s1 = generate_scenario(cfg)
    s2 = generate_scenario(cfg)
    assert np.array_equal(s1.g, s2.g)
    assert np.array_equal(s1.h_r, s2.h_r)
    assert np.array_equal(s1.h_d, s2.h_d)
    assert np.array_equal(s1.positions, s2.positions)
    with pytest.raises(ValueError):
        s1.g[0] = 0.0


def test_device_streams_are_order_independent():
    # adding a device must not change the draws of existing devices
    small = generate_scenario(default_config(num_devices=2, seed=5))
    large = generate_scenario(default_config(num_devices=3, seed=5))
    assert np.array_equal(small.h_r, large.h_r[:2])
    assert np.array_equal(small.h_d, large.h_d[:2])
    assert np.array_equal(small.positions, large.positions[:2])
    assert np.array_equal(small.g, large.g)


def test_explicit_positions_and_distances():
    cfg = default_config(
        num_devices=2,
        device_positions=((7.0, 0.0, 0.0), (10.0, 0.0, 0.0)),
    )
    s = generate_scenario(cfg)
    assert np.allclose(s.positions[:, 0], [7.0, 10.0])
    # direct-link mean power matches pathloss at 7 m and 10 m by construction
    assert np.linalg.norm(np.asarray(cfg.hap_pos) - s.positions[0]) == pytest.approx(7.0)


def test_disk_positions_within_radius():
    cfg = default_config(num_devices=50, num_elements=2, seed=1)
    s = generate_scenario(cfg)
    d = np.linalg.norm(s.positions - np.asarray(cfg.device_center), axis=1)
    assert np.all(d <= cfg.device_radius + 1e-12)
    assert np.all(s.positions[:, 2] == 0.0)


def test_fading_mean_power_matches_pathloss():
    # sample mean of |h_d|^2 over many seeds approaches the pathloss value
    cfg0 = default_config(
        num_elements=2, num_devices=1, device_positions=((10.0, 0.0, 0.0),)
    )
    target = pathloss(10.0, cfg0.alpha_hap_device, cfg0.ref_loss_db)
    vals = np.empty(10_000)
    for seed in range(vals.size):
        s = generate_scenario(default_config(
            num_elements=2, num_devices=1,
            device_positions=((10.0, 0.0, 0.0),), seed=seed,
        ))
        vals[seed] = np.abs(s.h_d[0]) ** 2
    assert abs(vals.mean() - target) <= 0.05 * target


def test_cascade_rows_consistent_with_raw_channels():
    s = generate_scenario(default_config(seed=2))
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, s.num_elements))
        lhs = np.vdot(s.q[0], v)
        rhs = np.vdot(s.h_r[0], np.diag(v) @ s.g)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))
        v_bar = np.concatenate([v, [1.0]])
        assert abs(np.vdot(s.q_bar[0], v_bar) - (s.h_d[0] + lhs)) <= 1e-12


def test_config_roundtrip(tmp_path):
    cfg = default_config(num_devices=3, weights=(1.0, 2.0, 0.5), seed=9)
    path = tmp_path / "cfg.json"
    save_config(cfg, str(path))
    data = json.loads(path.read_text())
    assert "hap_power_dbm" in data and "hap_power_w" not in data
    loaded = load_config(str(path))
    assert loaded == cfg


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"num_elements": 4, "bogus_key": 1}')
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text("not json")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text('{"num_elements": 4}')
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_without_irs_zeroes_reflection_only():
    s = generate_scenario(default_config(seed=4))
    bare = s.without_irs()
    assert np.all(bare.q == 0)
    assert np.all(bare.q_bar[:, :-1] == 0)
    assert np.array_equal(bare.h_d, s.h_d)
    assert np.array_equal(bare.q_bar[:, -1], s.q_bar[:, -1])
