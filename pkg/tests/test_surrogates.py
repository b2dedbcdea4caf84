import numpy as np
import pytest

from irs_wpcn.surrogates import (
    surrogate_dl_energy,
    surrogate_exp_product,
    surrogate_quartic,
)


def random_phase_vector(rng, n):
    v = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    v[-1] = 1.0  # reference entry stays pinned
    return v


def test_quartic_tight_at_expansion():
    rng = np.random.default_rng(1)
    q = rng.normal(size=5) + 1j * rng.normal(size=5)
    w0 = random_phase_vector(rng, 5)
    t0 = 0.37
    s = surrogate_quartic(q, w0, t0)
    exact = t0 * np.abs(np.vdot(q, w0)) ** 4
    assert s.value(w0, t0) == pytest.approx(exact, rel=1e-12)


def test_quartic_never_exceeds_function():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = rng.integers(2, 7)
        q = rng.normal(size=n) + 1j * rng.normal(size=n)
        w0 = random_phase_vector(rng, n)
        t0 = rng.uniform(0.05, 0.95)
        s = surrogate_quartic(q, w0, t0)
        for _ in range(200):
            v = random_phase_vector(rng, n)
            tau0 = rng.uniform(1e-3, 1.0)
            exact = tau0 * np.abs(np.vdot(q, v)) ** 4
            assert s.value(v, tau0) <= exact + 1e-9 * max(1.0, exact)


def test_dl_energy_tight_and_dominated():
    rng = np.random.default_rng(3)
    q = rng.normal(size=6) + 1j * rng.normal(size=6)
    w0 = random_phase_vector(rng, 6)
    t0 = 0.5
    s = surrogate_dl_energy(q, w0, t0)
    exact = t0 * np.abs(np.vdot(q, w0)) ** 2
    assert s.value(w0, t0) == pytest.approx(exact, rel=1e-12)
    for _ in range(500):
        v = random_phase_vector(rng, 6)
        tau0 = rng.uniform(1e-3, 1.0)
        fn = tau0 * np.abs(np.vdot(q, v)) ** 2
        assert s.value(v, tau0) <= fn + 1e-9 * max(1.0, fn)


def test_exp_product_bound():
    s = surrogate_exp_product(0.0, 0.0)
    assert s.value(0.0, 0.0) == pytest.approx(1.0)
    assert s.value(np.log(2.0), 0.0) <= 2.0
    rng = np.random.default_rng(4)
    for _ in range(1000):
        x0, y0 = rng.uniform(-3, 3, 2)
        s = surrogate_exp_product(x0, y0)
        x, y = rng.uniform(-4, 4, 2)
        assert s.value(x, y) <= np.exp(x + y) + 1e-12
        assert s.value(x0, y0) == pytest.approx(np.exp(x0 + y0), rel=1e-12)


def test_degenerate_channel_gives_zero_bound():
    q = np.zeros(4, dtype=complex)
    w0 = np.ones(4, dtype=complex)
    s = surrogate_quartic(q, w0, 0.4)
    assert s.value(w0, 0.4) == 0.0
    assert s.value(w0, 0.9) == 0.0


def test_validation_errors():
    q = np.ones(3, dtype=complex)
    with pytest.raises(ValueError):
        surrogate_quartic(q, np.ones(2, dtype=complex), 0.5)
    with pytest.raises(ValueError):
        surrogate_dl_energy(q, q, 0.0)
    s = surrogate_quartic(q, q, 0.5)
    with pytest.raises(ValueError):
        s.value(q, -1.0)
