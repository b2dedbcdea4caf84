import json

import numpy as np
import pytest

from irs_wpcn.allocation import EffectiveRates, allocate
from irs_wpcn.kernel import ConvexSubproblem, InfeasibleStartError, solve_subproblem


def test_disk_linear_objective_analytic():
    # maximize Re(c^H z) over |z_i| <= 1 has optimum sum |c_i| at z = c/|c|
    rng = np.random.default_rng(0)
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    prob = ConvexSubproblem(n_real=0, n_complex=3)
    obj = np.zeros(6)
    obj[prob.idx_re(0)], obj[prob.idx_re(1)], obj[prob.idx_re(2)] = c.real
    obj[prob.idx_im(0)], obj[prob.idx_im(1)], obj[prob.idx_im(2)] = c.imag
    prob.set_linear_objective(obj)
    for i in range(3):
        prob.add_disk(i)
    x, report = solve_subproblem(prob, np.zeros(6), tol=1e-9)
    assert report.status == "optimal"
    assert prob.objective(x) == pytest.approx(np.abs(c).sum(), abs=1e-6)
    z = x[prob.idx_re(0) : prob.idx_re(0) + 3] + 1j * x[prob.idx_im(0) : prob.idx_im(0) + 3]
    assert np.allclose(z, c / np.abs(c), atol=1e-3)


def test_exp_constraint_analytic():
    # maximize x subject to exp(x) <= 2 has optimum ln 2
    prob = ConvexSubproblem(n_real=1, n_complex=0)
    prob.set_linear_objective(np.array([1.0]))
    prob.add_exp(lhs={0: 1.0}, lhs_const=0.0, rhs={}, rhs_const=2.0)
    x, report = solve_subproblem(prob, np.zeros(1), tol=1e-9)
    assert report.status == "optimal"
    assert x[0] == pytest.approx(np.log(2.0), abs=1e-6)


def test_ratio_constraint_analytic():
    # maximize x subject to 1/tau + x <= 2 and tau <= 1: optimum tau = 1, x = 1
    prob = ConvexSubproblem(n_real=2, n_complex=0)
    prob.set_linear_objective(np.array([0.0, 1.0]))
    prob.add_ratio(beta=1.0, denom_index=0, power=1.0, coeffs={1: 1.0}, ub=2.0)
    prob.add_linear_ineq({0: 1.0}, 1.0)
    prob.add_nonneg(0, floor=1e-9)
    x, report = solve_subproblem(prob, np.array([0.5, -0.5]), tol=1e-9)
    assert report.status == "optimal"
    assert x[0] == pytest.approx(1.0, abs=1e-5)
    assert x[1] == pytest.approx(1.0, abs=1e-5)


def test_ratio_constraint_sqrt_power():
    # maximize x subject to 1/sqrt(tau) + x <= 2, tau <= 1: optimum x = 1
    prob = ConvexSubproblem(n_real=2, n_complex=0)
    prob.set_linear_objective(np.array([0.0, 1.0]))
    prob.add_ratio(beta=1.0, denom_index=0, power=0.5, coeffs={1: 1.0}, ub=2.0)
    prob.add_linear_ineq({0: 1.0}, 1.0)
    prob.add_nonneg(0, floor=1e-9)
    x, report = solve_subproblem(prob, np.array([0.25, -0.5]), tol=1e-9)
    assert report.status == "optimal"
    assert x[1] == pytest.approx(1.0, abs=1e-5)


def test_perspective_allocation_cross_check():
    # pure time/energy split solved by the cone kernel must agree with the
    # dedicated water-filling routine
    h = np.array([2.0, 0.5])  # harvest rate per second of charging
    rho = np.array([3.0, 8.0])  # uplink gain over noise
    w = np.array([1.0, 1.3])
    T = 1.0
    # variables: [tau0, t1, t2, e1, e2]
    prob = ConvexSubproblem(n_real=5, n_complex=0)
    for k in range(2):
        prob.add_perspective(t_index=1 + k, s_index=3 + k, weight=w[k], noise=1.0 / rho[k])
    prob.add_linear_ineq({0: 1.0, 1: 1.0, 2: 1.0}, T)
    for k in range(2):
        prob.add_linear_ineq({3 + k: 1.0, 0: -h[k]}, 0.0)  # e_k <= h_k tau0
        prob.add_nonneg(1 + k, floor=1e-12)
        prob.add_nonneg(3 + k, floor=0.0)
    prob.add_nonneg(0, floor=1e-12)
    start = np.array([0.3, 0.3, 0.3, 0.9 * h[0] * 0.3, 0.9 * h[1] * 0.3])
    x, report = solve_subproblem(prob, start, tol=1e-10)
    assert report.status == "optimal"
    alloc, rate = allocate(EffectiveRates(h * rho, w), T, energy_rates=h)
    assert prob.objective(x) == pytest.approx(rate, rel=1e-6)
    assert x[0] == pytest.approx(alloc.tau0, abs=2e-3)


def test_equality_constraint_pins_subspace():
    # maximize Re z subject to |z| <= 1 and Im z = 0.3
    prob = ConvexSubproblem(n_real=0, n_complex=1)
    prob.set_linear_objective(np.array([1.0, 0.0]))
    prob.add_disk(0)
    prob.add_linear_eq({prob.idx_im(0): 1.0}, 0.3)
    x, report = solve_subproblem(prob, np.array([0.0, 0.3]), tol=1e-9)
    assert report.status == "optimal"
    assert x[1] == pytest.approx(0.3, abs=1e-9)
    assert x[0] == pytest.approx(np.sqrt(1.0 - 0.09), abs=1e-5)


def test_objective_never_decreases_from_start():
    rng = np.random.default_rng(4)
    for trial in range(5):
        n = 4
        prob = ConvexSubproblem(n_real=n, n_complex=0)
        prob.set_linear_objective(rng.normal(size=n))
        for i in range(n):
            prob.add_linear_ineq({i: 1.0}, 1.0)
            prob.add_linear_ineq({i: -1.0}, 1.0)  # box [-1, 1]
        start = rng.uniform(-0.5, 0.5, n)
        x, report = solve_subproblem(prob, start, tol=1e-8)
        assert prob.objective(x) >= prob.objective(start) - 1e-12
        assert report.status == "optimal"
        assert report.newton_iters > 0


def test_infeasible_start_rejected():
    prob = ConvexSubproblem(n_real=1, n_complex=0)
    prob.set_linear_objective(np.array([1.0]))
    prob.add_linear_ineq({0: 1.0}, 1.0)
    with pytest.raises(InfeasibleStartError):
        solve_subproblem(prob, np.array([2.0]))


def test_no_constraints_rejected():
    prob = ConvexSubproblem(n_real=1, n_complex=0)
    prob.set_linear_objective(np.array([1.0]))
    with pytest.raises(ValueError):
        solve_subproblem(prob, np.array([0.0]))


def test_builder_validation():
    prob = ConvexSubproblem(n_real=2, n_complex=1)
    with pytest.raises(ValueError):
        prob.add_perspective(t_index=0, s_index=1, weight=-1.0, noise=1.0)
    with pytest.raises(ValueError):
        prob.add_perspective(t_index=0, s_index=1, weight=1.0, noise=0.0)
    with pytest.raises(ValueError):
        prob.add_ratio(beta=-1.0, denom_index=0, power=1.0, coeffs={}, ub=0.0)
    with pytest.raises(IndexError):
        prob.add_disk(3)


def test_dump_roundtrips_as_json(tmp_path):
    prob = ConvexSubproblem(n_real=1, n_complex=1)
    prob.set_linear_objective(np.array([1.0, 0.0, 0.0]))
    prob.add_disk(0)
    prob.add_nonneg(0, floor=0.0)
    path = tmp_path / "subproblem.json"
    prob.dump(path)
    payload = json.loads(path.read_text())
    assert payload["n_real"] == 1
    assert payload["n_complex"] == 1
