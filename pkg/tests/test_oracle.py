import numpy as np
import pytest

from canondual import model, oracle
from canondual.errors import TooLarge
from canondual.integer import QipInstance
from canondual.model import CanonicalTerm, Problem, TermKind

from conftest import WELL_X1, double_well


def test_enumerate_signs_textbook():
    res = oracle.enumerate_signs(QipInstance(Q=np.array([[0.0, 1.0], [1.0, 0.0]]),
                                             f=np.array([3.0, 0.0])))
    assert np.array_equal(res.best_x, [1.0, -1.0])
    assert res.best_value == -4.0
    assert res.samples == 4


def test_enumerate_signs_linear_objective():
    n = 5
    res = oracle.enumerate_signs(QipInstance(Q=np.zeros((n, n)), f=np.ones(n)))
    assert np.array_equal(res.best_x, np.ones(n))
    assert res.best_value == -float(n)


def test_enumerate_signs_constant_objective_lexicographic_tie():
    # x_i^2 = 1 makes the objective constant; smallest assignment wins
    n = 4
    res = oracle.enumerate_signs(QipInstance(Q=np.eye(n), f=np.zeros(n)))
    assert res.best_value == pytest.approx(n / 2.0)
    assert np.array_equal(res.best_x, -np.ones(n))


def test_enumerate_signs_budget_guard():
    with pytest.raises(TooLarge):
        oracle.enumerate_signs(QipInstance(Q=np.eye(25), f=np.zeros(25)))


def test_enumeration_agrees_with_batch_scan(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        A = rng.standard_normal((n, n))
        inst = QipInstance(Q=0.5 * (A + A.T), f=rng.standard_normal(n))
        res = oracle.enumerate_signs(inst)
        # independent vectorized check over all assignments
        ks = np.arange(1 << n)
        X = (((ks[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1) * 2 - 1).astype(float)
        vals = 0.5 * np.einsum("ij,ij->i", X, X @ inst.Q) - X @ inst.f
        assert res.best_value == pytest.approx(float(np.min(vals)), abs=1e-9)
        assert np.array_equal(res.best_x, X[int(np.argmin(vals))])


def test_grid_double_well():
    res = oracle.grid_multistart(double_well(0.5), (-4.0, 4.0), grid_points=4001,
                                 local_refine=False)
    assert res.best_x[0] == pytest.approx(WELL_X1, abs=2e-3)
    assert res.method == "grid"
    assert res.samples == 4001


def test_grid_symmetric_pair_of_minima():
    res = oracle.grid_multistart(double_well(0.0), (-4.0, 4.0), grid_points=4001)
    assert abs(res.best_x[0]) == pytest.approx(2.0, abs=1e-6)
    assert res.best_value == pytest.approx(0.0, abs=1e-9)


def test_grid_convex_instance_matches_closed_form(rng):
    D = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    p = Problem(n=2, terms=[CanonicalTerm(TermKind.PLAIN_QUADRATIC, D, 1.0)],
                f=np.array([0.7, -0.4]))
    res = oracle.grid_multistart(p, (-3.0, 3.0), grid_points=41)
    expected = np.linalg.solve(D.T @ D, p.f)
    assert np.allclose(res.best_x, expected, atol=1e-6)


def test_multistart_used_above_grid_cap(rng):
    p = Problem(n=7, terms=[CanonicalTerm(TermKind.PLAIN_QUADRATIC,
                                          np.eye(7), 1.0)], f=np.zeros(7))
    res = oracle.grid_multistart(p, (-1.0, 1.0), seed=1)
    assert res.method == "multistart"


def test_fd_gradient_quadratic():
    g = oracle.fd_gradient(lambda z: 0.5 * float(z @ z), np.array([1.0, -2.0, 0.3]))
    assert np.allclose(g, [1.0, -2.0, 0.3], atol=1e-8)


def test_fd_gradient_double_well_matches_symbolic():
    p = double_well(0.5)
    g = oracle.fd_gradient(lambda z: model.eval_primal(p, z), np.array([1.0]))
    # d/dx [0.5(0.5x^2-2)^2 - 0.5x] = x(0.5x^2-2) - 0.5
    assert g[0] == pytest.approx(1.0 * (0.5 - 2.0) - 0.5, abs=1e-8)


def test_legendre_check_quartic_samples():
    t = CanonicalTerm(TermKind.QUARTIC, np.array([[1.0]]), 1.0, -2.0)
    rep = oracle.legendre_check(t, [0.0, 1.0, 3.0])
    assert rep.max_pairing_residual <= 1e-12
    assert rep.max_grid_gap <= 1e-4


def test_legendre_check_exponential_unit_point():
    t = CanonicalTerm(TermKind.EXPONENTIAL, np.array([[1.0]]), 1.0)
    rep = oracle.legendre_check(t, [0.0])
    # map at 0 gives sigma = 1, conjugate -1, pairing 0 + (-1) = 0
    assert rep.max_pairing_residual <= 1e-12


def test_legendre_check_xlogx_pins_conjugate_form():
    t = CanonicalTerm(TermKind.XLOGX, np.array([[1.0]]), 1.0)
    rep = oracle.legendre_check(t, [1.0])
    # at measure 1 the map gives sigma = 1 and the grid supremum must agree
    # with exp(sigma - 1) = 1
    assert rep.max_pairing_residual <= 1e-12
    assert rep.max_grid_gap <= 1e-4
