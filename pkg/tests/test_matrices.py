import logging
import math

import numpy as np
import pytest

from app.errors import NotSymmetric
from app.stability import (
    Interval,
    certificate_from_witness,
    find_diagonal_d,
    is_class_p,
    is_class_p0_plus,
    is_negative_definite,
    negative_set,
    p1_eval,
    p2_eval,
    p2_eval_expanded,
    signed_principal_minors,
    symmetric_part,
    volterra_lyapunov_check,
)
from app.stability.matrices import as_matrix3, p1_interval, p2_coefficients, p2_interval, principal_minors

EXAMPLE = np.array([
    [-2.0, 1.0, 0.0],
    [0.0, -3.0, 1.0],
    [1.0, 0.0, -4.0],
])


class TestPrincipalMinors:
    def test_known_matrix(self):
        minors, in_p = signed_principal_minors(EXAMPLE)
        assert minors.as_dict() == {"M1": -2, "M2": -3, "M3": -4, "M12": 6, "M13": 8, "M23": 12, "M123": -23}
        assert minors.signed() == (2, 3, 4, 6, 8, 12, 23)
        assert in_p

    def test_det_matches_numpy(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            m = rng.normal(size=(3, 3))
            assert principal_minors(m).M123 == pytest.approx(np.linalg.det(m), abs=1e-12)

    def test_desnanot_jacobi_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            m = rng.normal(size=(3, 3))
            minors = principal_minors(m)
            b1, b2, m12, m23 = p2_coefficients(m)
            assert m12 * m23 - m[1, 1] * minors.M123 == pytest.approx(b1 * b2, abs=1e-10)

    def test_p2_forms_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            m = rng.normal(size=(3, 3))
            y = float(10.0 ** rng.uniform(-2, 2))
            assert p2_eval(m, y) == pytest.approx(p2_eval_expanded(m, y), rel=1e-9, abs=1e-10 * (1.0 + y) ** 2)

    def test_class_p(self):
        assert is_class_p(-np.eye(3))
        assert not is_class_p(np.eye(3))
        assert not is_class_p(np.diag([-1.0, -1.0, 1.0]))

    def test_class_p0_plus(self):
        m = np.array([[0.0, 1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
        assert is_class_p0_plus(m)
        assert not is_class_p(m)
        assert not is_class_p0_plus(np.zeros((3, 3)))
        assert is_class_p0_plus(-np.eye(3))

    def test_shape_and_finiteness(self):
        with pytest.raises(ValueError):
            as_matrix3(np.eye(2))
        with pytest.raises(ValueError):
            as_matrix3(np.full((3, 3), np.nan))


class TestIntervals:
    def test_negative_set_between_roots(self):
        interval = negative_set(1.0, -3.0, 2.0)
        assert (interval.lo, interval.hi) == pytest.approx((1.0, 2.0))

    def test_negative_set_empty(self):
        assert negative_set(1.0, 2.0, 1.0).is_empty
        assert negative_set(1.0, 3.0, 2.0).is_empty
        assert negative_set(0.0, 1.0, 5.0).is_empty
        assert negative_set(0.0, 0.0, 1.0).is_empty

    def test_negative_set_linear(self):
        assert negative_set(0.0, -1.0, 2.0) == Interval(2.0, math.inf)
        assert negative_set(0.0, -1.0, 0.0) == Interval(0.0, math.inf)
        assert negative_set(0.0, 1.0, -5.0) == Interval(0.0, 5.0)

    def test_negative_set_small_root_precision(self):
        interval = negative_set(1.0, -1e8, 1.0)
        assert interval.lo == pytest.approx(1e-8, rel=1e-12)
        assert interval.hi == pytest.approx(1e8, rel=1e-12)

    def test_interval_operations(self):
        a, b = Interval(1.0, 5.0), Interval(3.0, math.inf)
        assert a.intersect(b) == Interval(3.0, 5.0)
        assert a.intersect(Interval(6.0, 7.0)).is_empty
        assert a.midpoint() == 3.0
        assert b.midpoint() == 6.0
        assert Interval(0.0, math.inf).midpoint() == 1.0
        assert Interval.empty().midpoint() is None
        assert a.contains(2.0) and not a.contains(5.0)


class TestCrossCriterion:
    def test_diagonal_stable(self):
        stable, y = volterra_lyapunov_check(np.diag([-1.0, -2.0, -3.0]))
        assert stable
        assert y > 0.0

    def test_witness_makes_both_negative(self):
        stable, y = volterra_lyapunov_check(EXAMPLE)
        assert stable
        assert p1_eval(EXAMPLE, y) < 0.0
        assert p2_eval(EXAMPLE, y) < 0.0
        assert p1_interval(EXAMPLE).contains(y) and p2_interval(EXAMPLE).contains(y)

    def test_not_class_p(self):
        assert volterra_lyapunov_check(np.eye(3)) == (False, None)

    def test_class_p_with_disjoint_intervals(self):
        # p1 < 0 on (0.029, 1.371), p2 < 0 on (2.61, 15304)
        m = np.array([[-1.0, 1.9, 2.0], [-40.8, -1.0, -1.0], [-0.4, -0.5, -1.0]])
        assert is_class_p(m)
        assert p1_interval(m).hi < p2_interval(m).lo
        assert volterra_lyapunov_check(m) == (False, None)
        assert find_diagonal_d(m, seed=0, budget=20_000) is None


class TestCertificates:
    def test_symmetric_part(self):
        d = (1.0, 2.0, 3.0)
        s = symmetric_part(EXAMPLE, d)
        expected = EXAMPLE @ np.diag(d) + np.diag(d) @ EXAMPLE.T
        assert s == pytest.approx(expected)
        assert np.array_equal(s, s.T)

    def test_negative_definite(self):
        assert is_negative_definite(-np.eye(3))
        assert is_negative_definite(-1e-8 * np.eye(3))
        assert not is_negative_definite(np.diag([-1.0, 1.0, -1.0]))
        assert not is_negative_definite(np.zeros((3, 3)))

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            is_negative_definite(EXAMPLE)

    def test_from_witness(self):
        _, y = volterra_lyapunov_check(EXAMPLE)
        d = certificate_from_witness(EXAMPLE, y)
        assert d is not None
        assert max(d) == pytest.approx(1.0)
        assert is_negative_definite(symmetric_part(EXAMPLE, d))

    def test_find_diagonal_d(self):
        rng = np.random.default_rng(4)
        found = 0
        for _ in range(200):
            m = rng.normal(size=(3, 3)) - 3.0 * np.eye(3)
            stable, _ = volterra_lyapunov_check(m)
            d = find_diagonal_d(m, seed=0, budget=5_000)
            if stable:
                assert d is not None
                found += 1
            if d is not None:
                assert min(d) > 0.0 and max(d) == pytest.approx(1.0)
                assert is_negative_definite(symmetric_part(m, d))
        assert found > 50

    def test_exhausted_budget_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert find_diagonal_d(np.eye(3), seed=0, budget=2_000) is None
        assert "no diagonal certificate" in caplog.text

    def test_deterministic(self):
        m = np.array([[-1.0, 2.0, 0.0], [-2.0, -1.0, 0.5], [0.0, 0.5, -1.0]])
        assert find_diagonal_d(m, seed=7) == find_diagonal_d(m, seed=7)
