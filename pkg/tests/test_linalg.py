import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.linalg import block_diag

from graphlearn.errors import NotSymmetric, RidgeExhausted, SingularFactor
from graphlearn.linalg import (
    LowerTriangularFactor,
    RidgeTally,
    cholesky_with_ridge,
    invert_spd,
    is_positive_definite,
    log_det_spd,
    ridge_event_count,
)


def _random_spd(rng, p):
    b = rng.normal(size=(p, p))
    return b @ b.T + p * np.eye(p)


def _cofactor_det(m):
    if m.shape[0] == 1:
        return m[0, 0]
    total = 0.0
    for j in range(m.shape[0]):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * _cofactor_det(minor)
    return total


class TestCholeskyWithRidge:
    def test_identity(self):
        factor = cholesky_with_ridge(np.eye(3))
        assert factor.ridge == 0.0
        np.testing.assert_array_equal(factor.L, np.eye(3))

    def test_known_factor(self):
        factor = cholesky_with_ridge(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(factor.L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-14)
        np.testing.assert_allclose(factor.L @ factor.L.T, [[4.0, 2.0], [2.0, 3.0]], atol=1e-14)

    def test_rank_one_needs_smallest_ridge(self):
        m = np.ones((2, 2))
        before = ridge_event_count()
        factor = cholesky_with_ridge(m)
        assert factor.ridge == 1e-10
        assert np.max(np.abs(factor.L @ factor.L.T - (m + factor.ridge * np.eye(2)))) < 1e-10
        assert ridge_event_count() == before + 1

    def test_reconstruction_bound(self, rng):
        for p in (1, 4, 12):
            m = _random_spd(rng, p)
            factor = cholesky_with_ridge(m)
            err = np.max(np.abs(factor.L @ factor.L.T - (m + factor.ridge * np.eye(p))))
            assert err < 1e-9 * (1 + np.max(np.abs(m)))

    def test_asymmetric_rejected(self):
        with pytest.raises(NotSymmetric):
            cholesky_with_ridge(np.array([[1.0, 0.5], [0.4, 1.0]]))

    def test_tiny_asymmetry_symmetrized(self):
        m = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
        factor = cholesky_with_ridge(m)
        assert factor.ridge == 0.0

    def test_negative_definite_exhausts_schedule(self):
        with pytest.raises(RidgeExhausted):
            cholesky_with_ridge(-np.eye(2))

    def test_strict_check(self):
        assert is_positive_definite(np.eye(2))
        assert not is_positive_definite(np.ones((2, 2)))


class TestRidgeTally:
    def test_counts_inside_scope_only(self):
        cholesky_with_ridge(np.ones((2, 2)))
        with RidgeTally() as tally:
            cholesky_with_ridge(np.ones((2, 2)))
            cholesky_with_ridge(np.eye(2))
        cholesky_with_ridge(np.ones((2, 2)))
        assert tally.count == 1

    def test_nested_scopes_both_count(self):
        with RidgeTally() as outer:
            cholesky_with_ridge(np.ones((2, 2)))
            with RidgeTally() as inner:
                cholesky_with_ridge(np.ones((3, 3)))
        assert (outer.count, inner.count) == (2, 1)

    def test_threads_keep_separate_counts(self):
        barrier = threading.Barrier(2)

        def escalate(times):
            with RidgeTally() as tally:
                barrier.wait()
                for _ in range(times):
                    cholesky_with_ridge(np.ones((2, 2)))
                barrier.wait()
            return tally.count

        with ThreadPoolExecutor(max_workers=2) as pool:
            counts = list(pool.map(escalate, (3, 5)))
        assert counts == [3, 5]


class TestInvertSpd:
    def test_identity(self):
        np.testing.assert_array_equal(invert_spd(cholesky_with_ridge(np.eye(4))), np.eye(4))

    def test_diagonal(self):
        inv = invert_spd(cholesky_with_ridge(np.diag([2.0, 4.0])))
        np.testing.assert_allclose(inv, np.diag([0.5, 0.25]), atol=1e-15)

    def test_multiply_back(self, rng):
        a = _random_spd(rng, 5)
        inv = invert_spd(cholesky_with_ridge(a))
        np.testing.assert_allclose(inv @ a, np.eye(5), atol=1e-9)
        np.testing.assert_array_equal(inv, inv.T)

    def test_round_trip_large(self, rng):
        a = _random_spd(rng, 100)
        factor = cholesky_with_ridge(a)
        inv = invert_spd(factor)
        np.testing.assert_allclose(inv @ (a + factor.ridge * np.eye(100)), np.eye(100), atol=1e-8)

    def test_singular_factor(self):
        factor = LowerTriangularFactor(L=np.diag([1.0, 0.0]), ridge=0.0)
        with pytest.raises(SingularFactor):
            invert_spd(factor)
        with pytest.raises(SingularFactor):
            log_det_spd(factor)


class TestLogDet:
    def test_identity_is_zero(self):
        assert log_det_spd(cholesky_with_ridge(np.eye(6))) == 0.0

    def test_diagonal_e(self):
        assert log_det_spd(cholesky_with_ridge(np.diag([np.e, np.e]))) == pytest.approx(2.0, abs=1e-14)

    def test_matches_cofactor_expansion(self, rng):
        a = _random_spd(rng, 4)
        assert log_det_spd(cholesky_with_ridge(a)) == pytest.approx(np.log(_cofactor_det(a)), abs=1e-9)

    def test_additive_over_blocks(self, rng):
        a, b = _random_spd(rng, 3), _random_spd(rng, 2)
        whole = log_det_spd(cholesky_with_ridge(block_diag(a, b)))
        parts = log_det_spd(cholesky_with_ridge(a)) + log_det_spd(cholesky_with_ridge(b))
        assert whole == pytest.approx(parts, abs=1e-10)
