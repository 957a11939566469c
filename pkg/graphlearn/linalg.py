"""
Dense symmetric positive definite kernels: ridge-adjusted Cholesky,
inversion by triangular solves, and log-determinant.
"""
import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from graphlearn.errors import NotSymmetric, RidgeExhausted, SingularFactor
from graphlearn.logs import get_logger
from graphlearn.settings import RidgeConfig

logger = get_logger(__name__)

DEFAULT_RIDGE = RidgeConfig()

# process-wide count of factorizations that needed eps > 0
_ridge_events = 0
_ridge_lock = threading.Lock()
_local = threading.local()


class RidgeTally:
    """Escalations recorded on the current thread while the tally is open."""

    def __init__(self):
        self.count = 0
        self._outer = None

    def __enter__(self) -> "RidgeTally":
        self._outer = getattr(_local, "tally", None)
        _local.tally = self
        return self

    def __exit__(self, *exc) -> None:
        _local.tally = self._outer


def ridge_event_count() -> int:
    with _ridge_lock:
        return _ridge_events


def _record_ridge_event() -> None:
    global _ridge_events
    with _ridge_lock:
        _ridge_events += 1
    tally = getattr(_local, "tally", None)
    while tally is not None:
        tally.count += 1
        tally = tally._outer


@dataclass(frozen=True)
class LowerTriangularFactor:
    """L with L @ L.T == m + ridge * I."""
    L: np.ndarray
    ridge: float
    pivot_floor: float = DEFAULT_RIDGE.pivot_floor

    @property
    def dim(self) -> int:
        return self.L.shape[0]


def symmetrize(m: np.ndarray, tol: float = DEFAULT_RIDGE.symmetry_tol) -> np.ndarray:
    """
    Check relative symmetry and return (m + m.T) / 2.

    Raises:
        NotSymmetric: if max|m - m.T| exceeds tol * max(1, max|m|)
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    asym = float(np.max(np.abs(m - m.T)))
    if asym > tol * scale:
        raise NotSymmetric(f"matrix asymmetry {asym:.3e} exceeds tolerance")
    return (m + m.T) / 2.0


def cholesky_with_ridge(m: np.ndarray, ridge: RidgeConfig = DEFAULT_RIDGE) -> LowerTriangularFactor:
    """
    Factorize m + eps*I for the first eps in the ridge schedule that succeeds.

    Args:
        m: symmetric matrix
        ridge: schedule, pivot floor and symmetry tolerance

    Returns:
        LowerTriangularFactor recording the eps used
    """
    a = symmetrize(m, ridge.symmetry_tol)
    eye = np.eye(a.shape[0])
    for eps in ridge.schedule:
        try:
            L = cholesky(a + eps * eye, lower=True, check_finite=True)
        except (LinAlgError, ValueError):
            continue
        if np.all(np.diag(L) > ridge.pivot_floor):
            if eps > 0:
                _record_ridge_event()
                logger.debug(f"ridge escalated to eps={eps:g} for {a.shape[0]}x{a.shape[0]} matrix")
            return LowerTriangularFactor(L=L, ridge=eps, pivot_floor=ridge.pivot_floor)
    raise RidgeExhausted(f"no ridge in {ridge.schedule} gives pivots above {ridge.pivot_floor:g}")


def _check_pivots(factor: LowerTriangularFactor) -> None:
    if np.any(np.diag(factor.L) <= factor.pivot_floor):
        raise SingularFactor("Cholesky factor has a diagonal entry below the pivot floor")


def invert_spd(factor: LowerTriangularFactor) -> np.ndarray:
    """(L L^T)^-1 from a forward and a back substitution, symmetrized."""
    _check_pivots(factor)
    eye = np.eye(factor.dim)
    y = solve_triangular(factor.L, eye, lower=True)
    inv = solve_triangular(factor.L.T, y, lower=False)
    return (inv + inv.T) / 2.0


def log_det_spd(factor: LowerTriangularFactor) -> float:
    _check_pivots(factor)
    return float(2.0 * np.sum(np.log(np.diag(factor.L))))


STRICT_RIDGE = RidgeConfig(schedule=(0.0,), symmetry_tol=1e-9)


def is_positive_definite(m: np.ndarray, ridge: RidgeConfig = STRICT_RIDGE) -> bool:
    """Strict test: plain Cholesky with no ridge."""
    try:
        cholesky_with_ridge(m, ridge)
    except (RidgeExhausted, NotSymmetric):
        return False
    return True
