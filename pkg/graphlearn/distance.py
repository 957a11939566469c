"""
Distances between two learnt graphical models, computed from the per-iteration
log joint edge marginals ln u of their chains.
"""
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from graphlearn.errors import (
    DimensionMismatch,
    EmptyPostBurnin,
    EmptyTrace,
    LengthMismatch,
    ScaleRangeError,
    ZeroUncertainty,
)
from graphlearn.logs import get_logger
from graphlearn.mcmc import ChainTrace
from graphlearn.settings import DistanceConfig, ScaleMode
from graphlearn.srgg import edge_marginal

logger = get_logger(__name__)

SCALE_TOL = 1e-9

TraceLike = Union[ChainTrace, np.ndarray]


def _log_u(trace: TraceLike) -> np.ndarray:
    values = trace.log_u if isinstance(trace, ChainTrace) else trace
    return np.asarray(values, dtype=float).ravel()


def global_scale(trace1: TraceLike, trace2: TraceLike) -> float:
    """s = max of ln u over both traces and every iteration."""
    a, b = _log_u(trace1), _log_u(trace2)
    if a.size == 0 or b.size == 0:
        raise EmptyTrace("cannot scale an empty trace")
    return float(max(a.max(), b.max()))


def scaled_values(log_u: np.ndarray, s: float, mode: ScaleMode = "shift") -> np.ndarray:
    """
    Map ln u to the scaled u used by every distance.

        shift:    exp(ln u - s)
        divide:   exp(ln u / s), error if any value exceeds 1
        verbatim: exp(ln u / s), unchecked
    """
    log_u = np.asarray(log_u, dtype=float)
    if mode == "shift":
        return np.exp(log_u - s)
    if s == 0:
        raise ScaleRangeError("cannot divide by a zero scale")
    values = np.exp(log_u / s)
    if mode == "divide" and np.any(values > 1.0 + SCALE_TOL):
        raise ScaleRangeError(
            f"scaled values reach {values.max():.6g} > 1 with s={s:.6g}; use scale_mode='shift'"
        )
    return values


def _aligned(
    trace1: TraceLike,
    trace2: TraceLike,
    n_burnin: int,
    truncate_min: bool,
    n_burnin2: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    a = _log_u(trace1)[n_burnin + 1:]
    b = _log_u(trace2)[(n_burnin if n_burnin2 is None else n_burnin2) + 1:]
    if a.size == 0 or b.size == 0:
        raise EmptyPostBurnin("no post-burnin iterations to compare")
    if a.size != b.size:
        if not truncate_min:
            raise LengthMismatch(a.size, b.size, "post-burnin lengths")
        k = min(a.size, b.size)
        logger.info(f"⚠️ truncating post-burnin traces to {k} iterations")
        a, b = a[:k], b[:k]
    return a, b


def hellinger_distance(
    trace1: TraceLike,
    trace2: TraceLike,
    n_burnin: int = 0,
    s: Optional[float] = None,
    mode: ScaleMode = "shift",
    truncate_min: bool = False,
    n_burnin2: Optional[int] = None,
) -> float:
    """sqrt(mean over t > n_burnin of (sqrt(u1) - sqrt(u2))^2)."""
    s = global_scale(trace1, trace2) if s is None else s
    a, b = _aligned(trace1, trace2, n_burnin, truncate_min, n_burnin2)
    diff = np.sqrt(scaled_values(a, s, mode)) - np.sqrt(scaled_values(b, s, mode))
    return float(np.sqrt(np.mean(diff * diff)))


def bhattacharyya_distance(
    trace1: TraceLike,
    trace2: TraceLike,
    n_burnin: int = 0,
    s: Optional[float] = None,
    mode: ScaleMode = "shift",
    truncate_min: bool = False,
    n_burnin2: Optional[int] = None,
) -> float:
    """-ln(mean over t > n_burnin of sqrt(u1 * u2))."""
    s = global_scale(trace1, trace2) if s is None else s
    a, b = _aligned(trace1, trace2, n_burnin, truncate_min, n_burnin2)
    return float(-np.log(np.mean(np.sqrt(scaled_values(a, s, mode) * scaled_values(b, s, mode)))))


def model_uncertainty(trace: TraceLike, s: float, mode: ScaleMode = "shift") -> float:
    """Range of the scaled values over the whole trace, burn-in included."""
    values = _log_u(trace)
    if values.size == 0:
        raise EmptyTrace("cannot measure an empty trace")
    scaled = scaled_values(values, s, mode)
    return float(scaled.max() - scaled.min())


def delta_metric(d_h: float, d_max1: float, d_max2: float) -> float:
    """delta = D_H * |1/d_max1 - 1/d_max2|."""
    if not (d_max1 > 0 and d_max2 > 0):
        raise ZeroUncertainty(f"model uncertainty must be positive, got {d_max1} and {d_max2}")
    return float(d_h * abs(1.0 / d_max1 - 1.0 / d_max2))


def absolute_correlation(delta: float) -> float:
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    return float(np.exp(-delta))


def log_odds_divergence(
    trace1: TraceLike,
    trace2: TraceLike,
    n_burnin: int = 0,
    truncate_min: bool = False,
    n_burnin2: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Returns:
        (sum, mean) over t > n_burnin of ln u1 - ln u2
    """
    a, b = _aligned(trace1, trace2, n_burnin, truncate_min, n_burnin2)
    diff = a - b
    return float(np.sum(diff)), float(np.mean(diff))


def network_hellinger(marginals1: np.ndarray, marginals2: np.ndarray) -> float:
    """Discretized Hellinger over the p(p-1)/2 unordered pairs of two marginal matrices."""
    m1 = np.asarray(marginals1, dtype=float)
    m2 = np.asarray(marginals2, dtype=float)
    if m1.ndim != 2 or m1.shape[0] != m1.shape[1] or m1.shape != m2.shape:
        raise DimensionMismatch(f"marginal matrices differ in shape: {m1.shape} vs {m2.shape}")
    if m1.shape[0] < 2:
        raise DimensionMismatch("need at least 2 nodes")
    iu = np.triu_indices(m1.shape[0], k=1)
    diff = np.sqrt(m1[iu]) - np.sqrt(m2[iu])
    return float(np.sqrt(np.mean(diff * diff)))


def marginal_matrix(corr: np.ndarray) -> np.ndarray:
    """Edge marginals m(g=1 | |s_ij|) with a zero diagonal."""
    corr = np.asarray(corr, dtype=float)
    out = edge_marginal(np.ones_like(corr), np.abs(corr))
    np.fill_diagonal(out, 0.0)
    return out


def network_distance(corr1: np.ndarray, corr2: np.ndarray) -> float:
    """Network Hellinger between the SRGGs implied by two correlation matrices."""
    if np.shape(corr1) != np.shape(corr2):
        raise DimensionMismatch(f"correlation matrices differ in shape: {np.shape(corr1)} vs {np.shape(corr2)}")
    return network_hellinger(marginal_matrix(corr1), marginal_matrix(corr2))


class DistanceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    scale: float
    scale_mode: ScaleMode
    n_post: int
    d_hellinger: float
    d_bhattacharyya: float
    d_max: Tuple[float, float]
    delta: float
    abs_corr: float
    log_odds_total: float
    log_odds_mean: float

    @model_validator(mode="after")
    def _consistent(self):
        expected = self.d_hellinger * abs(1.0 / self.d_max[0] - 1.0 / self.d_max[1])
        if not np.isclose(self.delta, expected, rtol=1e-12, atol=1e-15):
            raise ValueError("delta disagrees with d_hellinger and d_max")
        if not np.isclose(self.abs_corr, np.exp(-self.delta), rtol=1e-12, atol=0.0):
            raise ValueError("abs_corr must equal exp(-delta)")
        return self

    def summary(self) -> str:
        return "\n".join([
            f"scale s            : {self.scale:.6g} ({self.scale_mode})",
            f"post-burnin pairs  : {self.n_post}",
            f"Hellinger D_H      : {self.d_hellinger:.6g}",
            f"Bhattacharyya D_B  : {self.d_bhattacharyya:.6g}",
            f"D_max (1, 2)       : {self.d_max[0]:.6g}, {self.d_max[1]:.6g}",
            f"delta              : {self.delta:.6g}",
            f"|corr| = exp(-delta): {self.abs_corr:.6g}",
            f"log-odds sum / mean: {self.log_odds_total:.6g} / {self.log_odds_mean:.6g}",
        ])


def compare_traces(
    trace1: TraceLike,
    trace2: TraceLike,
    cfg: DistanceConfig = DistanceConfig(),
    n_burnin2: Optional[int] = None,
) -> DistanceReport:
    """Every distance of the suite, from one shared global scale."""
    s = global_scale(trace1, trace2)
    a, _ = _aligned(trace1, trace2, cfg.n_burnin, cfg.truncate_min, n_burnin2)
    common = dict(n_burnin=cfg.n_burnin, s=s, mode=cfg.scale_mode, truncate_min=cfg.truncate_min, n_burnin2=n_burnin2)
    d_h = hellinger_distance(trace1, trace2, **common)
    d_b = bhattacharyya_distance(trace1, trace2, **common)
    d_max = (model_uncertainty(trace1, s, cfg.scale_mode), model_uncertainty(trace2, s, cfg.scale_mode))
    delta = delta_metric(d_h, *d_max)
    total, mean = log_odds_divergence(trace1, trace2, cfg.n_burnin, cfg.truncate_min, n_burnin2)
    return DistanceReport(
        scale=s,
        scale_mode=cfg.scale_mode,
        n_post=int(a.size),
        d_hellinger=d_h,
        d_bhattacharyya=d_b,
        d_max=d_max,
        delta=delta,
        abs_corr=absolute_correlation(delta),
        log_odds_total=total,
        log_odds_mean=mean,
    )
