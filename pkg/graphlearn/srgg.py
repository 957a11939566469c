"""
Soft random geometric graph core.

The connection function is the closed-form edge marginal

    m(g | rho) = K * [sqrt(2/pi) * exp(-d^2 / 2) - |d| * erfc(|d| / sqrt(2))],  d = g - |rho|

and the node distance replaces the erfc term by +|d| * erf(|d| / sqrt(2)), so
that distance - marginal == |d|. K is fixed at 1.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import erf, erfc
from scipy.stats import chi2, ncx2, norm

from graphlearn.errors import InvalidCorrelationEntry, SingularCorrelation, RidgeExhausted, SingularFactor
from graphlearn.linalg import DEFAULT_RIDGE, cholesky_with_ridge, invert_spd
from graphlearn.settings import RidgeConfig

K = 1.0
SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))
SRGG_SIGMA = float(1.0 / np.sqrt(2.0))
CLAMP_TOL = 1e-9

ArrayLike = Union[float, np.ndarray]


def _checked_abs_rho(abs_rho: ArrayLike) -> np.ndarray:
    r = np.asarray(abs_rho, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < -CLAMP_TOL) or np.any(r > 1.0 + CLAMP_TOL):
        raise InvalidCorrelationEntry("absolute correlation outside [0, 1]")
    return np.clip(r, 0.0, 1.0)


def _checked_g(g: ArrayLike) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if np.any((g != 0.0) & (g != 1.0)):
        raise InvalidCorrelationEntry("edge value must be 0 or 1")
    return g


def _affinity(ad: np.ndarray) -> np.ndarray:
    return K * (SQRT_2_OVER_PI * np.exp(-0.5 * ad * ad) - ad * erfc(ad / np.sqrt(2.0)))


def _distance(ad: np.ndarray) -> np.ndarray:
    return K * (SQRT_2_OVER_PI * np.exp(-0.5 * ad * ad) + ad * erf(ad / np.sqrt(2.0)))


def _scalar_or_array(x: np.ndarray) -> ArrayLike:
    return float(x) if x.ndim == 0 else x


def edge_marginal(g: ArrayLike, abs_rho: ArrayLike) -> ArrayLike:
    """
    Closed-form edge marginal, vectorized over g and abs_rho.

    Args:
        g: edge value(s) in {0, 1}
        abs_rho: |partial correlation| in [0, 1] (1e-9 slack is clamped)

    Returns:
        Marginal value(s), strictly positive for |g - abs_rho| <= 1
    """
    ad = np.abs(_checked_g(g) - _checked_abs_rho(abs_rho))
    return _scalar_or_array(_affinity(ad))


def node_distance(g: ArrayLike, abs_rho: ArrayLike) -> ArrayLike:
    ad = np.abs(_checked_g(g) - _checked_abs_rho(abs_rho))
    return _scalar_or_array(_distance(ad))


class EdgeInput(BaseModel):
    model_config = ConfigDict(frozen=True)

    g: int = Field(ge=0, le=1)
    abs_rho: float
    scale_K: float = K

    @field_validator("abs_rho")
    @classmethod
    def _in_unit_interval(cls, v):
        if v < -CLAMP_TOL or v > 1.0 + CLAMP_TOL:
            raise ValueError(f"abs_rho must lie in [0, 1], got {v}")
        return min(max(v, 0.0), 1.0)

    @field_validator("scale_K")
    @classmethod
    def _unit_scale(cls, v):
        if v != K:
            raise ValueError("scale_K is fixed at 1")
        return v

    def marginal(self) -> float:
        return edge_marginal(self.g, self.abs_rho)

    def distance(self) -> float:
        return node_distance(self.g, self.abs_rho)


def normal_pair_distance(mu_i: ArrayLike, mu_j: ArrayLike, sigma: float) -> ArrayLike:
    """E|X_i - X_j| for independent X ~ Normal(mu, sigma^2)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    delta = np.abs(np.asarray(mu_i, dtype=float) - np.asarray(mu_j, dtype=float))
    value = (2.0 * sigma / np.sqrt(np.pi)) * np.exp(-delta ** 2 / (4.0 * sigma ** 2)) + delta * erf(delta / (2.0 * sigma))
    return _scalar_or_array(value)


def affinity_curve(d_grid: np.ndarray) -> Dict[str, np.ndarray]:
    """Connection-function data over a grid of |d| in [0, 1] (g=1 and g=0 branches)."""
    r = 1.0 - np.asarray(d_grid, dtype=float)
    return {
        "abs_d": np.asarray(d_grid, dtype=float),
        "marginal_g1": edge_marginal(np.ones_like(r), r),
        "marginal_g0": edge_marginal(np.zeros_like(r), 1.0 - r),
        "distance": node_distance(np.ones_like(r), r),
    }


def partial_correlation(sigma_c: np.ndarray, ridge: RidgeConfig = DEFAULT_RIDGE) -> np.ndarray:
    """
    rho_ij = -psi_ij / sqrt(psi_ii psi_jj) with psi the precision matrix.

    Raises:
        SingularCorrelation: if sigma_c cannot be inverted under the ridge schedule
    """
    try:
        psi = invert_spd(cholesky_with_ridge(sigma_c, ridge))
    except (RidgeExhausted, SingularFactor) as e:
        raise SingularCorrelation(f"correlation matrix is not invertible: {e}") from e
    scale = np.sqrt(np.diag(psi))
    rho = -psi / np.outer(scale, scale)
    np.fill_diagonal(rho, 1.0)
    if np.any(np.abs(rho) > 1.0 + CLAMP_TOL):
        raise SingularCorrelation("partial correlation outside [-1, 1]")
    return np.clip(rho, -1.0, 1.0)


def threshold_edge_set(marginals: np.ndarray, tau: float) -> List[Tuple[int, int]]:
    """Undirected edges (i < j) whose marginal is >= tau."""
    m = np.asarray(marginals, dtype=float)
    rows, cols = np.nonzero(np.triu(m >= tau, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


class PointProcessParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    means: Tuple[float, ...]
    sigma: float = Field(default=SRGG_SIGMA, gt=0)
    tau: float = Field(default=0.05, ge=0, le=1)


def heaviside_count(marginals_row: np.ndarray, tau: float) -> int:
    """Q: number of entries with marginal >= tau (H(0) = 1)."""
    return int(np.count_nonzero(np.asarray(marginals_row, dtype=float) >= tau))


def poisson_intensity(params: PointProcessParams, marginals_row: np.ndarray, x: float, node: int = 0) -> float:
    """lambda_i(x) = Normal(x; mu_i, sigma) * Q."""
    q = heaviside_count(marginals_row, params.tau)
    return float(norm.pdf(x, loc=params.means[node], scale=params.sigma) * q)


@dataclass(frozen=True)
class SimulationReport:
    predicted: float
    expected: float
    empirical_mean: float
    standard_error: float
    z_score: float
    expected_z_score: float
    q: int
    density: float
    trials: int


def _disc_mass(offsets: np.ndarray, radius: float, sigma: float) -> np.ndarray:
    # P(|X - c| <= a) for X ~ Normal(c + (offset, 0), sigma^2 I): non-central chi-square, 2 dof
    t = (radius / sigma) ** 2
    nc = (np.asarray(offsets, dtype=float) / sigma) ** 2
    central = chi2.cdf(t, 2)
    return np.where(nc > 0.0, ncx2.cdf(t, 2, np.where(nc > 0.0, nc, 1.0)), central)


def validate_point_process(
    params: PointProcessParams,
    marginals: np.ndarray,
    radius: float,
    trials: int,
    seed: int,
    node: int = 0,
    x: Optional[float] = None,
) -> SimulationReport:
    """
    Monte-Carlo check of E[N(a)] = f * pi * a^2 * Q around one node.

    Nodes live in the plane. Every node j whose marginal in row `node` clears
    tau is placed at X_j ~ Normal((mu_j, 0), sigma^2 I); the others are left
    out. N(a) counts the placements inside the disc of radius a centred at
    (x, 0).

    `predicted` is f * pi * a^2 * Q with f the planar density of node i at the
    centre. It is the small-radius limit and only holds when the kept nodes
    share mu_i. `expected` is the exact mean for the given means and radius.

    Args:
        params: means, sigma and tau
        marginals: p x p marginal matrix; row `node` is used
        radius: disc radius a in [0, 1]
        trials: number of independent placements
        seed: generator seed
        node: index i of the centre node
        x: centre of the disc on the first axis (defaults to mu_i)

    Returns:
        SimulationReport with z-scores against both means
    """
    if not 0.0 <= radius <= 1.0:
        raise ValueError(f"radius must lie in [0, 1], got {radius}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    row = np.asarray(marginals, dtype=float)[node]
    means = np.asarray(params.means, dtype=float)
    if means.size != row.size:
        raise ValueError(f"{means.size} means for {row.size} nodes")
    centre = means[node] if x is None else float(x)
    s2 = params.sigma ** 2
    kept = row >= params.tau
    q = int(np.count_nonzero(kept))
    f = float(np.exp(-((centre - means[node]) ** 2) / (2.0 * s2)) / (2.0 * np.pi * s2))
    predicted = f * np.pi * radius ** 2 * q
    offsets = means[kept] - centre
    expected = float(np.sum(_disc_mass(offsets, radius, params.sigma)))

    rng = np.random.default_rng(seed)
    xy = rng.normal(scale=params.sigma, size=(trials, q, 2))
    xy[..., 0] += offsets
    counts = np.count_nonzero(np.einsum("tqk,tqk->tq", xy, xy) <= radius ** 2, axis=1)

    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    z = (mean - predicted) / se if se > 0 else 0.0
    z_exact = (mean - expected) / se if se > 0 else 0.0
    return SimulationReport(
        predicted=float(predicted),
        expected=expected,
        empirical_mean=mean,
        standard_error=se,
        z_score=float(z),
        expected_z_score=float(z_exact),
        q=q,
        density=f,
        trials=trials,
    )
