"""
Likelihood and posterior evaluations: matrix-Normal density, the posterior of
the column correlation matrix with the row covariance integrated out, the
Monte-Carlo normalization estimate, and the SRGG edge/variance likelihood.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import solve_triangular

from graphlearn.data import StandardizedDataset
from graphlearn.errors import (
    DimensionMismatch,
    NonpositiveVariance,
    RidgeExhausted,
    SingularCorrelation,
    SingularFactor,
)
from graphlearn.linalg import DEFAULT_RIDGE, LowerTriangularFactor, cholesky_with_ridge, log_det_spd
from graphlearn.logs import get_logger
from graphlearn.settings import MarginalPosteriorConfig, RidgeConfig

logger = get_logger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))
MAX_REPLICATE_REDRAWS = 10
_STRICT = RidgeConfig(schedule=(0.0,))

DataLike = Union[StandardizedDataset, np.ndarray]


def _values(data: DataLike) -> np.ndarray:
    z = np.asarray(data.values if isinstance(data, StandardizedDataset) else data, dtype=float)
    if z.ndim != 2:
        raise DimensionMismatch(f"data must be 2-D, got shape {z.shape}")
    return z


def _factor_correlation(sigma_c: np.ndarray, ridge: RidgeConfig) -> LowerTriangularFactor:
    try:
        return cholesky_with_ridge(sigma_c, ridge)
    except (RidgeExhausted, SingularFactor) as e:
        raise SingularCorrelation(f"column correlation matrix is singular: {e}") from e


def _check_square(m: np.ndarray, size: int, what: str) -> None:
    if np.shape(m) != (size, size):
        raise DimensionMismatch(f"{what} must be {size}x{size}, got {np.shape(m)}")


def matrix_normal_loglik(
    data: DataLike,
    sigma_r: np.ndarray,
    sigma_c: np.ndarray,
    convention: str = "printed",
    ridge: RidgeConfig = DEFAULT_RIDGE,
) -> float:
    """
    Zero-mean matrix-Normal log-density of the n x p data.

    Args:
        data: standardized n x p values
        sigma_r: n x n row covariance
        sigma_c: p x p column covariance
        convention: "printed" weights log|Sigma_C| by p/2 and log|Sigma_R| by n/2;
            "textbook" swaps the two weights

    Returns:
        Log-density
    """
    z = _values(data)
    n, p = z.shape
    _check_square(sigma_r, n, "sigma_r")
    _check_square(sigma_c, p, "sigma_c")
    fr = _factor_correlation(sigma_r, ridge)
    fc = _factor_correlation(sigma_c, ridge)
    a = solve_triangular(fr.L, z, lower=True)
    b = solve_triangular(fc.L, a.T, lower=True)
    quad = float(np.sum(b * b))
    w_c, w_r = (p, n) if convention == "printed" else (n, p)
    return -0.5 * n * p * LOG_2PI - 0.5 * w_c * log_det_spd(fc) - 0.5 * w_r * log_det_spd(fr) - 0.5 * quad


def row_independent_log_likelihood(data: DataLike, sigma_c: np.ndarray, ridge: RidgeConfig = DEFAULT_RIDGE) -> float:
    """Matrix-Normal log-density at Sigma_R = I (textbook weights), using only p x p algebra."""
    z = _values(data)
    n, p = z.shape
    _check_square(sigma_c, p, "sigma_c")
    fc = _factor_correlation(sigma_c, ridge)
    w = solve_triangular(fc.L, z.T, lower=True)
    return -0.5 * n * p * LOG_2PI - 0.5 * n * log_det_spd(fc) - 0.5 * float(np.sum(w * w))


def _gram_log_det(
    z: np.ndarray,
    fc: LowerTriangularFactor,
    ridge: RidgeConfig,
    noise_sd: Optional[Tuple[float, ...]] = None,
) -> float:
    """
    log-determinant of Z Sigma_C^-1 Z^T, evaluated on the smaller of its n x n
    form and the p x p form L^-1 Z^T Z L^-T (same non-zero spectrum).
    """
    n, p = z.shape
    w = solve_triangular(fc.L, z.T, lower=True)
    if n <= p:
        gram = w.T @ w
        if noise_sd is not None:
            noise_inv = solve_triangular(fc.L, np.diag(np.asarray(noise_sd, dtype=float)), lower=True)
            gram = gram + float(np.sum(noise_inv * noise_inv)) * np.eye(n)
    else:
        gram = w @ w.T
        if noise_sd is not None:
            noise_inv = solve_triangular(fc.L, np.diag(np.asarray(noise_sd, dtype=float)), lower=True)
            gram = gram + n * (noise_inv @ noise_inv.T)
    gram = (gram + gram.T) / 2.0
    return log_det_spd(cholesky_with_ridge(gram, ridge))


def _gram_exponent(n: int, p: int, convention: str) -> float:
    return 0.5 * (n + 1) if convention == "printed" else 0.5 * (p + 1)


def normalization_terms(
    sigma_c: np.ndarray,
    cfg: MarginalPosteriorConfig,
    ridge: RidgeConfig = DEFAULT_RIDGE,
) -> np.ndarray:
    """
    Per-replicate terms |D'_k Sigma_C^-1 D'_k^T|^(-(n'+1)/2) for k = 1..K.

    Replicates are n' x p datasets whose rows are standard Normals coloured by
    the Cholesky factor of Sigma_C. A replicate whose Gram matrix is not
    strictly positive definite is redrawn, at most 10 times per k.
    """
    p = np.shape(sigma_c)[0]
    fc = _factor_correlation(sigma_c, ridge)
    rng = np.random.default_rng(cfg.seed)
    n_rep = cfg.replicate_rows
    exponent = _gram_exponent(n_rep, p, cfg.convention)
    terms = np.empty(cfg.replicate_count)
    redraws = 0
    for k in range(cfg.replicate_count):
        for attempt in range(MAX_REPLICATE_REDRAWS + 1):
            replicate = rng.standard_normal((n_rep, p)) @ fc.L.T
            try:
                log_det = _gram_log_det(replicate, fc, _STRICT)
                break
            except RidgeExhausted:
                redraws += 1
        else:
            raise RidgeExhausted(f"replicate {k} stayed degenerate after {MAX_REPLICATE_REDRAWS} redraws")
        terms[k] = np.exp(-exponent * log_det)
    if redraws:
        logger.warning(f"⚠️ {redraws} degenerate replicates redrawn (K={cfg.replicate_count}, n'={n_rep})")
    return terms


def estimate_normalization(
    sigma_c: np.ndarray,
    cfg: MarginalPosteriorConfig,
    ridge: RidgeConfig = DEFAULT_RIDGE,
) -> float:
    """c-hat: mean of the replicate terms, summed in index order."""
    return float(np.mean(normalization_terms(sigma_c, cfg, ridge)))


def marginalized_log_posterior(
    data: DataLike,
    sigma_c: np.ndarray,
    cfg: MarginalPosteriorConfig = MarginalPosteriorConfig(),
    ridge: RidgeConfig = DEFAULT_RIDGE,
) -> float:
    """
    Log posterior of Sigma_C with the row covariance integrated out, up to a
    constant:

        printed:  -(p/2) log|Sigma_C| - ((n+1)/2) log|Z Sigma_C^-1 Z^T| [- log c]
        textbook: -(n/2) log|Sigma_C| - ((p+1)/2) log|Z Sigma_C^-1 Z^T| [- log c]

    Args:
        data: standardized n x p values
        sigma_c: candidate column correlation matrix
        cfg: normalization switch, replicate settings, convention, noise hook
        ridge: ridge schedule for both factorizations

    Returns:
        Unnormalized log posterior
    """
    z = _values(data)
    n, p = z.shape
    _check_square(sigma_c, p, "sigma_c")
    if cfg.noise_sd is not None and len(cfg.noise_sd) != p:
        raise DimensionMismatch(f"noise_sd needs {p} entries, got {len(cfg.noise_sd)}")
    fc = _factor_correlation(sigma_c, ridge)
    w_c = 0.5 * p if cfg.convention == "printed" else 0.5 * n
    value = -w_c * log_det_spd(fc) - _gram_exponent(n, p, cfg.convention) * _gram_log_det(z, fc, ridge, cfg.noise_sd)
    if cfg.use_normalization:
        value -= np.log(estimate_normalization(sigma_c, cfg, ridge))
    return float(value)


@dataclass(frozen=True)
class GraphParams:
    """
    SRGG state over the p(p-1)/2 unordered pairs, stored in upper-triangle
    (row-major) order.
    """
    dim: int
    edges: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        m = self.dim * (self.dim - 1) // 2
        if self.edges.shape != (m,) or self.variances.shape != (m,):
            raise DimensionMismatch(f"expected {m} pair entries for dim {self.dim}")
        if np.any((self.edges != 0) & (self.edges != 1)):
            raise ValueError("edges must be 0 or 1")

    @classmethod
    def from_matrices(cls, edges: np.ndarray, variances: np.ndarray) -> "GraphParams":
        edges = np.asarray(edges)
        variances = np.asarray(variances, dtype=float)
        p = edges.shape[0]
        if not np.array_equal(edges, edges.T) or np.any(np.diag(edges) != 0):
            raise ValueError("edge matrix must be symmetric with zero diagonal")
        iu = np.triu_indices(p, k=1)
        return cls(dim=p, edges=edges[iu].astype(np.uint8), variances=variances[iu].copy())

    @classmethod
    def constant(cls, dim: int, edge: int, variance: float) -> "GraphParams":
        m = dim * (dim - 1) // 2
        return cls(dim=dim, edges=np.full(m, edge, dtype=np.uint8), variances=np.full(m, float(variance)))

    def _to_matrix(self, values: np.ndarray, dtype) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=dtype)
        iu = np.triu_indices(self.dim, k=1)
        out[iu] = values
        return out + out.T

    def edge_matrix(self) -> np.ndarray:
        return self._to_matrix(self.edges, np.uint8)

    def variance_matrix(self) -> np.ndarray:
        return self._to_matrix(self.variances, float)


def upper_abs(rho: np.ndarray) -> np.ndarray:
    """|rho_ij| for i < j in row-major order."""
    rho = np.asarray(rho, dtype=float)
    return np.abs(rho[np.triu_indices(rho.shape[0], k=1)])


def graph_log_likelihood_terms(g: GraphParams, rho: np.ndarray) -> np.ndarray:
    """Per-pair terms -0.5 log(2 pi v) - (g - |rho|)^2 / (2 v)."""
    if np.shape(rho) != (g.dim, g.dim):
        raise DimensionMismatch(f"rho must be {g.dim}x{g.dim}")
    v = g.variances
    if np.any(~(v > 0)):
        raise NonpositiveVariance("edge variances must be positive")
    d = g.edges - upper_abs(rho)
    return -0.5 * np.log(2.0 * np.pi * v) - d * d / (2.0 * v)


def graph_log_likelihood(g: GraphParams, rho: np.ndarray) -> float:
    """Sum over unordered pairs i < j, each counted once."""
    return float(np.sum(graph_log_likelihood_terms(g, rho)))
