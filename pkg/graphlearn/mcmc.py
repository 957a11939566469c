"""
Metropolis sampler with a 2-block update.

Block 1 moves the column correlation matrix Sigma_C (truncated-Normal random
walk on every off-diagonal entry) against its own posterior; the partial
correlations rho are refreshed on acceptance. Block 2 moves the SRGG state
(Bernoulli(|rho|) edges, truncated-Normal variances) against the edge/variance
likelihood given rho.
"""
import hashlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtr, ndtri

from graphlearn.data import StandardizedDataset, empirical_column_correlation
from graphlearn.errors import ChainFailure, EmptyPostBurnin, NumericError
from graphlearn.linalg import RidgeTally, is_positive_definite
from graphlearn.logs import get_logger
from graphlearn.posterior import (
    GraphParams,
    graph_log_likelihood_terms,
    marginalized_log_posterior,
    row_independent_log_likelihood,
    upper_abs,
)
from graphlearn.settings import McmcConfig
from graphlearn.srgg import edge_marginal, partial_correlation, threshold_edge_set

logger = get_logger(__name__)

SOFT_DIM_LIMIT = 20
MIN_POST_BURNIN = 100
INITIAL_EDGE_THRESHOLD = 0.5
INITIAL_VARIANCE = 0.5

CorrTarget = Callable[[np.ndarray], float]
GraphTarget = Callable[[GraphParams, np.ndarray], np.ndarray]


# --- truncated Normal helpers ---------------------------------------------

def _trunc_mass(mean: np.ndarray, sd: float, lo: float, hi: float) -> np.ndarray:
    return ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd)


def truncnorm_log_mass(mean: np.ndarray, sd: float, lo: float, hi: float) -> np.ndarray:
    """log(Phi((hi - mean)/sd) - Phi((lo - mean)/sd))."""
    return np.log(_trunc_mass(np.asarray(mean, dtype=float), sd, lo, hi))


def truncnorm_draw(mean: np.ndarray, sd: float, lo: float, hi: float, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from Normal(mean, sd^2) restricted to (lo, hi)."""
    mean = np.asarray(mean, dtype=float)
    a = ndtr((lo - mean) / sd)
    b = ndtr((hi - mean) / sd)
    x = mean + sd * ndtri(a + u * (b - a))
    # keep strictly inside the open lower end
    return np.clip(x, np.nextafter(lo, hi), hi)


def truncnorm_log_ratio(current: np.ndarray, proposed: np.ndarray, sd: float, lo: float, hi: float) -> np.ndarray:
    """log q(current | proposed) - log q(proposed | current) for the truncated random walk."""
    return truncnorm_log_mass(current, sd, lo, hi) - truncnorm_log_mass(proposed, sd, lo, hi)


# --- proposals -----------------------------------------------------------

def propose_correlation_block(
    current: np.ndarray,
    cfg: McmcConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, float]:
    """
    Propose every off-diagonal entry from a Normal(current, sigma0^2) truncated
    to (-1, 1); the diagonal stays 1.

    Returns:
        (proposed matrix, summed log Hastings correction; 0 when hastings="none")
    """
    p = current.shape[0]
    iu = np.triu_indices(p, k=1)
    cur = current[iu]
    prop = truncnorm_draw(cur, cfg.proposal_sd_corr, -1.0, 1.0, rng.uniform(size=cur.size))
    proposed = np.eye(p)
    proposed[iu] = prop
    proposed[(iu[1], iu[0])] = prop
    if cfg.hastings == "none":
        return proposed, 0.0
    return proposed, float(np.sum(truncnorm_log_ratio(cur, prop, cfg.proposal_sd_corr, -1.0, 1.0)))


def _bernoulli_log_pmf(g: np.ndarray, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(g == 1, np.log(r), np.log1p(-r))


def propose_graph_block(
    rho: np.ndarray,
    current: GraphParams,
    cfg: McmcConfig,
    rng: np.random.Generator,
) -> Tuple[GraphParams, np.ndarray]:
    """
    Propose edges g_ij ~ Bernoulli(|rho_ij|) and variances from a
    Normal(current, w^2) truncated to (0, 1].

    Returns:
        (proposed state, per-pair log Hastings corrections). The Bernoulli
        part enters only with hastings="full"; the variance truncation part
        with "full" and "truncation".
    """
    r = upper_abs(rho)
    edges = (rng.uniform(size=r.size) < r).astype(np.uint8)
    variances = truncnorm_draw(current.variances, cfg.proposal_sd_var, 0.0, 1.0, rng.uniform(size=r.size))
    proposed = GraphParams(dim=current.dim, edges=edges, variances=variances)

    log_ratio = np.zeros(r.size)
    if cfg.hastings in ("full", "truncation"):
        log_ratio += truncnorm_log_ratio(current.variances, variances, cfg.proposal_sd_var, 0.0, 1.0)
    if cfg.hastings == "full":
        log_ratio += _bernoulli_log_pmf(current.edges, r) - _bernoulli_log_pmf(edges, r)
    return proposed, log_ratio


# --- trace ---------------------------------------------------------------

@dataclass
class ChainTrace:
    """
    Per-iteration record of one chain, t = 0..n_iter (t = 0 is the initial
    state). Pair columns follow upper-triangle row-major order.
    """
    labels: Tuple[str, ...]
    log_u: np.ndarray
    accept_corr: np.ndarray
    accept_graph: np.ndarray
    edges: np.ndarray
    variances: Optional[np.ndarray] = None
    abs_rho: Optional[np.ndarray] = None
    corr_hash: List[str] = field(default_factory=list)
    ridge_events: int = 0
    nonpd_rejections: int = 0
    corr_target: str = ""

    def __len__(self) -> int:
        return self.log_u.shape[0]

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def n_iter(self) -> int:
        return len(self) - 1

    def acceptance_rates(self) -> Tuple[float, float]:
        if len(self) < 2:
            return 0.0, 0.0
        return float(np.mean(self.accept_corr[1:])), float(np.mean(self.accept_graph[1:]))


def _hash_matrix(m: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(m).tobytes()).hexdigest()[:12]


def log_joint_edge_marginal(edges: np.ndarray, abs_rho: np.ndarray) -> float:
    """ln u = sum over pairs of ln m(g_ij | rho_ij)."""
    return float(np.sum(np.log(edge_marginal(edges.astype(float), abs_rho))))


# --- targets -------------------------------------------------------------

def _resolve_corr_target(z: np.ndarray, cfg: McmcConfig) -> Tuple[str, Callable[[np.ndarray, int], float]]:
    n, p = z.shape
    kind = cfg.corr_target
    if kind == "auto":
        kind = "marginalized" if n <= p else "row_independent"
        logger.info(f"block-1 target: {kind} (n={n}, p={p})")
    if kind == "marginalized":
        def target(sigma, seed):
            norm_cfg = cfg.normalization
            if norm_cfg.use_normalization:
                norm_cfg = norm_cfg.model_copy(update={"seed": seed})
            return marginalized_log_posterior(z, sigma, norm_cfg, cfg.ridge)
        return kind, target
    return kind, lambda sigma, seed: row_independent_log_likelihood(z, sigma, cfg.ridge)


def _initial_state(z: np.ndarray, cfg: McmcConfig) -> np.ndarray:
    sigma = empirical_column_correlation(z)
    if not is_positive_definite(sigma):
        logger.warning("⚠️ empirical correlation is not positive definite; starting from identity")
        sigma = np.eye(z.shape[1])
    return sigma


def _accept(log_alpha: np.ndarray, u: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(u) < log_alpha


# --- chain ---------------------------------------------------------------

def run_two_block_chain(
    data: Union[StandardizedDataset, np.ndarray],
    cfg: McmcConfig = McmcConfig(),
    corr_log_target: Optional[CorrTarget] = None,
    graph_log_target: Optional[GraphTarget] = None,
) -> Tuple[ChainTrace, np.ndarray]:
    """
    Run one chain of n_iter iterations.

    Args:
        data: standardized n x p data
        cfg: sampler configuration
        corr_log_target: optional replacement block-1 target, sigma -> log density
        graph_log_target: optional replacement block-2 target,
            (GraphParams, rho) -> per-pair log terms

    Returns:
        (trace, post-burnin edge marginal matrix)

    Raises:
        ChainFailure: numeric failure on the current state, with its iteration
    """
    with RidgeTally() as tally:
        return _run_chain(data, cfg, corr_log_target, graph_log_target, tally)


def _run_chain(
    data: Union[StandardizedDataset, np.ndarray],
    cfg: McmcConfig,
    corr_log_target: Optional[CorrTarget],
    graph_log_target: Optional[GraphTarget],
    tally: RidgeTally,
) -> Tuple[ChainTrace, np.ndarray]:
    z = np.asarray(data.values if isinstance(data, StandardizedDataset) else data, dtype=float)
    n, p = z.shape
    labels = tuple(data.column_names) if isinstance(data, StandardizedDataset) else tuple(f"col{j}" for j in range(p))
    m = p * (p - 1) // 2
    if p > SOFT_DIM_LIMIT:
        logger.warning(f"⚠️ p={p} exceeds the soft limit of {SOFT_DIM_LIMIT} columns; mixing will be slow")
    n_post = cfg.n_iter - cfg.n_burnin
    if n_post < MIN_POST_BURNIN:
        logger.warning(f"⚠️ only {n_post} post-burnin iterations")

    if corr_log_target is not None:
        kind = "custom"
        corr_target = lambda sigma, seed: corr_log_target(sigma)  # noqa: E731
    else:
        kind, corr_target = _resolve_corr_target(z, cfg)
    graph_target = graph_log_target or graph_log_likelihood_terms
    reevaluate = corr_log_target is None and kind == "marginalized" and cfg.normalization.use_normalization

    rng = np.random.default_rng(cfg.seed)
    norm_rng = np.random.default_rng([cfg.seed, 1])

    sigma = _initial_state(z, cfg)
    try:
        rho = partial_correlation(sigma, cfg.ridge)
        edges0 = np.zeros((p, p), dtype=np.uint8)
        for i, j in threshold_edge_set(np.abs(rho), INITIAL_EDGE_THRESHOLD):
            edges0[i, j] = edges0[j, i] = 1
        graph = GraphParams.from_matrices(edges0, np.full((p, p), INITIAL_VARIANCE))
        seed0 = int(norm_rng.integers(2 ** 63))
        current_value = corr_target(sigma, seed0)
    except NumericError as e:
        raise ChainFailure(0, e) from e

    T = cfg.n_iter + 1
    log_u = np.empty(T)
    accept_corr = np.zeros(T, dtype=bool)
    accept_graph = np.zeros(T)
    edge_hist = np.empty((T, m), dtype=np.uint8)
    var_hist = np.empty((T, m))
    rho_hist = np.empty((T, m))
    hashes = [""] * T
    nonpd = 0

    def record(t: int) -> None:
        r = upper_abs(rho)
        log_u[t] = log_joint_edge_marginal(graph.edges, r)
        edge_hist[t] = graph.edges
        var_hist[t] = graph.variances
        rho_hist[t] = r
        hashes[t] = _hash_matrix(sigma)

    record(0)
    logger.info(f"🚀 chain start: n={n}, p={p}, n_iter={cfg.n_iter}, seed={cfg.seed}")
    for t in range(1, T):
        # block 1: column correlation matrix
        seed_t = int(norm_rng.integers(2 ** 63))
        proposed, log_q = propose_correlation_block(sigma, cfg, rng)
        u_corr = rng.uniform()
        try:
            if reevaluate:
                current_value = corr_target(sigma, seed_t)
        except NumericError as e:
            raise ChainFailure(t, e) from e
        if is_positive_definite(proposed):
            try:
                proposed_value = corr_target(proposed, seed_t)
            except NumericError:
                proposed_value = -np.inf
            if _accept(np.asarray(proposed_value - current_value + log_q), np.asarray(u_corr)):
                try:
                    rho = partial_correlation(proposed, cfg.ridge)
                except NumericError as e:
                    raise ChainFailure(t, e) from e
                sigma = proposed
                current_value = proposed_value
                accept_corr[t] = True
        else:
            nonpd += 1

        # block 2: SRGG given rho
        proposed_graph, log_q_pairs = propose_graph_block(rho, graph, cfg, rng)
        try:
            delta = graph_target(proposed_graph, rho) - graph_target(graph, rho) + log_q_pairs
        except NumericError as e:
            raise ChainFailure(t, e) from e
        if cfg.graph_update == "pairwise":
            keep = _accept(delta, rng.uniform(size=m))
        else:
            keep = np.full(m, bool(_accept(np.asarray(np.sum(delta)), np.asarray(rng.uniform()))))
        graph = GraphParams(
            dim=p,
            edges=np.where(keep, proposed_graph.edges, graph.edges).astype(np.uint8),
            variances=np.where(keep, proposed_graph.variances, graph.variances),
        )
        accept_graph[t] = float(np.mean(keep)) if m else 1.0
        record(t)

    trace = ChainTrace(
        labels=labels,
        log_u=log_u,
        accept_corr=accept_corr,
        accept_graph=accept_graph,
        edges=edge_hist,
        variances=var_hist,
        abs_rho=rho_hist,
        corr_hash=hashes,
        ridge_events=tally.count,
        nonpd_rejections=nonpd,
        corr_target=kind,
    )
    rate_c, rate_g = trace.acceptance_rates()
    logger.info(f"✅ chain done: accept corr={rate_c:.3f}, graph={rate_g:.3f}, non-PD proposals={nonpd}")
    return trace, edge_marginal_matrix(trace, cfg.n_burnin)


def edge_marginal_matrix(trace: ChainTrace, n_burnin: int) -> np.ndarray:
    """n_ij = (count of g_ij = 1 over t > n_burnin) / N_post."""
    post = trace.edges[n_burnin + 1:]
    if n_burnin < 0 or post.shape[0] == 0:
        raise EmptyPostBurnin(f"no samples after burn-in {n_burnin} (trace length {len(trace)})")
    p = trace.dim
    counts = post.sum(axis=0, dtype=np.int64)
    nm = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    nm[iu] = counts / post.shape[0]
    return nm + nm.T


@dataclass(frozen=True)
class GraphicalModel:
    labels: Tuple[str, ...]
    edges: List[Tuple[int, int, float]]
    tau: float


def build_graphical_model(nm: np.ndarray, labels: Sequence[str], tau: float = 0.05) -> GraphicalModel:
    """Edges with n_ij >= tau, weighted by n_ij."""
    edges = [(i, j, float(nm[i, j])) for i, j in threshold_edge_set(nm, tau)]
    return GraphicalModel(labels=tuple(labels), edges=edges, tau=tau)
