"""
Single-shot SRGG for large networks: edges straight from an empirical or
Spearman correlation matrix, no sampling.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from graphlearn.data import RankedScores, spearman_matrix, tile_bounds
from graphlearn.errors import DegenerateClass, InvalidCorrelationEntry
from graphlearn.logs import get_logger
from graphlearn.settings import NetworkConfig
from graphlearn.srgg import CLAMP_TOL, edge_marginal

logger = get_logger(__name__)

CorrelationSource = Union[np.ndarray, RankedScores]


@dataclass(frozen=True)
class LargeNetwork:
    """
    Undirected SRGG. `edges` holds (i, j) with i < j in original node ids,
    sorted; `node_ids` lists the nodes still present.
    """
    node_ids: np.ndarray
    labels: Tuple[str, ...]
    edges: np.ndarray
    weights: np.ndarray
    tau: float
    classes: Optional[Tuple[Optional[str], ...]] = None

    @property
    def n_nodes(self) -> int:
        return int(self.node_ids.size)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        """Degree of every listed node, aligned with node_ids."""
        size = int(max(self.node_ids.max(initial=-1), self.edges.max(initial=-1)) + 1)
        counts = np.bincount(self.edges.ravel(), minlength=size)
        return counts[self.node_ids]


def _validate_correlation(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise InvalidCorrelationEntry(f"correlation matrix must be square, got {corr.shape}")
    if not np.all(np.isfinite(corr)):
        raise InvalidCorrelationEntry("correlation matrix has non-finite entries")
    if np.any(np.abs(corr) > 1.0 + CLAMP_TOL):
        raise InvalidCorrelationEntry("correlation entries must lie in [-1, 1]")
    if np.max(np.abs(corr - corr.T), initial=0.0) > 1e-9:
        raise InvalidCorrelationEntry("correlation matrix is not symmetric")
    if np.any(np.abs(np.diag(corr) - 1.0) > 1e-9):
        raise InvalidCorrelationEntry("correlation matrix must have a unit diagonal")
    return corr


def _tile_edges(block: np.ndarray, start: int, tau: float) -> Tuple[np.ndarray, np.ndarray]:
    rows = np.arange(start, start + block.shape[0])[:, None]
    cols = np.arange(block.shape[1])[None, :]
    upper = cols > rows
    marg = np.where(upper, edge_marginal(np.ones_like(block), np.abs(block)), -np.inf)
    r, c = np.nonzero(marg >= tau)
    return np.column_stack([r + start, c]), marg[r, c]


def build_large_network(
    source: CorrelationSource,
    tau: float,
    labels: Optional[Sequence[str]] = None,
    cfg: NetworkConfig = None,
) -> LargeNetwork:
    """
    Edge (i, j) iff m(g=1 | |s_ij|) >= tau.

    Args:
        source: dense correlation matrix or pre-ranked score rows (Spearman)
        tau: threshold probability
        labels: node labels; defaults to the ranked labels or indices
        cfg: dense/streaming switch, tile height and worker count

    Returns:
        LargeNetwork with every node, isolated ones included
    """
    cfg = cfg or NetworkConfig(tau=tau)
    if isinstance(source, RankedScores):
        size = source.size
        labels = labels or source.labels
        tile = source.row_tile
    else:
        corr = _validate_correlation(source)
        size = corr.shape[0]
        tile = lambda start, stop: corr[start:stop]  # noqa: E731
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(size))

    if size <= cfg.dense_limit:
        dense = spearman_matrix(source, cfg.tile_rows, cfg.threads) if isinstance(source, RankedScores) else corr
        iu = np.triu_indices(size, k=1)
        weights = edge_marginal(np.ones(iu[0].size), np.abs(dense[iu]))
        keep = weights >= tau
        edges = np.column_stack([iu[0][keep], iu[1][keep]])
        weights = weights[keep]
    else:
        logger.info(f"streaming {size} nodes in tiles of {cfg.tile_rows} rows on {cfg.threads} threads")
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda b: _tile_edges(tile(*b), b[0], tau), tile_bounds(size, cfg.tile_rows)))
        edges = np.vstack([e for e, _ in parts]) if parts else np.empty((0, 2), dtype=np.int64)
        weights = np.concatenate([w for _, w in parts]) if parts else np.empty(0)

    net = LargeNetwork(
        node_ids=np.arange(size),
        labels=labels,
        edges=edges.astype(np.int64).reshape(-1, 2),
        weights=np.asarray(weights, dtype=float),
        tau=tau,
    )
    logger.info(f"✅ network at tau={tau}: {net.n_nodes} nodes, {net.n_edges} edges")
    return net


def with_classes(net: LargeNetwork, class_map: Dict[str, str]) -> LargeNetwork:
    """Attach a class per node label (None when unmapped)."""
    classes = tuple(class_map.get(label) for label in net.labels)
    return replace(net, classes=classes)


def prune_zero_degree(net: LargeNetwork) -> LargeNetwork:
    """Drop isolated nodes; edges and original ids are kept as they are."""
    keep = net.degrees() > 0
    labels = tuple(l for l, k in zip(net.labels, keep) if k)
    classes = tuple(c for c, k in zip(net.classes, keep) if k) if net.classes is not None else None
    return replace(net, node_ids=net.node_ids[keep], labels=labels, classes=classes)


def average_degree(net: LargeNetwork) -> float:
    return 2.0 * net.n_edges / net.n_nodes if net.n_nodes else 0.0


def degree_histogram(net: LargeNetwork) -> Dict[int, int]:
    values, counts = np.unique(net.degrees(), return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


@dataclass(frozen=True)
class ClassStat:
    count: int
    intra_variance: float
    inter_variance: float
    ratio: float


@dataclass(frozen=True)
class ClassStats:
    per_class: Dict[str, ClassStat]
    classified_total: int


@dataclass
class _Moments:
    """Running count, mean and sum of squared deviations."""
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, values: np.ndarray) -> None:
        k = values.size
        if k == 0:
            return
        mean = float(values.mean())
        m2 = float(np.sum((values - mean) ** 2))
        total = self.n + k
        delta = mean - self.mean
        self.m2 += m2 + delta * delta * self.n * k / total
        self.mean += delta * k / total
        self.n = total

    @property
    def variance(self) -> float:
        return self.m2 / self.n if self.n else 0.0


def class_variance_ratio(
    similarity: CorrelationSource,
    classes: Sequence[Optional[str]],
    tile_rows: int = 512,
) -> ClassStats:
    """
    Per class c: population variance of the similarities between pairs inside
    c, over the variance of similarities between members of c and the other
    classified nodes. Unclassified nodes (None) are ignored.

    Similarities are read in tiles of `tile_rows` classified rows, so a
    RankedScores source never materialises the full matrix.

    Raises:
        DegenerateClass: fewer than 2 classes, a class with fewer than 2
            members, or zero inter-class variance with non-zero intra variance
    """
    classes = list(classes)
    if isinstance(similarity, RankedScores):
        size = similarity.size
        block = similarity.block
    else:
        dense = np.asarray(similarity, dtype=float)
        size = dense.shape[0] if dense.ndim == 2 and dense.shape[0] == dense.shape[1] else -1
        block = lambda rows, cols: dense[np.ix_(rows, cols)]  # noqa: E731
    if size != len(classes):
        raise DegenerateClass(f"similarity covers {size} nodes but {len(classes)} classes given")
    idx = np.array([k for k, c in enumerate(classes) if c is not None], dtype=int)
    labels = np.array([classes[k] for k in idx], dtype=object)
    names, counts = np.unique(labels.astype(str), return_counts=True) if idx.size else (np.array([]), np.array([]))
    if len(names) < 2:
        raise DegenerateClass(f"need at least 2 classes, got {len(names)}")
    for name, count in zip(names, counts):
        if count < 2:
            raise DegenerateClass(f"class {name!r} has fewer than 2 members")

    intra = {name: _Moments() for name in names}
    inter = {name: _Moments() for name in names}
    position = np.arange(idx.size)
    for start, stop in tile_bounds(idx.size, tile_rows):
        tile = block(idx[start:stop], idx)
        for name in names:
            local = np.flatnonzero(labels[start:stop] == name)
            if local.size == 0:
                continue
            same = labels == name
            rows = tile[local]
            later = position[None, :] > (local + start)[:, None]
            intra[name].add(rows[later & same[None, :]])
            inter[name].add(rows[:, ~same].ravel())

    per_class = {}
    for name, count in zip(names, counts):
        a, b = intra[name].variance, inter[name].variance
        if a == 0.0:
            ratio = 0.0
        elif b == 0.0:
            raise DegenerateClass(f"class {name!r} has zero inter-class variance")
        else:
            ratio = a / b
        per_class[str(name)] = ClassStat(count=int(count), intra_variance=a, inter_variance=b, ratio=ratio)
    return ClassStats(per_class=per_class, classified_total=int(idx.size))


def class_membership_fractions(net: LargeNetwork) -> Dict[str, float]:
    """Share of the retained classified nodes that falls in each class."""
    if net.classes is None:
        return {}
    present = [c for c in net.classes if c is not None]
    if not present:
        return {}
    names, counts = np.unique(present, return_counts=True)
    return {str(n): float(c) / len(present) for n, c in zip(names, counts)}
