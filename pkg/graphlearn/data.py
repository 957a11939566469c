"""
Dataset ingestion, standardization, subsampling and the correlation
estimators used by the large-network mode (product-moment and Spearman).
"""
import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import rankdata

from graphlearn.errors import (
    DegenerateRanks,
    DimensionMismatch,
    EmptyData,
    LengthMismatch,
    MissingInput,
    ParseError,
    TooManyRows,
    ZeroVariance,
)
from graphlearn.logs import get_logger
from graphlearn.settings import IngestConfig, MissingPolicy

logger = get_logger(__name__)


@dataclass(frozen=True)
class RawDataset:
    values: np.ndarray
    column_names: Tuple[str, ...]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizedDataset(RawDataset):
    means: np.ndarray = field(default=None)
    scales: np.ndarray = field(default=None)


@dataclass(frozen=True)
class ScoreTable:
    """Dense item x feature score matrix densified from (item, feature, score) triples."""
    row_labels: Tuple[str, ...]
    col_labels: Tuple[str, ...]
    scores: np.ndarray


def _require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise MissingInput(path)


def _parse_float(cell: str) -> Optional[float]:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value


def load_matrix_csv(path: str, options: IngestConfig = IngestConfig()) -> RawDataset:
    """
    Parse a delimited numeric table.

    Args:
        path: CSV file path
        options: delimiter and header handling

    Returns:
        RawDataset with n >= 2 rows and p >= 2 columns

    Raises:
        MissingInput, ParseError (1-based row/column), EmptyData
    """
    _require_file(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, [c.strip() for c in r]) for i, r in enumerate(csv.reader(fh, delimiter=options.delimiter))]
    rows = [(i, r) for i, r in rows if any(r)]
    if not rows:
        raise EmptyData(f"{path}: no rows")

    header = options.header
    if header is None:
        header = all(_parse_float(c) is None for c in rows[0][1])
    if header:
        names = tuple(c.strip('"') for c in rows[0][1])
        rows = rows[1:]
    else:
        names = tuple(f"col{j}" for j in range(len(rows[0][1])))

    width = len(names)
    values = np.empty((len(rows), width))
    for r, (line_no, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(line_no, min(len(cells), width) + 1, f"<{len(cells)} cells, expected {width}>", path)
        for c, cell in enumerate(cells):
            value = _parse_float(cell)
            if value is None or not math.isfinite(value):
                raise ParseError(line_no, c + 1, cell, path)
            values[r, c] = value

    if values.shape[0] < 2 or width < 2:
        raise EmptyData(f"{path}: need at least 2 rows and 2 columns, got {values.shape[0]}x{width}")
    logger.info(f"✅ loaded {path}: n={values.shape[0]}, p={width}")
    return RawDataset(values=values, column_names=names)


def load_correlation_csv(path: str, delimiter: str = ",") -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Square correlation matrix, optional header row of node labels."""
    raw = load_matrix_csv(path, IngestConfig(delimiter=delimiter))
    if raw.n != raw.p:
        raise DimensionMismatch(f"{path}: correlation matrix must be square, got {raw.n}x{raw.p}")
    generated = tuple(f"col{j}" for j in range(raw.p))
    labels = tuple(str(i) for i in range(raw.p)) if raw.column_names == generated else raw.column_names
    return raw.values, labels


def _as_values(d: Union[RawDataset, np.ndarray]) -> np.ndarray:
    return np.asarray(d.values if isinstance(d, RawDataset) else d, dtype=float)


def _column_moments(x: np.ndarray, names: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    means = x.mean(axis=0)
    scales = x.std(axis=0)
    # zero variance means every value in the column is identical
    flat = (np.ptp(x, axis=0) == 0.0) | ~(scales > 0.0)
    if flat.any():
        j = int(np.flatnonzero(flat)[0])
        raise ZeroVariance(names[j] if j < len(names) else j)
    return means, scales


def standardize(d: RawDataset) -> StandardizedDataset:
    """z = (x - mean) / population sd, per column."""
    means, scales = _column_moments(d.values, d.column_names)
    z = (d.values - means) / scales
    return StandardizedDataset(values=z, column_names=d.column_names, means=means, scales=scales)


def subsample_rows(d: RawDataset, n_sub: int, seed: int) -> RawDataset:
    """Uniform sample of n_sub rows without replacement, reproducible per seed."""
    if n_sub > d.n:
        raise TooManyRows(n_sub, d.n)
    if n_sub < 1:
        raise EmptyData(f"n_sub must be positive, got {n_sub}")
    idx = np.random.default_rng(seed).choice(d.n, size=n_sub, replace=False)
    return RawDataset(values=d.values[idx].copy(), column_names=d.column_names)


def empirical_column_correlation(d: Union[RawDataset, np.ndarray]) -> np.ndarray:
    """
    Product-moment correlation from population moments:
    (sum x_i y_i / n - mean_x mean_y) / (sd_x sd_y).
    """
    x = _as_values(d)
    n = x.shape[0]
    if n < 2:
        raise EmptyData("need at least 2 rows")
    names = d.column_names if isinstance(d, RawDataset) else tuple(range(x.shape[1]))
    means, scales = _column_moments(x, names)
    cov = (x.T @ x) / n - np.outer(means, means)
    s = cov / np.outer(scales, scales)
    s = (s + s.T) / 2.0
    np.clip(s, -1.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    return s


def rank_vector(values: Sequence[float]) -> np.ndarray:
    """Average ranks, 1-based."""
    return rankdata(np.asarray(values, dtype=float), method="average")


def spearman_rank_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(a.size, b.size)
    ra = rank_vector(a) - (a.size + 1) / 2.0
    rb = rank_vector(b) - (b.size + 1) / 2.0
    na = float(np.sqrt(ra @ ra))
    nb = float(np.sqrt(rb @ rb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateRanks("cannot rank-correlate a constant vector")
    return float(np.clip((ra @ rb) / (na * nb), -1.0, 1.0))


class RankedScores:
    """
    Rows of a score matrix ranked once, centred and scaled to unit norm, so
    that the Spearman correlation of rows i and j is a plain dot product.
    Rows with constant ranks correlate 0 with every other row.
    """

    def __init__(self, scores: np.ndarray, labels: Optional[Sequence[str]] = None):
        scores = np.asarray(scores, dtype=float)
        if scores.ndim != 2 or scores.shape[1] < 2:
            raise EmptyData("need a 2-D score matrix with at least 2 columns")
        ranks = rankdata(scores, method="average", axis=1)
        centred = ranks - ranks.mean(axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("ij,ij->i", centred, centred))
        self.degenerate = np.flatnonzero(norms == 0.0)
        if self.degenerate.size:
            logger.warning(f"⚠️ {self.degenerate.size} rows have constant ranks; their correlations are set to 0")
        norms[norms == 0.0] = 1.0
        self.z = centred / norms[:, None]
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(scores.shape[0]))

    @property
    def size(self) -> int:
        return self.z.shape[0]

    def row_tile(self, start: int, stop: int) -> np.ndarray:
        """Correlations of rows start..stop-1 against every row."""
        tile = self.z[start:stop] @ self.z.T
        np.clip(tile, -1.0, 1.0, out=tile)
        rows = np.arange(start, min(stop, self.size))
        tile[rows - start, rows] = 1.0
        return tile

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Spearman correlations of the given rows against the given columns."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        sub = np.clip(self.z[rows] @ self.z[cols].T, -1.0, 1.0)
        sub[rows[:, None] == cols[None, :]] = 1.0
        return sub


def tile_bounds(size: int, tile_rows: int) -> List[Tuple[int, int]]:
    return [(s, min(s + tile_rows, size)) for s in range(0, size, tile_rows)]


def spearman_matrix(scores: Union[np.ndarray, RankedScores], tile_rows: int = 512, threads: int = 1) -> np.ndarray:
    """
    All-pairs Spearman correlation of the rows of `scores`, computed as row
    tiles on a thread pool and assembled in tile order.
    """
    ranked = scores if isinstance(scores, RankedScores) else RankedScores(scores)
    bounds = tile_bounds(ranked.size, tile_rows)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        tiles = list(pool.map(lambda b: ranked.row_tile(*b), bounds))
    full = np.vstack(tiles)
    upper = np.triu(full, 1)
    return upper + upper.T + np.eye(ranked.size)


def load_npmi_triples(path: str, policy: MissingPolicy = "zero") -> ScoreTable:
    """
    Densify (item, feature, score) triples into an item x feature matrix.

    Lines are tab- or comma-separated. Blank lines and '#' comments are
    skipped, as is a header, which may only be the first remaining line.
    Duplicate keys keep the last score. Missing pairs are filled per policy:
    "zero" scores them 0, "bottom" places them strictly below every observed
    score.
    """
    _require_file(path)
    triples: Dict[Tuple[str, str], float] = {}
    duplicates = 0
    first = True
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            header_allowed, first = first, False
            parts = [p.strip() for p in (line.split("\t") if "\t" in line else line.split(","))]
            if len(parts) != 3:
                raise ParseError(line_no, len(parts), line, path)
            score = _parse_float(parts[2])
            if score is None:
                if header_allowed:
                    continue
                raise ParseError(line_no, 3, parts[2], path)
            if not math.isfinite(score):
                raise ParseError(line_no, 3, parts[2], path)
            key = (parts[0], parts[1])
            if key in triples:
                duplicates += 1
            triples[key] = score
    if not triples:
        raise EmptyData(f"{path}: no score triples")
    if duplicates:
        logger.warning(f"⚠️ {duplicates} duplicate pairs in {path}; last score kept")

    rows = tuple(sorted({k[0] for k in triples}))
    cols = tuple(sorted({k[1] for k in triples}))
    observed = np.fromiter(triples.values(), dtype=float)
    fill = 0.0 if policy == "zero" else float(observed.min()) - 1.0
    row_idx = {r: i for i, r in enumerate(rows)}
    col_idx = {c: j for j, c in enumerate(cols)}
    scores = np.full((len(rows), len(cols)), fill)
    for (r, c), v in triples.items():
        scores[row_idx[r], col_idx[c]] = v
    missing = scores.size - len(triples)
    logger.info(f"✅ NPMI table {len(rows)}x{len(cols)}, {missing} missing pairs filled with policy={policy!r}")
    return ScoreTable(row_labels=rows, col_labels=cols, scores=scores)


def load_class_map(path: str, delimiter: str = ",") -> Dict[str, str]:
    """Two-column file: node label, class label. A non-data first line is skipped."""
    _require_file(path)
    classes: Dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
            row = [c.strip() for c in row]
            if not any(row):
                continue
            if len(row) != 2:
                raise ParseError(line_no, len(row), delimiter.join(row), path)
            if line_no == 1 and row[0].lower() in ("node", "label", "id", "disease"):
                continue
            classes[row[0]] = row[1]
    if not classes:
        raise EmptyData(f"{path}: no class assignments")
    return classes
