"""
File persistence: atomic writes, input hashing, and the trace CSV codec.
"""
import csv
import hashlib
import io
import json
import os
import re
import tempfile
from typing import Tuple

import numpy as np

from graphlearn.errors import MissingInput, ParseError
from graphlearn.mcmc import ChainTrace
from store.model import TraceMetadata

TRACE_FIXED_COLUMNS = ("t", "log_u", "accept_corr", "accept_graph")
_PAIR_COLUMN = re.compile(r"^g_(\d+)_(\d+)$")


def atomic_write_bytes(path: str, payload: bytes) -> str:
    """Write to a temp file in the target directory, then rename over the target."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def atomic_write_text(path: str, text: str) -> str:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str, payload) -> str:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str) -> dict:
    if not os.path.isfile(path):
        raise MissingInput(path)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_to_csv(trace: ChainTrace) -> str:
    p = trace.dim
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(TRACE_FIXED_COLUMNS) + [f"g_{i}_{j}" for i, j in pairs])
    for t in range(len(trace)):
        writer.writerow(
            [t, _fmt(trace.log_u[t]), int(trace.accept_corr[t]), _fmt(trace.accept_graph[t])]
            + trace.edges[t].tolist()
        )
    return buf.getvalue()


def write_trace_csv(path: str, trace: ChainTrace) -> str:
    return atomic_write_text(path, trace_to_csv(trace))


def metadata_path(trace_path: str) -> str:
    root, _ = os.path.splitext(trace_path)
    return root + ".json"


def read_trace_csv(path: str) -> Tuple[ChainTrace, TraceMetadata]:
    """
    Load a trace written by write_trace_csv plus its JSON sidecar if present
    (metadata is None otherwise).
    """
    if not os.path.isfile(path):
        raise MissingInput(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][:4]) != TRACE_FIXED_COLUMNS:
        raise ParseError(1, 1, ",".join(rows[0][:4]) if rows else "", path)
    header = rows[0]
    pairs = []
    for col, name in enumerate(header[4:], start=5):
        match = _PAIR_COLUMN.match(name)
        if not match:
            raise ParseError(1, col, name, path)
        pairs.append((int(match.group(1)), int(match.group(2))))
    p = max((j for _, j in pairs), default=0) + 1 if pairs else 0

    body = rows[1:]
    log_u = np.empty(len(body))
    accept_corr = np.zeros(len(body), dtype=bool)
    accept_graph = np.empty(len(body))
    edges = np.empty((len(body), len(pairs)), dtype=np.uint8)
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(r, len(row) + 1, "<ragged row>", path)
        try:
            log_u[r - 2] = float(row[1])
            accept_corr[r - 2] = bool(int(row[2]))
            accept_graph[r - 2] = float(row[3])
            edges[r - 2] = [int(v) for v in row[4:]]
        except ValueError as e:
            raise ParseError(r, 0, str(e), path) from e

    metadata = None
    sidecar = metadata_path(path)
    if os.path.isfile(sidecar):
        metadata = TraceMetadata(**read_json(sidecar))
    labels = metadata.labels if metadata is not None else tuple(f"col{j}" for j in range(p))
    trace = ChainTrace(
        labels=tuple(labels),
        log_u=log_u,
        accept_corr=accept_corr,
        accept_graph=accept_graph,
        edges=edges,
        corr_target=metadata.corr_target if metadata is not None else "",
    )
    return trace, metadata
