"""
Learn workflow: load -> subsample -> standardize -> 2-block chain -> graphical
model -> exports (graph files, trace CSV + sidecar, manifest).
"""
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))

from datetime import datetime
from typing import List, Optional, Sequence

from graphlearn import __version__
from graphlearn.data import RawDataset, StandardizedDataset, load_matrix_csv, standardize, subsample_rows
from graphlearn.logs import get_logger
from graphlearn.mcmc import ChainTrace, GraphicalModel, build_graphical_model, run_two_block_chain
from graphlearn.settings import IngestConfig, McmcConfig
from store.files import metadata_path, sha256_file, write_json, write_trace_csv
from store.graphs import WRITERS, model_to_networkx
from store.model import RunManifest, TraceMetadata

logger = get_logger(__name__)


def load_dataset(path: str, ingest: IngestConfig) -> RawDataset:
    """Step 1: parse the input table."""
    return load_matrix_csv(path, ingest)


def prepare_dataset(raw: RawDataset, rows: Optional[int], seed: int) -> StandardizedDataset:
    """Step 2: optional row subsample, then column standardization."""
    if rows is not None and rows != raw.n:
        raw = subsample_rows(raw, rows, seed)
        logger.info(f"subsampled {rows} rows with seed {seed}")
    return standardize(raw)


def sample_chain(data: StandardizedDataset, cfg: McmcConfig):
    """Step 3: run the sampler."""
    return run_two_block_chain(data, cfg)


def export_model(model: GraphicalModel, out_dir: str, stem: str, formats: Sequence[str]) -> List[str]:
    """Step 5: write the graphical model in each requested format."""
    g = model_to_networkx(model)
    written = []
    for fmt in formats:
        writer, suffix = WRITERS[fmt]
        written.append(writer(g, os.path.join(out_dir, f"{stem}.graph{suffix}")))
    return written


def export_trace(trace: ChainTrace, cfg: McmcConfig, rows_used: int, out_dir: str, stem: str) -> List[str]:
    """Step 6: trace CSV plus its metadata sidecar."""
    trace_path = write_trace_csv(os.path.join(out_dir, f"{stem}.trace.csv"), trace)
    rate_c, rate_g = trace.acceptance_rates()
    meta = TraceMetadata(
        labels=trace.labels,
        n_iter=cfg.n_iter,
        n_burnin=cfg.n_burnin,
        seed=cfg.seed,
        rows_used=rows_used,
        corr_target=trace.corr_target,
        accept_rate_corr=rate_c,
        accept_rate_graph=rate_g,
        ridge_events=trace.ridge_events,
        nonpd_rejections=trace.nonpd_rejections,
        config=cfg.model_dump(mode="json"),
    )
    meta_path = write_json(metadata_path(trace_path), meta.model_dump(mode="json"))
    return [trace_path, meta_path]


def run_learn(
    input_path: str,
    cfg: McmcConfig,
    out_dir: str,
    rows: Optional[int] = None,
    ingest: IngestConfig = IngestConfig(),
    formats: Sequence[str] = ("dot", "graphml", "json"),
    argv: Optional[List[str]] = None,
) -> RunManifest:
    """
    Run the complete learn workflow and return its manifest.

    Args:
        input_path: numeric CSV, one column per variable
        cfg: sampler configuration (tau, seed, iterations, proposals)
        out_dir: output directory
        rows: subsample size; all rows when None
        ingest: CSV options
        formats: graph formats among dot, graphml, json, csv
        argv: command line recorded in the manifest
    """
    started = datetime.now()
    stem = os.path.splitext(os.path.basename(input_path))[0]
    print("=" * 60)
    logger.info(f"🚀 learn: {input_path}")

    raw = load_dataset(input_path, ingest)
    data = prepare_dataset(raw, rows, cfg.seed)
    trace, nm = sample_chain(data, cfg)

    # Step 4: HPD graphical model
    model = build_graphical_model(nm, data.column_names, cfg.tau)
    logger.info(f"graphical model: {len(model.edges)} edges at tau={cfg.tau}")

    outputs = export_model(model, out_dir, stem, formats)
    outputs += export_trace(trace, cfg, data.n, out_dir, stem)

    manifest = RunManifest(
        command="learn",
        argv=list(argv or []),
        config={"mcmc": cfg.model_dump(mode="json"), "ingest": ingest.model_dump(mode="json"), "rows": rows},
        seeds={"chain": cfg.seed, "subsample": cfg.seed, "normalization": cfg.normalization.seed},
        inputs={input_path: sha256_file(input_path)},
        version=__version__,
        started_at=started,
        finished_at=datetime.now(),
        outputs=outputs,
    )
    manifest_path = os.path.join(out_dir, f"{stem}.manifest.json")
    manifest.outputs.append(manifest_path)
    write_json(manifest_path, manifest.model_dump(mode="json"))
    logger.info(f"✅ learn finished: {len(manifest.outputs)} files in {out_dir}")
    print("=" * 60)
    return manifest
