"""
Distance workflow: two trace CSVs -> DistanceReport JSON + stdout summary.
"""
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))

from datetime import datetime
from typing import List, Optional

from graphlearn import __version__
from graphlearn.distance import DistanceReport, compare_traces
from graphlearn.errors import MissingInput
from graphlearn.logs import get_logger
from graphlearn.settings import DistanceConfig, ScaleMode
from store.files import metadata_path, read_trace_csv, sha256_file, write_json
from store.model import RunManifest

logger = get_logger(__name__)


def _burnin_for(metadata, override: Optional[int], path: str) -> int:
    if override is not None:
        return override
    if metadata is None:
        raise MissingInput(metadata_path(path))
    return metadata.n_burnin


def run_compare(
    trace_a: str,
    trace_b: str,
    out_dir: str,
    burnin: Optional[int] = None,
    scale_mode: ScaleMode = "shift",
    truncate_min: bool = False,
    argv: Optional[List[str]] = None,
) -> DistanceReport:
    started = datetime.now()
    logger.info(f"🚀 distance: {trace_a} vs {trace_b}")

    # Step 1: traces and their burn-in
    first, meta_a = read_trace_csv(trace_a)
    second, meta_b = read_trace_csv(trace_b)
    burn_a = _burnin_for(meta_a, burnin, trace_a)
    burn_b = _burnin_for(meta_b, burnin, trace_b)

    # Step 2: distances from one shared scale
    cfg = DistanceConfig(n_burnin=burn_a, scale_mode=scale_mode, truncate_min=truncate_min)
    report = compare_traces(first, second, cfg, n_burnin2=burn_b)

    # Step 3: report + manifest
    stem = f"{os.path.splitext(os.path.basename(trace_a))[0]}__{os.path.splitext(os.path.basename(trace_b))[0]}"
    report_path = write_json(os.path.join(out_dir, f"{stem}.distance.json"), report.model_dump(mode="json"))
    manifest = RunManifest(
        command="distance",
        argv=list(argv or []),
        config={"distance": cfg.model_dump(mode="json"), "n_burnin_b": burn_b},
        seeds={},
        inputs={trace_a: sha256_file(trace_a), trace_b: sha256_file(trace_b)},
        version=__version__,
        started_at=started,
        finished_at=datetime.now(),
        outputs=[report_path],
    )
    manifest_path = os.path.join(out_dir, f"{stem}.manifest.json")
    manifest.outputs.append(manifest_path)
    write_json(manifest_path, manifest.model_dump(mode="json"))

    print(report.summary())
    logger.info(f"✅ distance report written to {report_path}")
    return report
