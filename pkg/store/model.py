from datetime import datetime
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel


class RunManifest(BaseModel):
    """Everything needed to repeat a run: command, settings, seeds and input hashes."""
    command: str
    argv: List[str]
    config: Dict[str, object]
    seeds: Dict[str, int]
    inputs: Dict[str, str]  # path -> sha256
    version: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    outputs: List[str] = []


class TraceMetadata(BaseModel):
    """JSON sidecar written next to every trace CSV."""
    labels: Tuple[str, ...]
    n_iter: int
    n_burnin: int
    seed: int
    rows_used: int
    corr_target: str
    accept_rate_corr: float
    accept_rate_graph: float
    ridge_events: int
    nonpd_rejections: int
    config: Dict[str, object]
