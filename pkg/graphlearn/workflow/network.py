"""
Large-network workflow: NPMI triples (Spearman) or a dense correlation matrix
-> single-shot SRGG -> prune -> stats / class ratios -> exports.
"""
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))

from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

from graphlearn import __version__
from graphlearn.bignet import (
    LargeNetwork,
    average_degree,
    build_large_network,
    class_membership_fractions,
    class_variance_ratio,
    degree_histogram,
    prune_zero_degree,
    with_classes,
)
from graphlearn.data import RankedScores, load_class_map, load_correlation_csv, load_npmi_triples
from graphlearn.distance import network_distance
from graphlearn.errors import InputError
from graphlearn.logs import get_logger
from graphlearn.settings import NetworkConfig
from store.files import sha256_file, write_json
from store.graphs import WRITERS, network_to_networkx
from store.model import RunManifest

logger = get_logger(__name__)


def load_source(npmi: Optional[str], corr: Optional[str], cfg: NetworkConfig):
    """Step 1: ranked NPMI rows or a dense correlation matrix, with labels."""
    if (npmi is None) == (corr is None):
        raise InputError("give exactly one of --npmi or --corr")
    if npmi is not None:
        table = load_npmi_triples(npmi, cfg.missing_policy)
        ranked = RankedScores(table.scores, table.row_labels)
        return ranked, ranked.labels
    matrix, labels = load_correlation_csv(corr)
    return matrix, labels


def class_statistics(source, net: LargeNetwork, tile_rows: int) -> Optional[Dict[str, object]]:
    """Step 4b: variance ratios over every classified node of the unpruned network."""
    if net.classes is None:
        return None
    stats = class_variance_ratio(source, net.classes, tile_rows)
    return {
        "classified_total": stats.classified_total,
        "per_class": {
            name: {"count": s.count, "intra_variance": s.intra_variance, "inter_variance": s.inter_variance, "ratio": s.ratio}
            for name, s in stats.per_class.items()
        },
    }


def network_stats(net: LargeNetwork, pruned: LargeNetwork) -> Dict[str, object]:
    """Step 4a: counts and degree profile of the pruned network."""
    return {
        "tau": net.tau,
        "nodes_total": net.n_nodes,
        "nodes_nonzero_degree": pruned.n_nodes,
        "edges": pruned.n_edges,
        "average_degree": average_degree(pruned),
        "degree_histogram": {str(k): v for k, v in degree_histogram(pruned).items()},
        "class_fractions": class_membership_fractions(pruned),
    }


def run_network(
    out_dir: str,
    cfg: NetworkConfig,
    npmi: Optional[str] = None,
    corr: Optional[str] = None,
    classes: Optional[str] = None,
    corr_b: Optional[str] = None,
    formats: Sequence[str] = ("csv", "graphml"),
    argv: Optional[List[str]] = None,
) -> Tuple[LargeNetwork, Dict[str, object]]:
    """
    Build, prune and export a large network.

    Args:
        out_dir: output directory
        cfg: tau, dense/streaming switch, threads, missing-score policy
        npmi: NPMI triple file (rows become nodes, Spearman similarity)
        corr: dense correlation CSV (alternative to npmi)
        classes: optional node -> class file
        corr_b: second correlation CSV for the network Hellinger distance
        formats: graph formats to write

    Returns:
        (pruned network, stats dictionary)
    """
    started = datetime.now()
    print("=" * 60)
    logger.info(f"🚀 bignet: tau={cfg.tau}")

    source, labels = load_source(npmi, corr, cfg)

    # Step 2: SRGG straight from the correlations
    net = build_large_network(source, cfg.tau, labels, cfg)
    if classes is not None:
        net = with_classes(net, load_class_map(classes))

    # Step 3: drop isolated nodes
    pruned = prune_zero_degree(net)
    logger.info(f"pruned to {pruned.n_nodes} nodes, average degree {average_degree(pruned):.2f}")

    stats = network_stats(net, pruned)
    class_stats = class_statistics(source, net, cfg.tile_rows)
    if class_stats is not None:
        stats["class_stats"] = class_stats

    # Step 5: optional comparison against a second matrix
    if corr_b is not None:
        if isinstance(source, RankedScores):
            raise InputError("--corr-b needs --corr input")
        other, _ = load_correlation_csv(corr_b)
        stats["network_hellinger"] = network_distance(source, other)

    # Step 6: exports
    stem = os.path.splitext(os.path.basename(npmi or corr))[0]
    g = network_to_networkx(pruned)
    outputs = []
    for fmt in formats:
        writer, suffix = WRITERS[fmt]
        if fmt == "csv":
            outputs.append(writer(g, os.path.join(out_dir, f"{stem}.edges.csv"), label_attr="label"))
        else:
            outputs.append(writer(g, os.path.join(out_dir, f"{stem}.network{suffix}")))
    outputs.append(write_json(os.path.join(out_dir, f"{stem}.stats.json"), stats))

    inputs = {path: sha256_file(path) for path in (npmi, corr, classes, corr_b) if path is not None}
    manifest = RunManifest(
        command="bignet",
        argv=list(argv or []),
        config={"network": cfg.model_dump(mode="json")},
        seeds={},
        inputs=inputs,
        version=__version__,
        started_at=started,
        finished_at=datetime.now(),
        outputs=outputs,
    )
    manifest_path = os.path.join(out_dir, f"{stem}.manifest.json")
    manifest.outputs.append(manifest_path)
    write_json(manifest_path, manifest.model_dump(mode="json"))
    logger.info(f"✅ bignet finished: {pruned.n_edges} edges")
    print("=" * 60)
    return pruned, stats
