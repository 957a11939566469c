"""
SRGG learner - command line entry point
Learns soft random geometric graphs from tabular data, compares learnt models,
and builds large single-shot networks from correlation or NPMI inputs.

Usage:
    python main.py learn --input white.csv --rows 300 --tau 0.05 --seed 7
    python main.py distance out/white.trace.csv out/red.trace.csv
    python main.py bignet --npmi dph.tsv --tau 0.1 --classes classes.csv

Exit codes: 0 ok, 2 input error, 3 shape/length error, 4 numeric failure.
"""
import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from graphlearn.errors import SrggError
from graphlearn.logs import configure
from graphlearn.settings import (
    IngestConfig,
    MarginalPosteriorConfig,
    McmcConfig,
    NetworkConfig,
    default_out_dir,
    default_threads,
)
from graphlearn.workflow.compare import run_compare
from graphlearn.workflow.learn import run_learn
from graphlearn.workflow.network import run_network

FORMATS = ("dot", "graphml", "json", "csv")


def _delimiter(value: str) -> str:
    return "\t" if value in ("\\t", "tab") else value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=default_out_dir(), help="output directory (env SRGG_OUT_DIR)")
    common.add_argument("--log-level", default=None, help="overrides SRGG_LOG")

    parser = argparse.ArgumentParser(prog="srgg", description="Bayesian learning of soft random geometric graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", parents=[common], help="learn a graphical model with the 2-block sampler")
    learn.add_argument("--input", required=True, help="numeric CSV, one column per variable")
    learn.add_argument("--rows", type=int, default=None, help="rows to subsample (default: all)")
    learn.add_argument("--iters", type=int, default=10000)
    learn.add_argument("--burnin", type=int, default=5000)
    learn.add_argument("--tau", type=float, default=0.05)
    learn.add_argument("--sigma0", type=float, default=0.05, help="proposal sd for correlation entries")
    learn.add_argument("--w", type=float, default=0.05, help="proposal sd for edge variances")
    learn.add_argument("--seed", type=int, default=0)
    learn.add_argument("--normalization", action="store_true", help="include -log c-hat in block-1 ratios")
    learn.add_argument("--replicates", type=int, default=100, help="replicate count K for c-hat")
    learn.add_argument("--replicate-rows", type=int, default=10, help="replicate rows n' for c-hat")
    learn.add_argument("--convention", choices=("printed", "textbook"), default="printed")
    learn.add_argument("--hastings", choices=("full", "truncation", "none"), default="truncation")
    learn.add_argument("--graph-update", choices=("pairwise", "joint"), default="pairwise")
    learn.add_argument("--corr-target", choices=("auto", "marginalized", "row_independent"), default="auto")
    learn.add_argument("--delimiter", type=_delimiter, default=",")
    learn.add_argument("--format", action="append", choices=FORMATS, dest="formats")

    dist = sub.add_parser("distance", parents=[common], help="compare two learnt models from their traces")
    dist.add_argument("trace_a")
    dist.add_argument("trace_b")
    dist.add_argument("--burnin", type=int, default=None, help="default: each trace's sidecar")
    dist.add_argument("--scale-mode", choices=("shift", "divide", "verbatim"), default="shift")
    dist.add_argument("--truncate-min", action="store_true", help="align unequal post-burnin lengths")

    big = sub.add_parser("bignet", parents=[common], help="single-shot SRGG from correlations")
    src = big.add_mutually_exclusive_group(required=True)
    src.add_argument("--npmi", help="NPMI triples (item, feature, score)")
    src.add_argument("--corr", help="dense correlation CSV")
    big.add_argument("--tau", type=float, default=0.1)
    big.add_argument("--classes", default=None, help="node -> class CSV")
    big.add_argument("--corr-b", default=None, help="second correlation CSV for the network distance")
    big.add_argument("--missing-policy", choices=("zero", "bottom"), default="zero")
    big.add_argument("--threads", type=int, default=None)
    big.add_argument("--dense-limit", type=int, default=2000)
    big.add_argument("--format", action="append", choices=FORMATS, dest="formats")
    return parser


def cmd_learn(args: argparse.Namespace, argv: List[str]) -> int:
    cfg = McmcConfig(
        n_iter=args.iters,
        n_burnin=args.burnin,
        proposal_sd_corr=args.sigma0,
        proposal_sd_var=args.w,
        tau=args.tau,
        seed=args.seed,
        hastings=args.hastings,
        graph_update=args.graph_update,
        corr_target=args.corr_target,
        normalization=MarginalPosteriorConfig(
            use_normalization=args.normalization,
            replicate_count=args.replicates,
            replicate_rows=args.replicate_rows,
            seed=args.seed,
            convention=args.convention,
        ),
    )
    run_learn(
        args.input,
        cfg,
        args.out_dir,
        rows=args.rows,
        ingest=IngestConfig(delimiter=args.delimiter),
        formats=args.formats or ("dot", "graphml", "json"),
        argv=argv,
    )
    return 0


def cmd_distance(args: argparse.Namespace, argv: List[str]) -> int:
    run_compare(
        args.trace_a,
        args.trace_b,
        args.out_dir,
        burnin=args.burnin,
        scale_mode=args.scale_mode,
        truncate_min=args.truncate_min,
        argv=argv,
    )
    return 0


def cmd_bignet(args: argparse.Namespace, argv: List[str]) -> int:
    cfg = NetworkConfig(
        tau=args.tau,
        dense_limit=args.dense_limit,
        threads=args.threads or default_threads(),
        missing_policy=args.missing_policy,
    )
    run_network(
        args.out_dir,
        cfg,
        npmi=args.npmi,
        corr=args.corr,
        classes=args.classes,
        corr_b=args.corr_b,
        formats=args.formats or ("csv", "graphml"),
        argv=argv,
    )
    return 0


COMMANDS = {"learn": cmd_learn, "distance": cmd_distance, "bignet": cmd_bignet}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    configure(args.log_level)
    try:
        return COMMANDS[args.command](args, argv)
    except SrggError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"❌ invalid configuration: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
