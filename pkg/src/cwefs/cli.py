"""Command-line entry point.

Subcommands::

    cwefs synth    --config C --out DIR      write a synthetic dataset (manifest layout)
    cwefs select   --config C --out DIR      rank features on the whole dataset
    cwefs eval     --config C --ranking R --out DIR
                                             evaluate a fixed ranking over trials
    cwefs run      --config C --out DIR      full selection + evaluation sweep
    cwefs friedman TABLE                     Friedman statistic from a rank table

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .dataset import read_matrix_csv, save_dataset
from .exceptions import ConfigError, DataError, NumericalError
from .graph import build_graphs, dump_graph
from .metrics import friedman_chi2, friedman_statistic, rank_methods
from .solver import rank_features, read_ranking_csv, solve, write_ranking_csv, write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("cwefs")


def _ratios(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None


def _config(args):
    return ex.load_config(
        args.config,
        seed=args.seed,
        trials=getattr(args, "trials", None),
        feature_ratios=getattr(args, "ratios", None),
    )


def cmd_synth(args):
    cfg = _config(args)
    if cfg.synthetic is None:
        raise ConfigError("synth needs synthetic.* keys in the config")
    data, truth = cfg.synthetic.generate()
    out = Path(args.out)
    manifest = save_dataset(data, out)
    lines = ["channel,feature_index"]
    lines += [f"{c},{f}" for c, f in sorted(truth.relevant_features)]
    (out / "ground_truth.csv").write_text("\n".join(lines) + "\n")
    print(manifest)


def cmd_select(args):
    cfg = _config(args)
    data = ex.prepare_dataset(cfg)
    graphs = build_graphs(data, cfg.q, cfg.sigma)
    state = solve(data, graphs, cfg.hyperparams, seed=cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ranking_csv(rank_features(state), out / "ranking.csv")
    write_trace_csv(state, out / "trace.csv")
    if args.dump_graphs:
        for v, lap in enumerate(graphs.channels):
            dump_graph(lap, out / "graphs", f"channel{v:03d}")
        dump_graph(graphs.labels, out / "graphs", "labels")
    print(out / "ranking.csv")


def cmd_eval(args):
    cfg = _config(args)
    ranking = read_ranking_csv(args.ranking)
    report = ex.evaluate_ranking(cfg, ranking, threads=args.threads)
    for path in ex.emit_report(report, args.out):
        print(path)


def cmd_run(args):
    cfg = _config(args)
    report = ex.run_experiment(cfg, threads=args.threads)
    for path in ex.emit_report(report, args.out):
        print(path)


def cmd_friedman(args):
    table = read_matrix_csv(args.table, header=args.header)
    ranks = rank_methods(table, higher_is_better=not args.lower_is_better) if args.values else table
    print(f"methods={ranks.shape[0]} datasets={ranks.shape[1]}")
    print(f"chi2_F={format(friedman_chi2(ranks), '.10g')}")
    print(f"F_F={format(friedman_statistic(ranks), '.10g')}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwefs",
        description="Channel-weighted multi-view feature selection: data synthesis, "
                    "feature ranking, ML-KNN evaluation sweeps and Friedman statistics.",
        epilog="exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=False):
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="base seed override")
        if sweep:
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--ratios", type=_ratios, default=None,
                           help="comma-separated feature ratios")
            p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="rank features on the full dataset")
    common(p)
    p.add_argument("--dump-graphs", action="store_true", help="write S and L matrices as CSV")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="evaluate a fixed ranking")
    common(p, sweep=True)
    p.add_argument("--ranking", required=True, help="ranking CSV from `select`")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="full pipeline")
    common(p, sweep=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("friedman", help="Friedman statistic from a methods x datasets table")
    p.add_argument("table", help="CSV, rows = methods, columns = datasets")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--values", action="store_true",
                   help="table holds metric values; rank them per dataset first")
    p.add_argument("--lower-is-better", action="store_true",
                   help="with --values: smaller metric values rank higher")
    p.set_defaults(func=cmd_friedman)
    return parser


def _exit_code(exc):
    cause = exc
    while isinstance(cause, ex.TrialError) and cause.__cause__ is not None:
        cause = cause.__cause__
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except (ConfigError, DataError, NumericalError, ex.TrialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
