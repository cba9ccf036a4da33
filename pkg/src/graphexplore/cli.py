"""Command line interface: ``graphexplore {generate,explore,train,evaluate,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .agent import DFPPolicy, TargetNormalizer
from .baselines import POLICIES, run_policy
from .config import ConfigError, TrainConfig, load_config, parse_overrides
from .evaluation import aggregate_runs, curve_csv, evaluate_seeds, report_rows_csv, reports_to_rows
from .generators import (FAMILIES, FAMILY_SIZES, generate_family, load_dataset, load_geo_graph,
                         make_dataset, read_graph_file, road_dataset, save_dataset)
from .neural import NumericError, load_checkpoint

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dataset(spec: str, seed: int, test_ratio: float = 0.2, n_eval: int = 50):
    if spec in FAMILIES:
        graphs = generate_family(spec, FAMILY_SIZES[spec], seed)
        return make_dataset(graphs, test_ratio, n_eval, seed, spec)
    return load_dataset(spec)


def _learned_policy(checkpoint) -> DFPPolicy:
    net, extra = load_checkpoint(checkpoint, with_extra=True)
    scale = extra.get("normalizer")
    return DFPPolicy(net, extra.get("goal", TrainConfig().temporal_coefficients), 0.0,
                     TargetNormalizer(scale) if scale else None, extra.get("history", 2),
                     extra.get("nn_feature", False), extra.get("shift", True))


def _policy(name: str, checkpoint):
    if name in POLICIES:
        return POLICIES[name]
    if name in ("noge", "noge-nn"):
        if not checkpoint:
            raise UsageError(f"policy {name!r} needs --checkpoint")
        return _learned_policy(checkpoint)
    raise UsageError(f"unknown policy {name!r}")


def cmd_generate(args) -> int:
    if bool(args.family) == bool(args.road):
        raise UsageError("give exactly one of --family or --road")
    if args.family:
        if args.family not in FAMILIES:
            raise UsageError(f"unknown family {args.family!r}")
        graphs = generate_family(args.family, args.count, args.seed)
        ds = make_dataset(graphs, args.test_ratio, args.n_eval, args.seed, args.family)
    else:
        ds = road_dataset(load_geo_graph(args.road), args.n_eval, args.seed, Path(args.road).stem)
    save_dataset(ds, args.out)
    print(json.dumps({"dataset": ds.name, "train": len(ds.train), "test": len(ds.test),
                      "eval_pairs": len(ds.eval_pairs())}))
    return EXIT_OK


def cmd_explore(args) -> int:
    graph, _ = read_graph_file(args.graph)
    policy = _policy(args.policy, args.checkpoint)
    state, rewards = run_policy(graph, args.source, policy, args.max_steps, np.random.default_rng(args.seed))
    lines = ["step,node,reward,total_length,rate"]
    total = 0
    for t, (node, r) in enumerate(zip(state.path[1:], rewards), 1):
        total -= r
        lines.append(f"{t},{node},{r},{total},{t / total:.6f}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    from .training import train

    try:
        cfg = load_config(args.config, args.set) if args.config else parse_overrides(args.set, TrainConfig())
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    result = train(cfg, args.out)
    final = result.final
    print(json.dumps({"out": str(args.out), "steps": cfg.training_steps,
                      "final_rate": None if final is None else final.mean}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = _dataset(args.dataset, args.data_seed, args.test_ratio, args.n_eval)
    seeds = [int(s) for s in args.seeds.split(",")]
    reports = []
    for name in args.policies.split(","):
        reports.append(evaluate_seeds(_policy(name.strip(), args.checkpoint), ds, seeds, args.max_steps,
                                      name.strip()))
    _write(report_rows_csv(reports_to_rows(reports)), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    rows, curve = aggregate_runs(args.runs)
    _write(report_rows_csv(rows), args.table)
    if args.curve:
        _write(curve_csv(curve), args.curve)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graphexplore", description="Online graph exploration: baselines and a learned explorer.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="build a dataset from a graph family or a road-network file")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--road", help="road network file (N id x y / E u v lines)")
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--test-ratio", type=float, default=0.2)
    g.add_argument("--n-eval", type=int, default=50)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("explore", help="run one policy on one graph and print the trajectory")
    e.add_argument("--graph", required=True)
    e.add_argument("--source", type=int, default=0)
    e.add_argument("--policy", default="nn")
    e.add_argument("--checkpoint")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-steps", type=int, default=500)
    e.add_argument("--out")
    e.set_defaults(func=cmd_explore)

    t = sub.add_parser("train", help="train the learned explorer")
    t.add_argument("--config")
    t.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("evaluate", help="evaluate policies on a dataset's fixed test pairs")
    v.add_argument("--dataset", required=True, help="dataset directory or family name")
    v.add_argument("--policies", default="random,bfs,dfs,nn")
    v.add_argument("--checkpoint")
    v.add_argument("--seeds", default="0,1,2,3,4")
    v.add_argument("--data-seed", type=int, default=0)
    v.add_argument("--test-ratio", type=float, default=0.2)
    v.add_argument("--n-eval", type=int, default=50)
    v.add_argument("--max-steps", type=int, default=500)
    v.add_argument("--out")
    v.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="merge run directories into a table and a learning curve")
    r.add_argument("runs", nargs="+")
    r.add_argument("--table")
    r.add_argument("--curve")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"graphexplore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        print(f"graphexplore: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"graphexplore: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
