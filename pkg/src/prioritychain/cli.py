"""Command-line entry point: ``python -m prioritychain <command> ...``.

Exit codes: 0 success, 1 usage or config error, 2 the emitted trace failed
its own audit. ``PRIORITYCHAIN_OUT`` sets the default output directory.
"""
from __future__ import annotations

import argparse
import os
import sys

from .election import DEFAULT_TREE_PARAMS, read_dataset, write_dataset
from .engine import audit_trace, serialize_trace
from .errors import ConfigError, ContractViolation, TrainingError
from .gbdt import logloss, train_classifier
from .sim.config import load_config
from .sim.dataset import accuracy, generate_dataset
from .sim.experiments import Fig7Config, attack_config, run_fig7, run_fig8
from .sim.metrics import fmt, write_metrics, write_rows
from .sim.simulator import SimResult, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2
TRACE_FILE = "trace.log"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def default_out() -> str:
    return os.environ.get("PRIORITYCHAIN_OUT", "out")


def _write_run(result: SimResult, outdir: str) -> int:
    write_metrics(result.metrics, outdir)
    with open(os.path.join(outdir, TRACE_FILE), "w") as fh:
        fh.write(serialize_trace(result.trace))
    cfg = result.config
    problems = audit_trace(result.trace, capacity=cfg.m, d_min=cfg.d_min, d_max=cfg.d_max)
    s = result.metrics.summary
    print(f"height={s['chain_height']} accepted={s['blocks_accepted']} voteouts={s['voteouts']} -> {outdir}")
    if problems:
        for p in problems:
            print(f"trace violation: {p}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return _write_run(run_scenario(cfg), args.out or default_out())


def cmd_dataset(args) -> int:
    data = generate_dataset(args.n, args.seed)
    out = args.out or os.path.join(default_out(), "dataset.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    write_dataset(out, data.X, data.y)
    print(f"{len(data)} rows -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    X, y = read_dataset(args.data)
    n_test = int(round(len(y) * args.test_fraction))
    cut = len(y) - n_test
    model = train_classifier(X[:cut], y[:cut], DEFAULT_TREE_PARAMS, eval_set=(X[cut:], y[cut:]))
    prob = model.predict_proba(X[cut:])
    acc = accuracy((prob >= 0.5).astype(int), y[cut:])
    out = args.out_metrics or os.path.join(default_out(), "training.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    rows = [(i + 1, tr, ev) for i, (tr, ev) in enumerate(zip(model.train_logloss, model.eval_logloss))]
    write_rows(out, ("round", "train_logloss", "test_logloss"), rows)
    print(f"accuracy={fmt(acc)} test_logloss={fmt(logloss(y[cut:], prob))} -> {out}")
    return EXIT_OK


def cmd_fig7(args) -> int:
    outdir = args.out or default_out()
    os.makedirs(outdir, exist_ok=True)
    rows, separated = [], 0
    for run in range(args.runs):
        res = run_fig7(Fig7Config(seed=args.seed + run, flip_prob=args.flip_prob))
        separated += res.separated
        for node, traj in sorted(res.trajectories.items()):
            role = "honest" if node in res.honest else "malicious"
            rows += [(run, k, node, role, t) for k, t in enumerate(traj)]
    path = write_rows(os.path.join(outdir, "fig7.csv"), ("run", "iteration", "node", "role", "trust"), rows)
    print(f"separated in {separated}/{args.runs} runs -> {path}")
    return EXIT_OK


def cmd_fig8(args) -> int:
    outdir = args.out or default_out()
    os.makedirs(outdir, exist_ok=True)
    res = run_fig8()
    rows = [("promptness", x, t) for x, t in res.promptness_curve]
    rows += [("alpha", float(a), t) for a, t in res.alpha_curve]
    path = write_rows(os.path.join(outdir, "fig8.csv"), ("curve", "x", "trust"), rows)
    print(f"-> {path}")
    return EXIT_OK


def cmd_attacks(args) -> int:
    cfg = attack_config(args.scenario, args.seed)
    return _write_run(run_scenario(cfg), args.out or os.path.join(default_out(), args.scenario))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prioritychain", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("dataset", help="write a synthetic labelled node dataset")
    d.add_argument("--n", type=int, default=1000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dataset)

    t = sub.add_parser("train", help="train the candidate classifier on a dataset CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--out-metrics")
    t.add_argument("--test-fraction", type=float, default=0.6)
    t.set_defaults(func=cmd_train)

    f7 = sub.add_parser("fig7", help="trust of honest vs malicious reviewers")
    f7.add_argument("--out")
    f7.add_argument("--seed", type=int, default=0)
    f7.add_argument("--runs", type=int, default=30)
    f7.add_argument("--flip-prob", type=float, default=0.5)
    f7.set_defaults(func=cmd_fig7)

    f8 = sub.add_parser("fig8", help="trust vs promptness and history weight")
    f8.add_argument("--out")
    f8.set_defaults(func=cmd_fig8)

    a = sub.add_parser("attacks", help="run an attack scenario")
    a.add_argument("--scenario", required=True, choices=["empty-block", "collusion", "laggard"])
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_attacks)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolation, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
