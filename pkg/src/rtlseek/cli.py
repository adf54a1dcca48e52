"""``rtlseek`` command line.

Machine-readable output goes to stdout and diagnostics to stderr.

Exit codes:
    parse      0 ok, 1 syntax error, 2 I/O error
    equiv      0 equivalent, 1 distinct, 2 parse or I/O failure
    classes    0 ok, 2 I/O error
    sim        0 pass, 1 fail, 2 sim_error / parse / I/O failure
    score      0 ok, 2 I/O or input error
    grpo-demo  0 ok, 2 bad arguments
    eval       0 complete, 3 partial, 2 manifest error
    any        64 usage error (including unknown subcommand), 78 bad config
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, canon
from .config import ConfigError, load_config
from .verilog import check_syntax
from .verilog.jsonio import dumps, tree_to_json

EXIT_USAGE = 64
EXIT_CONFIG = 78


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which collides with I/O errors
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(doc) -> None:
    sys.stdout.write(dumps(doc))


# -- subcommands ----------------------------------------------------------------


def cmd_parse(args, cfg) -> int:
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    verdict = check_syntax(data)
    if not verdict.ok:
        err = verdict.error
        _emit({"schema": "ast/1", "ok": False, "diagnostics": [d.to_json() for d in verdict.diagnostics]})
        print(f"{args.file}: {err.category} error: {err}", file=sys.stderr)
        return 1
    _emit(tree_to_json(verdict.tree))
    return 0


def _load_trees(paths: Sequence[str]):
    verdicts = []
    for p in paths:
        try:
            data = Path(p).read_bytes()
        except OSError as exc:
            print(f"error: cannot read {p}: {exc.strerror or exc}", file=sys.stderr)
            return None
        verdicts.append(check_syntax(data))
    return verdicts


def cmd_equiv(args, cfg) -> int:
    verdicts = _load_trees([args.a, args.b])
    if verdicts is None:
        return 2
    for path, v in zip((args.a, args.b), verdicts):
        if not v.ok:
            print(f"{path}: {v.error.category} error: {v.error}", file=sys.stderr)
    if not all(v.ok for v in verdicts):
        return 2
    diff = canon.explain(verdicts[0].tree, verdicts[1].tree)
    if args.explain:
        print("equivalent" if diff is None else diff)
    return 0 if diff is None else 1


def _expand(inputs: Sequence[str]) -> list[str]:
    files: list[str] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(str(f) for f in sorted(p.iterdir()) if f.suffix == ".v" and f.is_file())
        else:
            files.append(item)
    return files


def cmd_classes(args, cfg) -> int:
    files = _expand(args.inputs)
    verdicts = _load_trees(files)
    if verdicts is None:
        return 2
    valid = [i for i, v in enumerate(verdicts) if v.ok]
    for i, v in enumerate(verdicts):
        if not v.ok:
            print(f"{files[i]}: {v.error.category} error: {v.error}", file=sys.stderr)
    parts = canon.partition([verdicts[i].tree for i in valid])
    _emit({
        "schema": "classes/1",
        "files": files,
        "classes": [[valid[k] for k in members] for members in parts.classes],
        "invalid": [i for i, v in enumerate(verdicts) if not v.ok],
    })
    return 0


def cmd_sim(args, cfg) -> int:
    from .sim import VectorError, load_suite, simulate

    try:
        suite = load_suite(args.vectors)
    except OSError as exc:
        print(f"error: cannot read {args.vectors}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    except (VectorError, KeyError, TypeError, AttributeError) as exc:
        print(f"error: bad vector file {args.vectors}: {exc}", file=sys.stderr)
        return 2
    verdicts = _load_trees([args.design])
    if verdicts is None:
        return 2
    verdict = verdicts[0]
    if not verdict.ok:
        print(f"{args.design}: {verdict.error.category} error: {verdict.error}", file=sys.stderr)
        return 2
    outcome = simulate(verdict.tree, suite, top=args.top, trace=args.trace is not None)
    if args.trace is not None:
        Path(args.trace).write_text(dumps({"schema": "trace/1", "steps": outcome.trace or []}), encoding="utf-8")
    _emit(outcome.to_json())
    if outcome.message:
        print(outcome.message, file=sys.stderr)
    return {"pass": 0, "fail": 1}.get(outcome.verdict, 2)


def cmd_score(args, cfg) -> int:
    from .reward import HistoryWindow, RewardConfig, Verification, score
    from .sim import VectorError, load_suite

    try:
        raw = Path(args.response).read_bytes().decode("utf-8", errors="replace")
    except OSError as exc:
        print(f"error: cannot read {args.response}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    verification = None
    try:
        if args.vectors:
            verification = Verification(suite=load_suite(args.vectors), top=args.top)
        elif args.external or cfg.external_command:
            verification = Verification(command=args.external or cfg.external_command, top=args.top,
                                        timeout=cfg.sim_timeout)
    except OSError as exc:
        print(f"error: cannot read {args.vectors}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    except (VectorError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.stage == 3 and verification is None:
        print("warning: stage 3 without --vectors or --external; r_func will be 0", file=sys.stderr)
    history_path = args.history or cfg.history
    try:
        history = HistoryWindow.load(history_path) if history_path else HistoryWindow()
    except (OSError, ValueError) as exc:
        print(f"error: bad history file: {exc}", file=sys.stderr)
        return 2
    breakdown = score(raw, RewardConfig(stage=cfg.stage, verification=verification), history)
    if history_path:
        try:
            HistoryWindow.append_to_file(history_path, breakdown.think_length)
        except OSError as exc:
            print(f"error: cannot update history {history_path}: {exc}", file=sys.stderr)
            return 2
    _emit(breakdown.to_json())
    return 0


def cmd_grpo_demo(args, cfg) -> int:
    import numpy as np

    from .grpo import GrpoConfig, ToyPolicy, diversity, near_degenerate_logits, single_best, train_demo

    if args.vocab < 2 or args.steps < 0:
        print("error: --vocab must be >= 2 and --steps >= 0", file=sys.stderr)
        return 2
    config = GrpoConfig(cfg.grpo_group_size, cfg.grpo_eps, cfg.grpo_beta)
    if args.env == "single-best":
        if not 0 <= args.target < args.vocab:
            print("error: --target must index the vocabulary", file=sys.stderr)
            return 2
        env, policy = single_best(args.target), ToyPolicy(np.zeros(args.vocab))
    else:
        n_valid = max(1, args.vocab - args.invalid)
        valid = [i < n_valid for i in range(args.vocab)]
        env, policy = diversity(valid), ToyPolicy(near_degenerate_logits(args.vocab))
    curve = train_demo(env, config, args.steps, policy, lr=cfg.grpo_lr, seed=cfg.grpo_seed)
    sys.stdout.write(curve.to_csv())
    if args.plot:
        from .plotting import plot_learning_curve

        plot_learning_curve(curve, args.plot)
    return 0


def cmd_eval(args, cfg) -> int:
    from .metrics import ManifestError, evaluate, load_manifest

    try:
        items = load_manifest(args.manifest, cfg.external_command, cfg.sim_timeout)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not Path(args.responses).is_dir():
        print(f"warning: responses directory {args.responses} does not exist", file=sys.stderr)
    report = evaluate(items, args.responses)
    doc = report.to_json()
    _emit(doc)
    if args.json:
        Path(args.json).write_text(dumps(doc), encoding="utf-8")
    sys.stderr.write(report.table())
    if args.plot:
        from .plotting import plot_eval_report

        plot_eval_report(report, args.plot)
    if not report.complete:
        print(f"warning: {len(report.complete_items)} of {len(report.items)} items complete", file=sys.stderr)
        return 3
    return 0


# -- wiring -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rtlseek", description="Verilog diversity rewards, GRPO toy kernel and evaluation metrics.")
    p.add_argument("--version", action="version", version=f"rtlseek {__version__}")
    p.add_argument("--config", help="key = value config file (default: $RTLSEEK_CONFIG)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("parse", help="parse a Verilog file and print its syntax tree as JSON")
    s.add_argument("file")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("equiv", help="exit 0 if two designs are structurally equivalent")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--explain", action="store_true", help="print the first differing canonical node path")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("classes", help="group designs into structural equivalence classes")
    s.add_argument("inputs", nargs="+", help=".v files or directories of them")
    s.set_defaults(func=cmd_classes)

    s = sub.add_parser("sim", help="run a design against a test-vector suite")
    s.add_argument("design")
    s.add_argument("--vectors", required=True)
    s.add_argument("--trace", help="write per-step signal values to this JSON file")
    s.add_argument("--top")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("score", help="compute the reward breakdown for one response")
    s.add_argument("response")
    s.add_argument("--stage", type=int, choices=(2, 3))
    g = s.add_mutually_exclusive_group()
    g.add_argument("--vectors")
    g.add_argument("--external", help="simulator command template containing {design}")
    s.add_argument("--top")
    s.add_argument("--history", help="JSON-lines file of previous think lengths; appended to")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("grpo-demo", help="train the toy policy and print a CSV learning curve")
    s.add_argument("--env", choices=("single-best", "diversity"), default="diversity")
    s.add_argument("--group-size", type=int)
    s.add_argument("--steps", type=int, default=500)
    s.add_argument("--seed", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--lr", type=float)
    s.add_argument("--vocab", type=int, default=8, help="number of designs in the toy vocabulary")
    s.add_argument("--target", type=int, default=3, help="rewarded design for single-best")
    s.add_argument("--invalid", type=int, default=2, help="designs at the end of the vocabulary that earn nothing")
    s.add_argument("--plot", help="also write the learning curve figure to this file")
    s.set_defaults(func=cmd_grpo_demo)

    s = sub.add_parser("eval", help="compute benchmark metrics over a responses directory")
    s.add_argument("--manifest", required=True)
    s.add_argument("--responses", required=True)
    s.add_argument("--json", help="also write the JSON report to this file")
    s.add_argument("--plot", help="also write a pass@k figure to this file")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = cfg.updated(
            stage=getattr(args, "stage", None),
            history=getattr(args, "history", None),
            grpo_group_size=getattr(args, "group_size", None),
            grpo_eps=getattr(args, "eps", None),
            grpo_beta=getattr(args, "beta", None),
            grpo_lr=getattr(args, "lr", None),
            grpo_seed=getattr(args, "seed", None),
        )
    except ConfigError as exc:
        print(f"rtlseek: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
