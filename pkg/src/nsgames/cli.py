"""Command-line front end.

Thin driver over the library: run simulations, verify behavior tables,
run the measure-invariance test, and enumerate FNS function tuples.

Exit codes are contract values: 0 success, 1 config or input error,
2 simulate saw SIGNALING-INVALID trials, 3 a verification rejected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .behavior import (
    Behavior,
    BudgetExceededError,
    check_fns,
    check_functional_locality_equivalence,
    check_no_signaling,
    functions_from_deterministic,
    is_deterministic_extremal,
)
from .experiment import (
    SCHEMA_VERSION,
    ExperimentConfig,
    MEMOIZED,
    invariance_test,
    run_experiment,
)
from .oracle import CANONICAL
from .strategies import parse_strategy_arg

OUT_DIR_ENV = "NSGAMES_OUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIGNALING = 2
EXIT_REJECTED = 3


class _Parser(argparse.ArgumentParser):
    """argparse's default error exit code is 2, which this interface
    reserves for quarantined simulations; remap usage errors to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v != "")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v != "")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsgames", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a game experiment")
    sim.add_argument("--config", help="JSON config file; inline flags override it")
    sim.add_argument("--strategy", help='name, shorthand (e.g. local-table:0,1,1,0) or JSON blob')
    sim.add_argument("--players", type=int)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--game", choices=["baker", "hat"])
    sim.add_argument("--oracle-mode", choices=[CANONICAL, MEMOIZED])
    sim.add_argument("--root-override-depth", type=int)
    sim.add_argument("--parallelism", type=int)
    sim.add_argument("--azuma-n", type=_int_list, metavar="N1,N2,...")
    sim.add_argument("--azuma-eps", type=_float_list, metavar="E1,E2,...")
    sim.add_argument("--allow-cheat", action="store_true", default=None,
                     help="arm the root backdoor for negative-control strategies")
    sim.add_argument("--no-enforce", action="store_true", default=None,
                     help="score forbidden-access trials instead of quarantining")
    sim.add_argument("--format", choices=["json", "csv"], default="json")
    sim.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")

    ver = sub.add_parser("verify-behavior", help="check a behavior table")
    ver.add_argument("path", help="behavior JSON file")
    ver.add_argument("--tol", type=float, default=None,
                     help="tolerance, required for float tables")
    ver.add_argument("--strict", action="store_true",
                     help="check every party subset, not only single parties")
    ver.add_argument("--format", choices=["text", "json"], default="text")

    inv = sub.add_parser("invariance-test", help="chi-square shift-invariance test")
    inv.add_argument("--samples", type=int, default=10**6)
    inv.add_argument("--bins", type=int, default=256)
    inv.add_argument("--seed", type=int, default=0)
    inv.add_argument("--iterations", type=int, default=1)
    inv.add_argument("--sampler", choices=["uniform", "adversarial"], default="uniform")
    inv.add_argument("--alpha", type=float, default=1e-3)
    inv.add_argument("--out", help="also write the JSON report here")

    enu = sub.add_parser("enumerate-fns", help="brute-force FNS vs factored counts")
    enu.add_argument("--inputs", type=_int_list, default=(2, 2), metavar="N1,N2,...")
    enu.add_argument("--outputs", type=_int_list, default=(2, 2), metavar="N1,N2,...")
    enu.add_argument("--budget", type=int, default=10**6)

    return parser


def _resolve(args, key: str, file_cfg: dict, default):
    flag = getattr(args, key.replace("-", "_"))
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _simulate(args) -> int:
    file_cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: --config: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    strategy_arg = _resolve(args, "strategy", file_cfg, None)
    if strategy_arg is None:
        print("config error: --strategy is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if isinstance(strategy_arg, dict):
            strategy_arg = json.dumps(strategy_arg)
        strategy = parse_strategy_arg(strategy_arg)
        allow_cheat = bool(_resolve(args, "allow-cheat", file_cfg, False))
        no_enforce = bool(_resolve(args, "no-enforce", file_cfg, False))
        azuma_n = _resolve(args, "azuma-n", file_cfg, None)
        cfg = ExperimentConfig(
            strategy=strategy,
            players=int(_resolve(args, "players", file_cfg, 64)),
            trials=int(_resolve(args, "trials", file_cfg, 1000)),
            master_seed=int(_resolve(args, "seed", file_cfg, 0)),
            variant=_resolve(args, "game", file_cfg, "baker"),
            oracle_mode=_resolve(args, "oracle-mode", file_cfg, CANONICAL),
            override_depth=int(_resolve(args, "root-override-depth", file_cfg, 0)),
            azuma_n=tuple(azuma_n) if azuma_n is not None else None,
            azuma_eps=tuple(_resolve(args, "azuma-eps", file_cfg, (4.0, 8.0, 16.0))),
            parallelism=int(_resolve(args, "parallelism", file_cfg, 1)),
            enforce_contracts=not no_enforce,
            enable_backdoor=allow_cheat,
        )
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = run_experiment(cfg)

    out_dir = Path(args.out_dir or os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        (out_dir / "report.json").write_text(result.render_json(), encoding="utf-8")
    else:
        (out_dir / "win.csv").write_text(result.win.to_csv(), encoding="utf-8")
        (out_dir / "azuma.csv").write_text(result.azuma.to_csv(), encoding="utf-8")
    (out_dir / "trials.jsonl").write_text(result.trial_log(), encoding="utf-8")
    if cfg.oracle_mode == MEMOIZED:
        result.oracle.dump_table(out_dir / "oracle_table.json")

    win = result.win
    pooled = "n/a" if win.pooled_freq is None else f"{win.pooled_freq:.6f}"
    print(f"trials={cfg.trials} players={cfg.players} strategy={strategy.name}")
    print(f"pooled win rate: {pooled}  scored={win.scored_trials} invalid={win.invalid_trials}")
    print(f"azuma violations: {result.azuma.violations}")
    if win.invalid_trials:
        raw = win.invalid_raw_success_rate
        print(f"SIGNALING-INVALID trials quarantined (raw success rate {raw:.4f})")
        return EXIT_SIGNALING
    return EXIT_OK


def _verify_behavior(args) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(
            f"input error: {args.path}: line {exc.lineno} column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    try:
        behavior = Behavior.from_json(doc)
        ns = check_no_signaling(behavior, tol=args.tol, strict=args.strict)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    deterministic = is_deterministic_extremal(behavior, tol=args.tol)
    fns = None
    if deterministic:
        ft = functions_from_deterministic(behavior, tol=args.tol)
        fns = check_fns(ft)

    if args.format == "json":
        print(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "no_signaling": ns.passed,
            "violations": [str(v) for v in ns.violations],
            "deterministic": deterministic,
            "fns": None if fns is None else fns.passed,
            "fns_violations": [] if fns is None else [str(v) for v in fns.violations],
        }, sort_keys=True, indent=2))
    else:
        print(f"NS: {'pass' if ns.passed else 'FAIL'}")
        for v in ns.violations:
            print(f"  {v}")
        print(f"deterministic: {'yes' if deterministic else 'no'}")
        if fns is not None:
            print(f"FNS: {'pass' if fns.passed else 'FAIL'}")
            for v in fns.violations:
                print(f"  {v}")
    return EXIT_OK if ns.passed else EXIT_REJECTED


def _invariance(args) -> int:
    try:
        report = invariance_test(
            samples=args.samples,
            bins=args.bins,
            seed=args.seed,
            iterations=args.iterations,
            sampler=args.sampler,
            alpha=args.alpha,
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"schema_version": SCHEMA_VERSION, **report.to_json()}
    if args.out:
        Path(args.out).write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    print(
        f"sampler={report.sampler} iterations={report.iterations} "
        f"bins={report.bins} samples={report.samples}"
    )
    print(f"chi-square p-value: {report.pvalue:.6g} "
          f"({'pass' if report.passed else 'REJECT'} at alpha={report.alpha:g})")
    return EXIT_OK if report.passed else EXIT_REJECTED


def _enumerate_fns(args) -> int:
    try:
        report = check_functional_locality_equivalence(
            args.inputs, args.outputs, budget=args.budget
        )
    except BudgetExceededError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"schema_version": SCHEMA_VERSION, **report.to_json()}
    print(json.dumps(doc, sort_keys=True, indent=2))
    return EXIT_OK if report.coincide else EXIT_REJECTED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return _simulate(args)
    if args.command == "verify-behavior":
        return _verify_behavior(args)
    if args.command == "invariance-test":
        return _invariance(args)
    return _enumerate_fns(args)


if __name__ == "__main__":
    sys.exit(main())
