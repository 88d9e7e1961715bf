"""Command-line entry point.

Exit codes: 0 success / all verdicts pass, 1 verdict or verification failure,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .assignment import InfeasibleAssignment
from .budget import BudgetConfig, BudgetError, StrategyPrior, calibrate_alpha
from .config import ConfigError, RunConfig, load_config
from .eventlog import EventLog, LogFormatError
from .harness import run_experiment
from .ledger import LedgerError, replay
from .pg1_model import RngStream

log = logging.getLogger("skillcheck")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        changes["out"] = args.out
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_run_exam(args) -> int:
    from .runner import run_exam, write_outputs

    cfg = _load(args)
    run = run_exam(cfg)
    paths = write_outputs(run, cfg.out)
    led = run.ledger
    print(f"exam {run.exam_id}: phase {led.phase(run.exam_id).name}, alpha {run.alpha!r}")
    print(f"token conservation: {'ok' if led.conservation_holds() else 'VIOLATED'}")
    for name, p in paths.items():
        print(f"wrote {name}: {p}")
    return EXIT_OK if led.conservation_holds() and led.verify_chain() else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        lg = EventLog.read(args.log)
    except LogFormatError as e:
        print(f"FAIL: {args.log}: {e}")
        return EXIT_FAIL
    except OSError as e:
        print(f"error: cannot read {args.log}: {e.strerror}", file=sys.stderr)
        return EXIT_USAGE
    if not lg.verify():
        print(f"FAIL: {args.log}: hash chain broken")
        return EXIT_FAIL
    if args.replay:
        try:
            replay(lg)
        except LedgerError as e:
            print(f"FAIL: {args.log}: replay: {e}")
            return EXIT_FAIL
    print(f"OK: {args.log}: {len(lg)} entries, head {lg.head}")
    return EXIT_OK


def cmd_properties(args) -> int:
    cfg = _load(args)
    checks = None if args.check in (None, "all") else [args.check]
    modes = None if args.mode is None else [args.mode]
    reports = run_experiment(cfg, checks, modes, cfg.out)
    failed = 0
    for r in reports:
        if r.check == "pointwise":
            continue
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check} [{r.mode}] {r.verdicts}")
        failed += not r.passed
    pw = [r for r in reports if r.check == "pointwise"]
    if pw:
        bad = sum(not r.passed for r in pw)
        print(f"{'PASS' if not bad else 'FAIL'} pointwise: {len(pw) - bad}/{len(pw)} instances")
        failed += bad
    print(f"wrote {Path(cfg.out) / 'properties.csv'} and {Path(cfg.out) / 'verdicts.json'}")
    return EXIT_OK if not failed else EXIT_FAIL


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    b = cfg.budget
    bc = BudgetConfig(b.k_net, b.safety_margin, b.mc_samples, StrategyPrior(b.bias_sd, b.tau_min, b.tau_max))
    rep = calibrate_alpha(cfg.exam, bc, RngStream(cfg.seed))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration.json").write_text(rep.to_json())
    print(f"alpha = {rep.alpha!r} (E[payout | alpha=1] = {rep.estimate:.6g} +/- {rep.ci_halfwidth:.3g})")
    print(f"wrote {out / 'calibration.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skillcheck", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="flat key = value config file")
        sp.add_argument("--seed", type=int, help="override run.seed")
        sp.add_argument("--out", help="override run.out (output directory)")

    sp = sub.add_parser("run-exam", help="run a simulated exam end to end on the ledger")
    common(sp)
    sp.set_defaults(func=cmd_run_exam)

    sp = sub.add_parser("verify", help="verify the hash chain of an event log")
    sp.add_argument("log", help="event log file")
    sp.add_argument("--replay", action="store_true", help="also replay the log and check effects")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("properties", help="run incentive property checks")
    common(sp)
    sp.add_argument("--check", choices=["epbi", "eprm", "pointwise", "all"], default="all")
    sp.add_argument("--mode", choices=["own-noise", "own-noise-y"])
    sp.set_defaults(func=cmd_properties)

    sp = sub.add_parser("calibrate", help="calibrate alpha for expected budget balance")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InfeasibleAssignment) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (LedgerError, BudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
