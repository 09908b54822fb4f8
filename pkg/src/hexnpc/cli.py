"""Command-line entry point: ``hexnpc {run, compare, selfcheck}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from .errors import ConfigError, DivergenceError, LabelMismatchError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_CHECK_FAILED = 4

log = logging.getLogger("hexnpc")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hexnpc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the task described by a config file")
    run.add_argument("--config", required=True, type=Path, help="YAML/JSON config (or a manifest)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--threads", type=int, help="FFT threads (overrides HEXNPC_THREADS)")
    run.add_argument("--output", type=Path, help="output directory (overrides HEXNPC_OUTPUT_DIR)")
    run.add_argument("--profile", choices=("desk", "paper"), help="grid/step/ensemble defaults")

    cmp_ = sub.add_parser("compare", help="analytic vs simulated photon numbers")
    cmp_.add_argument("analytic", type=Path)
    cmp_.add_argument("simulated", type=Path)
    cmp_.add_argument("--output", type=Path, help="also write JSON/CSV/text reports here")

    chk = sub.add_parser("selfcheck", help="fast built-in consistency checks")
    chk.add_argument("--seed", type=int, default=0)
    return p


def _cmd_run(args) -> int:
    from .cli_io.config import load_config
    from .cli_io.manifest import Manifest
    from .cli_io.tasks import run_task

    overrides = {"seed": args.seed, "threads": args.threads, "profile": args.profile,
                 "output_dir": None if args.output is None else str(args.output)}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error ({len(exc.errors)} problem(s)):", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output_dir)
    manifest = Manifest(out, cfg, sys.argv)
    if manifest.overwrote:
        log.warning("overwriting previous results in %s", out)
    manifest.start()

    def progress(*a):
        log.info("progress %s", "/".join(str(x) for x in a[:2]))

    try:
        summary = run_task(cfg, out, progress)
    except DivergenceError as exc:
        manifest.finish("diverged", EXIT_DIVERGENCE,
                        error={"type": "DivergenceError", "message": str(exc), "z": exc.z,
                               "max_amplitude": exc.max_amplitude})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except Exception as exc:  # recorded, then reported
        manifest.finish("failed", EXIT_RUNTIME,
                        error={"type": type(exc).__name__, "message": str(exc),
                               "traceback": traceback.format_exc()})
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest.finish("ok", EXIT_OK, summary=summary)
    print(json.dumps({"task": cfg.task.value, "output": str(out), "summary": summary},
                     indent=2, default=str))
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .cli_io.compare import compare_report

    try:
        report = compare_report(args.analytic, args.simulated)
    except LabelMismatchError as exc:
        print(f"label mismatch: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"cannot read dumps: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.to_text())
    if args.output is not None:
        report.write(args.output)
    return EXIT_OK


def _cmd_selfcheck(args) -> int:
    from .cli_io.selfcheck import run_selfcheck

    results = run_selfcheck(args.seed)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return {"run": _cmd_run, "compare": _cmd_compare, "selfcheck": _cmd_selfcheck}[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
