"""Command line front end: ``wgqed run|preset|rates|check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .modes import GeometryError, ModeNotPropagating
from .oracle import RevivalHorizonError
from .retarded import DDEConfigError
from .scenario import (
    PRESETS,
    ConfigError,
    CutoffError,
    _jsonable,
    apply_override,
    build_scenario,
    derived_quantities,
    load_config,
    normalize_config,
    preset_config,
    run_scenario,
)

EXIT_CODES = {"config": 2, "geometry": 3, "cutoff": 4, "numerics": 5, "acceptance": 6}


def _category(exc: Exception) -> str:
    if isinstance(exc, GeometryError):
        return "geometry"
    if isinstance(exc, (CutoffError, ModeNotPropagating)):
        return "cutoff"
    if isinstance(exc, (RevivalHorizonError, DDEConfigError, RuntimeError, FloatingPointError)):
        return "numerics"
    return "config"


def _run(cfg: dict, out: str | None) -> int:
    out_dir = Path(out or normalize_config(cfg)["output"]["dir"])
    result = run_scenario(cfg, out_dir)
    checks = result.summary["checks"]
    print(f"{result.summary['name']}: wrote {', '.join(sorted(result.results))} to {out_dir}")
    for key, val in checks.items():
        print(f"  {key} = {val}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wgqed", description="Two atoms in a rectangular waveguide")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a JSON scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides output.dir)")

    p_pre = sub.add_parser("preset", help="run a named preset")
    p_pre.add_argument("name", choices=sorted(PRESETS))
    p_pre.add_argument("--out")
    p_pre.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config key with a JSON value, repeatable")
    p_pre.add_argument("--dump", action="store_true", help="print the effective config and exit")

    p_rates = sub.add_parser("rates", help="print derived quantities of a config or preset")
    p_rates.add_argument("config", help="path to a JSON config or a preset name")

    sub.add_parser("check", help="run the acceptance criteria")

    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.cmd == "run":
            return _run(load_config(args.config), args.out)
        if args.cmd == "preset":
            cfg = preset_config(args.name)
            for ov in args.override:
                apply_override(cfg, ov)
            if args.dump:
                print(json.dumps(normalize_config(cfg), indent=2))
                return 0
            return _run(cfg, args.out or f"out/{args.name}")
        if args.cmd == "rates":
            cfg = preset_config(args.config) if args.config in PRESETS else load_config(args.config)
            print(json.dumps(_jsonable(derived_quantities(build_scenario(cfg))), indent=2))
            return 0
        if args.cmd == "check":
            from .acceptance import run_all

            results = run_all()
            failed = [r for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
            return EXIT_CODES["acceptance"] if failed else 0
    except (ValueError, RuntimeError, OSError) as exc:
        cat = "config" if isinstance(exc, OSError) else _category(exc)
        print(f"error [{cat}]: {exc}", file=sys.stderr)
        return EXIT_CODES[cat]
    return 0


if __name__ == "__main__":
    sys.exit(main())
