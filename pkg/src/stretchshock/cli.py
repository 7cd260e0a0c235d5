"""Command-line entry point: ``stretchshock <subcommand> --config FILE --out DIR``.

Exit status is 0 on clean termination, 2 when the run ended in an event
(Lax failure, second shock, tension floor) and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Scenario, load_config
from .errors import StretchShockError
from .runner import OUT_ENV, run, run_many

log = logging.getLogger("stretchshock")

SUBCOMMANDS = {
    "simulate": Scenario.SIMULATE,
    "oracle-compare": Scenario.ORACLE_COMPARE,
    "stability": None,   # zeta0 or zetapos, decided by the parameters
    "instability": Scenario.INSTABILITY_DEMO,
    "energy-audit": Scenario.ENERGY_AUDIT,
    "crossvalidate": Scenario.CROSSVALIDATE,
}


def build_parser():
    p = argparse.ArgumentParser(prog="stretchshock", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", action="append", required=True, type=Path,
                        help="run configuration (repeat for a sweep)")
        sp.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: [output] dir, else ${OUT_ENV}/<config name>)")
        sp.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    return p


def _scenario_override(command, path, overrides):
    sc = SUBCOMMANDS[command]
    if sc is None:
        cfg = load_config(path, overrides)
        if cfg.scenario in (Scenario.STABILITY_ZETA0, Scenario.STABILITY_ZETAPOS):
            return []
        sc = Scenario.STABILITY_ZETA0 if cfg.params.zeta == 0 else Scenario.STABILITY_ZETAPOS
    return [f"scenario.name={sc.value}"]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if len(args.config) == 1:
            path = args.config[0]
            ov = list(args.override) + _scenario_override(args.command, path, args.override)
            cfg = load_config(path, ov)
            summary, code = run(cfg, args.out)
            brief = {k: summary.get(k) for k in ("scenario", "termination", "final", "event")}
            print(json.dumps(brief, sort_keys=True))
            return code
        extra = [_scenario_override(args.command, p, args.override) for p in args.config]
        out = run_many(args.config, args.override, args.out, args.jobs, per_path=extra)
    except StretchShockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    worst = 0
    for path, code, term, err in out:
        print(f"{path}: exit={code} termination={term}" + (f" error={err}" if err else ""))
        if code == 1 or worst == 1:
            worst = 1
        else:
            worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
