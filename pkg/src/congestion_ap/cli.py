"""Command-line entry point.

Subcommands
-----------
run        integrate one case and write snapshots plus an error report
sweep      run a family of cases and write one table row per run
riemann    dump the reference profile of a piecewise-constant case
ablate-p0  run P1prime with and without the explicit pressure part

Settings come from an optional flat ``key = value`` file (keys are the
``RunConfig`` field names) and are overridden by command-line flags.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import fields
from pathlib import Path
from typing import List, Optional, Sequence

from .cases import case_pieces, make_reference
from .errors import DomainError, InteractionError, SolverError
from .harness import RunConfig, SweepSpec, p0_ablation, run, sweep
from .mesh import Grid1D, write_profile_csv
from .metrics import total_variation

log = logging.getLogger("congestion_ap")

_FLAGS = {
    "case": ("--case", str),
    "scheme": ("--scheme", str),
    "epsilon": ("--epsilon", float),
    "gamma": ("--gamma", float),
    "rho_star": ("--rho-star", float),
    "dx": ("--dx", float),
    "dt": ("--dt", float),
    "courant_sigma": ("--courant", float),
    "t_end": ("--t-end", float),
    "picard_iters": ("--picard", int),
    "boundary": ("--boundary", str),
    "output_dir": ("--out", str),
    "reference": ("--reference", str),
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def parse_pieces(text: str) -> tuple:
    """``"0:0.7:0.8,0.5:0.7:-0.8"`` -> ``((0, 0.7, 0.8), (0.5, 0.7, -0.8))``."""
    out = []
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"piece {item!r} is not x_start:rho:q")
        out.append(tuple(float(p) for p in parts))
    return tuple(out)


def _convert(name: str, text: str):
    if name == "snapshot_times":
        return parse_floats(text)
    if name == "pieces":
        return parse_pieces(text)
    if name == "split":
        return _parse_bool(text)
    if name in ("dy", "courant_sigma", "output_dir") and text.strip().lower() in ("", "none"):
        return None
    if name in ("picard_iters",):
        return int(text)
    if name in ("case", "scheme", "boundary", "reference", "output_dir"):
        return text.strip()
    return float(text)


def load_config_file(path: str) -> dict:
    """Read a flat ``key = value`` file into RunConfig keyword arguments."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    with open(path) as fh:
        parser.read_string("[run]\n" + fh.read())
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in parser["run"].items():
        name = key.replace("-", "_")
        if name not in known:
            raise ValueError(f"{path}: unknown key {key!r}")
        out[name] = _convert(name, value)
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--config", help="flat key = value file with RunConfig fields")
    for name, (flag, typ) in _FLAGS.items():
        p.add_argument(flag, dest=name, type=typ, default=None)
    p.add_argument("--snapshots", dest="snapshot_times", type=parse_floats, default=None,
                   help="comma-separated snapshot times")
    p.add_argument("--pieces", type=parse_pieces, default=None,
                   help="custom case data x_start:rho:q,...")
    p.add_argument("--no-split", dest="split", action="store_false", default=None,
                   help="set p0 = 0 (all pressure implicit)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="congestion-ap", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one case")
    _common(p)

    p = sub.add_parser("sweep", help="parameter sweep table")
    _common(p)
    p.add_argument("--vary", action="append", default=[], metavar="FIELD=V1,V2,...",
                   help="varying parameter (repeatable); strings for case/scheme")
    p.add_argument("--paired", action="store_true", help="zip value lists instead of the product")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--table", default="sweep.csv", help="output CSV path")

    p = sub.add_parser("riemann", help="dump the reference profile")
    _common(p)

    p = sub.add_parser("ablate-p0", help="pressure-splitting ablation on P1prime")
    _common(p)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for name in list(_FLAGS) + ["snapshot_times", "pieces", "split"]:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values)


def _parse_vary(items: Sequence[str]) -> tuple:
    out = []
    for item in items:
        name, _, vals = item.partition("=")
        name = name.strip().replace("-", "_")
        raw = [v for v in vals.split(",") if v.strip()]
        out.append((name, tuple(_convert(name, v) for v in raw)))
    return tuple(out)


def cmd_run(cfg: RunConfig) -> int:
    res = run(cfg)
    r = res.report
    print(",".join(r.columns()))
    print(",".join(r.row()))
    for f in res.files:
        log.info("wrote %s", f)
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    spec = SweepSpec(cfg, _parse_vary(args.vary), paired=args.paired, workers=args.workers)
    rows = sweep(spec, args.table)
    failed = sum(r.status != "ok" for r in rows)
    print(f"{len(rows)} rows written to {args.table} ({failed} failed)")
    return 0


def cmd_riemann(cfg: RunConfig) -> int:
    if cfg.is_2d:
        raise ValueError("no reference solution exists for cluster2d")
    ref = make_reference(case_pieces(cfg.case, cfg.pieces), cfg.law(), cfg.reference)
    x = Grid1D.from_dx(cfg.dx).x
    rho, q = ref.profile(x, cfg.t_end)
    out = Path(cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.case}_exact_{cfg.reference}_t{cfg.t_end:.6f}.csv"
    write_profile_csv(x, rho, q, path)
    print(path)
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    if cfg.case != "P1prime":
        raise ValueError("the p0 ablation is defined for case P1prime")
    res = p0_ablation(cfg)
    tv_split = total_variation(res.split.state.rho_in)
    print(f"split: TV(rho) = {tv_split:.17g}")
    if res.unsplit is None:
        print(f"no split: failed ({res.unsplit_error})")
    else:
        tv = total_variation(res.unsplit.state.rho_in)
        print(f"no split: TV(rho) = {tv:.17g} (ratio {tv / tv_split:.4f})")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        if args.command == "riemann":
            return cmd_riemann(cfg)
        return cmd_ablate(cfg)
    except (DomainError, SolverError, InteractionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
