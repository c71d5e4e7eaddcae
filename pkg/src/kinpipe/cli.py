"""Command-line entry point: ``kinpipe run|preset|compare-cone|validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, parse_config, preset, preset_text
from .io import compare_rises, run_scenario, write_comparison, write_snapshots, write_timeseries


def _emit(result, out_dir: Path, snapshots: bool) -> None:
    cfg = result.config
    out_dir.mkdir(parents=True, exist_ok=True)
    path = Path(cfg.output_path) if cfg.output_path else out_dir / f"{cfg.name}.csv"
    write_timeseries(result.series, path)
    print(f"wrote {path}")
    if snapshots:
        snap = out_dir / f"{cfg.name}_snapshots.csv"
        write_snapshots(result, snap)
        print(f"wrote {snap}")
    if result.series.entropy_violations:
        print(f"note: {len(result.series.entropy_violations)} entropy increase(s) logged",
              file=sys.stderr)


def _cmd_run(args) -> None:
    cfg = load_config(args.config)
    _emit(run_scenario(cfg, snapshots=args.snapshots), Path(args.out), args.snapshots)


def _cmd_preset(args) -> None:
    if args.show:
        sys.stdout.write(preset_text(args.name))
        return
    cfg = parse_config(preset_text(args.name))
    if args.backend:
        cfg = preset(args.name, backend=args.backend)
    _emit(run_scenario(cfg, snapshots=args.snapshots), Path(args.out), args.snapshots)


def _cmd_compare(args) -> None:
    if args.step <= 0 or args.r1_max < args.r1_min:
        raise ValueError("need step > 0 and r1-max >= r1-min")
    n = int(np.floor((args.r1_max - args.r1_min) / args.step + 1e-9)) + 1
    radii = [round(args.r1_min + k * args.step, 12) for k in range(n)]
    family = [preset(f"cone_R1_{r!r}", cells=args.cells) for r in radii]
    rows = compare_rises(family, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_comparison(rows, out)
    for r1, rk, re, gap in rows:
        print(f"R1={r1:5.2f}  kinetic={rk:9.3f}  equivalent={re:9.3f}  gap={100 * gap:+7.2f}%")
    print(f"wrote {out}")


def _cmd_validate(args) -> None:
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({cfg.name}, backend {cfg.backend})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kinpipe", description="Kinetic water-hammer simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log entropy monitoring")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario document")
    r.add_argument("config")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--snapshots", action="store_true", help="also dump full-field states")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("preset", help="run a compiled-in scenario")
    s.add_argument("name", help="hammer_10s, hammer_5s or cone_R1_<r>")
    s.add_argument("--out", default="out")
    s.add_argument("--snapshots", action="store_true")
    s.add_argument("--backend", choices=("kinetic", "moc", "equivalent_pipe"))
    s.add_argument("--show", action="store_true", help="print the preset document and exit")
    s.set_defaults(func=_cmd_preset)

    c = sub.add_parser("compare-cone", help="kinetic vs equivalent-pipe rise over a cone family")
    c.add_argument("--r1-min", type=float, default=1.0)
    c.add_argument("--r1-max", type=float, default=4.0)
    c.add_argument("--step", type=float, default=0.25)
    c.add_argument("--cells", type=int, default=300)
    c.add_argument("--jobs", type=int, default=1, help="concurrent family members")
    c.add_argument("--out", default="out/cone_comparison.csv")
    c.set_defaults(func=_cmd_compare)

    v = sub.add_parser("validate", help="parse and validate a scenario document")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
