"""Command line entry point: ``twoscale-sl run|compare|error-study``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .runner import RunConfig, RunError, compare_dirs, error_study, load_config, run, write_report
from .scenarios import CASES, preset_names


def _config(args) -> RunConfig:
    cfg = RunConfig.from_preset(args.preset, args.case)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if getattr(args, "threads", None) is not None:
        cfg = cfg.with_overrides({"threads": args.threads})
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out or cfg.out_dir)
    res = run(cfg, out)
    s = res.series
    print(f"{cfg.preset}/{cfg.case}: {cfg.steps} steps of dt={cfg.dt:.6g} to t={s.times[-1]:.6g}; "
          f"{len(res.snapshots)} snapshots in {out}")
    if s.has_error:
        print(f"max L1 error {max(e for e in s.l1_error if e is not None):.3e}")
    return 0


def cmd_compare(args) -> int:
    rows = compare_dirs(args.a, args.b, args.analytic)
    out = Path(args.out) if args.out else Path(args.a) / "compare.csv"
    write_report(out, rows)
    for r in rows:
        print(f"{r['snapshot']}  t={r['t']:.6g}  l1={r['l1']:.6e}")
    ds = [r["l1"] for r in rows]
    print(f"max={max(ds):.6e} final={ds[-1]:.6e} -> {out}")
    return 0


def cmd_error_study(args) -> int:
    cfg = _config(args)
    rows = error_study(cfg, args.halvings)
    for r in rows:
        extra = f"  ratio={r['ratio']:.3f}" if "ratio" in r else ""
        print(f"dt={r['dt']:.6e}  t={r['t']:.6g}  l1={r['l1']:.6e}{extra}")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twoscale-sl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def preset_args(p):
        p.add_argument("--preset", required=True, help=f"one of {', '.join(preset_names())}")
        p.add_argument("--case", choices=sorted(CASES), help="override the preset's default case")
        p.add_argument("--config", help="flat JSON file with field overrides")
        p.add_argument("--threads", type=int, help="worker threads (default: all available)")

    p = sub.add_parser("run", help="run a preset and write snapshots and diagnostics")
    preset_args(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="per-snapshot L1 distances")
    p.add_argument("--a", required=True, help="run directory")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--b", help="second run directory")
    g.add_argument("--analytic", choices=["nonresonant", "resonant"])
    p.add_argument("--out", help="report path (default <a>/compare.csv)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("error-study", help="dt-halving convergence ratios for linear cases")
    preset_args(p)
    p.add_argument("--halvings", type=int, default=2)
    p.add_argument("--out", help="write the table as JSON")
    p.set_defaults(func=cmd_error_study)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (KeyError, ValueError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
