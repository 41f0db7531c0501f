"""L1 error against the exact rotation for the stationary linear case, mesh vs uniform two-scale.

    python3 scripts/linear_contrast.py --out contrast.csv
"""
import argparse
import csv

from twoscale_sl.runner import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="linear_contrast.csv")
    ap.add_argument("--T", type=float, default=None, help="shorter horizon for a quick look")
    args = ap.parse_args()

    series = {}
    for preset in ("III", "IV"):
        cfg = RunConfig.from_preset(preset, "cos-linear")
        if args.T is not None:
            cfg = cfg.with_overrides({"T": args.T, "snapshots": ()})
        s = run(cfg, write=False).series
        series[preset] = s
        errs = s.l1_error[1:]
        print(f"{preset}: {len(errs)} steps, max L1 {max(errs):.3e}, final {errs[-1]:.3e}")

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "l1_mesh", "l1_uniform"))
        for t, a, b in zip(series["III"].times, series["III"].l1_error, series["IV"].l1_error):
            w.writerow((t, a, b))
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
