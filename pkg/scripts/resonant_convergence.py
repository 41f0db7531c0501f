"""Time-step halving on the resonant linear case with a smooth beam, for both two-scale solvers."""
import argparse

from twoscale_sl.runner import RunConfig, error_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=96, help="coarsest step in fast-phase cells")
    ap.add_argument("--halvings", type=int, default=3)
    ap.add_argument("--T", type=float, default=6.0)
    args = ap.parse_args()
    for preset in ("III", "IV"):
        cfg = RunConfig.from_preset(preset, "cos2-linear", K=args.K, T=args.T, profile="gaussian", rm=0.5, vth=0.3)
        print(f"preset {preset}")
        for row in error_study(cfg, args.halvings):
            ratio = f"  ratio {row['ratio']:.2f}" if "ratio" in row else ""
            print(f"  dt={row['dt']:.4e}  t={row['t']:.4f}  L1={row['l1']:.3e}{ratio}")


if __name__ == "__main__":
    main()
