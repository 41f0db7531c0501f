"""Nonlinear cross-check: two-scale mesh and uniform solvers against a fine classical run.

Reconstructions are compared on the mesh solver's grid.  Lower ``--eps`` shrinks
the gap between the oscillating model and its two-scale limit.
"""
import argparse

from twoscale_sl.diagnostics import l1_distance
from twoscale_sl.runner import RunConfig, simulate


def final(cfg):
    *_, (_, t, f, _) = simulate(cfg)
    return t, f


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--profile", default="semi-gaussian", choices=["semi-gaussian", "gaussian"])
    ap.add_argument("--classical-P", type=int, default=128)
    args = ap.parse_args()
    beam = dict(profile=args.profile) if args.profile == "semi-gaussian" else dict(profile="gaussian", rm=0.5, vth=0.3)
    common = dict(eps=args.eps, T=args.T, snapshots=(), **beam)
    mesh = RunConfig.from_preset("III", "cos2", **common)
    uni = RunConfig.from_preset("IV", "cos2", out_P=64, **common)
    classical = RunConfig(solver="classical", P_r=args.classical_P, P_vr=args.classical_P, P_tau=16, out_P=64,
                          omega1=2.0, omega1_rational=True, H1="cos2", K=2, **common)
    grid = mesh.output_grid
    t, fm = final(mesh)
    _, fu = final(uni)
    print(f"classical N={classical.classical_N()} substeps, {classical.steps} steps")
    _, fc = final(classical)
    print(f"t={t:.4f}  mesh-classical {l1_distance(fm, fc, grid):.3e}  uniform-classical "
          f"{l1_distance(fu, fc, grid):.3e}  mesh-uniform {l1_distance(fm, fu, grid):.3e}")


if __name__ == "__main__":
    main()
