"""Step counts per preset and case; the classical/two-scale ratio is the substep count N."""
from twoscale_sl.runner import RunConfig


def main():
    print(f"{'preset':8}{'case':8}{'solver':18}{'dt':>12}{'steps':>10}{'ratio':>8}")
    for case in ("cos", "cos2"):
        ref = RunConfig.from_preset("III", case).steps
        for preset in ("I", "II", "II'", "III", "IV"):
            cfg = RunConfig.from_preset(preset, case)
            print(f"{preset:8}{case:8}{cfg.solver:18}{cfg.dt:12.4e}{cfg.steps:10d}{cfg.steps / ref:8.0f}")


if __name__ == "__main__":
    main()
