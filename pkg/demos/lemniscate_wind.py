"""Fly the two-loop lemniscate under the strongest wind with QSMC and AQSMC and compare metrics."""
import argparse
from pathlib import Path

from quadsmc import scenarios as scn
from quadsmc import sim
from quadsmc.plots import write_trial_plots


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_out/lemniscate"))
    parser.add_argument("--wind", type=float, default=scn.WIND_LEVELS[-1])
    args = parser.parse_args()
    sc = scn.lemniscate_scenario(wind=args.wind)
    for name in ("qsmc", "aqsmc"):
        res = sim.run_trial(sc, scn.build_controller(name, sc))
        m = res.metrics
        print(f"{name:6s} verdict={res.verdict} xi_e_rms={m.xi_e_rms:.4f} m q_e_rms={m.q_e_rms:.4f} "
              f"npwm_rms={m.npwm_rms:.3f} final K_xi={res.K_xi[-1].round(3)}")
        write_trial_plots(res, args.out / name)
    print(f"plots in {args.out}")


if __name__ == "__main__":
    main()
