"""Recover from seeded upside-down hand throws at 2.5 m/s with QSMC and AQSMC."""
import argparse

import numpy as np

from quadsmc import scenarios as scn
from quadsmc import sim
from quadsmc.trajectory import THROW_TARGET


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--throws", type=int, default=10)
    args = parser.parse_args()
    for name in ("qsmc", "aqsmc"):
        times = []
        for seed in range(args.throws):
            sc = scn.throw_scenario(seed)
            res = sim.run_trial(sc, scn.build_controller(name, sc))
            rt = res.recovery_time(target=THROW_TARGET)
            if rt is not None:
                times.append(rt)
        mean = np.mean(times) if times else float("nan")
        print(f"{name:6s} recovered {len(times)}/{args.throws}, mean recovery time {mean:.3f} s")


if __name__ == "__main__":
    main()
