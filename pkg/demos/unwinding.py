"""Regulate from a 179° attitude error with and without the sign-aware surface.

The sign-aware law takes the short way round. The sign-naive variant, started on
the antipodal representation, spins almost a full turn before settling.
"""
import numpy as np

from quadsmc import scenarios as scn
from quadsmc import sim


def main():
    sc = scn.unwinding_scenario()
    for label, sign_aware in (("sign-aware", True), ("sign-naive", False)):
        res = sim.run_trial(sc, scn.build_controller("qsmc", sc, sign_aware=sign_aware))
        print(f"{label:11s} verdict={res.verdict} total rotation = {res.total_rotation() / np.pi:.3f} π rad, "
              f"final |q_e vec| = {np.linalg.norm(res.q_e[-1, 1:]):.2e}")


if __name__ == "__main__":
    main()
