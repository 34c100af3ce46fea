"""Amortized flavors of random classical superchannel pairs next to the exact value.

    python3 scripts/classical_collapse.py --count 5
"""
import argparse

import numpy as np

from netdisc.amort import classical_exact, sup_div
from netdisc.qobj import random_classical_superchannel

FLAVORS = ("sup_D", "sup_sA", "sup_cA", "sup_A", "sup_Astar", "sup_tildeA")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("pair,exact," + ",".join(FLAVORS))
    for i in range(args.count):
        t1, t2 = random_classical_superchannel(seed=rng), random_classical_superchannel(seed=rng)
        vals = [classical_exact(t1, t2).value] + [sup_div(t1, t2, f).value for f in FLAVORS]
        print(f"{i}," + ",".join(f"{v:.6f}" for v in vals))


if __name__ == "__main__":
    main()
