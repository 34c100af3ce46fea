"""Stein rates of product strategies against the weak-converse envelope.

Runs the same sweep as ``netdisc sweep`` on a replacer pair and on a random
classical pair, and prints one CSV block per pair.

    python3 scripts/sweep_replacers.py --n-max 6 --eps 0.1
"""
import argparse

from netdisc.cli import RunConfig, rows_csv, sweep_rows
from netdisc.qobj import diag_state, random_classical_superchannel, replacer_channel
from netdisc.zoo import make_replacer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = RunConfig("sweep", seed=args.seed, options={"n_max": args.n_max, "eps": args.eps, "cls": "product"})
    pairs = {
        "replacer (.9,.1) vs (.6,.4)": tuple(make_replacer(replacer_channel(diag_state(p), 2))
                                             for p in ([0.9, 0.1], [0.6, 0.4])),
        "random classical": (random_classical_superchannel(seed=args.seed),
                             random_classical_superchannel(seed=args.seed + 1)),
    }
    for name, (t1, t2) in pairs.items():
        print(f"# pair: {name}")
        print(rows_csv(sweep_rows(t1, t2, cfg), cfg.meta()), end="")


if __name__ == "__main__":
    main()
