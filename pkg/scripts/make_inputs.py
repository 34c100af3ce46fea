"""Write example input files for the netdisc CLI.

    python3 scripts/make_inputs.py out_dir --seed 0
"""
import argparse
import json
from pathlib import Path

import numpy as np

from netdisc import linalg as la
from netdisc.qobj import (depolarizing, diag_state, random_channel, random_classical_superchannel, random_state,
                          replacer_channel)
from netdisc.zoo import make_replacer, random_env_instance


def build(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(2, seed=rng), random_state(2, seed=rng)
    c1, c2 = random_classical_superchannel(seed=rng), random_classical_superchannel(seed=rng)
    env = random_env_instance(seed=rng)
    return {
        "states.json": {"rho": la.Operator(rho).to_json(), "sigma": la.Operator(sigma).to_json()},
        "channels.json": {"N": random_channel(2, 2, seed=rng).to_json(), "M": depolarizing(2, 0.5).to_json()},
        "replacers.json": {"theta1": make_replacer(replacer_channel(diag_state([0.9, 0.1]), 2)).to_json(),
                           "theta2": make_replacer(replacer_channel(diag_state([0.6, 0.4]), 2)).to_json()},
        "classical.json": {"theta1": c1.to_json(), "theta2": c2.to_json()},
        "environment.json": {"theta1": env.pair[0].to_json(), "theta2": env.pair[1].to_json()},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, doc in build(args.seed).items():
        (out / name).write_text(json.dumps(doc))
        print(out / name)


if __name__ == "__main__":
    main()
