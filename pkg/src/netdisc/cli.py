"""Command-line front end: divergences, discrimination runs, verification suites, rate sweeps.

Every output records the package version, seed, budget and tolerances.
Exit codes: 0 ok, 1 a check failed, 2 bad usage or malformed input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import linalg as la
from .amort import (SUP_FLAVORS, Report, chain_rule_check, channel_div, channel_div_amortized, classical_exact,
                    classical_joint, constant_output, lemma_inequality_suite, net_div, sup_div,
                    verify_classical_adaptive, verify_meta_converse)
from .dvg import (UPPER, DivergenceEstimate, chernoff, petz_alpha, rel_entropy, sandwiched_alpha,
                  stein_weak_converse)
from .qobj import (Channel, ClassicalSuperchannel, Comb, embed_classical, random_channel,
                   random_classical_superchannel, random_state, replacer_channel)
from .sdp.problems import dh_epsilon, diamond_norm, dmax, dmax_channel, dmax_smooth
from .strat import CLASSES, Budget, StrategyDescriptor, build_outputs, errors_of, optimize_strategy

CSV_COLUMNS = ("n", "class", "epsilon_or_prior", "alpha", "beta", "rate", "bound", "margin")
SUITES = ("data-processing", "classical-collapse", "meta-converse", "chain-rule", "lemma-chain",
          "family-identities")
DEFAULTS = {"seed": 0, "budget": "2x200", "tol": 1e-8, "format": "json", "jobs": 1, "eps": None,
            "prior": None, "measure": None, "base": "D", "cls": "product", "n": 1, "n_max": 6, "count": None,
            "flavors": "sup_sA,sup_cA,sup_A"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    seed: int = 0
    budget: str = "2x200"
    tol: float = 1e-8
    out: str | None = None
    format: str = "json"
    options: dict = field(default_factory=dict)

    def meta(self) -> dict:
        return {"version": __version__, "seed": self.seed, "budget": self.budget,
                "tolerances": {"tol": self.tol}}


# ---------------------------------------------------------------------------
# input decoding
# ---------------------------------------------------------------------------

def decode(obj):
    """Operator, channel, superchannel or classical superchannel from its JSON form."""
    if isinstance(obj, list):
        return la.check_hermitian(np.asarray(obj, dtype=complex))
    if not isinstance(obj, dict):
        raise UsageError(f"cannot decode {type(obj).__name__}")
    if "re" in obj:
        return la.Operator.from_json(obj).data
    if "choi" in obj:
        return Channel.from_json(obj)
    if "components" in obj:
        return Comb.from_json(obj)
    if "e" in obj and "d" in obj:
        return ClassicalSuperchannel.from_json(obj)
    raise UsageError(f"unrecognized object with keys {sorted(obj)}")


def _pair(doc: dict):
    for a, b in (("rho", "sigma"), ("N", "M"), ("theta1", "theta2")):
        if a in doc and b in doc:
            return decode(doc[a]), decode(doc[b])
    raise UsageError("input needs one of the pairs rho/sigma, N/M or theta1/theta2")


def _load(path: str | None) -> dict:
    text = sys.stdin.read() if path in (None, "-") else open(path).read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("top-level JSON must be an object")
    return doc


def _quantum(t):
    return embed_classical(t) if isinstance(t, ClassicalSuperchannel) else t


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _param(measure: str) -> tuple[str, float | None]:
    name, _, arg = measure.partition(":")
    if not arg:
        return name, None
    return name, (math.inf if arg == "inf" else float(arg))


def compute_div(x, y, measure: str | None, cfg: RunConfig) -> DivergenceEstimate:
    budget, seed = cfg.budget, cfg.seed
    base = cfg.options.get("base", "D")
    if isinstance(x, np.ndarray):
        name, a = _param(measure or "D")
        if name == "D":
            return rel_entropy(x, y)
        if name == "Dmax":
            return DivergenceEstimate(dmax(x, y))
        if name == "petz":
            return petz_alpha(x, y, a)
        if name == "sandwiched":
            return sandwiched_alpha(x, y, a)
        if name == "chernoff":
            return chernoff(x, y)
        if name == "dh":
            return DivergenceEstimate(dh_epsilon(x, y, a), "exact", 1e-6, "SDP")
        if name == "dmax_smooth":
            return DivergenceEstimate(dmax_smooth(x, y, a), "exact", 1e-6, "SDP")
        raise UsageError(f"unknown state measure {measure!r}")
    if isinstance(x, Channel):
        name = measure or "channel_D"
        if name == "channel_D":
            return channel_div(x, y, base, budget, seed)
        if name == "channel_DA":
            return channel_div_amortized(x, y, base, budget, seed)
        if name == "dmax_channel":
            return DivergenceEstimate(dmax_channel(x, y), UPPER, 1e-6, "Choi D_max")
        if name == "diamond":
            return DivergenceEstimate(diamond_norm(x, y), "exact", 1e-6, "SDP")
        raise UsageError(f"unknown channel measure {measure!r}")
    name = measure or "sup_D"
    if name in SUP_FLAVORS:
        return sup_div(x, y, name, base, budget, seed)
    if name in ("net_A", "net_Astar"):
        return net_div(_quantum(x), _quantum(y), name, base, budget, seed)
    raise UsageError(f"unknown superchannel measure {measure!r}")


def cmd_div(cfg: RunConfig) -> tuple[int, dict]:
    x, y = _pair(_load(cfg.inputs[0] if cfg.inputs else None))
    est = compute_div(x, y, cfg.options.get("measure"), cfg)
    return 0, {"meta": cfg.meta(), "result": est.to_dict()}


def _setting(cfg: RunConfig) -> tuple[float | None, float | None]:
    eps, prior = cfg.options.get("eps"), cfg.options.get("prior")
    if eps is not None and prior is not None:
        raise UsageError("give --eps or --prior, not both")
    if eps is None and prior is None:
        prior = 0.5
    return eps, prior


def _rate(res, eps) -> float:
    x = res.beta if eps is not None else res.p_err
    return math.inf if x <= 0 else -math.log2(x) / res.n


def cmd_discriminate(cfg: RunConfig) -> tuple[int, dict]:
    doc = _load(cfg.inputs[0] if cfg.inputs else None)
    t1, t2 = (_quantum(t) for t in _pair(doc))
    eps, prior = _setting(cfg)
    if "strategy" in doc:
        s = StrategyDescriptor.from_json(doc["strategy"])
        res = errors_of(build_outputs(s, t1, t2), s.measurement, None if s.measurement is not None else eps,
                        None if s.measurement is not None or eps is not None else prior, s.n)
        cls = s.cls
    else:
        cls, n = cfg.options.get("cls", "product"), int(cfg.options.get("n", 1))
        s, res = optimize_strategy(cls, t1, t2, n, cfg.budget, eps, prior, cfg.seed,
                                   jobs=int(cfg.options.get("jobs", 1)))
    out = {"n": res.n, "class": cls, "epsilon": eps, "prior": prior, "alpha": res.alpha, "beta": res.beta,
           "p_err": res.p_err, "rate": _rate(res, eps), "kind": res.kind}
    return 0, {"meta": cfg.meta(), "result": out, "strategy": s.to_json()}


# verification suites ---------------------------------------------------------

def _count(cfg: RunConfig, default: int) -> int:
    c = cfg.options.get("count")
    return default if c is None else int(c)


def suite_data_processing(cfg: RunConfig) -> list[Report]:
    """Random (rho, sigma, N): no divergence grows under N."""
    rng = np.random.default_rng(cfg.seed)
    measures = ("D", "petz:0.5", "petz:2", "sandwiched:0.5", "sandwiched:2", "Dmax", "chernoff")
    worst = {m: -math.inf for m in measures}
    for _ in range(_count(cfg, 50)):
        d_in, d_out = (int(v) for v in rng.integers(2, 5, size=2))
        rho, sigma = random_state(d_in, seed=rng), random_state(d_in, seed=rng)
        ch = random_channel(d_in, d_out, seed=rng)
        for m in measures:
            before = compute_div(rho, sigma, m, cfg).value
            after = compute_div(ch(rho), ch(sigma), m, cfg).value
            worst[m] = max(worst[m], after - before)
    return [Report(f"data-processing:{m}", bool(w <= cfg.tol), cfg.tol - w, {"max_increase": w})
            for m, w in worst.items()]


def bundled_classical(count: int, seed: int):
    rng = np.random.default_rng(seed)
    return [(random_classical_superchannel(seed=rng), random_classical_superchannel(seed=rng))
            for _ in range(count)]


def bundled_replacers(count: int, seed: int):
    from .zoo import replacer_pair

    rng = np.random.default_rng(seed)
    return [replacer_pair(replacer_channel(random_state(2, seed=rng), 2),
                          replacer_channel(random_state(2, seed=rng), 2)) for _ in range(count)]


def suite_classical_collapse(cfg: RunConfig) -> list[Report]:
    """Amortized flavors of classical pairs against the exact enumeration."""
    flavors = [f for f in str(cfg.options.get("flavors", DEFAULTS["flavors"])).split(",") if f]
    bad = [f for f in flavors if f not in SUP_FLAVORS]
    if bad:
        raise UsageError(f"unknown flavors {bad}")
    reports = []
    for i, (t1, t2) in enumerate(bundled_classical(_count(cfg, 5), cfg.seed)):
        exact = classical_exact(t1, t2).value
        vals = {f: sup_div(t1, t2, f, budget=cfg.budget, seed=cfg.seed).value for f in flavors}
        gap = max(abs(v - exact) for v in vals.values())
        reports.append(Report(f"classical-collapse[{i}]", bool(gap <= 1e-6), 1e-6 - gap,
                              {"exact": exact, "values": vals}))
        reports.append(verify_classical_adaptive(t1, t2, 2))
    return reports


def suite_meta_converse(cfg: RunConfig) -> list[Report]:
    """Sampled strategies against certified bounds on replacer and classical pairs."""
    from .zoo import replacer_target, sample_strategies

    reports = []
    count = _count(cfg, 3)
    for i, inst in enumerate(bundled_replacers(count, cfg.seed)):
        bound = rel_entropy(replacer_target(inst.params["R1"]), replacer_target(inst.params["R2"]))
        for s in sample_strategies(inst.pair[0], 2, 7, cfg.seed + i, ref_dim=2):
            reports.append(verify_meta_converse(s, *inst.pair, bound, tol=cfg.tol))
    for i, (c1, c2) in enumerate(bundled_classical(count, cfg.seed)):
        q1, q2 = embed_classical(c1), embed_classical(c2)
        bound = classical_exact(c1, c2)
        for s in sample_strategies(q1, 2, 7, cfg.seed + i, ref_dim=2):
            reports.append(verify_meta_converse(s, q1, q2, bound, tol=cfg.tol))
    return reports


def suite_chain_rule(cfg: RunConfig) -> list[Report]:
    from .qobj import classical_channel

    rng = np.random.default_rng(cfg.seed)
    eps = float(cfg.options.get("eps") or 0.05)
    reports = []
    count = _count(cfg, 3)
    for inst in bundled_replacers(count, cfg.seed):
        n, m = random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)
        rho, sigma = random_state(2, seed=rng), random_state(2, seed=rng)
        reports.append(chain_rule_check(*inst.pair, n, m, rho, sigma, 1, eps, eps, eps, 1e-6))
    for t1, t2 in bundled_classical(count, cfg.seed):
        n = classical_channel(rng.dirichlet(np.ones(2), size=2))
        m = classical_channel(rng.dirichlet(np.ones(2), size=2))
        rho, sigma = np.diag(rng.dirichlet(np.ones(2))), np.diag(rng.dirichlet(np.ones(2)))
        reports.append(chain_rule_check(t1, t2, n, m, rho, sigma, 1, eps, eps, eps, 1e-6))
    return reports


def suite_lemma_chain(cfg: RunConfig) -> list[Report]:
    from .zoo import random_env_instance

    return [lemma_inequality_suite(*random_env_instance(seed=cfg.seed + i, w1=1, w2=2).pair,
                                   budget=cfg.budget, seed=cfg.seed)
            for i in range(_count(cfg, 1))]


def suite_family_identities(cfg: RunConfig) -> list[Report]:
    """Defining identities of every family, plus broken instances that must fail."""
    from . import zoo
    from .qobj import classical_channel, depolarizing, random_unitary

    rng = np.random.default_rng(cfg.seed)
    insts = [bundled_replacers(1, cfg.seed)[0], zoo.random_env_instance(seed=rng)]
    om1, om2 = random_state(4, seed=rng), random_state(4, seed=rng)
    insts.append(zoo.make_env_seizable(om1, om2, 2, 2, u=random_unitary(4, seed=rng))[0])
    s1, s2 = depolarizing(2, 0.3), depolarizing(2, 0.6)
    e, d = random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng)
    insts.append(zoo.make_side_param(e, d, s1, s2, 2, 2))
    insts.append(zoo.make_side_seizable(s1, s2, u=random_unitary(2, seed=rng))[0])
    ch = [classical_channel(rng.dirichlet(np.ones(2), size=2)) for _ in range(4)]
    insts.append(zoo.make_trivial_s(*ch))
    reports = [inst.check_identity() for inst in insts]
    # negative control: swap the second realized superchannel for a different one
    broken = zoo.make_side_param(e, d, s1, s2, 2, 2)
    broken.pair = (broken.pair[0], zoo.make_side_param(e, d, s2, s1, 2, 2).pair[1])
    rep = broken.check_identity()
    reports.append(Report("negative-control", not rep.passed, -rep.margin, rep.details))
    return reports


SUITE_FNS = {
    "data-processing": suite_data_processing,
    "classical-collapse": suite_classical_collapse,
    "meta-converse": suite_meta_converse,
    "chain-rule": suite_chain_rule,
    "lemma-chain": suite_lemma_chain,
    "family-identities": suite_family_identities,
}


def cmd_verify(cfg: RunConfig) -> tuple[int, dict]:
    name = cfg.options.get("suite")
    if name not in SUITE_FNS:
        raise UsageError(f"--suite must be one of {', '.join(SUITES)}")
    reports = SUITE_FNS[name](cfg)
    passed = all(r.passed for r in reports)
    return (0 if passed else 1), {"meta": cfg.meta(), "suite": name, "passed": passed,
                                  "reports": [r.to_dict() for r in reports]}


# sweeps ----------------------------------------------------------------------

def best_single_copy(t1, t2, cfg: RunConfig):
    """Output pair and divergence of the best single-copy product strategy found."""
    if isinstance(t1, ClassicalSuperchannel):
        est, (c, f) = classical_exact(t1, t2, return_argmax=True)
        w = [np.diag(classical_joint(t, c, f).reshape(-1)) for t in (t1, t2)]
        return w[0], w[1], est
    tau1, tau2 = constant_output(t1), constant_output(t2)
    if tau1 is not None and tau2 is not None:
        # the reference would only carry an identical factor on both sides
        return tau1, tau2, rel_entropy(tau1, tau2)
    est, pt = sup_div(t1, t2, "sup_D", budget=cfg.budget, seed=cfg.seed, return_point=True)
    r = pt["r"]
    return t1(pt["N"], r)(pt["rho"]), t2(pt["N"], r)(pt["rho"]), est


def sweep_rows(t1, t2, cfg: RunConfig) -> list[dict]:
    eps, prior = _setting(cfg)
    cls = cfg.options.get("cls", "product")
    n_max = int(cfg.options.get("n_max", 6))
    rows = []
    if cls == "product":
        w1, w2, _ = best_single_copy(t1, t2, cfg)
        d = rel_entropy(w1, w2).value
        for n in range(1, n_max + 1):
            r1, r2 = la.kron(*([w1] * n)), la.kron(*([w2] * n))
            res = errors_of((r1, r2), eps=eps, prior=None if eps is not None else prior, n=n)
            rows.append(_row(res, cls, eps, prior, d))
        return rows
    q1, q2 = _quantum(t1), _quantum(t2)
    d = sup_div(t1, t2, "sup_D", budget=cfg.budget, seed=cfg.seed).value
    for n in range(1, n_max + 1):
        _, res = optimize_strategy(cls, q1, q2, n, cfg.budget, eps, prior, cfg.seed,
                                   jobs=int(cfg.options.get("jobs", 1)))
        rows.append(_row(res, cls, eps, prior, d))
    return rows


def _row(res, cls, eps, prior, d) -> dict:
    rate = _rate(res, eps)
    # Stein setting: weak-converse envelope; Chernoff setting: the single-copy divergence
    bound = stein_weak_converse(d, eps, res.n) if eps is not None else d
    return {"n": res.n, "class": cls, "epsilon_or_prior": eps if eps is not None else prior,
            "alpha": res.alpha, "beta": res.beta, "rate": rate, "bound": bound, "margin": bound - rate}


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if v == math.inf else ("nan" if math.isnan(v) else f"{v:.12g}")
    return str(v)


def rows_csv(rows: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    for k in ("version", "seed", "budget"):
        buf.write(f"# {k}={meta[k]}\n")
    buf.write(f"# tolerances={json.dumps(meta['tolerances'], sort_keys=True)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in rows:
        wr.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> tuple[int, dict]:
    t1, t2 = _pair(_load(cfg.inputs[0] if cfg.inputs else None))
    if isinstance(t1, (np.ndarray, Channel)):
        raise UsageError("sweep needs a superchannel pair theta1/theta2")
    if cfg.options.get("cls", "product") not in CLASSES:
        raise UsageError(f"--class must be one of {', '.join(CLASSES)}")
    return 0, {"meta": cfg.meta(), "rows": sweep_rows(t1, t2, cfg)}


COMMANDS = {"div": cmd_div, "discriminate": cmd_discriminate, "verify": cmd_verify, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat key=value file; blank lines and # comments are skipped."""
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{ln}: expected key=value")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netdisc", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--in", dest="inputs", action="append", default=None, help="input JSON file ('-' for stdin)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", help="search budget RESTARTSxITERATIONS")
    p.add_argument("--tol", type=float)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--jobs", type=int)
    p.add_argument("--config", help="key=value file for options not given on the command line")
    p.add_argument("--measure", help="divergence name, e.g. D, petz:2, dh:0.1, channel_DA, sup_A, net_A")
    p.add_argument("--base", help="base divergence for amortized measures")
    p.add_argument("--class", dest="cls", choices=CLASSES)
    p.add_argument("--n", type=int, help="copies for discriminate")
    p.add_argument("--n-max", dest="n_max", type=int, help="largest n in a sweep")
    p.add_argument("--eps", type=float, help="type-I level (Stein setting)")
    p.add_argument("--prior", type=float, help="prior of the first hypothesis (Chernoff setting)")
    p.add_argument("--count", type=int, help="instances per suite")
    p.add_argument("--flavors", help="comma-separated flavors for classical-collapse")
    return p


_TYPES = {"seed": int, "tol": float, "jobs": int, "n": int, "n_max": int, "eps": float, "prior": float,
          "count": int}


def make_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    from_file = read_config(args["config"]) if args.get("config") else {}
    merged = {}
    for key in set(DEFAULTS) | set(from_file) | {k for k in args if k not in ("command", "config")}:
        val = args.get(key)
        if val is None and key in from_file:
            val = _TYPES.get(key, str)(from_file[key])
        if val is None:
            val = DEFAULTS.get(key)
        merged[key] = val
    core = {k: merged.pop(k) for k in ("seed", "budget", "tol", "format", "out")}
    inputs = merged.pop("inputs") or []
    Budget.parse(core["budget"])
    return RunConfig(args["command"], inputs, core["seed"], str(core["budget"]), core["tol"], core["out"],
                     core["format"], merged)


def _json_default(o):
    if isinstance(o, DivergenceEstimate):
        return o.to_dict()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _sanitize(o):
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {str(k): _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    return o


def render(cfg: RunConfig, payload: dict) -> str:
    if cfg.format == "csv":
        if "rows" not in payload:
            raise UsageError("--format csv is only available for sweep")
        return rows_csv(payload["rows"], payload["meta"])
    text = json.dumps(_sanitize(json.loads(json.dumps(payload, default=_json_default))), sort_keys=True, indent=1)
    return text + "\n"


def main(argv=None) -> int:
    try:
        cfg = make_config(argv)
        code, payload = COMMANDS[cfg.command](cfg)
        text = render(cfg, payload)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ValueError, KeyError, TypeError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 2
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
