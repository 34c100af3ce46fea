"""Generalized, amortized and network divergences of channels and superchannels.

Suprema over channels and states are found by seeded local search and are
reported as lower bounds. Subtracted amortized channel terms are replaced by
an upper bound, D_max of the Choi states (zero for equal channels, the exact
row-wise maximum for classical channels), so every returned value stays a
lower bound on its supremum. Closed forms, such as the classical
enumeration, are reported as exact.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from . import linalg as la
from .dvg import EXACT, LOWER, UPPER, DivergenceEstimate, petz_alpha, rel_entropy, sandwiched_alpha
from .qobj import (Channel, ClassicalSuperchannel, Comb, Superchannel, channels_close, comb_apply,
                   comb_prefix, compose, embed_classical, identity_channel, superchannels_equal,
                   tensor)
from .sdp.problems import dmax, dmax_channel, dmax_smooth, dmax_smooth_channel
from .strat import Budget, StrategyDescriptor, _wired_channel, build_outputs, pure_state, stinespring_channel

FLAVORS = ("channel_D", "channel_DA", "sup_D", "sup_sA", "sup_cA", "sup_A", "sup_Astar", "sup_tildeA",
           "net_A", "net_Astar")
SUP_FLAVORS = ("sup_D", "sup_sA", "sup_cA", "sup_A", "sup_Astar", "sup_tildeA")
CHAIN_TOL = 1e-9
# logit giving a numerically deterministic softmax row
HARD = 40.0
ENUM_GUARD = 10 ** 6


# ---------------------------------------------------------------------------
# specs, base divergences and reports
# ---------------------------------------------------------------------------

def parse_base(base: str) -> tuple[str, float]:
    """'D', 'Dmax', 'sandwiched:<alpha>' or 'petz:<alpha>'."""
    if base in ("D", "Dmax"):
        return base, 1.0 if base == "D" else math.inf
    kind, _, a = base.partition(":")
    if kind not in ("sandwiched", "petz") or not a:
        raise ValueError(f"unknown base divergence {base!r}")
    return kind, float(a)


def base_fn(base: str) -> Callable[[np.ndarray, np.ndarray], float]:
    kind, a = parse_base(base)
    if kind == "D":
        return lambda r, s: rel_entropy(r, s).value
    if kind == "Dmax":
        return dmax
    if kind == "sandwiched":
        return lambda r, s: sandwiched_alpha(r, s, a).value
    return lambda r, s: petz_alpha(r, s, a).value


def check_amortizable(base: str):
    """Amortized flavors need a certified penalty bound: D, D_max or sandwiched alpha >= 1."""
    kind, a = parse_base(base)
    if kind == "petz" or (kind == "sandwiched" and a < 1):
        raise ValueError(f"amortized flavors do not support base {base!r}")


@dataclass(frozen=True)
class AmortizedSpec:
    flavor: str
    base: str = "D"
    budget: Budget = Budget(4, 500)
    seed: int = 0
    ref_dim: int | None = None

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        parse_base(self.base)
        if self.flavor not in ("channel_D", "sup_D"):
            check_amortizable(self.base)
        object.__setattr__(self, "budget", Budget.parse(self.budget))


@dataclass
class Report:
    name: str
    passed: bool
    margin: float = math.nan
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, DivergenceEstimate):
                return v.to_dict()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, np.generic):
                return clean(v.item())
            return v

        return clean({"name": self.name, "passed": bool(self.passed), "margin": float(self.margin),
                      "details": self.details})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _est(value: float, kind: str, reason: str = "") -> DivergenceEstimate:
    return DivergenceEstimate(value, kind, 1e-9 if kind == EXACT else 1e-6, reason)


# ---------------------------------------------------------------------------
# parametrizations and the search driver
# ---------------------------------------------------------------------------

def mixed_state(x: np.ndarray) -> np.ndarray:
    d = int(round(math.sqrt(len(x) // 2)))
    g = (x[:d * d] + 1j * x[d * d:]).reshape(d, d)
    m = g @ g.conj().T
    t = np.trace(m).real
    return m / t if t > 1e-14 else np.eye(d) / d


def mixed_params(rho: np.ndarray) -> np.ndarray:
    g = la.sqrtm_psd(rho).reshape(-1)
    return np.concatenate([g.real, g.imag])


def pure_params(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(la.herm(rho))
    psi = v[:, -1]
    return np.concatenate([psi.real, psi.imag])


class Layout:
    """Named blocks of a flat parameter vector."""

    def __init__(self):
        self.blocks: list[tuple[str, str, tuple]] = []

    def add(self, name: str, kind: str, *shape):
        self.blocks.append((name, kind, shape))
        return self

    def size_of(self, kind: str, shape: tuple) -> int:
        if kind == "pure":
            return 2 * shape[0]
        if kind == "mixed":
            return 2 * shape[0] ** 2
        if kind == "channel":
            d_in, d_out = shape
            env = -(-d_in // d_out)
            return (d_out * env) ** 2
        if kind in ("table", "dist"):
            return int(np.prod(shape))
        raise ValueError(kind)

    @property
    def sizes(self) -> list[int]:
        return [self.size_of(k, s) for _, k, s in self.blocks]

    @property
    def dim(self) -> int:
        return int(sum(self.sizes))

    def unpack(self, x: np.ndarray) -> dict:
        out = {}
        parts = np.split(np.asarray(x, float), np.cumsum(self.sizes)[:-1])
        for (name, kind, shape), p in zip(self.blocks, parts):
            if kind == "pure":
                out[name] = pure_state(p)
            elif kind == "mixed":
                out[name] = mixed_state(p)
            elif kind == "channel":
                d_in, d_out = shape
                out[name] = stinespring_channel(p, d_in, d_out, -(-d_in // d_out))
            elif kind == "table":
                out[name] = softmax(p.reshape(shape), axis=-1)
            else:
                out[name] = softmax(p)
        return out

    def pack(self, blocks: dict, rng: np.random.Generator) -> np.ndarray:
        """Flat vector from named raw blocks; missing blocks are random (channels: zero)."""
        parts = []
        for (name, kind, shape), size in zip(self.blocks, self.sizes):
            if name in blocks:
                v = np.asarray(blocks[name], float).reshape(-1)
                if v.size != size:
                    raise ValueError(f"block {name} has size {v.size}, expected {size}")
                parts.append(v)
            elif kind == "channel":
                parts.append(np.zeros(size))
            else:
                parts.append(rng.normal(size=size))
        return np.concatenate(parts) if parts else np.zeros(0)

    def raw(self, x: np.ndarray) -> dict:
        parts = np.split(np.asarray(x, float), np.cumsum(self.sizes)[:-1])
        return {name: p for (name, _, _), p in zip(self.blocks, parts)}


class _Infinite(Exception):
    def __init__(self, x):
        self.x = x


@dataclass
class SearchResult:
    value: float
    x: np.ndarray
    evaluations: int
    raw: dict = field(default_factory=dict)


def maximize(f: Callable[[np.ndarray], float], layout: Layout, budget: Budget, seed: int,
             starts: Sequence[dict] = ()) -> SearchResult:
    """Best value of ``f`` seen over seeded starts plus random restarts (L-BFGS-B, numeric gradients).

    Seed points are always evaluated, so the result is at least the best seed.
    NaN is treated as -inf. A +inf value ends the search immediately.
    """
    rng = np.random.default_rng(seed)
    dim = layout.dim
    x0s = [layout.pack(s, rng) for s in starts]
    x0s += [rng.normal(size=dim) for _ in range(budget.restarts)]
    best = [-math.inf, x0s[0] if x0s else np.zeros(dim)]
    count = [0]

    def tracked(x):
        count[0] += 1
        v = f(x)
        v = -math.inf if v is None or math.isnan(v) else float(v)
        if v == math.inf:
            raise _Infinite(np.array(x))
        if v > best[0]:
            best[0], best[1] = v, np.array(x)
        return -v if math.isfinite(v) else 1e6

    try:
        for x0 in x0s:
            tracked(x0)
            minimize(tracked, x0, method="L-BFGS-B",
                     options={"maxfun": max(budget.iterations, 1), "ftol": 1e-15, "gtol": 1e-10})
    except _Infinite as hit:
        return SearchResult(math.inf, hit.x, count[0], layout.raw(hit.x))
    return SearchResult(best[0], best[1], count[0], layout.raw(best[1]))


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def classical_table(ch: Channel, tol: float = 1e-12) -> np.ndarray | None:
    """t[x, y] = <y|N(|x><x|)|y> when the Choi operator is diagonal, else None."""
    j = ch.choi
    if np.max(np.abs(j - np.diag(np.diag(j)))) > tol:
        return None
    return np.diag(j).real.reshape(ch.dim_in, ch.dim_out)


def with_ref(n: Channel, r: int) -> Channel:
    return n if r == 1 else tensor(n, identity_channel(r))


def _rows_div(f, t1: np.ndarray, t2: np.ndarray) -> float:
    return max(f(np.diag(p), np.diag(q)) for p, q in zip(t1, t2))


def penalty_upper(n: Channel, m: Channel, base: str = "D") -> float:
    """Certified upper bound on the amortized channel divergence of (n, m).

    Zero for equal channels, the row maximum for classical pairs, otherwise
    D_max of the Choi states, which dominates every amortized sandwiched
    divergence with alpha >= 1.
    """
    if channels_close(n, m, 1e-12):
        return 0.0
    t1, t2 = classical_table(n), classical_table(m)
    if t1 is not None and t2 is not None:
        return _rows_div(base_fn(base), t1, t2)
    return dmax_channel(n, m)


def _check_channels(n: Channel, m: Channel):
    if (n.dim_in, n.dim_out) != (m.dim_in, m.dim_out):
        raise ValueError(f"channel dims differ: {n.dim_in}->{n.dim_out} vs {m.dim_in}->{m.dim_out}")


def _drop_spurious(v: float, finite: bool) -> float:
    # with a finite certified upper bound an infinite value is a support-threshold artifact
    return -math.inf if finite and v == math.inf else v


def _channel_search(n: Channel, m: Channel, base: str, budget, seed: int, ref_dim: int | None):
    f = base_fn(base)
    r = n.dim_in if ref_dim is None else ref_dim
    lay = Layout().add("rho", "pure", n.dim_in * r)
    nr, mr = with_ref(n, r), with_ref(m, r)
    finite = math.isfinite(penalty_upper(n, m, base))

    def obj(x):
        rho = lay.unpack(x)["rho"]
        return _drop_spurious(f(nr(rho), mr(rho)), finite)

    return maximize(obj, lay, Budget.parse(budget), seed), lay, r


def channel_div(n: Channel, m: Channel, base: str = "D", budget=None, seed: int = 0,
                ref_dim: int | None = None) -> DivergenceEstimate:
    """sup over inputs on A R of D((N x id)(rho) || (M x id)(rho)).

    Exact for equal or classical pairs (a point-mass input is optimal), a
    lower bound from a pure-state search otherwise.
    """
    _check_channels(n, m)
    if channels_close(n, m, 1e-12):
        return _est(0.0, EXACT, "equal channels")
    t1, t2 = classical_table(n), classical_table(m)
    if t1 is not None and t2 is not None:
        return _est(_rows_div(base_fn(base), t1, t2), EXACT, "classical channels")
    res, _, _ = _channel_search(n, m, base, budget, seed, ref_dim)
    return _est(res.value, LOWER)


def channel_div_amortized(n: Channel, m: Channel, base: str = "D", budget=None, seed: int = 0,
                          ref_dim: int | None = None) -> DivergenceEstimate:
    """sup over (rho, tau) of D(N(rho) || M(tau)) - D(rho || tau), inputs on A R.

    The search starts from the optimizer of :func:`channel_div` with the
    same seed, so it never reports less than that estimate.
    """
    check_amortizable(base)
    _check_channels(n, m)
    if channels_close(n, m, 1e-12):
        return _est(0.0, EXACT, "equal channels")
    t1, t2 = classical_table(n), classical_table(m)
    if t1 is not None and t2 is not None:
        return _est(_rows_div(base_fn(base), t1, t2), EXACT, "classical channels: amortization collapses")
    budget = Budget.parse(budget)
    first, lay0, r = _channel_search(n, m, base, budget, seed, ref_dim)
    if math.isinf(first.value):
        return _est(first.value, LOWER)
    f = base_fn(base)
    d = n.dim_in * r
    lay = Layout().add("rho", "mixed", d).add("tau", "mixed", d)
    nr, mr = with_ref(n, r), with_ref(m, r)

    finite = math.isfinite(penalty_upper(n, m, base))

    def obj(x):
        p = lay.unpack(x)
        pen = f(p["rho"], p["tau"])
        if math.isinf(pen):
            return -math.inf
        return _drop_spurious(f(nr(p["rho"]), mr(p["tau"])), finite) - pen

    psi = lay0.unpack(first.x)["rho"]
    seed_pt = {"rho": mixed_params(psi), "tau": mixed_params(psi)}
    res = maximize(obj, lay, budget, seed, [seed_pt])
    return _est(max(res.value, first.value), LOWER)


# ---------------------------------------------------------------------------
# classical superchannels
# ---------------------------------------------------------------------------

def _kl(p: np.ndarray, q: np.ndarray, axis=-1) -> np.ndarray:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log2(np.where(p > 0, p, 1)) - np.log2(np.where(q > 0, q, 1))), 0.0)
        terms = np.where((p > 0) & (q <= 0), np.inf, terms)
    return np.sum(terms, axis=axis)


def _check_classical_pair(t1: ClassicalSuperchannel, t2: ClassicalSuperchannel):
    if t1.alphabets != t2.alphabets:
        raise ValueError(f"alphabets differ: {t1.alphabets} vs {t2.alphabets}")


def classical_joint(theta: ClassicalSuperchannel, c: int, f: Sequence[int]) -> np.ndarray:
    """p[a, x] = sum_s e(a, s | c) d(x | f(a), s): output with a copy of the slot input."""
    return np.einsum("as,asx->ax", theta.e[c], theta.d[np.asarray(f)])


def classical_exact(t1: ClassicalSuperchannel, t2: ClassicalSuperchannel, return_argmax: bool = False):
    """Relative entropy of two classical superchannels by enumeration.

    The objective is jointly convex in the input distribution and the slot
    channel, so the supremum sits at a point-mass input and a deterministic
    channel that also copies its input into the reference.
    """
    _check_classical_pair(t1, t2)
    al = t1.alphabets
    n_f = al["b"] ** al["a"]
    if n_f * al["c"] > ENUM_GUARD:
        raise ValueError(f"{n_f * al['c']} combinations exceed the enumeration guard {ENUM_GUARD}")
    fs = np.array(list(itertools.product(range(al["b"]), repeat=al["a"])), dtype=int)
    best, arg = -math.inf, (0, tuple(fs[0]))
    for c in range(al["c"]):
        p1 = np.einsum("as,fasx->fax", t1.e[c], t1.d[fs])
        p2 = np.einsum("as,fasx->fax", t2.e[c], t2.d[fs])
        kl = _kl(p1.reshape(len(fs), -1), p2.reshape(len(fs), -1))
        i = int(np.argmax(kl))
        if kl[i] > best:
            best, arg = float(kl[i]), (c, tuple(int(v) for v in fs[i]))
    est = _est(max(best, 0.0), EXACT, "enumeration over point masses and deterministic channels")
    return (est, arg) if return_argmax else est


def classical_strategy_divergences(t1: ClassicalSuperchannel, t2: ClassicalSuperchannel,
                                   word: Sequence[str]) -> np.ndarray:
    """D(p || q) for every deterministic adaptive strategy with the given order word.

    Each next input (c for E_j, b for D_j) is a function of everything seen so
    far, and the final output is the whole history, which dominates any
    post-processing.
    """
    _check_classical_pair(t1, t2)
    al = t1.alphabets
    n_in = {"E": al["c"], "D": al["b"]}
    n_out = {"E": al["a"], "D": al["d"]}
    ps = [np.ones(1), np.ones(1)]
    hist: list[int] = []          # dims of history axes
    opened: list[str] = []        # labels of open side-wire axes
    total = 1
    for sym in word:
        kind, j = sym[0], sym[1:]
        h = int(np.prod(hist)) if hist else 1
        k = n_in[kind] ** h
        total *= k
        if total > ENUM_GUARD:
            raise ValueError(f"more than {ENUM_GUARD} strategies")
        tables = np.array(list(itertools.product(range(n_in[kind]), repeat=h)), dtype=int).reshape((k, *hist))
        nh, no = len(hist), len(opened)
        new = []
        for p, th in zip(ps, (t1, t2)):
            s_dim = p.shape[0]
            if kind == "E":
                kern = th.e[tables]                                # (k, *hist, a, s)
                kern = kern.reshape((1, k, *hist) + (1,) * no + kern.shape[-2:])
                q = p.reshape((s_dim, 1) + p.shape[1:] + (1, 1)) * kern
                q = q.reshape((s_dim * k,) + q.shape[2:])
                # axes: S, hist, open, a, s  ->  S, hist, a, open, s
                q = np.moveaxis(q, 1 + nh + no, 1 + nh)
            else:
                pos = opened.index(j)
                p = np.moveaxis(p, 1 + nh + pos, -1)            # S, hist, open', s
                kern = th.d[tables]                                # (k, *hist, s, x)
                kern = kern.reshape((1, k, *hist) + (1,) * (no - 1) + kern.shape[-2:])
                q = (p.reshape((s_dim, 1) + p.shape[1:] + (1,)) * kern).sum(axis=-2)
                q = q.reshape((s_dim * k,) + q.shape[2:])
                q = np.moveaxis(q, -1, 1 + nh)                    # x joins the history
            new.append(q)
        ps = new
        if kind == "E":
            hist.append(n_out["E"])
            opened.append(j)
        else:
            hist.append(n_out["D"])
            opened.remove(j)
    s_dim = ps[0].shape[0]
    return _kl(ps[0].reshape(s_dim, -1), ps[1].reshape(s_dim, -1))


def _ctheta(theta: ClassicalSuperchannel, n_tab: np.ndarray, r: int) -> np.ndarray:
    """Classical channel (c, r) -> (x, r') of theta with slot filler n[(a, r), (b, r')]."""
    al = theta.alphabets
    n4 = n_tab.reshape(al["a"], r, al["b"], r)
    t = np.einsum("cas,aibj,bsx->cixj", theta.e, n4, theta.d)
    return t.reshape(al["c"] * r, al["d"] * r)


def _cfront(theta: ClassicalSuperchannel, n_tab: np.ndarray, r: int) -> np.ndarray:
    """n o e as a classical channel (c, r) -> (b, s, r')."""
    al = theta.alphabets
    n4 = n_tab.reshape(al["a"], r, al["b"], r)
    t = np.einsum("cas,aibj->cibsj", theta.e, n4)
    return t.reshape(al["c"] * r, al["b"] * al["s"] * r)


def _row_max_kl(t1: np.ndarray, t2: np.ndarray) -> float:
    return float(np.max(_kl(t1, t2)))


def _copy_table(f: Sequence[int], a: int, b: int, r: int) -> np.ndarray:
    """Logits of the filler (a, r) -> (f(a), r' = a)."""
    x = np.full((a, r, b, r), -HARD)
    for ai in range(a):
        x[ai, :, f[ai], ai] = HARD
    return x.reshape(a * r, b * r)


def _classical_flavor(t1: ClassicalSuperchannel, t2: ClassicalSuperchannel, flavor: str, budget: Budget,
                      seed: int) -> tuple[float, dict]:
    al = t1.alphabets
    r = al["a"]
    cr, ab = al["c"] * r, (al["a"] * r, al["b"] * r)
    exact, (c0, f0) = classical_exact(t1, t2, return_argmax=True)
    n0 = _copy_table(f0, al["a"], al["b"], r)
    p0 = np.full(cr, -HARD)
    p0[c0 * r] = HARD
    ident = np.where(np.eye(cr) > 0, HARD, -HARD)
    lay = Layout()
    if flavor == "sup_sA":
        lay.add("N", "table", *ab)

        def obj(x):
            n = lay.unpack(x)["N"]
            return _row_max_kl(_ctheta(t1, n, r), _ctheta(t2, n, r))

        start = {"N": n0}
    elif flavor == "sup_cA":
        lay.add("N", "table", *ab).add("M", "table", *ab).add("p", "dist", cr)

        def obj(x):
            u = lay.unpack(x)
            out = float(_kl(u["p"] @ _ctheta(t1, u["N"], r), u["p"] @ _ctheta(t2, u["M"], r)))
            return out - _row_max_kl(u["N"], u["M"])

        start = {"N": n0, "M": n0, "p": p0}
    elif flavor == "sup_A":
        lay.add("N", "table", *ab).add("M", "table", *ab)

        def obj(x):
            u = lay.unpack(x)
            return _row_max_kl(_ctheta(t1, u["N"], r), _ctheta(t2, u["M"], r)) - _row_max_kl(u["N"], u["M"])

        start = {"N": n0, "M": n0}
    elif flavor == "sup_Astar":
        lay.add("N", "table", *ab).add("M", "table", *ab).add("Nb", "table", cr, cr).add("Mb", "table", cr, cr)

        def obj(x):
            u = lay.unpack(x)
            lhs = _row_max_kl(u["Nb"] @ _ctheta(t1, u["N"], r), u["Mb"] @ _ctheta(t2, u["M"], r))
            pen = _row_max_kl(u["Nb"] @ _cfront(t1, u["N"], r), u["Mb"] @ _cfront(t1, u["M"], r))
            return lhs - pen

        start = {"N": n0, "M": n0, "Nb": ident, "Mb": ident}
    elif flavor == "sup_tildeA":
        lay.add("N", "table", *ab).add("M", "table", *ab).add("p", "dist", cr).add("q", "dist", cr)

        def obj(x):
            u = lay.unpack(x)
            lhs = float(_kl(u["p"] @ _ctheta(t1, u["N"], r), u["q"] @ _ctheta(t2, u["M"], r)))
            pen = float(_kl(u["p"] @ _cfront(t1, u["N"], r), u["q"] @ _cfront(t1, u["M"], r)))
            return lhs - pen if math.isfinite(pen) else -math.inf

        start = {"N": n0, "M": n0, "p": p0, "q": p0}
    else:
        raise ValueError(f"no classical search for flavor {flavor!r}")
    res = maximize(obj, lay, budget, seed, [start])
    return res.value, {"exact": exact.value, "evaluations": res.evaluations}


# ---------------------------------------------------------------------------
# superchannels
# ---------------------------------------------------------------------------

def _then(first: Channel, second: Channel, c: int, r: int, a: int, s: int, b: int) -> Channel:
    """C R -> (A S) R followed by ``second`` on A R -> B R; result C R -> (B S) R."""
    def body(w):
        w.apply(first, ["C", "R"], [("A", a), ("S", s), ("R", r)])
        w.apply(second, ["A", "R"], [("B", b), ("R", r)])
    return _wired_channel([("C", c), ("R", r)], [("B", b), ("S", s), ("R", r)], body)


def front(theta: Comb, fillers: Sequence[Channel], last: Channel, r: int) -> Channel:
    """last o theta^{k,k-1}(fillers): the comb up to its final slot, then ``last``."""
    k = theta.k
    pre = comb_prefix(theta, k - 1)
    head = comb_apply(pre, list(fillers), r)
    return _then(head, last, theta.c, r, theta.a[-1], theta.s[-1], theta.b[-1])


def _quantum_flavor(t1: Superchannel, t2: Superchannel, flavor: str, base: str, budget: Budget, seed: int,
                    r: int):
    """Seeded chain of searches up to ``flavor``; returns {flavor: (value, point)}."""
    f = base_fn(base)
    dims = t1.dims
    c, a, b = dims["c"], dims["a"], dims["b"]
    ch = (a * r, b * r)
    cr = c * r
    order = {"sup_D": ["sup_D"], "sup_sA": ["sup_D", "sup_sA"], "sup_cA": ["sup_D", "sup_cA"],
             "sup_A": ["sup_D", "sup_sA", "sup_cA", "sup_A"],
             "sup_Astar": ["sup_D", "sup_sA", "sup_cA", "sup_A", "sup_Astar"],
             "sup_tildeA": ["sup_D", "sup_sA", "sup_cA", "sup_A", "sup_Astar", "sup_tildeA"]}[flavor]
    out: dict = {}

    def app(theta, n):
        return comb_apply(theta, [n], r)

    def penalty(n, m):
        return penalty_upper(n, m, base)

    def raw_of(name):
        return out[name][1]

    for fl in order:
        lay = Layout()
        starts = []
        if fl == "sup_D":
            lay.add("N", "channel", *ch).add("rho", "pure", cr)

            def obj(x, lay=lay):
                u = lay.unpack(x)
                rho = u["rho"]
                return f(app(t1, u["N"])(rho), app(t2, u["N"])(rho))

            starts = [{}]
        elif fl in ("sup_sA", "sup_A", "sup_Astar"):
            lay.add("N", "channel", *ch)
            if fl != "sup_sA":
                lay.add("M", "channel", *ch)
            lay.add("rho", "mixed", cr).add("tau", "mixed", cr)
            if fl == "sup_Astar":
                lay.add("Nb", "channel", cr, cr).add("Mb", "channel", cr, cr)

            def obj(x, lay=lay, fl=fl):
                u = lay.unpack(x)
                n, m = u["N"], (u["N"] if fl == "sup_sA" else u["M"])
                n1, m2 = app(t1, n), app(t2, m)
                amort = f(u["rho"], u["tau"])
                if math.isinf(amort):
                    return -math.inf
                if fl == "sup_Astar":
                    n1, m2 = compose(n1, u["Nb"]), compose(m2, u["Mb"])
                    pen = penalty(compose(_then_e(t1, n, r), u["Nb"]), compose(_then_e(t1, m, r), u["Mb"]))
                else:
                    pen = 0.0 if fl == "sup_sA" else penalty(n, m)
                if math.isinf(pen):
                    return -math.inf
                return f(n1(u["rho"]), m2(u["tau"])) - amort - pen

            if fl == "sup_sA":
                d = out["sup_D"][2]
                starts = [{"N": raw_of("sup_D")["N"], "rho": mixed_params(d["rho"]), "tau": mixed_params(d["rho"])}]
            elif fl == "sup_A":
                s_pt, c_pt = out["sup_sA"][2], out["sup_cA"][2]
                starts = [{"N": raw_of("sup_sA")["N"], "M": raw_of("sup_sA")["N"],
                           "rho": mixed_params(s_pt["rho"]), "tau": mixed_params(s_pt["tau"])},
                          {"N": raw_of("sup_cA")["N"], "M": raw_of("sup_cA")["M"],
                           "rho": mixed_params(c_pt["rho"]), "tau": mixed_params(c_pt["rho"])}]
            else:
                starts = [dict(raw_of("sup_A"))]
        elif fl == "sup_cA":
            lay.add("N", "channel", *ch).add("M", "channel", *ch).add("rho", "pure", cr)

            def obj(x, lay=lay):
                u = lay.unpack(x)
                pen = penalty(u["N"], u["M"])
                if math.isinf(pen):
                    return -math.inf
                return f(app(t1, u["N"])(u["rho"]), app(t2, u["M"])(u["rho"])) - pen

            starts = [{"N": raw_of("sup_D")["N"], "M": raw_of("sup_D")["N"], "rho": raw_of("sup_D")["rho"]}]
        else:  # sup_tildeA
            lay.add("N", "channel", *ch).add("M", "channel", *ch).add("rho", "mixed", cr).add("sigma", "mixed", cr)

            def obj(x, lay=lay):
                u = lay.unpack(x)
                pen = f(_then_e(t1, u["N"], r)(u["rho"]), _then_e(t1, u["M"], r)(u["sigma"]))
                if math.isinf(pen):
                    return -math.inf
                return f(app(t1, u["N"])(u["rho"]), app(t2, u["M"])(u["sigma"])) - pen

            p = out["sup_Astar"][2]
            starts = [{"N": raw_of("sup_Astar")["N"], "M": raw_of("sup_Astar")["M"],
                       "rho": mixed_params(p["Nb"](p["rho"])), "sigma": mixed_params(p["Mb"](p["tau"]))}]
        res = maximize(obj, lay, budget, seed, starts)
        out[fl] = (res.value, res.raw, lay.unpack(res.x))
        if math.isinf(res.value):
            for rest in order[order.index(fl) + 1:]:
                out[rest] = (math.inf, res.raw, lay.unpack(res.x))
            break
    return out


def _then_e(theta: Superchannel, n: Channel, r: int) -> Channel:
    """N o E_theta on C R -> B S R."""
    return front(theta, [], n, r)


def sup_div(theta1, theta2, flavor: str = "sup_D", base: str = "D", budget=None, seed: int = 0,
            ref_dim: int | None = None, return_chain: bool = False, return_point: bool = False):
    """Superchannel divergence of the given flavor.

    Classical superchannels use classical fillers and references: ``sup_D``
    is the exact enumeration, the other flavors are searches seeded at its
    optimizer. Quantum pairs run the seeded chain D -> sA, cA -> A -> A* -> ~A,
    each search starting from the optimizers found before it, so estimates
    along the chain are monotone by construction. The reference dimension
    defaults to the slot input dimension. ``return_point`` (quantum pairs
    only) returns the optimizer's unpacked blocks plus ``r`` instead of the
    chain.
    """
    if flavor not in SUP_FLAVORS:
        raise ValueError(f"sup_div does not handle flavor {flavor!r}")
    if flavor != "sup_D":
        check_amortizable(base)
    budget = Budget.parse(budget)
    if isinstance(theta1, ClassicalSuperchannel) or isinstance(theta2, ClassicalSuperchannel):
        if not (isinstance(theta1, ClassicalSuperchannel) and isinstance(theta2, ClassicalSuperchannel)):
            raise ValueError("mix of classical and quantum superchannels")
        if base != "D":
            raise ValueError("classical superchannels support base 'D' only")
        if flavor == "sup_D":
            est = classical_exact(theta1, theta2)
            return (est, {"sup_D": est.value}) if return_chain else est
        val, info = _classical_flavor(theta1, theta2, flavor, budget, seed)
        est = _est(val, LOWER, f"classical search seeded at the exact optimizer {info['exact']:.12g}")
        return (est, {flavor: val, "sup_D": info["exact"]}) if return_chain else est
    if theta1.signature != theta2.signature:
        raise ValueError("superchannel wire signatures differ")
    if superchannels_equal(theta1, theta2, 1e-12):
        est = _est(0.0, EXACT, "equal superchannels")
        return (est, {flavor: 0.0}) if return_chain else est
    r = theta1.dims["a"] if ref_dim is None else ref_dim
    chain = _quantum_flavor(theta1, theta2, flavor, base, budget, seed, r)
    est = _est(chain[flavor][0], LOWER)
    if return_point:
        return est, dict(chain[flavor][2], r=r, raw=chain[flavor][1])
    return (est, {k: v[0] for k, v in chain.items()}) if return_chain else est


def regularized_proxy(theta1: Superchannel, theta2: Superchannel, n: int, budget=None, seed: int = 0) -> float:
    """Finite-n proxy D(theta1^n || theta2^n) / n for n <= 2 (exploratory, no limit claimed)."""
    if n not in (1, 2):
        raise ValueError("only n in {1, 2} is supported")
    if n == 1:
        return sup_div(theta1, theta2, "sup_D", budget=budget, seed=seed).value
    p1, p2 = superchannel_square(theta1), superchannel_square(theta2)
    return sup_div(p1, p2, "sup_D", budget=budget, seed=seed, ref_dim=1).value / 2


def superchannel_square(theta: Superchannel) -> Superchannel:
    """theta x theta with wires grouped as C1C2 -> (A1A2)(S1S2) and (B1B2)(S1S2) -> D1D2."""
    d = theta.dims
    e = _wired_channel([("C1", d["c"]), ("C2", d["c"])],
                       [("A1", d["a"]), ("A2", d["a"]), ("S1", d["s"]), ("S2", d["s"])],
                       lambda w: [w.apply(theta.E, f"C{i}", [(f"A{i}", d["a"]), (f"S{i}", d["s"])]) for i in (1, 2)])
    dd = _wired_channel([("B1", d["b"]), ("B2", d["b"]), ("S1", d["s"]), ("S2", d["s"])],
                        [("D1", d["d"]), ("D2", d["d"])],
                        lambda w: [w.apply(theta.D, [f"B{i}", f"S{i}"], [(f"D{i}", d["d"])]) for i in (1, 2)])
    return Superchannel(e, dd, d["a"] ** 2, d["s"] ** 2, d["b"] ** 2)


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

def net_div(theta1: Comb, theta2: Comb, flavor: str = "net_A", base: str = "D", budget=None, seed: int = 0,
            ref_dim: int | None = None) -> DivergenceEstimate:
    """Amortized network divergence (``net_A``) or its fully amortized form (``net_Astar``).

    Lower bound: fillers, states and (for ``net_Astar``) pre-processing
    channels are searched; the subtracted amortized term uses the Choi
    D_max upper bound.
    """
    if flavor not in ("net_A", "net_Astar"):
        raise ValueError(f"unknown network flavor {flavor!r}")
    check_amortizable(base)
    if theta1.signature != theta2.signature or theta1.s != theta2.s:
        raise ValueError("comb wire signatures differ")
    if superchannels_equal(theta1, theta2, 1e-12):
        return _est(0.0, EXACT, "equal combs")
    if theta1.k < 2:
        raise ValueError("networks need at least one slot")
    f = base_fn(base)
    r = theta1.a[0] if ref_dim is None else ref_dim
    cr = theta1.c * r
    lay = Layout()
    for i in range(theta1.k - 1):
        shape = (theta1.a[i] * r, theta1.b[i] * r)
        lay.add(f"A{i}", "channel", *shape).add(f"Ab{i}", "channel", *shape)
    lay.add("rho", "mixed", cr).add("sigma", "mixed", cr)
    if flavor == "net_Astar":
        lay.add("A0", "channel", cr, cr).add("Ab0", "channel", cr, cr)
    k1 = theta1.k - 1

    def obj(x):
        u = lay.unpack(x)
        fa = [u[f"A{i}"] for i in range(k1)]
        fb = [u[f"Ab{i}"] for i in range(k1)]
        n1, n2 = comb_apply(theta1, fa, r), comb_apply(theta2, fb, r)
        p1, p2 = front(theta1, fa[:-1], fa[-1], r), front(theta1, fb[:-1], fb[-1], r)
        if flavor == "net_Astar":
            n1, n2 = compose(n1, u["A0"]), compose(n2, u["Ab0"])
            p1, p2 = compose(p1, u["A0"]), compose(p2, u["Ab0"])
        amort = f(u["rho"], u["sigma"])
        pen = penalty_upper(p1, p2, base)
        if math.isinf(amort) or math.isinf(pen):
            return -math.inf
        return f(n1(u["rho"]), n2(u["sigma"])) - amort - pen

    # equal fillers and rho = sigma already give a value >= 0
    v = np.random.default_rng(seed).normal(size=lay.size_of("mixed", (cr,)))
    starts = [{"rho": v, "sigma": v}]
    if k1 == 1 and isinstance(theta1, Superchannel):
        # the sup_A optimizer is feasible here with a smaller penalty
        _, pt = sup_div(theta1, theta2, "sup_A", base, budget, seed, r, return_point=True)
        raw = pt["raw"]
        starts.append({"A0": raw["N"], "Ab0": raw["M"], "rho": raw["rho"], "sigma": raw["tau"]})
    res = maximize(obj, lay, Budget.parse(budget), seed, starts)
    return _est(res.value, LOWER)


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def verify_meta_converse(s: StrategyDescriptor, theta1, theta2, bound: DivergenceEstimate,
                         measurements: Sequence[np.ndarray] = (), tol: float = 1e-8) -> Report:
    """Check D(p || q) <= n * bound for the output states and any supplied tests.

    Only exact or upper-bound estimates are accepted as the bound.
    """
    if not isinstance(bound, DivergenceEstimate):
        raise TypeError("bound must be a DivergenceEstimate")
    if bound.kind not in (EXACT, UPPER):
        raise ValueError(f"a {bound.kind} estimate cannot certify a converse bound")
    rho1, rho2 = build_outputs(s, theta1, theta2)
    rhs = s.n * bound.value
    lhs = [rel_entropy(rho1, rho2).value]
    for q in measurements:
        p = np.clip([np.trace(q @ rho1).real, 1 - np.trace(q @ rho1).real], 0, 1)
        qq = np.clip([np.trace(q @ rho2).real, 1 - np.trace(q @ rho2).real], 0, 1)
        lhs.append(float(_kl(p, qq)))
    worst = max(lhs)
    margin = rhs + tol - worst if math.isfinite(rhs) else math.inf
    return Report("meta-converse", bool(worst <= rhs + tol), margin,
                  {"class": s.cls, "n": s.n, "lhs": lhs, "rhs": rhs, "bound": bound})


def verify_classical_adaptive(t1: ClassicalSuperchannel, t2: ClassicalSuperchannel, n: int = 2,
                              words: Sequence[Sequence[str]] | None = None, tol: float = 1e-9) -> Report:
    """Every deterministic adaptive strategy obeys D(p || q) <= n * classical_exact."""
    from .strat import all_words

    bound = classical_exact(t1, t2).value
    words = all_words(n) if words is None else [list(w) for w in words]
    per_word = {}
    worst = -math.inf
    count = 0
    for w in words:
        vals = classical_strategy_divergences(t1, t2, w)
        count += len(vals)
        per_word[" ".join(w)] = float(np.max(vals))
        worst = max(worst, float(np.max(vals)))
    rhs = n * bound
    return Report("classical-adaptive", bool(worst <= rhs + tol), rhs + tol - worst,
                  {"bound": bound, "strategies": count, "max_by_word": per_word})


def constant_output(theta: Comb, tol: float = 1e-9) -> np.ndarray | None:
    """The fixed output state if theta ignores its input state and slot channels, else None."""
    from .qobj import comb_choi

    j = comb_choi(theta)
    dims = [theta.c] + [x for i in range(theta.k - 1) for x in (theta.a[i], theta.b[i])] + [theta.d]
    n = len(dims)
    tau = la.partial_trace(j, dims, [n - 1])
    norm = np.prod([dims[0]] + [theta.b[i] for i in range(theta.k - 1)])
    tau = tau / norm
    rest = la.partial_trace(j, dims, list(range(n - 1))) / np.trace(tau).real
    if np.max(np.abs(la.kron(rest, tau) - j)) > tol:
        return None
    return la.herm(tau)


def _chain_sup_term(theta1, theta2, eps: float, m: int) -> tuple[float, str]:
    if isinstance(theta1, ClassicalSuperchannel):
        if m != 1:
            raise ValueError("classical instances are certified for m = 1 only")
        al = theta1.alphabets
        best = -math.inf
        for c in range(al["c"]):
            for f in itertools.product(range(al["b"]), repeat=al["a"]):
                p1 = classical_joint(theta1, c, f).reshape(-1)
                p2 = classical_joint(theta2, c, f).reshape(-1)
                best = max(best, dmax_smooth(np.diag(p1), np.diag(p2), eps))
        return best, "classical enumeration of smoothed D_max"
    tau1, tau2 = constant_output(theta1), constant_output(theta2)
    if tau1 is None or tau2 is None:
        raise ValueError("sup term is only certified for constant-output replacers or classical pairs")
    return dmax_smooth(la.kron(*([tau1] * m)), la.kron(*([tau2] * m)), eps), "constant outputs"


def chain_rule_check(theta1, theta2, n: Channel, m_ch: Channel, rho, sigma, m: int = 1, eps: float = 0.05,
                     eps_s: float = 0.05, eps_c: float = 0.05, tol: float = 1e-6) -> Report:
    """Smoothed D_max chain rule for one superchannel use, m copies.

    LHS: D_max at radius eps + m eps_s + sqrt(m eps_s) + m sqrt(2 eps_c) of
    the m-fold outputs. RHS: the supremum term (certified instances only)
    - m log(1 - eps_s) + m D_max^{eps_c}(N || M) + m D_max^{eps_s}(rho || sigma).
    """
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    sup, how = _chain_sup_term(theta1, theta2, eps, m)
    q1 = embed_classical(theta1) if isinstance(theta1, ClassicalSuperchannel) else theta1
    q2 = embed_classical(theta2) if isinstance(theta2, ClassicalSuperchannel) else theta2
    out1 = comb_apply(q1, [n])(rho)
    out2 = comb_apply(q2, [m_ch])(sigma)
    if out1.shape[0] ** m > 16:
        raise ValueError("total output dimension exceeds 16")
    radius = eps + m * eps_s + math.sqrt(m * eps_s) + m * math.sqrt(2 * eps_c)
    if radius >= 1:
        raise ValueError(f"combined radius {radius} is not below 1")
    lhs = dmax_smooth(la.kron(*([out1] * m)), la.kron(*([out2] * m)), radius)
    rhs = (sup - m * math.log2(1 - eps_s) + m * dmax_smooth_channel(n, m_ch, eps_c)
           + m * dmax_smooth(rho, sigma, eps_s))
    margin = rhs - lhs if math.isfinite(rhs) else math.inf
    return Report("chain-rule", bool(lhs <= rhs + tol), margin,
                  {"lhs": lhs, "rhs": rhs, "sup_term": sup, "sup_term_source": how, "radius": radius, "m": m})


def lemma_inequality_suite(theta1, theta2, budget=None, seed: int = 0, tol: float = CHAIN_TOL) -> Report:
    """Flavor chains D <= sA <= A <= A* <= ~A and D <= cA <= A on seeded estimates.

    For quantum pairs whose slot wires match (a == b) the composition bound
    D^A(D1 o E1 || D2 o E2) <= D^A(D1 || D2) + D^A(E1 || E2) is checked with
    certified upper bounds on the right.
    """
    details: dict = {}
    if isinstance(theta1, ClassicalSuperchannel):
        exact = classical_exact(theta1, theta2).value
        vals = {"sup_D": exact}
        for fl in SUP_FLAVORS[1:]:
            vals[fl] = sup_div(theta1, theta2, fl, budget=budget, seed=seed).value
        passed = all(abs(v - exact) <= 1e-6 for k, v in vals.items() if k != "sup_tildeA")
        passed &= vals["sup_tildeA"] >= vals["sup_Astar"] - tol
        details["values"] = vals
        details["collapse_gap"] = max(abs(v - exact) for v in vals.values())
        return Report("lemma-chain", bool(passed), -details["collapse_gap"], details)
    _, vals = sup_div(theta1, theta2, "sup_tildeA", budget=budget, seed=seed, return_chain=True)
    pairs = [("sup_D", "sup_sA"), ("sup_sA", "sup_A"), ("sup_A", "sup_Astar"), ("sup_D", "sup_cA"),
             ("sup_cA", "sup_A"), ("sup_Astar", "sup_tildeA")]
    gaps = [vals[hi] - vals[lo] for lo, hi in pairs]
    details["values"] = vals
    passed = all(g >= -tol for g in gaps)
    margin = min(gaps)
    d1 = theta1.dims
    if d1["a"] == d1["b"]:
        lhs = channel_div_amortized(compose(theta1.D, theta1.E), compose(theta2.D, theta2.E),
                                    budget=budget, seed=seed).value
        rhs = penalty_upper(theta1.D, theta2.D) + penalty_upper(theta1.E, theta2.E)
        details["composition"] = {"lhs": lhs, "rhs": rhs}
        passed &= lhs <= rhs + 1e-6
        margin = min(margin, rhs - lhs)
    return Report("lemma-chain", bool(passed), margin, details)
