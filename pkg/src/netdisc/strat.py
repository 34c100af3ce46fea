"""Discrimination strategies for superchannels: output states, errors and rates.

A strategy uses ``n`` copies of an unknown superchannel and ends with a
pair of output states, one per hypothesis. Seven classes are supported:

``product``                 n copies of Theta(N)(rho), each with its own reference
``parallel_prod_channels``  joint input state, one slot filler per copy
``parallel_prod_states``    product input states, one joint filler for all slots
``parallel_full``           joint input state and joint filler
``successive_adaptive``     Theta(N) used as a channel, adaptive maps in between
``nested_adaptive``         N_{i+1} = Theta(A_{n-i} o N_i o A_{n+i}), N_1 = Theta(A_n)
``general_adaptive``        superchannel fragments E_j, D_j in any order word

Parallel classes carry a reference R_i of dimension ``ref_dim`` per copy.
Adaptive classes carry one memory register of dimension ``ref_dim``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import linalg as la
from .qobj import (Channel, Superchannel, Wires, check_state, choi_of, comb_apply, compose,
                   isometry_channel, tensor)
from .sdp.problems import helstrom_closed_form, hypothesis_test, min_error

CLASSES = (
    "product",
    "parallel_prod_channels",
    "parallel_prod_states",
    "parallel_full",
    "successive_adaptive",
    "nested_adaptive",
    "general_adaptive",
)
PARALLEL = CLASSES[:4]
ADAPTIVE = CLASSES[4:]
DEFAULT_MEMORY = 4


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

def nested_word(n: int) -> list[str]:
    return [f"E{j}" for j in range(1, n + 1)] + [f"D{j}" for j in range(n, 0, -1)]


def successive_word(n: int) -> list[str]:
    return [s for j in range(1, n + 1) for s in (f"E{j}", f"D{j}")]


def check_word(word: Sequence[str], n: int) -> list[str]:
    """Validate an order word over E_1..E_n, D_1..D_n (each once, E_j before D_j)."""
    word = list(word)
    want = sorted([f"E{j}" for j in range(1, n + 1)] + [f"D{j}" for j in range(1, n + 1)])
    if sorted(word) != want:
        raise ValueError(f"order word must contain each of {want} exactly once, got {word}")
    for j in range(1, n + 1):
        if word.index(f"E{j}") > word.index(f"D{j}"):
            raise ValueError(f"order word violates E{j} before D{j}")
    return word


def all_words(n: int) -> list[list[str]]:
    """All valid order words with copies labeled by first use of E."""
    out = []

    def rec(prefix, opened, closed, next_label):
        if len(prefix) == 2 * n:
            out.append(list(prefix))
            return
        if next_label <= n:
            rec(prefix + [f"E{next_label}"], opened | {next_label}, closed, next_label + 1)
        for j in sorted(opened - closed):
            rec(prefix + [f"D{j}"], opened, closed | {j}, next_label)

    rec([], frozenset(), frozenset(), 1)
    return out


@dataclass(frozen=True, eq=False)
class StrategyDescriptor:
    """A concrete strategy; ``measurement`` None means "use the optimal test".

    ``states`` and ``channels`` hold, per class:

    - product: [rho on C R], [N: A R -> B R]
    - parallel_prod_channels: [rho on (C R)^n], [N_1, ..., N_n]
    - parallel_prod_states: [rho_1, ..., rho_n], [N on (A R)^n]
    - parallel_full: [rho on (C R)^n], [N on (A R)^n]
    - successive_adaptive: [rho on C R], [N, A_1, ..., A_{n-1}] with A_j: D R -> C R
    - nested_adaptive: [rho on C R], [A_1, ..., A_{2n-1}] (indexing of the recursion)
    - general_adaptive: [rho on C R], adaptive maps in time order, plus ``order``
    """

    cls: str
    n: int
    ref_dim: int
    states: tuple
    channels: tuple
    order: tuple = ()
    measurement: np.ndarray | None = None

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown strategy class {self.cls!r}")
        if self.n < 1 or self.ref_dim < 1:
            raise ValueError("n and ref_dim must be positive")
        object.__setattr__(self, "states", tuple(np.asarray(s, dtype=complex) for s in self.states))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "order", tuple(self.order))
        n = self.n
        arity = {
            "product": (1, 1),
            "parallel_prod_channels": (1, n),
            "parallel_prod_states": (n, 1),
            "parallel_full": (1, 1),
            "successive_adaptive": (1, n),
            "nested_adaptive": (1, 2 * n - 1),
            "general_adaptive": (1, 2 * n - 1),
        }[self.cls]
        if (len(self.states), len(self.channels)) != arity:
            raise ValueError(f"{self.cls} with n={n} needs {arity[0]} state(s) and {arity[1]} channel(s), "
                             f"got {len(self.states)} and {len(self.channels)}")
        if self.cls == "general_adaptive":
            check_word(self.order, n)
        elif self.order:
            raise ValueError("only general_adaptive takes an order word")
        for s in self.states:
            check_state(s)

    @property
    def word(self) -> list[str]:
        if self.cls == "general_adaptive":
            return list(self.order)
        if self.cls == "nested_adaptive":
            return nested_word(self.n)
        if self.cls == "successive_adaptive":
            return successive_word(self.n)
        raise ValueError(f"{self.cls} has no order word")

    def to_json(self) -> dict:
        out = {
            "class": self.cls,
            "n": self.n,
            "ref_dim": self.ref_dim,
            "states": [la.Operator(s).to_json() for s in self.states],
            "channels": [ch.to_json() for ch in self.channels],
            "order": list(self.order),
        }
        if self.measurement is not None:
            out["measurement"] = la.Operator(self.measurement).to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "StrategyDescriptor":
        meas = obj.get("measurement")
        return cls(obj["class"], int(obj["n"]), int(obj["ref_dim"]),
                   tuple(la.Operator.from_json(s).data for s in obj["states"]),
                   tuple(Channel.from_json(c) for c in obj["channels"]),
                   tuple(obj.get("order", ())),
                   None if meas is None else la.Operator.from_json(meas).data)


# ---------------------------------------------------------------------------
# output states
# ---------------------------------------------------------------------------

def _fragment_dims(theta: Superchannel, sym: str) -> tuple[int, int]:
    """(input wire dim, output wire dim) of fragment E_j or D_j on the main wire."""
    dims = theta.dims
    return (dims["c"], dims["a"]) if sym[0] == "E" else (dims["b"], dims["d"])


def adaptive_shapes(theta: Superchannel, word: Sequence[str], m: int) -> list[tuple[int, int]]:
    """(dim_in, dim_out) of the maps between consecutive fragments, memory included."""
    out = []
    for cur, nxt in zip(word[:-1], word[1:]):
        out.append((_fragment_dims(theta, cur)[1] * m, _fragment_dims(theta, nxt)[0] * m))
    return out


def run_word(theta: Superchannel, word: Sequence[str], rho, maps: Sequence[Channel], m: int) -> np.ndarray:
    """Output on D x memory of an interleaved fragment sequence."""
    dims = theta.dims
    w = Wires()
    w.add(["X", "M"], [dims["c"], m], rho)
    for i, sym in enumerate(word):
        j = sym[1:]
        if sym[0] == "E":
            w.apply(theta.E, "X", [("X", dims["a"]), (f"S{j}", dims["s"])])
        else:
            w.apply(theta.D, ["X", f"S{j}"], [("X", dims["d"])])
        if i < len(word) - 1:
            nxt = _fragment_dims(theta, word[i + 1])[0]
            w.apply(maps[i], ["X", "M"], [("X", nxt), ("M", m)])
    return w.state(["X", "M"])


def run_nested(theta: Superchannel, rho, maps: Sequence[Channel]) -> np.ndarray:
    """Nested recursion by channel composition: N_{i+1} = Theta(A_{n-i} o N_i o A_{n+i})."""
    n = (len(maps) + 1) // 2
    a = list(maps)  # a[k - 1] is A_k
    cur = theta(a[n - 1])
    for i in range(1, n):
        cur = theta(compose(a[n - i - 1], compose(cur, a[n + i - 1])))
    return cur(rho)


def run_parallel(theta: Superchannel, n: int, r: int, states, channels, joint_state: bool,
                 joint_channel: bool) -> np.ndarray:
    """Output on D_1 R_1 ... D_n R_n of the parallel layouts."""
    dims = theta.dims
    w = Wires()
    if joint_state:
        labels = [x for i in range(n) for x in (f"C{i}", f"R{i}")]
        w.add(labels, [dims["c"], r] * n, states[0])
    else:
        for i in range(n):
            w.add([f"C{i}", f"R{i}"], [dims["c"], r], states[i])
    for i in range(n):
        w.apply(theta.E, f"C{i}", [(f"A{i}", dims["a"]), (f"S{i}", dims["s"])])
    if joint_channel:
        ins = [x for i in range(n) for x in (f"A{i}", f"R{i}")]
        outs = [x for i in range(n) for x in ((f"B{i}", dims["b"]), (f"R{i}", r))]
        w.apply(channels[0], ins, outs)
    else:
        for i in range(n):
            w.apply(channels[i], [f"A{i}", f"R{i}"], [(f"B{i}", dims["b"]), (f"R{i}", r)])
    for i in range(n):
        w.apply(theta.D, [f"B{i}", f"S{i}"], [(f"D{i}", dims["d"])])
    return w.state([x for i in range(n) for x in (f"D{i}", f"R{i}")])


def _output(s: StrategyDescriptor, theta: Superchannel) -> np.ndarray:
    if s.cls == "product":
        single = comb_apply(theta, [s.channels[0]], s.ref_dim)(s.states[0])
        return la.kron(*([single] * s.n))
    if s.cls in PARALLEL:
        joint_state = s.cls in ("parallel_prod_channels", "parallel_full")
        joint_channel = s.cls in ("parallel_prod_states", "parallel_full")
        return run_parallel(theta, s.n, s.ref_dim, s.states, s.channels, joint_state, joint_channel)
    if s.cls == "nested_adaptive":
        return run_nested(theta, s.states[0], s.channels)
    if s.cls == "successive_adaptive":
        n_fill, rest = s.channels[0], s.channels[1:]
        maps = []
        for j in range(s.n):
            maps.append(n_fill)
            if j < s.n - 1:
                maps.append(rest[j])
        return run_word(theta, s.word, s.states[0], maps, s.ref_dim)
    return run_word(theta, s.word, s.states[0], s.channels, s.ref_dim)


def build_outputs(s: StrategyDescriptor, theta1: Superchannel, theta2: Superchannel):
    """Final states (rho_1, rho_2) under the two hypotheses, by exact composition."""
    if theta1.dims != theta2.dims:
        raise ValueError(f"superchannel wires differ: {theta1.dims} vs {theta2.dims}")
    return la.herm(_output(s, theta1)), la.herm(_output(s, theta2))


# ---------------------------------------------------------------------------
# canonical embeddings between classes
# ---------------------------------------------------------------------------

def embed_product(s: StrategyDescriptor, target: str = "parallel_prod_channels") -> StrategyDescriptor:
    """Product strategy as a parallel one with identical outputs."""
    if s.cls != "product":
        raise ValueError("expected a product descriptor")
    rho, ch = s.states[0], s.channels[0]
    n = s.n
    if target == "parallel_prod_channels":
        return StrategyDescriptor(target, n, s.ref_dim, (la.kron(*([rho] * n)),), (ch,) * n)
    if target == "parallel_prod_states":
        return StrategyDescriptor(target, n, s.ref_dim, (rho,) * n, (tensor(*([ch] * n)),))
    if target == "parallel_full":
        return StrategyDescriptor(target, n, s.ref_dim, (la.kron(*([rho] * n)),), (tensor(*([ch] * n)),))
    raise ValueError(f"no product embedding into {target}")


def embed_parallel_full(s: StrategyDescriptor) -> StrategyDescriptor:
    """Any parallel class as a parallel_full descriptor."""
    if s.cls == "parallel_full":
        return s
    if s.cls == "product":
        return embed_product(s, "parallel_full")
    if s.cls == "parallel_prod_channels":
        return StrategyDescriptor("parallel_full", s.n, s.ref_dim, s.states, (tensor(*s.channels),))
    if s.cls == "parallel_prod_states":
        return StrategyDescriptor("parallel_full", s.n, s.ref_dim, (la.kron(*s.states),), s.channels)
    raise ValueError(f"{s.cls} is not a parallel class")


def _pad(x: int, w: int) -> Channel:
    return isometry_channel(np.eye(w, dtype=complex)[:, :x])


def _crop(w: int, x: int) -> Channel:
    """w -> x, identity on the first x levels (trace preserving on all inputs)."""
    ks = [np.eye(x, w, dtype=complex)]
    for j in range(x, w):
        k = np.zeros((x, w), dtype=complex)
        k[0, j] = 1
        ks.append(k)
    return choi_of(ks)


def _wired_channel(ins: Sequence[tuple[str, int]], outs: Sequence[tuple[str, int]], body) -> Channel:
    """Channel from the labeled wires ``ins`` to ``outs`` realized by ``body(wires)``."""
    w = Wires()
    for lab, d in ins:
        w.add_phi("in:" + lab, lab, d)
    body(w)
    order = ["in:" + lab for lab, _ in ins] + [lab for lab, _ in outs]
    d_in = int(np.prod([d for _, d in ins]))
    d_out = int(np.prod([d for _, d in outs]))
    return Channel(la.herm(w.state(order)), d_in, d_out)


def embed_parallel_in_nested(s: StrategyDescriptor, theta: Superchannel):
    """Parallel strategy as a nested adaptive one, routing wires through memory.

    The memory holds n - 1 slots of the largest wire dimension plus the n
    references. Returns ``(nested, post)`` where ``post`` maps the parallel
    output D_1 R_1 ... D_n R_n onto the nested output layout D x memory, so
    ``post(out_parallel) == out_nested``.
    """
    s = embed_parallel_full(s)
    dims = theta.dims
    n, r = s.n, s.ref_dim
    c, a, b, d = dims["c"], dims["a"], dims["b"], dims["d"]
    w = max(c, a, b, d)
    slots = [f"P{j}" for j in range(1, n)]
    refs = [f"R{j}" for j in range(1, n + 1)]
    mem = [(x, w) for x in slots] + [(x, r) for x in refs]
    m = w ** (n - 1) * r ** n

    # initial state: C_1 on the main wire, C_2..C_n padded into the slots
    init = Wires()
    init.add([x for j in range(1, n + 1) for x in (f"C{j}", f"R{j}")], [c, r] * n, s.states[0])
    for j in range(2, n + 1):
        init.apply(_pad(c, w), f"C{j}", [(f"P{j - 1}", w)])
    rho = init.state(["C1"] + slots + refs)

    def swap(x_in: int, x_out: int, k: int) -> Channel:
        # main wire goes into slot k, slot k comes out on the main wire
        def body(wr):
            wr.apply(_pad(x_in, w), "X", [("T", w)])
            wr.apply(_crop(w, x_out), slots[k - 1], [("X", x_out)])
            wr.relabel("T", slots[k - 1])
        return _wired_channel([("X", x_in)] + mem, [("X", x_out)] + mem, body)

    def middle() -> Channel:
        def body(wr):
            for j in range(1, n):
                wr.apply(_crop(w, a), slots[j - 1], [(f"A{j}", a)])
            wr.relabel("X", f"A{n}")
            ins = [x for j in range(1, n + 1) for x in (f"A{j}", f"R{j}")]
            outs = [x for j in range(1, n + 1) for x in ((f"B{j}", b), (f"R{j}", r))]
            wr.apply(s.channels[0], ins, outs)
            for j in range(1, n):
                wr.apply(_pad(b, w), f"B{j}", [(slots[j - 1], w)])
            wr.relabel(f"B{n}", "X")
        return _wired_channel([("X", a)] + mem, [("X", b)] + mem, body)

    timeline = [swap(a, c, k) for k in range(1, n)] + [middle()] + [swap(d, b, k) for k in range(n - 1, 0, -1)]
    maps = tuple(reversed(timeline))  # nested indexing: A_1 is the last map in time

    def post_body(wr):
        for j in range(2, n + 1):
            wr.apply(_pad(d, w), f"D{j}", [(f"P{j - 1}", w)])
        wr.relabel("D1", "X")

    post = _wired_channel([x for j in range(1, n + 1) for x in ((f"D{j}", d), (f"R{j}", r))],
                          [("X", d)] + mem, post_body)
    return StrategyDescriptor("nested_adaptive", n, m, (rho,), maps), post


def embed_in_general(s: StrategyDescriptor) -> StrategyDescriptor:
    """Successive or nested adaptive strategy as a general one with its order word."""
    if s.cls == "general_adaptive":
        return s
    if s.cls == "nested_adaptive":
        return StrategyDescriptor("general_adaptive", s.n, s.ref_dim, s.states,
                                  tuple(reversed(s.channels)), tuple(nested_word(s.n)))
    if s.cls == "successive_adaptive":
        n_fill, rest = s.channels[0], s.channels[1:]
        maps = []
        for j in range(s.n):
            maps.append(n_fill)
            if j < s.n - 1:
                maps.append(rest[j])
        return StrategyDescriptor("general_adaptive", s.n, s.ref_dim, s.states, tuple(maps),
                                  tuple(successive_word(s.n)))
    raise ValueError(f"use embed_parallel_in_nested for {s.cls}")


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

@dataclass
class DiscriminationResult:
    alpha: float
    beta: float
    rho1: np.ndarray
    rho2: np.ndarray
    measurement: np.ndarray
    n: int = 1
    eps: float | None = None
    prior: float | None = None
    kind: str = "exact"
    trace: dict = field(default_factory=dict)

    @property
    def p_err(self) -> float:
        p = 0.5 if self.prior is None else self.prior
        return p * self.alpha + (1 - p) * self.beta

    def row(self, cls: str = "", rate: float = float("nan")) -> dict:
        return {"n": self.n, "class": cls, "alpha": self.alpha, "beta": self.beta, "rate": rate}


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def errors_of(outputs, measurement=None, eps: float | None = None, prior: float | None = None,
              n: int = 1) -> DiscriminationResult:
    """Errors of a test Q_1 (guess hypothesis 1) on the output pair.

    Exactly one of ``measurement``, ``eps`` (optimal beta with alpha <= eps)
    or ``prior`` (optimal average error) must be given.
    """
    rho1, rho2 = (check_state(x) for x in outputs)
    given = [x is not None for x in (measurement, eps, prior)]
    if sum(given) != 1:
        raise ValueError("give exactly one of measurement, eps or prior")
    if measurement is not None:
        q = la.check_hermitian(measurement)
    elif eps is not None:
        _, q = hypothesis_test(rho1, rho2, eps)
    else:
        _, q = min_error(prior, rho1, rho2)
    alpha = _clip01(1 - np.trace(q @ rho1).real)
    beta = _clip01(np.trace(q @ rho2).real)
    return DiscriminationResult(alpha, beta, rho1, rho2, q, n, eps, prior)


# ---------------------------------------------------------------------------
# parametrization and search
# ---------------------------------------------------------------------------

def _herm_from(x: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    h[np.diag_indices(d)] = x[:d]
    h[iu] = x[d:d + k] + 1j * x[d + k:d + 2 * k]
    return h + np.triu(h, 1).conj().T


def pure_state(x: np.ndarray) -> np.ndarray:
    d = len(x) // 2
    v = x[:d] + 1j * x[d:]
    nrm = np.linalg.norm(v)
    v = v / nrm if nrm > 1e-12 else np.eye(d)[0].astype(complex)
    return np.outer(v, v.conj())


def env_dim(d_in: int, d_out: int, env: int | None = None) -> int:
    need = -(-d_in // d_out)
    return max(need, env or 1)


def stinespring_channel(x: np.ndarray, d_in: int, d_out: int, env: int) -> Channel:
    """Channel with isometry V = exp(iH)[:, :d_in] into B x E."""
    big = d_out * env
    v = expm(1j * _herm_from(x, big))[:, :d_in]
    t = v.reshape(d_out, env, d_in)
    return choi_of([t[:, k, :] for k in range(env)])


def n_params_channel(d_out: int, env: int) -> int:
    return (d_out * env) ** 2


@dataclass(frozen=True)
class Layout:
    """Shapes of the free objects of a class: state dims and (d_in, d_out) per channel."""

    cls: str
    n: int
    ref_dim: int
    state_dims: tuple
    channel_shapes: tuple
    order: tuple = ()
    tied: bool = False  # successive: one N reused between adaptive maps


def layout(cls: str, theta: Superchannel, n: int, ref_dim: int | None = None,
           order: Sequence[str] | None = None) -> Layout:
    dims = theta.dims
    c, a, b, d = dims["c"], dims["a"], dims["b"], dims["d"]
    if cls in PARALLEL:
        r = 1 if ref_dim is None else ref_dim
        one_state, one_ch = (c * r,), (a * r, b * r)
        joint_state, joint_ch = ((c * r) ** n,), ((a * r) ** n, (b * r) ** n)
        states, chans = {
            "product": ((c * r,), (one_ch,)),
            "parallel_prod_channels": (joint_state, (one_ch,) * n),
            "parallel_prod_states": (one_state * n, (joint_ch,)),
            "parallel_full": (joint_state, (joint_ch,)),
        }[cls]
        return Layout(cls, n, r, states, chans)
    m = DEFAULT_MEMORY if ref_dim is None else ref_dim
    if cls == "successive_adaptive":
        chans = ((a * m, b * m),) + ((d * m, c * m),) * (n - 1)
        return Layout(cls, n, m, (c * m,), chans, tied=True)
    if cls == "nested_adaptive":
        # A_1..A_{n-1}: D -> B, A_n: A -> B, A_{n+1}..A_{2n-1}: A -> C
        chans = ((d * m, b * m),) * (n - 1) + ((a * m, b * m),) + ((a * m, c * m),) * (n - 1)
        return Layout(cls, n, m, (c * m,), chans)
    if cls == "general_adaptive":
        word = check_word(order if order is not None else nested_word(n), n)
        return Layout(cls, n, m, (c * m,), tuple(adaptive_shapes(theta, word, m)), tuple(word))
    raise ValueError(f"unknown strategy class {cls!r}")


def _split(lay: Layout, env: int | None):
    sizes = [2 * ds for ds in lay.state_dims]
    envs = [env_dim(di, do, env) for di, do in lay.channel_shapes]
    sizes += [n_params_channel(do, e) for (_, do), e in zip(lay.channel_shapes, envs)]
    return sizes, envs


def n_params(lay: Layout, env: int | None = None) -> int:
    return int(sum(_split(lay, env)[0]))


def descriptor_from_params(lay: Layout, x: np.ndarray, env: int | None = None) -> StrategyDescriptor:
    sizes, envs = _split(lay, env)
    parts = np.split(np.asarray(x, float), np.cumsum(sizes)[:-1])
    k = len(lay.state_dims)
    states = tuple(pure_state(p) for p in parts[:k])
    chans = tuple(stinespring_channel(p, di, do, e)
                  for p, (di, do), e in zip(parts[k:], lay.channel_shapes, envs))
    return StrategyDescriptor(lay.cls, lay.n, lay.ref_dim, states, chans, lay.order)


def random_descriptor(cls: str, theta: Superchannel, n: int, seed=None, ref_dim: int | None = None,
                      order: Sequence[str] | None = None, env: int | None = None) -> StrategyDescriptor:
    lay = layout(cls, theta, n, ref_dim, order)
    rng = np.random.default_rng(seed)
    return descriptor_from_params(lay, rng.normal(size=n_params(lay, env)) * 1.5, env)


def _objective_value(outputs, eps, prior) -> float:
    rho1, rho2 = outputs
    if eps is not None:
        try:
            return float(hypothesis_test(rho1, rho2, eps)[0])
        except RuntimeError:
            return 1.0
    return helstrom_closed_form(prior, rho1, rho2)


def _restart(args):
    lay, theta1, theta2, eps, prior, iters, env, seed = args
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=n_params(lay, env)) * 1.5

    def f(x):
        s = descriptor_from_params(lay, x, env)
        return _objective_value(build_outputs(s, theta1, theta2), eps, prior)

    res = minimize(f, x0, method="Nelder-Mead",
                   options={"maxfev": iters, "xatol": 1e-6, "fatol": 1e-10, "adaptive": True})
    return float(res.fun), int(seed), res.x, int(res.nfev)


@dataclass(frozen=True)
class Budget:
    restarts: int = 4
    iterations: int = 300

    @classmethod
    def parse(cls, text: str | int | "Budget" | None) -> "Budget":
        if text is None:
            return cls()
        if isinstance(text, Budget):
            return text
        if isinstance(text, int):
            return cls(1, text)
        r, _, i = str(text).partition("x")
        return cls(int(r), int(i)) if i else cls(1, int(r))


def optimize_strategy(cls: str, theta1: Superchannel, theta2: Superchannel, n: int, budget=None,
                      eps: float | None = None, prior: float | None = None, seed: int = 0,
                      ref_dim: int | None = None, order: Sequence[str] | None = None,
                      env: int | None = None, init: Sequence[StrategyDescriptor] = (), jobs: int = 1):
    """Random restarts of Nelder-Mead over pure inputs and Stinespring fillers.

    Minimizes beta at type-I level ``eps`` or the average error at ``prior``
    (default prior 1/2). Descriptors in ``init`` are evaluated as extra
    candidates, so seeding with an embedded optimum of a smaller class can
    only help. The returned result is achieved by an explicit strategy, hence
    a lower bound on the class optimum in rate terms.
    """
    if eps is None and prior is None:
        prior = 0.5
    budget = Budget.parse(budget)
    lay = layout(cls, theta1, n, ref_dim, order)
    seeds = np.random.SeedSequence(seed).generate_state(budget.restarts)
    tasks = [(lay, theta1, theta2, eps, prior, budget.iterations, env, int(s)) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            runs = list(pool.map(_restart, tasks))
    else:
        runs = [_restart(t) for t in tasks]
    runs.sort(key=lambda t: (t[0], t[1]))
    best_val, best_seed, best_x, _ = runs[0]
    best = descriptor_from_params(lay, best_x, env)
    for cand in init:
        v = _objective_value(build_outputs(cand, theta1, theta2), eps, prior)
        if v < best_val - 1e-12:
            best_val, best = v, cand
    res = errors_of(build_outputs(best, theta1, theta2), eps=eps, prior=None if eps is not None else prior, n=n)
    res.kind = "lower-bound"
    res.trace = {"restarts": budget.restarts, "iterations": budget.iterations,
                 "evaluations": int(sum(r[3] for r in runs)), "best_value": best_val, "best_seed": best_seed}
    return best, res


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

@dataclass
class RateCurve:
    ns: list
    values: list
    flags: list

    def rows(self) -> list[dict]:
        return [{"n": n, "rate": v, "flag": f} for n, v, f in zip(self.ns, self.values, self.flags)]


def _neglog_rate(x: float, n: int):
    if x <= 0:
        return math.inf, "zero-error"
    return -math.log2(x) / n, "ok"


def zeta_hat(results: Sequence[DiscriminationResult]) -> RateCurve:
    """-(1/n) log beta_n."""
    vals = [_neglog_rate(r.beta, r.n) for r in results]
    return RateCurve([r.n for r in results], [v for v, _ in vals], [f for _, f in vals])


def xi_hat(p: float, results: Sequence[DiscriminationResult]) -> RateCurve:
    """-(1/n) log(p alpha_n + (1 - p) beta_n)."""
    vals = [_neglog_rate(p * r.alpha + (1 - p) * r.beta, r.n) for r in results]
    return RateCurve([r.n for r in results], [v for v, _ in vals], [f for _, f in vals])


def H_hat(r: float, results: Sequence[DiscriminationResult]) -> RateCurve:
    """-(1/n) log(1 - alpha_n), only where beta_n <= 2^{-r n}."""
    ns, vals, flags = [], [], []
    for res in results:
        ns.append(res.n)
        if res.beta > 2.0 ** (-r * res.n) * (1 + 1e-12):
            vals.append(math.nan)
            flags.append("beta-constraint-violated")
            continue
        v, f = _neglog_rate(1 - res.alpha, res.n)
        vals.append(v)
        flags.append("alpha-one" if f == "zero-error" else f)
    return RateCurve(ns, vals, flags)


def results_csv(results: Sequence[DiscriminationResult], rates: RateCurve | None = None) -> str:
    rates = rates or zeta_hat(results)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "alpha", "beta", "rate"])
    for res, v in zip(results, rates.values):
        wr.writerow([res.n, f"{res.alpha:.12g}", f"{res.beta:.12g}", f"{v:.12g}"])
    return buf.getvalue()
