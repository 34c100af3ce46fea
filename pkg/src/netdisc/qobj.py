"""States, channels, combs, superchannels and their classical counterparts.

Conventions
-----------
A channel ``N: A -> B`` is stored through its Choi operator on ``A (x) B``::

    J = sum_ij |i><j|_A (x) N(|i><j|)_B

so ``N(rho) = Tr_A[(rho^T (x) 1) J]`` and trace preservation reads
``Tr_B J = 1_A``.

A k-comb has components ``N^1: C -> A_1 S_1``, ``N^i: B_{i-1} S_{i-1} -> A_i S_i``
and ``N^k: B_{k-1} S_{k-1} -> D``. Multi-system wires are always ordered as
written (``A`` before ``S``, ``B`` before ``S``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la

TP_TOL = 1e-9
PROB_TOL = 1e-12


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

def check_state(rho, normalized: bool = True, tol: float = 1e-10) -> np.ndarray:
    rho = la.check_hermitian(rho)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -la.CLIP_TOL:
        raise la.NotPSDError(f"state has negative eigenvalue {w.min():.3e}")
    tr = float(np.trace(rho).real)
    if normalized and abs(tr - 1) > tol:
        raise ValueError(f"state trace {tr} is not 1")
    if tr > 1 + tol:
        raise ValueError(f"state trace {tr} exceeds 1")
    return rho


def basis_state(i: int, d: int) -> np.ndarray:
    return la.proj(la.ket(i, d))


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def diag_state(p: Sequence[float]) -> np.ndarray:
    return np.diag(np.asarray(p, dtype=float)).astype(complex)


def random_state(d: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise ValueError(f"rank {rank} must lie in [1, {d}]")
    rng = _rng(seed)
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return la.herm(rho / np.trace(rho).real)


def random_pure(d: int, seed=None) -> np.ndarray:
    return random_state(d, 1, seed)


def random_isometry(d_in: int, d_out: int, seed=None) -> np.ndarray:
    """Haar-random isometry ``V: C^d_in -> C^d_out`` (``V^dagger V = 1``)."""
    if d_out < d_in:
        raise ValueError(f"isometry needs d_out >= d_in, got {d_in} -> {d_out}")
    rng = _rng(seed)
    z = (rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_unitary(d: int, seed=None) -> np.ndarray:
    return random_isometry(d, d, seed)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Channel:
    choi: np.ndarray
    dim_in: int
    dim_out: int
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        j = np.array(self.choi, dtype=complex)
        n = self.dim_in * self.dim_out
        if j.shape != (n, n):
            raise ValueError(f"Choi shape {j.shape} does not match {self.dim_in}x{self.dim_out}")
        j.setflags(write=False)
        object.__setattr__(self, "choi", j)
        if self.validate:
            if not la.is_hermitian(j, 1e-9):
                raise ValueError("Choi operator is not Hermitian")
            w = np.linalg.eigvalsh(la.herm(j))
            if w.min() < -1e-9:
                raise ValueError(f"Choi operator not PSD (min eigenvalue {w.min():.3e})")
            red = la.partial_trace(j, [self.dim_in, self.dim_out], [0])
            if np.max(np.abs(red - np.eye(self.dim_in))) > TP_TOL:
                raise ValueError("channel is not trace preserving")

    @property
    def tensor(self) -> np.ndarray:
        """Choi as a rank-4 tensor ``J[a, b, a', b']``."""
        return self.choi.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def to_json(self) -> dict:
        return {
            "choi": la.Operator(self.choi, (self.dim_in, self.dim_out)).to_json(),
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        op = la.Operator.from_json(obj["choi"])
        return cls(op.data, int(obj["dim_in"]), int(obj["dim_out"]))


def choi_of(kraus: Sequence[np.ndarray] | None = None, fn=None, dim_in: int | None = None,
            dim_out: int | None = None) -> Channel:
    """Build a channel from Kraus operators or from a linear map on matrices."""
    if kraus is not None:
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        d_out, d_in = ks[0].shape
        # vec(K) columns: |K>> = sum_i |i> (x) K|i>
        j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for k in ks:
            v = k.T.reshape(-1)
            j += np.outer(v, v.conj())
        return Channel(j, d_in, d_out)
    if fn is None or dim_in is None:
        raise ValueError("need either kraus or (fn, dim_in)")
    blocks = {}
    for i in range(dim_in):
        for k in range(dim_in):
            e = np.zeros((dim_in, dim_in), dtype=complex)
            e[i, k] = 1
            blocks[i, k] = np.asarray(fn(e), dtype=complex)
    d_out = blocks[0, 0].shape[0] if dim_out is None else dim_out
    j = np.zeros((dim_in, d_out, dim_in, d_out), dtype=complex)
    for (i, k), b in blocks.items():
        j[i, :, k, :] = b
    return Channel(j.reshape(dim_in * d_out, dim_in * d_out), dim_in, d_out)


def kraus_of(ch: Channel, tol: float = 1e-12) -> list[np.ndarray]:
    w, v = np.linalg.eigh(la.herm(ch.choi))
    ks = []
    for lam, vec in zip(w, v.T):
        if lam > tol:
            ks.append(np.sqrt(lam) * vec.reshape(ch.dim_in, ch.dim_out).T)
    return ks


def unitary_channel(u: np.ndarray) -> Channel:
    return choi_of([u])


def isometry_channel(v: np.ndarray) -> Channel:
    return choi_of([v])


def identity_channel(d: int) -> Channel:
    return choi_of([np.eye(d)])


def depolarizing(d: int, p: float) -> Channel:
    """rho -> (1-p) rho + p tr(rho) 1/d."""
    return Channel((1 - p) * la.max_entangled(d, normalized=False) + p * np.eye(d * d) / d, d, d)


def dephasing(d: int, lam: float) -> Channel:
    """Shrinks off-diagonal elements by (1 - lam); lam = 1 is complete dephasing."""
    def fn(m):
        out = (1 - lam) * m
        return out + lam * np.diag(np.diag(m))
    return choi_of(fn=fn, dim_in=d, dim_out=d)


def replacer_channel(tau: np.ndarray, dim_in: int) -> Channel:
    """rho -> tr(rho) tau."""
    tau = np.asarray(tau, dtype=complex)
    return Channel(np.kron(np.eye(dim_in), tau), dim_in, tau.shape[0])


def prepare_channel(tau: np.ndarray) -> Channel:
    """State preparation as a channel from the trivial system."""
    return replacer_channel(tau, 1)


def trace_channel(d: int) -> Channel:
    return Channel(np.eye(d, dtype=complex), d, 1)


def measure_prepare(states: Sequence[np.ndarray]) -> Channel:
    """Measure in the computational basis and prepare ``states[x]`` (a cq channel)."""
    d_in = len(states)
    d_out = states[0].shape[0]
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for x, s in enumerate(states):
        j += np.kron(basis_state(x, d_in), s)
    return Channel(j, d_in, d_out)


def classical_channel(n: np.ndarray) -> Channel:
    """Embed a stochastic matrix ``n[a, b] = n(b|a)`` as a diagonal channel."""
    n = np.asarray(n, dtype=float)
    return measure_prepare([diag_state(row) for row in n])


def swap_channel(d1: int, d2: int) -> Channel:
    return unitary_channel(la.permutation_matrix([d1, d2], [1, 0]))


def random_channel(d_in: int, d_out: int, seed=None, env_dim: int | None = None) -> Channel:
    """Stinespring sampling with a Haar isometry into ``d_out * env``; env defaults to d_in*d_out."""
    env = d_in * d_out if env_dim is None else env_dim
    v = random_isometry(d_in, d_out * env, seed)
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    vt = v.reshape(d_out, env, d_in)
    for e in range(env):
        k = vt[:, e, :]
        vec = k.T.reshape(-1)
        j += np.outer(vec, vec.conj())
    return Channel(la.herm(j), d_in, d_out)


def apply(ch: Channel, rho) -> np.ndarray:
    rho = la.as_array(rho)
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"state of dim {rho.shape[0]} does not fit channel input {ch.dim_in}")
    return np.einsum("ac,abcd->bd", rho, ch.tensor)


def compose(second: Channel, first: Channel) -> Channel:
    """The channel ``second o first``."""
    if first.dim_out != second.dim_in:
        raise ValueError(f"cannot compose: {first.dim_out} != {second.dim_in}")
    t = np.einsum("abcd,bedf->aecf", first.tensor, second.tensor)
    d = first.dim_in * second.dim_out
    return Channel(la.herm(t.reshape(d, d)), first.dim_in, second.dim_out, validate=False)


def chain(*channels: Channel) -> Channel:
    """``chain(N1, N2, N3) == N3 o N2 o N1``."""
    out = channels[0]
    for ch in channels[1:]:
        out = compose(ch, out)
    return out


def tensor(*channels: Channel) -> Channel:
    out = channels[0]
    for m in channels[1:]:
        a1, b1, a2, b2 = out.dim_in, out.dim_out, m.dim_in, m.dim_out
        t = np.einsum("abcd,efgh->aebfcgdh", out.tensor, m.tensor)
        n = a1 * a2 * b1 * b2
        out = Channel(t.reshape(n, n), a1 * a2, b1 * b2, validate=False)
    return out


def channels_close(n: Channel, m: Channel, tol: float = 1e-10) -> bool:
    return (n.dim_in, n.dim_out) == (m.dim_in, m.dim_out) and np.max(np.abs(n.choi - m.choi)) <= tol


def choi_state(ch: Channel) -> np.ndarray:
    """Normalized Choi state (channel applied to half of a maximally entangled state)."""
    return ch.choi / ch.dim_in


# ---------------------------------------------------------------------------
# labeled wires: a tiny circuit simulator used for combs and strategies
# ---------------------------------------------------------------------------

class Wires:
    """A (possibly unnormalized) operator on labeled tensor factors."""

    def __init__(self, rho=None, labels: Sequence[str] = (), dims: Sequence[int] = ()):
        if rho is None:
            rho = np.ones((1, 1), dtype=complex)
        self.rho = np.asarray(rho, dtype=complex)
        self.labels = list(labels)
        self.dims = [int(d) for d in dims]
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels {self.labels}")
        if int(np.prod(self.dims)) != self.rho.shape[0]:
            raise ValueError(f"dims {self.dims} inconsistent with operator size {self.rho.shape[0]}")

    def copy(self) -> "Wires":
        return Wires(self.rho.copy(), self.labels, self.dims)

    def dim(self, label: str) -> int:
        return self.dims[self.labels.index(label)]

    def add(self, labels: Sequence[str] | str, dims: Sequence[int] | int, state) -> "Wires":
        if isinstance(labels, str):
            labels, dims = [labels], [dims]
        clash = set(labels) & set(self.labels)
        if clash:
            raise ValueError(f"labels already present: {sorted(clash)}")
        self.rho = np.kron(self.rho, np.asarray(state, dtype=complex))
        self.labels += list(labels)
        self.dims += [int(d) for d in dims]
        if int(np.prod(self.dims)) != self.rho.shape[0]:
            raise ValueError("added state does not match declared dims")
        return self

    def add_phi(self, copy_label: str, label: str, d: int) -> "Wires":
        """Append an unnormalized maximally entangled pair (for Choi extraction)."""
        return self.add([copy_label, label], [d, d], la.max_entangled(d, normalized=False))

    def apply(self, ch: Channel, inputs: Sequence[str] | str,
              outputs: Sequence[tuple[str, int]] | tuple[str, int] = ()) -> "Wires":
        """Apply ``ch`` to the listed input wires, producing the listed output wires."""
        if isinstance(inputs, str):
            inputs = [inputs]
        if outputs and isinstance(outputs[0], str):
            outputs = [outputs]
        inputs = list(inputs)
        missing = [x for x in inputs if x not in self.labels]
        if missing:
            raise KeyError(f"unknown wires {missing}; present {self.labels}")
        idx = [self.labels.index(x) for x in inputs]
        rest = [i for i in range(len(self.labels)) if i not in idx]
        din = int(np.prod([self.dims[i] for i in idx])) if idx else 1
        dr = int(np.prod([self.dims[i] for i in rest])) if rest else 1
        if din != ch.dim_in:
            raise ValueError(f"wires {inputs} have dim {din}, channel expects {ch.dim_in}")
        out_dims = [int(d) for _, d in outputs]
        if int(np.prod(out_dims)) != ch.dim_out:
            raise ValueError(f"outputs {list(outputs)} have dim {int(np.prod(out_dims))}, channel gives {ch.dim_out}")
        new_labels = [lab for lab, _ in outputs]
        rest_labels = [self.labels[i] for i in rest]
        clash = set(new_labels) & set(rest_labels)
        if clash:
            raise ValueError(f"output labels already in use: {sorted(clash)}")
        n = len(self.labels)
        perm = idx + rest
        t = self.rho.reshape(self.dims * 2).transpose(perm + [p + n for p in perm])
        t = t.reshape(din, dr, din, dr)
        res = np.einsum("arcs,abcd->brds", t, ch.tensor)
        dout = ch.dim_out
        self.rho = res.reshape(dout * dr, dout * dr)
        self.labels = new_labels + rest_labels
        self.dims = out_dims + [self.dims[i] for i in rest]
        return self

    def trace_out(self, labels: Sequence[str] | str) -> "Wires":
        if isinstance(labels, str):
            labels = [labels]
        keep = [i for i, lab in enumerate(self.labels) if lab not in labels]
        self.rho = la.partial_trace(self.rho, self.dims, keep)
        self.labels = [self.labels[i] for i in keep]
        self.dims = [self.dims[i] for i in keep]
        return self

    def relabel(self, old: str, new: str) -> "Wires":
        self.labels[self.labels.index(old)] = new
        return self

    def state(self, order: Sequence[str] | None = None) -> np.ndarray:
        if order is None:
            return self.rho
        order = list(order)
        if sorted(order) != sorted(self.labels):
            raise ValueError(f"order {order} must list exactly the wires {self.labels}")
        perm = [self.labels.index(x) for x in order]
        return la.permute_systems(self.rho, self.dims, perm)


# ---------------------------------------------------------------------------
# combs and superchannels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Comb:
    """Causally ordered channels with ``k - 1`` open slots ``A_i -> B_i``."""

    components: tuple[Channel, ...]
    c: int
    a: tuple[int, ...]
    b: tuple[int, ...]
    s: tuple[int, ...]
    d: int

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        for name in ("a", "b", "s"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        k = len(comps)
        if k < 1:
            raise ValueError("a comb needs at least one component")
        if not (len(self.a) == len(self.b) == len(self.s) == k - 1):
            raise ValueError(f"wire lists must have length k-1={k - 1}")
        for i, ch in enumerate(comps):
            d_in = self.c if i == 0 else self.b[i - 1] * self.s[i - 1]
            d_out = self.d if i == k - 1 else self.a[i] * self.s[i]
            if (ch.dim_in, ch.dim_out) != (d_in, d_out):
                raise ValueError(
                    f"component {i + 1} maps {ch.dim_in}->{ch.dim_out}, wires require {d_in}->{d_out}")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def signature(self) -> tuple:
        return (self.c, self.a, self.b, self.d)

    def to_json(self) -> dict:
        return {
            "components": [ch.to_json() for ch in self.components],
            "wires": {"c": self.c, "a": list(self.a), "b": list(self.b), "s": list(self.s), "d": self.d},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Comb":
        w = obj["wires"]
        comps = [Channel.from_json(c) for c in obj["components"]]
        if len(comps) == 2:
            return Superchannel(comps[0], comps[1], w["a"][0], w["s"][0], w["b"][0])
        return cls(tuple(comps), w["c"], tuple(w["a"]), tuple(w["b"]), tuple(w["s"]), w["d"])


class Superchannel(Comb):
    """A 2-comb with its designated decomposition ``E: C -> A S`` and ``D: B S -> D``."""

    def __init__(self, E: Channel, D: Channel, a: int, s: int, b: int | None = None):
        if E.dim_out != a * s:
            raise ValueError(f"E outputs dim {E.dim_out}, expected a*s = {a * s}")
        if b is None:
            if D.dim_in % s:
                raise ValueError("D input dimension is not divisible by s")
            b = D.dim_in // s
        super().__init__((E, D), E.dim_in, (a,), (b,), (s,), D.dim_out)

    @property
    def E(self) -> Channel:
        return self.components[0]

    @property
    def D(self) -> Channel:
        return self.components[1]

    @property
    def dims(self) -> dict:
        return {"c": self.c, "a": self.a[0], "b": self.b[0], "s": self.s[0], "d": self.d}

    def __call__(self, N: Channel, ref_dim: int | None = None) -> Channel:
        return comb_apply(self, [N], ref_dim)


def comb_apply(theta: Comb, inputs: Sequence[Channel], ref_dim: int | None = None) -> Channel:
    """Insert ``inputs`` into the slots; returns a channel ``C R -> D R``.

    Each input acts on ``A_i R -> B_i R`` with one reference ``R`` threaded
    through all slots; the comb itself acts trivially on ``R``. By default
    ``R`` is read off the first input.
    """
    if len(inputs) != theta.k - 1:
        raise ValueError(f"{theta.k}-comb needs {theta.k - 1} inputs, got {len(inputs)}")
    if ref_dim is None:
        ref_dim = inputs[0].dim_in // theta.a[0] if inputs else 1
    r = int(ref_dim)
    for i, ch in enumerate(inputs):
        if (ch.dim_in, ch.dim_out) != (theta.a[i] * r, theta.b[i] * r):
            raise ValueError(
                f"slot {i + 1} expects {theta.a[i]}x{r} -> {theta.b[i]}x{r}, got {ch.dim_in} -> {ch.dim_out}")
    w = Wires()
    w.add_phi("xC", "C", theta.c)
    w.add_phi("xR", "R", r)
    w.apply(theta.components[0], "C", [("A", theta.a[0]), ("S", theta.s[0])] if theta.k > 1 else [("D", theta.d)])
    for i, ch in enumerate(inputs):
        w.apply(ch, ["A", "R"], [("B", theta.b[i]), ("R", r)])
        nxt = theta.components[i + 1]
        if i + 1 < theta.k - 1:
            w.apply(nxt, ["B", "S"], [("A", theta.a[i + 1]), ("S", theta.s[i + 1])])
        else:
            w.apply(nxt, ["B", "S"], [("D", theta.d)])
    j = w.state(["xC", "xR", "D", "R"])
    return Channel(la.herm(j), theta.c * r, theta.d * r, validate=False)


def comb_prefix(theta: Comb, m: int) -> Comb:
    """The m-comb formed by the first m components; the last one exposes ``A_m S_m``."""
    if not 1 <= m <= theta.k:
        raise ValueError(f"prefix length {m} out of range 1..{theta.k}")
    if m == theta.k:
        return theta
    comps = theta.components[:m]
    d = theta.a[m - 1] * theta.s[m - 1]
    return Comb(comps, theta.c, theta.a[:m - 1], theta.b[:m - 1], theta.s[:m - 1], d)


def comb_suffix(theta: Comb, m: int) -> list[Channel]:
    return list(theta.components[m:])


def comb_choi(theta: Comb) -> np.ndarray:
    """Choi operator of the comb on ``C A_1 B_1 ... A_{k-1} B_{k-1} D``."""
    w = Wires()
    w.add_phi("xC", "C", theta.c)
    order = ["xC"]
    for i in range(theta.k - 1):
        w.apply(theta.components[i], "C" if i == 0 else ["B", "S"],
                [(f"A{i}", theta.a[i]), ("S", theta.s[i])])
        w.add_phi("xB", "B", theta.b[i])
        w.relabel("xB", f"xB{i}")
        order += [f"A{i}", f"xB{i}"]
    w.apply(theta.components[-1], "C" if theta.k == 1 else ["B", "S"], [("D", theta.d)])
    order.append("D")
    return la.herm(w.state(order))


def superchannels_equal(t1: Comb, t2: Comb, tol: float = 1e-9) -> bool:
    """Equality of action (decompositions may differ)."""
    if t1.signature != t2.signature:
        return False
    return bool(np.max(np.abs(comb_choi(t1) - comb_choi(t2))) <= tol)


def channel_basis(d_in: int, d_out: int) -> list[Channel]:
    """Channels whose Choi operators span the Choi space of ``d_in -> d_out`` maps."""
    chans = [replacer_channel(basis_state(0, d_out), d_in)]
    rng = np.random.default_rng(12345)
    target = (d_in * d_out) ** 2 - d_in ** 2 + 1
    mats = [chans[0].choi.reshape(-1)]
    while len(chans) < target:
        ch = random_channel(d_in, d_out, rng)
        cand = np.array(mats + [ch.choi.reshape(-1)])
        if np.linalg.matrix_rank(cand, tol=1e-8) > len(mats):
            mats.append(ch.choi.reshape(-1))
            chans.append(ch)
    return chans


# ---------------------------------------------------------------------------
# classical superchannels
# ---------------------------------------------------------------------------

def _check_stochastic(t: np.ndarray, axes_out: tuple[int, ...], name: str):
    if np.any(t < -PROB_TOL):
        raise ValueError(f"{name} has negative entries")
    sums = t.sum(axis=axes_out)
    if np.max(np.abs(sums - 1)) > PROB_TOL * 10:
        raise ValueError(f"{name} rows do not sum to 1")


@dataclass(frozen=True, eq=False)
class ClassicalSuperchannel:
    """``e[c, a, s] = e(a, s | c)`` and ``d[b, s, x] = d(x | b, s)``."""

    e: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        d = np.array(self.d, dtype=float)
        if e.ndim != 3 or d.ndim != 3:
            raise ValueError("e must have shape (C, A, S) and d shape (B, S, D)")
        if e.shape[2] != d.shape[1]:
            raise ValueError(f"side alphabets differ: {e.shape[2]} vs {d.shape[1]}")
        _check_stochastic(e, (1, 2), "e")
        _check_stochastic(d, (2,), "d")
        e.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "d", d)

    @property
    def alphabets(self) -> dict:
        return {"c": self.e.shape[0], "a": self.e.shape[1], "s": self.e.shape[2],
                "b": self.d.shape[0], "d": self.d.shape[2]}

    def transfer(self, n: np.ndarray) -> np.ndarray:
        """m[c, x] = sum_{a,b,s} d(x|b,s) n(b|a) e(a,s|c)."""
        n = np.asarray(n, dtype=float)
        al = self.alphabets
        if n.shape != (al["a"], al["b"]):
            raise ValueError(f"channel table shape {n.shape} does not match ({al['a']}, {al['b']})")
        return np.einsum("cas,ab,bsx->cx", self.e, n, self.d)

    def to_json(self) -> dict:
        return {"e": self.e.tolist(), "d": self.d.tolist(), "alphabets": self.alphabets}

    @classmethod
    def from_json(cls, obj: dict) -> "ClassicalSuperchannel":
        return cls(np.asarray(obj["e"]), np.asarray(obj["d"]))


def classical_apply(theta: ClassicalSuperchannel, n: np.ndarray, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (theta.alphabets["c"],):
        raise ValueError(f"input distribution has shape {p.shape}, expected ({theta.alphabets['c']},)")
    if np.any(p < -PROB_TOL) or abs(p.sum() - 1) > 1e-12:
        raise ValueError("input is not a probability distribution")
    return p @ theta.transfer(n)


def embed_classical(theta: ClassicalSuperchannel) -> Superchannel:
    al = theta.alphabets
    e_states = [diag_state(theta.e[c].reshape(-1)) for c in range(al["c"])]
    d_states = [diag_state(theta.d[b, s]) for b in range(al["b"]) for s in range(al["s"])]
    return Superchannel(measure_prepare(e_states), measure_prepare(d_states), al["a"], al["s"], al["b"])


def random_classical_superchannel(c: int = 2, a: int = 2, s: int = 2, b: int = 2, d: int = 2,
                                  seed=None, deterministic: bool = False) -> ClassicalSuperchannel:
    rng = _rng(seed)
    if deterministic:
        e = np.zeros((c, a * s))
        e[np.arange(c), rng.integers(a * s, size=c)] = 1
        dd = np.zeros((b * s, d))
        dd[np.arange(b * s), rng.integers(d, size=b * s)] = 1
    else:
        e = rng.dirichlet(np.ones(a * s), size=c)
        dd = rng.dirichlet(np.ones(d), size=b * s)
    return ClassicalSuperchannel(e.reshape(c, a, s), dd.reshape(b, s, d))


def deterministic_tables(n_in: int, n_out: int):
    """All deterministic stochastic matrices ``n_in x n_out``."""
    import itertools

    for f in itertools.product(range(n_out), repeat=n_in):
        t = np.zeros((n_in, n_out))
        t[np.arange(n_in), f] = 1
        yield t
