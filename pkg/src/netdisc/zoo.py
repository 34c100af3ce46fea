"""Example superchannel families and the checks that go with them.

Families: replacers, environment parametrized pairs (a joint environment
state feeds both halves), side-channel parametrized pairs (a channel acts on
the side wire), pairs with trivial side wire, and the replacer that models
active illumination. Each instance carries its intended decomposition; none
is inferred.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .amort import (Report, channel_div, channel_div_amortized, classical_exact, classical_joint, classical_table,
                    penalty_upper, sup_div)
from .dvg import EXACT, UPPER, DivergenceEstimate, rel_entropy, stein_weak_converse
from .qobj import (Channel, ClassicalSuperchannel, Superchannel, channel_basis, choi_of, compose,
                   embed_classical, identity_channel, maximally_mixed, prepare_channel, random_channel,
                   random_state, replacer_channel, superchannels_equal, tensor, trace_channel,
                   unitary_channel)
from .sdp.problems import hypothesis_test
from .strat import CLASSES, build_outputs, random_descriptor

FAMILIES = ("replacer", "env_param", "env_seizable", "side_param", "side_seizable", "trivial_S", "illumination")
IDENTITY_TOL = 1e-9


@dataclass
class FamilyInstance:
    family: str
    pair: tuple
    params: dict = field(default_factory=dict)
    # realizes theta_i(N) the second way, from the parameters: (i, N) -> channel C -> D
    direct: Callable[[int, Channel], Channel] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def identity_residual(self) -> float:
        """Largest Choi deviation between the realized pair and the defining identity."""
        if self.direct is None:
            return 0.0
        t = self.pair[0]
        worst = 0.0
        for n in channel_basis(t.a[0], t.b[0]):
            for i, theta in enumerate(self.pair):
                got = theta(n, 1).choi
                want = self.direct(i, n).choi
                worst = max(worst, float(np.max(np.abs(got - want))))
        return worst

    def check_identity(self, tol: float = IDENTITY_TOL) -> Report:
        res = self.identity_residual()
        return Report(f"{self.family}-identity", bool(res <= tol), tol - res, {"residual": res})

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, (Channel, Superchannel)):
                return v.to_json()
            if isinstance(v, np.ndarray):
                return la.Operator(v).to_json()
            return v
        return {"family": self.family, "params": {k: enc(v) for k, v in self.params.items()},
                "pair": [t.to_json() for t in self.pair]}


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_replacer(r: Channel, a: int = 2, b: int | None = None) -> Superchannel:
    """Superchannel with theta(N) = r for every N.

    The slot receives a maximally mixed dummy whose output is discarded,
    while the input state travels on the side wire to ``r``.
    """
    b = a if b is None else b
    c = r.dim_in
    e = tensor(prepare_channel(maximally_mixed(a)), identity_channel(c))
    d = tensor(trace_channel(b), r)
    return Superchannel(e, d, a, c, b)


def replacer_pair(r1: Channel, r2: Channel, a: int = 2, b: int | None = None) -> FamilyInstance:
    if (r1.dim_in, r1.dim_out) != (r2.dim_in, r2.dim_out):
        raise ValueError("replacer targets must have equal dimensions")
    targets = (r1, r2)
    return FamilyInstance("replacer", (make_replacer(r1, a, b), make_replacer(r2, a, b)),
                          {"R1": r1, "R2": r2}, lambda i, n: targets[i])


def make_env_param(p_e: Channel, p_d: Channel, omega1, omega2, a: int, s: int, w1: int, w2: int
                   ) -> FamilyInstance:
    """Pair differing only in a joint environment state omega_i on W1 W2.

    ``p_e``: C W1 -> A S and ``p_d``: B S W2 -> D. W1 enters E, W2 travels on
    the side wire to D, so the realized side wire is S W2.
    """
    omegas = [la.check_hermitian(omega1), la.check_hermitian(omega2)]
    if omegas[0].shape != (w1 * w2, w1 * w2) or omegas[1].shape != omegas[0].shape:
        raise ValueError(f"environment states must live on {w1}x{w2}")
    if p_e.dim_out != a * s or p_e.dim_in % w1:
        raise ValueError("p_e does not map C W1 -> A S")
    if p_d.dim_in % (s * w2):
        raise ValueError("p_d does not map B S W2 -> D")
    c = p_e.dim_in // w1
    b = p_d.dim_in // (s * w2)

    def e_of(om):
        # rho_C -> p_e(rho x omega_W1) x omega_W2, ordered A S W2
        def fn(x):
            full = la.kron(x, om)
            out = tensor(p_e, identity_channel(w2))(full)
            return out
        return choi_of(fn=fn, dim_in=c, dim_out=a * s * w2)

    pair = tuple(Superchannel(e_of(om), p_d, a, s * w2, b) for om in omegas)

    def direct(i, n):
        def fn(x):
            st = la.kron(x, omegas[i])                                # C W1 W2
            st = tensor(p_e, identity_channel(w2))(st)                # A S W2
            st = tensor(n, identity_channel(s * w2))(st)              # B S W2
            return p_d(st)
        return choi_of(fn=fn, dim_in=c, dim_out=p_d.dim_out)

    return FamilyInstance("env_param", pair, {"P_E": p_e, "P_D": p_d, "omega1": omegas[0], "omega2": omegas[1],
                                              "dims": {"a": a, "s": s, "w1": w1, "w2": w2}}, direct)


def make_side_param(e: Channel, d: Channel, s1: Channel, s2: Channel, a: int, s: int) -> FamilyInstance:
    """theta_i(N) = d o (N x s_i) o e with s_i acting on the side wire."""
    for si in (s1, s2):
        if (si.dim_in, si.dim_out) != (s, s):
            raise ValueError(f"side channels must map {s} -> {s}")
    if e.dim_out != a * s or d.dim_in % s:
        raise ValueError("e must map C -> A S and d must map B S -> D")
    b = d.dim_in // s
    sides = (s1, s2)
    pair = tuple(Superchannel(compose(tensor(identity_channel(a), si), e), d, a, s, b) for si in sides)

    def direct(i, n):
        return compose(d, compose(tensor(n, sides[i]), e))

    return FamilyInstance("side_param", pair, {"E": e, "D": d, "S1": s1, "S2": s2}, direct)


def make_trivial_s(e1: Channel, e2: Channel, d1: Channel, d2: Channel) -> FamilyInstance:
    """Superchannels with |S| = 1: theta_i(N) = d_i o N o e_i."""
    pair = (Superchannel(e1, d1, e1.dim_out, 1), Superchannel(e2, d2, e2.dim_out, 1))
    parts = ((e1, d1), (e2, d2))
    return FamilyInstance("trivial_S", pair, {"E1": e1, "E2": e2, "D1": d1, "D2": d2},
                          lambda i, n: compose(parts[i][1], compose(n, parts[i][0])))


def random_env_instance(seed=None, c: int = 2, a: int = 2, s: int = 1, b: int = 2, d: int = 2, w1: int = 2,
                        w2: int = 2) -> FamilyInstance:
    rng = np.random.default_rng(seed)
    p_e = random_channel(c * w1, a * s, seed=rng)
    p_d = random_channel(b * s * w2, d, seed=rng)
    om1 = random_state(w1 * w2, seed=rng)
    om2 = random_state(w1 * w2, seed=rng)
    return make_env_param(p_e, p_d, om1, om2, a, s, w1, w2)


def make_env_seizable(omega1, omega2, w1: int, w2: int, c: int = 2, a: int = 2, u=None):
    """Environment parametrized pair whose D hands out omega_i (rotated by ``u``).

    E discards C, sends W1 on the side wire and a dummy to the slot; D
    discards B and applies ``u`` to S W2. Returns (instance, psi) with
    psi(theta) = u^dag o theta(id), the replacer of omega_i.
    """
    w = w1 * w2
    u = np.eye(w) if u is None else np.asarray(u, dtype=complex)
    p_e = tensor(trace_channel(c), prepare_channel(maximally_mixed(a)), identity_channel(w1))
    p_d = tensor(trace_channel(a), unitary_channel(u))
    inst = make_env_param(p_e, p_d, omega1, omega2, a, w1, w1, w2)
    inst.family = "env_seizable"
    undo = unitary_channel(u.conj().T)

    def psi(theta: Superchannel) -> Channel:
        return compose(undo, theta(identity_channel(theta.a[0]), 1))

    return inst, psi


def make_side_seizable(s1: Channel, s2: Channel, a: int = 2, u=None):
    """Side-channel pair with theta_i(N) = u o S_i for every N.

    Returns (instance, psi) where psi(X) = u^dag o X recovers S_i.
    """
    s = s1.dim_in
    u = np.eye(s) if u is None else np.asarray(u, dtype=complex)
    e = tensor(prepare_channel(maximally_mixed(a)), identity_channel(s))
    d = tensor(trace_channel(a), unitary_channel(u))
    inst = make_side_param(e, d, s1, s2, a, s)
    inst.family = "side_seizable"
    undo = unitary_channel(u.conj().T)
    return inst, (lambda x: compose(undo, x))


# ---------------------------------------------------------------------------
# certified channel quantities
# ---------------------------------------------------------------------------

def replacer_target(ch: Channel, tol: float = 1e-10) -> np.ndarray | None:
    """tau if ch is the replacer rho -> tr(rho) tau, else None."""
    tau = la.partial_trace(ch.choi, [ch.dim_in, ch.dim_out], [1]) / ch.dim_in
    if np.max(np.abs(la.kron(np.eye(ch.dim_in), tau) - ch.choi)) > tol:
        return None
    return tau


def amortized_channel_bound(n: Channel, m: Channel) -> DivergenceEstimate:
    """Certified value of D^A(n || m): exact for equal, classical or replacer pairs, else the D_max upper bound."""
    t1, t2 = replacer_target(n), replacer_target(m)
    if t1 is not None and t2 is not None:
        return DivergenceEstimate(rel_entropy(t1, t2).value, EXACT, 1e-9, "replacer channels")
    exact = classical_table(n) is not None and classical_table(m) is not None
    val = penalty_upper(n, m)
    if exact or val == 0.0:
        return DivergenceEstimate(val, EXACT, 1e-9, "classical or equal channels")
    return DivergenceEstimate(val, UPPER, 1e-9, "Choi D_max")


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def sample_strategies(theta: Superchannel, n: int, count: int, seed=0, classes: Sequence[str] = CLASSES,
                      ref_dim: int = 2):
    """Random descriptors cycling through ``classes``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        cls = classes[i % len(classes)]
        out.append(random_descriptor(cls, theta, n, seed=rng, ref_dim=ref_dim))
    return out


def strategy_divergences(pair, strategies) -> list[float]:
    t1, t2 = pair
    vals = []
    for s in strategies:
        r1, r2 = build_outputs(s, t1, t2)
        vals.append(rel_entropy(r1, r2).value)
    return vals


def check_env_bound(inst: FamilyInstance, n: int = 1, count: int = 20, seed=0, tol: float = 1e-8,
                    classes: Sequence[str] = CLASSES) -> Report:
    """Sampled strategies obey D(p || q) <= n D(omega1 || omega2)."""
    if inst.family not in ("env_param", "env_seizable"):
        raise ValueError("expected an environment parametrized instance")
    bound = rel_entropy(inst.params["omega1"], inst.params["omega2"]).value
    vals = strategy_divergences(inst.pair, sample_strategies(inst.pair[0], n, count, seed, classes))
    worst = max(vals)
    return Report("env-bound", bool(worst <= n * bound + tol), n * bound + tol - worst,
                  {"bound": bound, "n": n, "max_lhs": worst, "samples": len(vals)})


def check_seizable(inst: FamilyInstance, psi: Callable, budget=None, seed: int = 0, tol: float = IDENTITY_TOL,
                   agree_tol: float = 2e-3) -> Report:
    """Seizing identity, then the closed form against the estimators.

    For environment instances ``psi`` maps a superchannel to a channel and
    must return the replacer of omega_i. For side-channel instances ``psi``
    maps a channel to a channel and must send theta_i(N) to S_i for every N.
    A failed identity gives a failing report, not an exception.
    """
    t = inst.pair
    details: dict = {}
    if inst.family in ("env_param", "env_seizable"):
        oms = (inst.params["omega1"], inst.params["omega2"])
        res = 0.0
        for i in range(2):
            got = psi(t[i])
            want = replacer_channel(oms[i], got.dim_in)
            res = max(res, float(np.max(np.abs(got.choi - want.choi))))
        details["residual"] = res
        if res > tol:
            return Report("seizable", False, tol - res, details)
        closed = rel_entropy(*oms).value
        est = sup_div(t[0], t[1], "sup_D", budget=budget, seed=seed).value
        details.update(closed_form=closed, sup_D=est)
        gap = abs(est - closed)
        return Report("seizable", bool(gap <= agree_tol), agree_tol - gap, details)
    if inst.family in ("side_param", "side_seizable"):
        sides = (inst.params["S1"], inst.params["S2"])
        res = 0.0
        basis = channel_basis(t[0].a[0], t[0].b[0])
        for i in range(2):
            for n in basis:
                got = psi(t[i](n, 1))
                res = max(res, float(np.max(np.abs(got.choi - sides[i].choi))))
        details["residual"] = res
        if res > tol:
            return Report("seizable", False, tol - res, details)
        target = channel_div_amortized(*sides, budget=budget, seed=seed)
        target_d = channel_div(*sides, budget=budget, seed=seed)
        _, chain = sup_div(t[0], t[1], "sup_A", budget=budget, seed=seed, return_chain=True)
        details.update(channel_div=target_d.value, channel_div_amortized=target.value, chain=chain)
        gaps = [abs(chain["sup_D"] - target_d.value)] + [abs(chain[k] - target.value) for k in ("sup_sA", "sup_A")]
        gap = max(gaps)
        return Report("seizable", bool(gap <= agree_tol), agree_tol - gap, details)
    raise ValueError(f"family {inst.family!r} has no seizing check")


def check_trivial_S(inst: FamilyInstance, n: int = 1, count: int = 20, seed=0, tol: float = 1e-8,
                    classes: Sequence[str] = CLASSES) -> Report:
    """D(p || q) <= n (D^A(E1 || E2) + D^A(D1 || D2)) on sampled strategies.

    The bound is exact for classical, replacer or equal components and a
    certified D_max upper bound otherwise; ``details['certified_exact']``
    says which.
    """
    t1, t2 = inst.pair
    if t1.s[0] != 1 or t2.s[0] != 1:
        raise ValueError("both superchannels need a trivial side wire")
    be = amortized_channel_bound(t1.E, t2.E)
    bd = amortized_channel_bound(t1.D, t2.D)
    bound = be.value + bd.value
    vals = strategy_divergences(inst.pair, sample_strategies(t1, n, count, seed, classes))
    details = {}
    tabs = [classical_table(ch) for ch in (t1.E, t1.D, t2.E, t2.D)]
    if all(tb is not None for tb in tabs):
        # exhaustive single-copy check over point inputs and deterministic fillers
        c1 = ClassicalSuperchannel(tabs[0][:, :, None], tabs[1][:, None, :])
        c2 = ClassicalSuperchannel(tabs[2][:, :, None], tabs[3][:, None, :])
        details["enumerated_max"] = classical_exact(c1, c2).value
        vals.append(details["enumerated_max"])
    worst = max(vals)
    margin = n * bound + tol - worst if math.isfinite(bound) else math.inf
    return Report("trivial-S", bool(worst <= n * bound + tol), margin,
                  {**details, "bound": bound, "E_term": be, "D_term": bd, "max_lhs": worst,
                   "certified_exact": be.kind == EXACT and bd.kind == EXACT})


def illumination_case(theta1, tau, n_values: Sequence[int] = (1, 2, 3), count: int = 14, eps: float = 0.1,
                      budget=None, seed: int = 0, tol: float = 1e-8) -> Report:
    """Discriminate theta1 against the replacer of the tau-replacer channel.

    (a) sampled strategies of every class at each n obey
    D(p || q) <= n * (certified D(theta1 || theta_tau)) when theta1 is a
    replacer or classical superchannel; (b) the product strategy built from
    the sup_D optimizer has -log(beta_n)/n within the weak-converse envelope
    of the sup_D estimate.
    """
    tau = la.check_hermitian(tau)
    details: dict = {}
    classical = isinstance(theta1, ClassicalSuperchannel)
    if classical:
        if np.max(np.abs(tau - np.diag(np.diag(tau)))) > 1e-12:
            raise ValueError("classical illumination needs a diagonal tau")
        al = theta1.alphabets
        e = np.zeros((al["c"], al["a"], al["c"]))
        for c in range(al["c"]):
            e[c, :, c] = 1 / al["a"]
        d = np.broadcast_to(np.diag(tau).real, (al["b"], al["c"], al["d"])).copy()
        theta_tau_c = ClassicalSuperchannel(e, d)
        certified, (c_star, f_star) = classical_exact(theta1, theta_tau_c, return_argmax=True)
        q1, q2 = embed_classical(theta1), embed_classical(theta_tau_c)
        # the exact optimizer is a point-mass input and a deterministic slot channel
        best_pair = tuple(np.diag(classical_joint(t, c_star, f_star).reshape(-1))
                          for t in (theta1, theta_tau_c))
    else:
        q1 = theta1
        q2 = make_replacer(replacer_channel(tau, theta1.c), theta1.a[0], theta1.b[0])
        certified = None
        target = _replacer_target_channel(theta1)
        if target is not None:
            certified = _certified_channel_div(target, replacer_channel(tau, theta1.c))
    if superchannels_equal(q1, q2, 1e-12):
        details.update(sup_D=0.0, certified=0.0, min_error=0.5)
        return Report("illumination", True, 0.0, details)
    if classical:
        est = certified
    else:
        est = sup_div(q1, q2, "sup_D", budget=budget, seed=seed)
        best_pair = _best_product(q1, q2, budget, seed)
    details["sup_D"] = est.value
    details["certified"] = None if certified is None else certified.value
    passed = True
    if certified is not None:
        worst = -math.inf
        for n in n_values:
            if n > 2:
                continue
            vals = strategy_divergences((q1, q2), sample_strategies(q1, n, count, seed + n, ref_dim=2))
            worst = max(worst, max(v - n * certified.value for v in vals))
        details["max_excess"] = worst
        passed &= worst <= tol
        passed &= est.value <= certified.value + 1e-6
    # (b) product strategy from the optimizer
    rates = []
    w1, w2 = best_pair
    for n in n_values:
        beta, _ = hypothesis_test(la.kron(*([w1] * n)), la.kron(*([w2] * n)), eps)
        rate = -math.log2(beta) / n if beta > 0 else math.inf
        env = stein_weak_converse(rel_entropy(w1, w2).value, eps, n)
        rates.append({"n": n, "rate": rate, "envelope": env})
        passed &= rate <= env + 1e-6
    details["product_rates"] = rates
    return Report("illumination", bool(passed), (certified.value - est.value) if certified is not None else math.nan,
                  details)


def _best_product(q1: Superchannel, q2: Superchannel, budget, seed):
    """Output pair of the single-copy product strategy found by the sup_D search."""
    if superchannels_equal(q1, q2, 1e-12):
        raise ValueError("equal superchannels give no product strategy")
    _, pt = sup_div(q1, q2, "sup_D", budget=budget, seed=seed, return_point=True)
    r = pt["r"]
    return q1(pt["N"], r)(pt["rho"]), q2(pt["N"], r)(pt["rho"])


def _replacer_target_channel(theta: Superchannel) -> Channel | None:
    """theta(N) if it does not depend on N (checked on a channel basis)."""
    basis = channel_basis(theta.a[0], theta.b[0])
    first = theta(basis[0], 1)
    for n in basis[1:]:
        if np.max(np.abs(theta(n, 1).choi - first.choi)) > IDENTITY_TOL:
            return None
    return first


def _certified_channel_div(r: Channel, r_tau: Channel) -> DivergenceEstimate | None:
    """Exact D(r || r_tau) for replacer or classical r, otherwise None."""
    t = replacer_target(r)
    tau = replacer_target(r_tau)
    if t is not None:
        # both outputs are product with the untouched reference
        return DivergenceEstimate(rel_entropy(t, tau).value, EXACT, 1e-9, "replacer target")
    if classical_table(r) is not None and classical_table(r_tau) is not None:
        return channel_div(r, r_tau)
    return None
