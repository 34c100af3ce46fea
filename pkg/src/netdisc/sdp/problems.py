"""SDP-backed quantities: Helstrom, hypothesis testing, diamond norm, testers, max-relative entropies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .. import linalg as la
from ..qobj import Channel, Comb, comb_choi
from .model import SdpProblem, SdpSolution

FEAS = 1e-9
GAP = 1e-7
# degenerate instances (no strict complementarity) can stall just short of
# GAP; a stalled best iterate inside these looser bounds is still accepted
LOOSE_FEAS = 1e-7
LOOSE_GAP = 1e-5


class SdpFailure(RuntimeError):
    def __init__(self, what: str, sol: SdpSolution):
        super().__init__(f"{what}: solver status {sol.status} (gap {sol.gap:.2e})")
        self.solution = sol


def _check_prior(p: float):
    if not 0 < p < 1:
        raise ValueError(f"prior must lie in (0, 1), got {p}")


def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")


def _require(sol: SdpSolution, what: str) -> SdpSolution:
    if sol.ok:
        return sol
    rel_gap = sol.gap / max(1.0, abs(sol.primal))
    if (sol.status == "max_iter" and sol.primal_residual <= LOOSE_FEAS
            and sol.dual_residual <= LOOSE_FEAS and rel_gap <= LOOSE_GAP):
        return sol
    raise SdpFailure(what, sol)


def _ptrace_fn(dims, keep):
    return lambda x: la.partial_trace(x, dims, keep)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

def min_error(p: float, rho1, rho2, return_solution: bool = False):
    """Optimal error p tr(Q2 rho1) + (1-p) tr(Q1 rho2); returns (p_err, Q1).

    ``Q1`` is the POVM element for guessing the first hypothesis.
    """
    _check_prior(p)
    rho1, rho2 = la.check_hermitian(rho1), la.check_hermitian(rho2)
    d = rho1.shape[0]
    prob = SdpProblem("min")
    q = prob.herm(d, "Q1")
    # p tr((1-Q1) rho1) + (1-p) tr(Q1 rho2)
    prob.objective([(q, (1 - p) * rho2 - p * rho1)], const=p * np.trace(rho1).real)
    prob.mat_le([(q, lambda x: x)], np.eye(d), "Q1<=1")
    sol = _require(prob.solve(FEAS, GAP), "min_error")
    out = (sol.primal, sol[q])
    return out + (sol,) if return_solution else out


def helstrom_closed_form(p: float, rho1, rho2) -> float:
    return 0.5 * (1 - la.trace_norm(p * la.as_array(rho1) - (1 - p) * la.as_array(rho2)))


def _np_classical(p: np.ndarray, q: np.ndarray, eps: float):
    """Exact Neyman-Pearson test: min q.t s.t. p.t >= 1-eps, 0 <= t <= 1.

    Outcomes are sorted by likelihood ratio; outcomes with q = 0 are
    included first (ties on the null space of q are included fully).
    """
    p = np.clip(np.asarray(p, float), 0, None)
    q = np.clip(np.asarray(q, float), 0, None)
    ratio = np.where(q > 0, p / np.where(q > 0, q, 1), np.inf)
    order = np.lexsort((-p, -ratio))
    need = 1 - eps
    t = np.zeros_like(p)
    got = 0.0
    for i in order:
        if q[i] == 0:
            t[i] = 1.0
            got += p[i]
            continue
        if got >= need - 1e-15:
            break
        if p[i] <= 0:
            continue
        take = min(1.0, (need - got) / p[i])
        t[i] = take
        got += take * p[i]
    return float(q @ t), t


def _common_basis(rho, sigma, tol: float = 1e-11):
    """Unitary diagonalizing both rho and sigma, or None when they do not commute."""
    if np.max(np.abs(rho @ sigma - sigma @ rho)) > tol:
        return None
    off = lambda m: np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0)
    if off(rho) <= tol and off(sigma) <= tol:
        return np.eye(rho.shape[0])
    # a generic combination separates joint eigenspaces
    _, u = np.linalg.eigh(rho + (np.sqrt(5) - 1) / 2 * sigma + 0.1234567 * rho @ sigma)
    if off(u.conj().T @ rho @ u) <= 1e-9 and off(u.conj().T @ sigma @ u) <= 1e-9:
        return u
    return None


def hypothesis_test(rho, sigma, eps: float):
    """Optimal type-II error beta and test Q with tr(Q rho) >= 1 - eps."""
    _check_eps(eps)
    rho, sigma = la.check_hermitian(rho), la.check_hermitian(sigma)
    u = _common_basis(rho, sigma)
    if u is not None:
        p = np.real(np.diag(u.conj().T @ rho @ u))
        q = np.real(np.diag(u.conj().T @ sigma @ u))
        beta, t = _np_classical(p, q, eps)
        return beta, u @ np.diag(t) @ u.conj().T
    d = rho.shape[0]
    prob = SdpProblem("min")
    qv = prob.herm(d, "Q")
    prob.objective([(qv, sigma)])
    prob.ge([(qv, rho)], 1 - eps, "tr(Q rho)>=1-eps")
    prob.mat_le([(qv, lambda x: x)], np.eye(d), "Q<=1")
    sol = _require(prob.solve(FEAS, GAP), "dh_epsilon")
    return max(sol.primal, 0.0), sol[qv]


def _neglog(beta: float) -> float:
    return math.inf if beta <= 1e-300 else -math.log2(beta)


def dh_epsilon(rho, sigma, eps: float) -> float:
    """Hypothesis-testing relative entropy -log min{tr(Q sigma): tr(Q rho) >= 1-eps}."""
    beta, _ = hypothesis_test(rho, sigma, eps)
    return _neglog(beta)


def dh_epsilon_classical(p, q, eps: float) -> float:
    _check_eps(eps)
    beta, _ = _np_classical(p, q, eps)
    return _neglog(beta)


def dh_epsilon_iid(p, q, eps: float, n: int) -> float:
    """Exact D_H^eps(p^{x n} || q^{x n}) for finite distributions, grouping outcomes by type."""
    _check_eps(eps)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    k = len(p)
    lp = np.log(np.where(p > 0, p, 1.0))
    lq = np.log(np.where(q > 0, q, 1.0))
    mass_p, mass_q = [], []
    for combo in combinations_with_replacement(range(k), n):
        counts = np.bincount(combo, minlength=k)
        log_mult = math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in counts)
        zp = np.any((p == 0) & (counts > 0))
        zq = np.any((q == 0) & (counts > 0))
        mass_p.append(0.0 if zp else math.exp(log_mult + counts @ lp))
        mass_q.append(0.0 if zq else math.exp(log_mult + counts @ lq))
    beta, _ = _np_classical(np.array(mass_p), np.array(mass_q), eps)
    return _neglog(beta)


# ---------------------------------------------------------------------------
# channels and combs
# ---------------------------------------------------------------------------

def _check_pair(n: Channel, m: Channel):
    if (n.dim_in, n.dim_out) != (m.dim_in, m.dim_out):
        raise ValueError(f"channel dims differ: {n.dim_in}->{n.dim_out} vs {m.dim_in}->{m.dim_out}")


def diamond_norm(n: Channel, m: Channel, return_solution: bool = False):
    """||N - M||_diamond = 2 max{<J_N - J_M, W>: 0 <= W <= rho (x) 1, tr rho = 1}."""
    _check_pair(n, m)
    if np.max(np.abs(n.choi - m.choi)) <= 1e-13:
        return (0.0, None) if return_solution else 0.0
    da, db = n.dim_in, n.dim_out
    prob = SdpProblem("max")
    w = prob.herm(da * db, "W")
    rho = prob.herm(da, "rho")
    prob.objective([(w, 2 * (n.choi - m.choi))])
    prob.mat_le([(w, lambda x: x), (rho, lambda x: -np.kron(x, np.eye(db)))], np.zeros((da * db, da * db)),
                "W<=rho x 1")
    prob.eq([(rho, np.eye(da))], 1.0, "tr rho=1")
    sol = _require(prob.solve(FEAS, GAP), "diamond_norm")
    val = max(sol.primal, 0.0)
    return (val, sol) if return_solution else val


def channel_min_error(p: float, n1: Channel, n2: Channel):
    """Optimal single-use error for discriminating two channels (entangled inputs allowed)."""
    _check_prior(p)
    _check_pair(n1, n2)
    da, db = n1.dim_in, n1.dim_out
    d = da * db
    prob = SdpProblem("min")
    t1 = prob.herm(d, "T1")
    t2 = prob.herm(d, "T2")
    rho = prob.herm(da, "rho")
    prob.objective([(t2, p * n1.choi), (t1, (1 - p) * n2.choi)])
    prob.mat_eq([(t1, lambda x: x), (t2, lambda x: x), (rho, lambda x: -np.kron(x, np.eye(db)))],
                np.zeros((d, d)), "T1+T2=rho x 1")
    prob.eq([(rho, np.eye(da))], 1.0, "tr rho=1")
    sol = _require(prob.solve(FEAS, GAP), "channel_min_error")
    return sol.primal, {"T1": sol[t1], "T2": sol[t2], "rho": sol[rho]}


@dataclass
class Tester:
    """Two-outcome tester for a 2-comb on C A B D: T1 + T2 = 1_D (x) Y, Tr_B Y = 1_A (x) rho."""

    t1: np.ndarray
    t2: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    dims: tuple

    def residuals(self) -> dict:
        c, a, b, d = self.dims
        lhs = self.t1 + self.t2
        r1 = np.max(np.abs(lhs - np.kron(self.y, np.eye(d))))
        r2 = np.max(np.abs(la.partial_trace(self.y, [c, a, b], [0, 1]) - np.kron(self.rho, np.eye(a))))
        return {"sum": float(r1), "causal": float(r2), "trace": float(abs(np.trace(self.rho) - 1))}

    def probabilities(self, comb_j: np.ndarray) -> tuple[float, float]:
        return float(np.real(np.trace(self.t1 @ comb_j))), float(np.real(np.trace(self.t2 @ comb_j)))


def comb_discrimination(theta1: Comb, theta2: Comb, p: float = 0.5):
    """Optimal single-use error for two 2-combs, over all testers.

    Wires are ordered C A B D. The tester constraints encode: an input state
    on C R, a channel A R -> B R' in the slot and a final two-outcome
    measurement on D R'. The feasible set is closed under transposition, so
    pairing with the comb Choi operator needs no extra transpose.
    """
    _check_prior(p)
    if theta1.signature != theta2.signature:
        raise ValueError(f"comb signatures differ: {theta1.signature} vs {theta2.signature}")
    if theta1.k != 2:
        raise ValueError("comb_discrimination supports 2-combs (superchannels)")
    c, a, b, d = theta1.c, theta1.a[0], theta1.b[0], theta1.d
    j1, j2 = comb_choi(theta1), comb_choi(theta2)
    n = c * a * b * d
    prob = SdpProblem("min")
    t1 = prob.herm(n, "T1")
    t2 = prob.herm(n, "T2")
    y = prob.herm(c * a * b, "Y")
    rho = prob.herm(c, "rho")
    prob.objective([(t2, p * j1), (t1, (1 - p) * j2)])
    prob.mat_eq([(t1, lambda x: x), (t2, lambda x: x), (y, lambda x: -np.kron(x, np.eye(d)))],
                np.zeros((n, n)), "T1+T2=Y x 1_D")
    prob.mat_eq([(y, _ptrace_fn([c, a, b], [0, 1])), (rho, lambda x: -np.kron(x, np.eye(a)))],
                np.zeros((c * a, c * a)), "Tr_B Y=rho x 1_A")
    prob.eq([(rho, np.eye(c))], 1.0, "tr rho=1")
    sol = _require(prob.solve(FEAS, GAP), "comb_discrimination")
    tester = Tester(sol[t1], sol[t2], sol[y], sol[rho], (c, a, b, d))
    return sol.primal, tester


# ---------------------------------------------------------------------------
# max-relative entropies
# ---------------------------------------------------------------------------

def _support(m, tol: float = la.SUPPORT_TOL):
    w, v = np.linalg.eigh(la.herm(m))
    keep = w > tol * max(1.0, w[-1] if w.size else 1.0)
    return w[keep], v[:, keep]


def dmax(rho, sigma) -> float:
    """log inf{lambda: rho <= 2^lambda sigma}; +inf when supp(rho) is not inside supp(sigma)."""
    rho, sigma = la.check_hermitian(rho), la.check_hermitian(sigma)
    la.eigvals_psd(rho)
    la.eigvals_psd(sigma)
    ws, vs = _support(sigma)
    if ws.size == 0:
        return math.inf
    outside = rho - vs @ (vs.conj().T @ rho @ vs) @ vs.conj().T
    if np.max(np.abs(outside), initial=0.0) > 1e-9 * max(1.0, np.trace(rho).real):
        return math.inf
    r = vs.conj().T @ rho @ vs
    s_inv_half = np.diag(ws ** -0.5)
    lam = np.linalg.eigvalsh(la.herm(s_inv_half @ r @ s_inv_half))[-1]
    if lam <= 0:
        return -math.inf
    return float(math.log2(lam))


def _dmax_smooth_sdp(ws, vs, wr, vr, eps, scaled):
    """SDP for the smoothed Dmax on the supports.

    With ``scaled`` the variables are r = S r' S and Y = S Y' T with
    S = sigma^(1/2), T = rho^(1/2), so both diagonal blocks are well scaled.
    """
    k, kr = len(ws), len(wr)
    s_half = np.sqrt(ws) if scaled else np.ones(k)
    t_half = np.sqrt(wr) if scaled else np.ones(kr)
    overlap = s_half[:, None] * (vs.conj().T @ vr) * t_half[None, :]
    prob = SdpProblem("min")
    lam = prob.nonneg("lambda")
    z = prob.herm(k + kr, "Z")  # [[r', Y'], [Y'^dag, rho']]
    top = lambda x: x[:k, :k]
    prob.objective([(lam, 1.0)])
    sig_c = np.eye(k) if scaled else np.diag(ws)
    prob.mat_ge([(lam, sig_c), (z, lambda x: -top(x))], np.zeros((k, k)), "r<=lambda sigma")
    prob.mat_eq([(z, lambda x: x[k:, k:])], np.eye(kr) if scaled else np.diag(wr), "Z22=rho")
    trc = np.zeros((k + kr, k + kr), dtype=complex)
    trc[:k, :k] = np.diag(ws) if scaled else np.eye(k)
    prob.le([(z, trc)], 1.0, "tr r<=1")
    fid = np.zeros((k + kr, k + kr), dtype=complex)
    fid[:k, k:] = overlap / 2
    fid[k:, :k] = overlap.conj().T / 2
    prob.ge([(z, fid)], math.sqrt(1 - eps ** 2), "root fidelity")
    return prob.solve(FEAS, GAP, max_iter=200), z, s_half


def dmax_smooth(rho, sigma, eps: float, return_state: bool = False):
    """Smooth max-relative entropy over the purified-distance ball of subnormalized states.

    The optimization is restricted to supp(sigma) for the smoothed state and
    to supp(rho) for the fidelity block, which keeps the SDP strictly
    feasible on rank-deficient inputs.
    """
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    rho, sigma = la.check_hermitian(rho), la.check_hermitian(sigma)
    if abs(np.trace(rho).real - 1) > 1e-9:
        raise ValueError("dmax_smooth expects a normalized rho")
    if eps == 0:
        val = dmax(rho, sigma)
        return (val, rho) if return_state else val
    ws, vs = _support(sigma)
    wr, vr = _support(rho)
    k = len(ws)
    if k == 0:
        return (math.inf, None) if return_state else math.inf
    # two equivalent parametrizations; the second is a retry for the rare
    # degenerate instances on which the first stalls
    sol = None
    for scaled in (True, False):
        sol, z, s_half = _dmax_smooth_sdp(ws, vs, wr, vr, eps, scaled)
        if sol.status == "infeasible":
            return (math.inf, None) if return_state else math.inf
        try:
            _require(sol, "dmax_smooth")
            break
        except SdpFailure:
            if not scaled:
                raise
    val = math.log2(sol.primal) if sol.primal > 0 else -math.inf
    if return_state:
        r = s_half[:, None] * sol[z][:k, :k] * s_half[None, :]
        return val, vs @ r @ vs.conj().T
    return val


def dmax_channel(n: Channel, m: Channel) -> float:
    """Channel max-relative entropy, equal to D_max of the Choi operators."""
    _check_pair(n, m)
    return dmax(n.choi / n.dim_in, m.choi / m.dim_in)


def dmax_smooth_channel(n: Channel, m: Channel, eps: float) -> float:
    """min D_max(N~ || M) over channels N~ with (1/2)||N~ - N||_diamond <= eps.

    The diamond-ball constraint uses the dual form of the diamond norm:
    exists Z >= 0, Z >= J_N~ - J_N with Tr_B Z <= eps 1_A.
    """
    _check_pair(n, m)
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    if eps == 0:
        return dmax_channel(n, m)
    da, db = n.dim_in, n.dim_out
    wm, vm = _support(m.choi)
    k = len(wm)
    d = da * db
    # J~ = V S r S V^dag with S = J_M^(1/2) on its support
    vs = vm * np.sqrt(wm)[None, :]
    embed = lambda x: vs @ x @ vs.conj().T
    prob = SdpProblem("min")
    lam = prob.nonneg("lambda")
    r = prob.herm(k, "J~")  # J_N~ = V r V^dag
    z = prob.herm(d, "Z")
    prob.objective([(lam, 1.0)])
    prob.mat_ge([(lam, np.eye(k)), (r, lambda x: -x)], np.zeros((k, k)), "J~<=lambda J_M")
    prob.mat_eq([(r, lambda x: la.partial_trace(embed(x), [da, db], [0]))], np.eye(da), "TP")
    prob.mat_ge([(z, lambda x: x), (r, lambda x: -embed(x))], -n.choi, "Z>=J~-J_N")
    prob.mat_le([(z, _ptrace_fn([da, db], [0]))], eps * np.eye(da), "Tr_B Z<=eps")
    sol = prob.solve(FEAS, GAP, max_iter=200)
    if sol.status == "infeasible":
        return math.inf
    _require(sol, "dmax_smooth_channel")
    return math.log2(sol.primal) if sol.primal > 0 else -math.inf
