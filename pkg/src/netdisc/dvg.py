"""Quantum divergences and the scalar bound formulas built from them.

Every divergence returns a :class:`DivergenceEstimate`, which also carries
how the value was obtained. Closed forms are ``exact``; optimizer outputs in
:mod:`netdisc.amort` are lower or upper bounds. Logs are base 2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from . import linalg as la
from .qobj import check_state
from .sdp.problems import dmax

EXACT = "exact"
LOWER = "lower-bound"
UPPER = "upper-bound"
KINDS = (EXACT, LOWER, UPPER)

EXACT_TOL = 1e-9
# overlaps below this count as orthogonal
ORTH_TOL = 1e-14


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    kind: str = EXACT
    tol: float = EXACT_TOL
    reason: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == EXACT and self.tol > 1e-6:
            raise ValueError("exact estimates must carry tol <= 1e-6")
        object.__setattr__(self, "value", float(self.value))

    def __float__(self) -> float:
        return self.value

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_dict(self) -> dict:
        v = self.value
        out = {"value": ("inf" if v > 0 else "-inf") if math.isinf(v) else v, "kind": self.kind, "tol": self.tol}
        if self.reason:
            out["reason"] = self.reason
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "DivergenceEstimate":
        v = obj["value"]
        v = float(v) if not isinstance(v, str) else (math.inf if v == "inf" else -math.inf)
        return cls(v, obj.get("kind", EXACT), obj.get("tol", EXACT_TOL), obj.get("reason", ""))


def _inf(reason: str) -> DivergenceEstimate:
    return DivergenceEstimate(math.inf, EXACT, EXACT_TOL, reason)


def _value(d) -> float:
    return float(d.value) if isinstance(d, DivergenceEstimate) else float(d)


def _states(rho, sigma, sub_sigma: bool = False):
    rho = check_state(rho)
    sigma = check_state(sigma, normalized=not sub_sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    return rho, sigma


def support_contained(rho, sigma) -> bool:
    """supp(rho) inside supp(sigma) at the SUPPORT_TOL eigenvalue threshold."""
    leak = np.trace(rho @ (np.eye(len(sigma)) - la.support_projector(sigma))).real
    return leak <= la.SUPPORT_TOL


def rel_entropy(rho, sigma, sub_sigma: bool = False) -> DivergenceEstimate:
    """tr[rho (log rho - log sigma)], +inf unless supp(rho) is inside supp(sigma)."""
    rho, sigma = _states(rho, sigma, sub_sigma)
    if not support_contained(rho, sigma):
        return _inf("supp(rho) not contained in supp(sigma)")
    val = np.trace(rho @ (la.logm2(rho) - la.logm2(sigma))).real
    return DivergenceEstimate(val)


def _petz_q(rho, sigma, alpha: float) -> float:
    return float(np.trace(la.powm(rho, alpha) @ la.powm(sigma, 1 - alpha)).real)


def petz_alpha(rho, sigma, alpha: float) -> DivergenceEstimate:
    """Petz Renyi divergence; alpha = 0 and 1 are the limiting forms."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    rho, sigma = _states(rho, sigma)
    if alpha == 1:
        return rel_entropy(rho, sigma)
    if alpha > 1 and not support_contained(rho, sigma):
        return _inf("supp(rho) not contained in supp(sigma)")
    # alpha = 0 falls out of powm: rho^0 is the support projector
    q = _petz_q(rho, sigma, alpha)
    if q <= ORTH_TOL:
        return _inf("rho orthogonal to sigma")
    return DivergenceEstimate(math.log2(q) / (alpha - 1))


def sandwiched_alpha(rho, sigma, alpha: float) -> DivergenceEstimate:
    """Sandwiched Renyi divergence; alpha = inf is Dmax and alpha = 1 is D."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rho, sigma = _states(rho, sigma)
    if math.isinf(alpha):
        v = dmax(rho, sigma)
        return _inf("supp(rho) not contained in supp(sigma)") if math.isinf(v) else DivergenceEstimate(v)
    if alpha == 1:
        return rel_entropy(rho, sigma)
    if alpha > 1 and not support_contained(rho, sigma):
        return _inf("supp(rho) not contained in supp(sigma)")
    s = la.powm(sigma, (1 - alpha) / (2 * alpha))
    q = float(np.sum(la.eigvals_psd(la.herm(s @ rho @ s)) ** alpha))
    if q <= ORTH_TOL:
        return _inf("rho orthogonal to sigma")
    return DivergenceEstimate(math.log2(q) / (alpha - 1))


def chernoff(rho, sigma, return_alpha: bool = False):
    """C = -min_{0<=a<=1} log tr[rho^a sigma^(1-a)] (bounded Brent search plus endpoints)."""
    rho, sigma = _states(rho, sigma)

    def f(a):
        q = _petz_q(rho, sigma, a)
        return math.log2(q) if q > ORTH_TOL else -math.inf

    cands = [(f(0.0), 0.0), (f(1.0), 1.0)]
    res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    cands.append((float(res.fun), float(res.x)))
    fmin, a_star = min(cands)
    est = _inf("rho orthogonal to sigma") if math.isinf(fmin) else DivergenceEstimate(-fmin, EXACT, 1e-8)
    return (est, a_star) if return_alpha else est


def variance_raw(rho, sigma) -> float:
    """Second moment tr[rho (log rho - log sigma)^2]."""
    rho, sigma = _states(rho, sigma)
    if not support_contained(rho, sigma):
        raise ValueError("variance needs supp(rho) inside supp(sigma)")
    diff = la.logm2(rho) - la.logm2(sigma)
    return float(np.trace(rho @ diff @ diff).real)


def variance(rho, sigma) -> float:
    """Centered information variance V = tr[rho (log rho - log sigma)^2] - D^2."""
    d = rel_entropy(rho, sigma).value
    v = variance_raw(rho, sigma) - d * d
    return max(v, 0.0) if v > -1e-10 else v


def second_order_rhs(d, v: float, eps: float, n: int) -> float:
    """n D + sqrt(n V) Phi^{-1}(eps)."""
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    if v < 0 or n < 1:
        raise ValueError("need V >= 0 and n >= 1")
    d = _value(d)
    if math.isinf(d):
        return d
    return n * d + math.sqrt(n * v) * float(norm.ppf(eps))


def binary_dkl(p: float, q: float) -> float:
    """Relative entropy between Bernoulli(p) and Bernoulli(q)."""
    out = 0.0
    for a, b in ((p, q), (1 - p, 1 - q)):
        if a <= 0:
            continue
        if b <= 0:
            return math.inf
        out += a * math.log2(a / b)
    return max(out, 0.0)


def h2(eps: float) -> float:
    return -sum(x * math.log2(x) for x in (eps, 1 - eps) if x > 0)


def stein_weak_converse(dpq, eps: float, n: int) -> float:
    """Bound on -(1/n) log beta: (D + h2(eps)/n) / (1 - eps)."""
    d = _value(dpq)
    if math.isinf(d):
        return d
    return (d + h2(eps) / n) / (1 - eps)


def chernoff_setting_rhs(div_half, p: float, n: int) -> float:
    """-(1/n) log[p(1-p)] + D~_{1/2}: bound on the symmetric error exponent."""
    if not 0 < p < 1:
        raise ValueError(f"prior must lie in (0, 1), got {p}")
    d = _value(div_half)
    return -math.log2(p * (1 - p)) / n + d


SC_GRID = np.concatenate([1 + np.logspace(-4, 0, 40)[:-1], np.linspace(2, 64, 63)])


def sc_exponent_rhs(div_alpha: Callable[[float], object], r: float) -> float:
    """sup_{alpha>1} ((alpha-1)/alpha)(r - D~_alpha), clipped at 0.

    ``div_alpha`` maps alpha to a divergence (float or estimate). The sup is
    taken over a grid on (1, 64] and refined around the best grid point; the
    alpha -> inf limit r - D_max is included when ``div_alpha(inf)`` works.
    """
    def g(a):
        d = _value(div_alpha(a))
        if math.isinf(d):
            return -math.inf
        return r - d if math.isinf(a) else (a - 1) / a * (r - d)

    vals = np.array([g(a) for a in SC_GRID])
    i = int(np.argmax(vals))
    best = vals[i]
    lo, hi = SC_GRID[max(i - 1, 0)], SC_GRID[min(i + 1, len(SC_GRID) - 1)]
    if hi > lo and math.isfinite(best):
        res = minimize_scalar(lambda a: -g(a), bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
        best = max(best, -float(res.fun))
    try:
        best = max(best, g(math.inf))
    except (ValueError, TypeError, ZeroDivisionError):
        pass
    return max(0.0, float(best))
