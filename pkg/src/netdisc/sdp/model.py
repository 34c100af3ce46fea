"""Modeling layer: complex Hermitian SDPs assembled into the real standard form.

A Hermitian variable ``X`` of size n is stored as a real symmetric block ``Y``
of size 2n. For Hermitian ``A``::

    tr(A X) = <[[Re A, -Im A], [Im A, Re A]], Y> / 2,
    X = (Y11 + Y22)/2 + i (Y21 - Y12)/2,

and ``Y >= 0`` implies ``X >= 0``, so no structure constraints on ``Y`` are
needed: every feasible ``Y`` maps to a feasible ``X`` with the same value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .solver import (FEAS_TOL, GAP_TOL, OPTIMAL, StandardForm, solve_standard, svec)


def herm_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n x n Hermitian matrices (real inner product), shape (n^2, n, n)."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1
        out.append(e)
    s2 = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = s2
            out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1j * s2
            e[j, i] = -1j * s2
            out.append(e)
    return np.array(out)


def hvec(m: np.ndarray) -> np.ndarray:
    """Coordinates of Hermitian ``m`` in :func:`herm_basis`."""
    n = m.shape[-1]
    iu = np.triu_indices(n, 1)
    d = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    off = m[..., iu[0], iu[1]]
    return np.concatenate([d, np.sqrt(2) * off.real, np.sqrt(2) * off.imag], axis=-1)


def realify(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


_K_CACHE: dict[int, np.ndarray] = {}


def _herm_to_block(n: int) -> np.ndarray:
    """Row i: svec of realify(E_i)/2 so that <E_i, X> = row_i . svec(Y)."""
    if n not in _K_CACHE:
        basis = herm_basis(n)
        _K_CACHE[n] = np.array([svec(realify(e) / 2) for e in basis])
    return _K_CACHE[n]


@dataclass(frozen=True)
class Var:
    index: int
    n: int
    kind: str  # "herm" or "scalar"
    name: str = ""


@dataclass
class SdpSolution:
    status: str
    primal: float
    dual: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    values: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def value(self) -> float:
        return self.primal

    def __getitem__(self, var: Var):
        return self.values[var.index]

    def summary(self) -> dict:
        return {"status": self.status, "primal": self.primal, "dual": self.dual, "gap": self.gap,
                "primal_residual": self.primal_residual, "dual_residual": self.dual_residual,
                "iterations": self.iterations}


class SdpProblem:
    """Builder for Hermitian SDPs with linear equality / inequality constraints.

    Linear terms are ``(var, coeff)`` where ``coeff`` is a Hermitian matrix
    (the functional ``tr(coeff X)``), a float for scalar variables, or, in
    matrix constraints, a callable mapping the variable to a matrix.
    """

    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.vars: list[Var] = []
        self._obj: list = []
        self._obj_const = 0.0
        self._rows: list[dict[int, np.ndarray]] = []
        self._rhs: list[float] = []
        self.labels: list[str] = []

    # variables -------------------------------------------------------------
    def herm(self, n: int, name: str = "") -> Var:
        v = Var(len(self.vars), int(n), "herm", name)
        self.vars.append(v)
        return v

    def nonneg(self, name: str = "") -> Var:
        v = Var(len(self.vars), 1, "scalar", name)
        self.vars.append(v)
        return v

    def block_size(self, v: Var) -> int:
        return 2 * v.n if v.kind == "herm" else 1

    # linear functionals ----------------------------------------------------
    def _functional(self, v: Var, coeff) -> np.ndarray:
        if v.kind == "scalar":
            return np.array([float(np.real(coeff))])
        a = np.asarray(coeff, dtype=complex)
        if a.shape != (v.n, v.n):
            raise ValueError(f"coefficient shape {a.shape} does not match variable size {v.n}")
        return hvec((a + a.conj().T) / 2) @ _herm_to_block(v.n)

    def objective(self, terms: Sequence[tuple[Var, object]], const: float = 0.0):
        self._obj = list(terms)
        self._obj_const = float(const)

    def eq(self, terms, rhs: float, label: str = ""):
        row: dict[int, np.ndarray] = {}
        for v, coeff in terms:
            f = self._functional(v, coeff)
            row[v.index] = row.get(v.index, 0) + f
        self._rows.append(row)
        self._rhs.append(float(rhs))
        self.labels.append(label)

    def ge(self, terms, rhs: float, label: str = ""):
        s = self.nonneg(f"slack:{label}")
        self.eq(list(terms) + [(s, -1.0)], rhs, label)

    def le(self, terms, rhs: float, label: str = ""):
        s = self.nonneg(f"slack:{label}")
        self.eq(list(terms) + [(s, 1.0)], rhs, label)

    def _map_matrix(self, v: Var, fn, m_out: int) -> np.ndarray:
        """Matrix T with T[j, i] = <F_j, fn(E_i)> in Hermitian coordinates."""
        if v.kind == "scalar":
            img = np.asarray(fn(np.ones((1, 1))) if callable(fn) else fn, dtype=complex)
            return hvec(img)[:, None]
        basis = herm_basis(v.n)
        imgs = np.array([np.asarray(fn(e), dtype=complex) for e in basis])
        if imgs.shape[1:] != (m_out, m_out):
            raise ValueError(f"map output shape {imgs.shape[1:]} does not match right-hand side ({m_out})")
        return hvec(imgs).T

    def mat_eq(self, terms, rhs, label: str = ""):
        """sum_k fn_k(X_k) == rhs for Hermiticity-preserving linear maps fn_k."""
        rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
        m_out = rhs.shape[0]
        coords = hvec(rhs)
        blocks = {}
        for v, fn in terms:
            t = self._map_matrix(v, fn, m_out)
            k = t if v.kind == "scalar" else t @ _herm_to_block(v.n)
            blocks[v.index] = blocks.get(v.index, 0) + k
        for j in range(m_out * m_out):
            self._rows.append({idx: blk[j] for idx, blk in blocks.items()})
            self._rhs.append(float(coords[j]))
            self.labels.append(f"{label}[{j}]")

    def mat_le(self, terms, rhs, label: str = ""):
        """sum_k fn_k(X_k) <= rhs (PSD order) via a Hermitian slack."""
        rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
        s = self.herm(rhs.shape[0], f"slack:{label}")
        self.mat_eq(list(terms) + [(s, lambda x: x)], rhs, label)

    def mat_ge(self, terms, rhs, label: str = ""):
        rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
        s = self.herm(rhs.shape[0], f"slack:{label}")
        self.mat_eq(list(terms) + [(s, lambda x: -x)], rhs, label)

    # assembly --------------------------------------------------------------
    def standard_form(self) -> StandardForm:
        sizes = [self.block_size(v) for v in self.vars]
        dims = [n * (n + 1) // 2 for n in sizes]
        offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        n_tot = int(offs[-1])
        a = np.zeros((len(self._rows), n_tot))
        for i, row in enumerate(self._rows):
            for idx, vec in row.items():
                a[i, offs[idx]:offs[idx + 1]] += vec
        c = np.zeros(n_tot)
        for v, coeff in self._obj:
            c[offs[v.index]:offs[v.index + 1]] += self._functional(v, coeff)
        if self.sense == "max":
            c = -c
        return StandardForm(sizes, c, a, np.array(self._rhs, dtype=float))

    def solve(self, feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL, max_iter: int = 100) -> SdpSolution:
        sf = self.standard_form()
        raw = solve_standard(sf, feas_tol, gap_tol, max_iter)
        sign = -1.0 if self.sense == "max" else 1.0
        values = {}
        for v, xk in zip(self.vars, raw.x):
            if v.kind == "scalar":
                values[v.index] = float(xk[0, 0])
            else:
                n = v.n
                y11, y12, y21, y22 = xk[:n, :n], xk[:n, n:], xk[n:, :n], xk[n:, n:]
                x = (y11 + y22) / 2 + 1j * (y21 - y12) / 2
                values[v.index] = (x + x.conj().T) / 2
        primal = sign * raw.primal + self._obj_const
        dual = sign * raw.dual + self._obj_const
        self.last_raw = raw
        return SdpSolution(raw.status, primal, dual, abs(primal - dual), raw.primal_residual,
                           raw.dual_residual, raw.iterations, values)

    def to_json(self, solution: SdpSolution | None = None) -> str:
        """Debug dump: block sizes, constraint count, objective and residuals."""
        out = {
            "sense": self.sense,
            "blocks": [{"name": v.name, "kind": v.kind, "n": v.n} for v in self.vars],
            "n_constraints": len(self._rows),
        }
        if solution is not None:
            out["solution"] = solution.summary()
        return json.dumps(out, sort_keys=True)
