"""Dense Hermitian linear algebra on small operators.

All logarithms are base 2. Operators are plain complex ``numpy`` arrays; the
:class:`Operator` wrapper only adds subsystem dimensions for serialization and
partial traces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

# Eigenvalues in (-CLIP_TOL, 0) of a PSD input are treated as exact zeros.
CLIP_TOL = 1e-10
HERM_TOL = 1e-9
# Eigenvalues at or below this threshold are outside the support.
SUPPORT_TOL = 1e-10


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


@dataclass(frozen=True)
class Operator:
    """A square complex matrix together with its tensor-factor dimensions."""

    data: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"operator must be square, got shape {data.shape}")
        dims = tuple(int(d) for d in self.dims) or (data.shape[0],)
        if int(np.prod(dims)) != data.shape[0]:
            raise ValueError(f"dims {dims} do not multiply to {data.shape[0]}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "re": self.data.real.tolist(),
            "im": self.data.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Operator":
        data = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
        return cls(data, tuple(obj["dims"]))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_array(m) -> np.ndarray:
    if isinstance(m, Operator):
        return m.data
    return np.asarray(m, dtype=complex)


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def herm(m: np.ndarray) -> np.ndarray:
    """Hermitian part (M + M^dagger) / 2."""
    m = as_array(m)
    return (m + dag(m)) / 2


def is_hermitian(m, tol: float = HERM_TOL) -> bool:
    m = as_array(m)
    return bool(np.max(np.abs(m - dag(m)), initial=0.0) <= tol * max(1.0, np.max(np.abs(m), initial=0.0)))


def check_hermitian(m, tol: float = HERM_TOL) -> np.ndarray:
    m = as_array(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, tol):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return herm(m)


def eig_hermitian(m) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix with eigenvalues in descending order."""
    m = check_hermitian(m)
    w, v = np.linalg.eigh(m)
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def _clip_psd(w: np.ndarray) -> np.ndarray:
    if w.size and w.min() < -CLIP_TOL:
        raise NotPSDError(f"negative eigenvalue {w.min():.3e} below -{CLIP_TOL}")
    return np.where(w < 0, 0.0, w)


def mat_fn(m, f: Callable[[np.ndarray], np.ndarray], on_support: bool = False, psd: bool = False) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of a Hermitian matrix.

    With ``on_support`` the function is evaluated only on eigenvalues above
    SUPPORT_TOL and zero eigenvalues are mapped to 0 (generalized inverse
    convention). ``psd`` enforces the clipping window for PSD inputs.
    """
    m = check_hermitian(m)
    w, v = np.linalg.eigh(m)
    if psd or on_support:
        w = _clip_psd(w)
    if on_support:
        mask = w > SUPPORT_TOL
        fw = np.zeros_like(w)
        if mask.any():
            fw[mask] = f(w[mask])
    else:
        fw = f(w)
    return (v * fw) @ v.conj().T


def logm2(m) -> np.ndarray:
    """Base-2 logarithm on the support."""
    return mat_fn(m, np.log2, on_support=True)


def powm(m, p: float) -> np.ndarray:
    """Fractional power of a PSD matrix; negative powers act on the support only."""
    if p == 0:
        return support_projector(m)
    return mat_fn(m, lambda w: w ** p, on_support=True)


def sqrtm_psd(m) -> np.ndarray:
    return mat_fn(m, np.sqrt, psd=True)


def support_projector(m, tol: float = SUPPORT_TOL) -> np.ndarray:
    m = check_hermitian(m)
    w, v = np.linalg.eigh(m)
    _clip_psd(w)
    vs = v[:, w > tol]
    return vs @ vs.conj().T


def eigvals_psd(m) -> np.ndarray:
    return _clip_psd(np.linalg.eigvalsh(check_hermitian(m)))


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_array(op))
    return out


def kron_op(a: Operator, b: Operator) -> Operator:
    return Operator(np.kron(a.data, b.data), a.dims + b.dims)


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (kept in original order)."""
    m = as_array(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    if int(np.prod(dims)) != m.shape[0]:
        raise ValueError(f"dims {dims} inconsistent with matrix of size {m.shape[0]}")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum subscripts: kept row/col axes get distinct letters, traced ones share
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows, cols = [], []
    for i in range(n):
        r = next(letters)
        rows.append(r)
        cols.append(r if i in traced else next(letters))
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


def partial_trace_op(m: Operator, keep: Iterable[int]) -> Operator:
    keep = sorted(set(keep))
    return Operator(partial_trace(m.data, m.dims, keep), tuple(m.dims[i] for i in keep) or (1,))


def permute_systems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``i`` is old factor ``perm[i]``."""
    m = as_array(m)
    n = len(dims)
    t = m.reshape(list(dims) * 2)
    axes = list(perm) + [p + n for p in perm]
    d = m.shape[0]
    return t.transpose(axes).reshape(d, d)


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary P with P M P^dagger == permute_systems(M, dims, perm)."""
    d = int(np.prod(dims))
    eye = np.eye(d).reshape(list(dims) + [d])
    return eye.transpose(list(perm) + [len(dims)]).reshape(d, d).astype(complex)


def trace_norm(m) -> float:
    m = as_array(m)
    if is_hermitian(m, 1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh(herm(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _psd_input(m) -> np.ndarray:
    m = check_hermitian(m)
    _clip_psd(np.linalg.eigvalsh(m))
    return m


def root_fidelity(rho, sigma) -> float:
    """||sqrt(rho) sqrt(sigma)||_1 for PSD inputs."""
    rho, sigma = _psd_input(rho), _psd_input(sigma)
    return float(np.sum(np.linalg.svd(sqrtm_psd(rho) @ sqrtm_psd(sigma), compute_uv=False)))


def fidelity(rho, sigma) -> float:
    """Generalized fidelity (||sqrt(rho)sqrt(sigma)||_1 + sqrt((1-tr rho)(1-tr sigma)))^2.

    Reduces to the squared root fidelity for normalized states.
    """
    rho, sigma = _psd_input(rho), _psd_input(sigma)
    tr_r = float(np.trace(rho).real)
    tr_s = float(np.trace(sigma).real)
    slack = max(0.0, 1 - tr_r) * max(0.0, 1 - tr_s)
    f = (root_fidelity(rho, sigma) + np.sqrt(slack)) ** 2
    return float(min(max(f, 0.0), 1.0))


def purified_distance(rho, sigma) -> float:
    return float(np.sqrt(max(0.0, 1.0 - fidelity(rho, sigma))))


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def max_entangled(d: int, normalized: bool = True) -> np.ndarray:
    """|Phi><Phi| on C^d (x) C^d with |Phi> = sum_i |ii>."""
    v = np.eye(d, dtype=complex).reshape(-1)
    if normalized:
        v = v / np.sqrt(d)
    return proj(v)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
