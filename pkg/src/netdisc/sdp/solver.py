"""Primal-dual interior point solver for small block-diagonal SDPs.

Standard form over real symmetric blocks ``X = diag(X_1, ..., X_K)``::

    min <C, X>   s.t.  <A_i, X> = b_i,  X >= 0

Blocks of size one are nonnegative scalars. Iterates follow the infeasible
path-following scheme with Nesterov-Todd scaling and a Mehrotra corrector.
Complex Hermitian problems are realified by the modeling layer in
:mod:`netdisc.sdp.model`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"

FEAS_TOL = 1e-9
GAP_TOL = 1e-7
STEP = 0.95
STALL = 8


@dataclass
class StandardForm:
    sizes: list[int]
    c: np.ndarray  # (N,) objective in svec coordinates
    a: np.ndarray  # (m, N)
    b: np.ndarray  # (m,)

    @property
    def offsets(self) -> list[int]:
        out, o = [], 0
        for n in self.sizes:
            out.append(o)
            o += n * (n + 1) // 2
        return out + [o]


@dataclass
class RawSolution:
    status: str
    x: list[np.ndarray]
    z: list[np.ndarray]
    y: np.ndarray
    primal: float
    dual: float
    iterations: int
    primal_residual: float
    dual_residual: float
    history: list = field(default_factory=list)


_SVEC_CACHE: dict[int, tuple] = {}


def _svec_index(n: int):
    if n not in _SVEC_CACHE:
        iu = np.triu_indices(n)
        scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        _SVEC_CACHE[n] = (iu, scale)
    return _SVEC_CACHE[n]


def svec(m: np.ndarray) -> np.ndarray:
    """Isometric vectorization of symmetric matrices (works on stacks)."""
    n = m.shape[-1]
    iu, scale = _svec_index(n)
    return m[..., iu[0], iu[1]] * scale


def smat(v: np.ndarray, n: int) -> np.ndarray:
    iu, scale = _svec_index(n)
    out = np.zeros(v.shape[:-1] + (n, n))
    vals = v / scale
    out[..., iu[0], iu[1]] = vals
    out[..., iu[1], iu[0]] = vals
    return out


def _blocks(v: np.ndarray, sf: StandardForm) -> list[np.ndarray]:
    off = sf.offsets
    return [smat(v[off[k]:off[k + 1]], n) for k, n in enumerate(sf.sizes)]


def _flat(mats: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([svec(m) for m in mats]) if mats else np.zeros(0)


def reduce_rows(a: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Replace (a, b) by an equivalent full-row-rank system.

    Returns ``(a', b', consistent)``; ``consistent`` is False when ``b`` has a
    component outside the range of ``a`` (no solution to ``a x = b``).
    """
    if a.shape[0] == 0:
        return a, b, True
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    ub = u.T @ b
    resid = np.linalg.norm(b - u[:, :r] @ ub[:r])
    consistent = resid <= 1e-8 * max(1.0, np.linalg.norm(b))
    return s[:r, None] * vt[:r], ub[:r], consistent


def _chol(m: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx PSD (x positive definite)."""
    if x.shape[0] == 1:
        return -x[0, 0] / dx[0, 0] if dx[0, 0] < 0 else np.inf
    lx = _chol(x)
    if lx is None:
        return 0.0
    li = np.linalg.solve(lx, dx)
    m = np.linalg.solve(lx, li.T)
    lam = np.linalg.eigvalsh((m + m.T) / 2)[0]
    return -1.0 / lam if lam < 0 else np.inf


def _max_step_diag(il: np.ndarray, d: np.ndarray) -> float:
    """Largest alpha with diag(lam) + alpha d PSD, given il = lam^(-1/2)."""
    m = il[:, None] * d * il[None, :]
    lam = np.linalg.eigvalsh((m + m.T) / 2)[0]
    return -1.0 / lam if lam < 0 else np.inf


def _nt_scaling(x: np.ndarray, z: np.ndarray):
    """NT scaling matrix r with W = r r^T, r^T z r = r^{-1} x r^{-T} = diag(lam)."""
    lx = _chol(x)
    lz = _chol(z)
    if lx is None or lz is None:
        raise np.linalg.LinAlgError("iterate left the interior")
    u, s, vt = np.linalg.svd(lz.T @ lx)
    r = lx @ vt.T / np.sqrt(s)
    rinv = (np.sqrt(s)[:, None] * vt) @ np.linalg.inv(lx)
    return r, rinv, s


def solve_standard(sf: StandardForm, feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL,
                   max_iter: int = 100) -> RawSolution:
    sizes = sf.sizes
    a, b, consistent = reduce_rows(np.asarray(sf.a, float), np.asarray(sf.b, float))
    c = np.asarray(sf.c, float)
    if not consistent:
        n_tot = sum(sizes)
        zero = [np.zeros((n, n)) for n in sizes]
        return RawSolution(INFEASIBLE, zero, zero, np.zeros(len(sf.b)), np.inf, np.inf, 0, np.inf, 0.0,
                           [{"reason": "inconsistent equality constraints", "n": n_tot}])
    m = a.shape[0]
    n_tot = sum(sizes)
    off = sf.offsets
    a_blocks = [smat(a[:, off[k]:off[k + 1]], n) for k, n in enumerate(sizes)]  # (m, n, n)
    norm_b = max(1.0, np.linalg.norm(b))
    norm_c = max(1.0, np.linalg.norm(c))
    a_norms = np.linalg.norm(a, axis=1) if m else np.zeros(0)
    xi_p = max(10.0, np.sqrt(n_tot), np.sqrt(n_tot) * np.max((1 + np.abs(b)) / (1 + a_norms), initial=0.0))
    xi_d = max(10.0, np.sqrt(n_tot), np.max(a_norms, initial=0.0), np.linalg.norm(c))
    x = [xi_p * np.eye(n) for n in sizes]
    z = [xi_d * np.eye(n) for n in sizes]
    y = np.zeros(m)
    # A A^T is fixed and well conditioned after row reduction; used to keep
    # A dX = rp exact when W becomes ill conditioned near the optimum
    gram = np.linalg.cholesky(a @ a.T) if m else None
    history = []
    status = MAX_ITER
    it = 0
    best = (np.inf, 0, x, z, y)

    def residuals(xv, zv, yv):
        rp = b - a @ xv
        rd = c - a.T @ yv - zv
        return rp, rd

    for it in range(1, max_iter + 1):
        xv, zv = _flat(x), _flat(z)
        rp, rd = residuals(xv, zv, y)
        pobj, dobj = float(c @ xv), float(b @ y)
        mu = float(xv @ zv) / n_tot
        pres = np.linalg.norm(rp) / norm_b
        dres = np.linalg.norm(rd) / norm_c
        gap = abs(pobj - dobj)
        history.append({"it": it, "pobj": pobj, "dobj": dobj, "pres": pres, "dres": dres, "mu": mu})
        rel_gap = gap / max(1.0, min(abs(pobj), abs(dobj)))
        if pres <= feas_tol and dres <= feas_tol and rel_gap <= gap_tol:
            status = OPTIMAL
            break
        merit = max(pres / feas_tol, dres / feas_tol, rel_gap / gap_tol)
        if merit < best[0]:
            best = (merit, it, [xk.copy() for xk in x], [zk.copy() for zk in z], y.copy())
        elif it - best[1] >= STALL:
            history.append({"it": it, "error": "stalled"})
            break
        # Farkas rays: y with A^T y <= 0, b^T y > 0 (primal infeasible) or
        # x >= 0 with A x = 0, c^T x < 0 (unbounded)
        if m and dobj > 1e-12 and np.linalg.norm(y) > 1e7 * norm_c:
            ray = _blocks(-(a.T @ y) / dobj, sf)
            if min(np.linalg.eigvalsh(r)[0] for r in ray) >= -1e-6:
                status = INFEASIBLE
                break
        if pobj < -1e-12 and np.linalg.norm(xv) > 1e7 * norm_b:
            if np.linalg.norm(a @ xv) / -pobj <= 1e-6:
                status = UNBOUNDED
                break
        try:
            scal = [_nt_scaling(xk, zk) for xk, zk in zip(x, z)]
        except np.linalg.LinAlgError:
            status = MAX_ITER
            history.append({"it": it, "error": "loss of positive definiteness"})
            break
        ws = [r @ r.T for r, _, _ in scal]
        rd_b = _blocks(rd, sf)
        # Schur complement M_ij = <A_i, W A_j W>
        schur = np.zeros((m, m))
        for k, n in enumerate(sizes):
            wk = ws[k]
            wa = wk @ a_blocks[k] @ wk
            schur += a[:, off[k]:off[k + 1]] @ svec(wa).T
        schur = (schur + schur.T) / 2
        lm = _chol(schur + 1e-14 * np.trace(schur) / max(m, 1) * np.eye(m)) if m else None

        def solve_dir(rhs_blocks):
            # dX + W dZ W = R, A dX = rp, A^T dy + dZ = rd
            t = [rhs_blocks[k] - ws[k] @ rd_b[k] @ ws[k] for k in range(len(sizes))]
            rhs = rp - a @ _flat(t)
            if m == 0:
                dy = np.zeros(0)
            elif lm is not None:
                dy = np.linalg.solve(lm.T, np.linalg.solve(lm, rhs))
            else:
                dy = np.linalg.lstsq(schur, rhs, rcond=None)[0]
            dz = _blocks(rd - a.T @ dy, sf)
            dx = [rhs_blocks[k] - ws[k] @ dz[k] @ ws[k] for k in range(len(sizes))]
            dxv = _flat([(d + d.T) / 2 for d in dx])
            if m:
                err = rp - a @ dxv
                dxv = dxv + a.T @ np.linalg.solve(gram.T, np.linalg.solve(gram, err))
            return _blocks(dxv, sf), dy, dz

        def steps(dx, dz):
            # step lengths measured in the scaled space, where x and z are diag(lam)
            ap, ad = np.inf, np.inf
            for (r, rinv, lam), dxk, dzk in zip(scal, dx, dz):
                il = 1 / np.sqrt(lam)
                ap = min(ap, _max_step_diag(il, rinv @ dxk @ rinv.T))
                ad = min(ad, _max_step_diag(il, r.T @ dzk @ r))
            return min(1.0, STEP * ap), min(1.0, STEP * ad)

        # predictor
        r_aff = [-xk for xk in x]
        dx_a, dy_a, dz_a = solve_dir(r_aff)
        ap, ad = steps(dx_a, dz_a)
        mu_aff = sum(float(np.sum((xk + ap * dxk) * (zk + ad * dzk)))
                     for xk, dxk, zk, dzk in zip(x, dx_a, z, dz_a)) / n_tot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector in the scaled space where x and z are both diag(lam)
        def corrector(sig, second_order):
            out = []
            for k, (r, rinv, lam) in enumerate(scal):
                rhs = 2 * sig * mu * np.eye(len(lam)) - 2 * np.diag(lam ** 2)
                if second_order:
                    dxs = rinv @ dx_a[k] @ rinv.T
                    dzs = r.T @ dz_a[k] @ r
                    rhs = rhs - (dxs @ dzs + dzs @ dxs)
                t = rhs / (lam[:, None] + lam[None, :])
                out.append(r @ t @ r.T)
            return solve_dir(out)

        dx, dy, dz = corrector(sigma, True)
        ap, ad = steps(dx, dz)
        if min(ap, ad) < 0.2:
            # short step: the iterate is badly centered, so recentre instead
            dx, dy, dz = corrector(max(sigma, 0.5), False)
            ap, ad = steps(dx, dz)
        x = [xk + ap * dk for xk, dk in zip(x, dx)]
        z = [zk + ad * dk for zk, dk in zip(z, dz)]
        y = y + ad * dy
        x = [(xk + xk.T) / 2 for xk in x]
        z = [(zk + zk.T) / 2 for zk in z]

    if status == MAX_ITER and best[0] < np.inf:
        # degenerate problems can stall short of the requested accuracy;
        # fall back to the best iterate seen and report it honestly
        _, _, x, z, y = best
    xv, zv = _flat(x), _flat(z)
    rp, rd = residuals(xv, zv, y)
    return RawSolution(status, x, z, y, float(c @ xv), float(b @ y), it,
                       float(np.linalg.norm(rp) / norm_b), float(np.linalg.norm(rd) / norm_c), history)
