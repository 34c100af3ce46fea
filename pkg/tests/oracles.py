"""Independent reference solvers used only by the tests."""
import itertools

import cvxopt
import numpy as np
from scipy.optimize import linprog

cvxopt.solvers.options.update(show_progress=False, abstol=1e-9, reltol=1e-9, feastol=1e-9)


def _herm_basis(d):
    out = []
    for i in range(d):
        m = np.zeros((d, d), complex)
        m[i, i] = 1
        out.append(m)
    for i, j in itertools.combinations(range(d), 2):
        m = np.zeros((d, d), complex)
        m[i, j] = m[j, i] = 1 / np.sqrt(2)
        out.append(m)
        m = np.zeros((d, d), complex)
        m[i, j], m[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
        out.append(m)
    return out


def _real(m):
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def _col(m):
    return _real(m).reshape(-1, order="F")


def cvx_hypothesis_test(rho, sigma, eps):
    """min tr(Q sigma) s.t. tr(Q rho) >= 1 - eps, 0 <= Q <= 1, in cvxopt."""
    d = rho.shape[0]
    basis = _herm_basis(d)
    c = np.array([np.trace(b @ sigma).real for b in basis])
    gl = np.array([[-np.trace(b @ rho).real for b in basis]])
    hl = np.array([-(1 - eps)])
    g_pos = np.column_stack([-_col(b) for b in basis])
    g_le = np.column_stack([_col(b) for b in basis])
    res = cvxopt.solvers.sdp(cvxopt.matrix(c), Gl=cvxopt.matrix(gl), hl=cvxopt.matrix(hl),
                             Gs=[cvxopt.matrix(g_pos), cvxopt.matrix(g_le)],
                             hs=[cvxopt.matrix(np.zeros((2 * d, 2 * d))), cvxopt.matrix(_real(np.eye(d)))])
    return float(res["primal objective"])


def cvx_min_error(p, rho1, rho2):
    """min p tr((1-Q) rho1) + (1-p) tr(Q rho2) over 0 <= Q <= 1, in cvxopt."""
    d = rho1.shape[0]
    basis = _herm_basis(d)
    c = np.array([np.trace(b @ ((1 - p) * rho2 - p * rho1)).real for b in basis])
    g_pos = np.column_stack([-_col(b) for b in basis])
    g_le = np.column_stack([_col(b) for b in basis])
    res = cvxopt.solvers.sdp(cvxopt.matrix(c), Gs=[cvxopt.matrix(g_pos), cvxopt.matrix(g_le)],
                             hs=[cvxopt.matrix(np.zeros((2 * d, 2 * d))), cvxopt.matrix(_real(np.eye(d)))])
    return float(res["primal objective"]) + p * np.trace(rho1).real


def lp_beta_iid(p, q, eps, n):
    """Neyman-Pearson over all k^n strings as a plain LP (no type grouping)."""
    strings = list(itertools.product(range(len(p)), repeat=n))
    pn = np.array([np.prod([p[i] for i in s]) for s in strings])
    qn = np.array([np.prod([q[i] for i in s]) for s in strings])
    res = linprog(qn, A_ub=[-pn], b_ub=[-(1 - eps)], bounds=[(0, 1)] * len(pn), method="highs")
    return float(res.fun)
