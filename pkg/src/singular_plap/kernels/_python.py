"""NumPy reference implementation of the finite-volume kernels.

All three kernels operate on raw nodal arrays; geometry (cell widths, face
weights, control volumes) is passed in so the routines stay mesh-agnostic.
The compiled backend in ``singular_plap._fvcore`` mirrors these signatures
exactly.
"""

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "python"


def _flux(s, p, eps):
    # smoothed |s|^(p-2) s; exact for p = 2
    return (s * s + eps * eps) ** ((p - 2.0) / 2.0) * s


def _flux_deriv(s, p, eps):
    q = s * s + eps * eps
    return q ** ((p - 4.0) / 2.0) * ((p - 1.0) * s * s + eps * eps)


def residual(u, g, h, wf, W, p, eps_grad, eps_zero, left_dirichlet, include_mass):
    """Nodal residual of the conservative scheme.

    Interior rows: -(F[i] - F[i-1]) / W[i] + b(u[i]) - g[i] with face flux
    F = wf * (s^2+eps^2)^((p-2)/2) s and zero flux through the domain ends.
    Dirichlet rows carry the constraint residual u[i].
    """
    s = np.diff(u) / h
    F = wf * _flux(s, p, eps_grad)
    r = np.empty_like(u)
    r[1:-1] = -(F[1:] - F[:-1]) / W[1:-1]
    r[0] = -F[0] / W[0]
    r[-1] = F[-1] / W[-1]
    if include_mass:
        r += _flux(u, p, eps_zero)
    r -= g
    r[-1] = u[-1]
    if left_dirichlet:
        r[0] = u[0]
    return r


def jacobian(u, h, wf, W, p, eps_grad, eps_zero, left_dirichlet, include_mass):
    """Exact tridiagonal derivative of ``residual`` w.r.t. nodal values.

    Returns (lower, diag, upper) with lower[j] = J[j+1, j] and
    upper[j] = J[j, j+1]; Dirichlet rows are identity rows.
    """
    n = u.shape[0]
    s = np.diff(u) / h
    dF = wf * _flux_deriv(s, p, eps_grad) / h
    diag = np.empty(n)
    lower = np.empty(n - 1)
    upper = np.empty(n - 1)
    diag[1:-1] = (dF[1:] + dF[:-1]) / W[1:-1]
    diag[0] = dF[0] / W[0]
    diag[-1] = dF[-1] / W[-1]
    upper[:] = -dF / W[:-1]
    lower[:] = -dF / W[1:]
    if include_mass:
        diag += _flux_deriv(u, p, eps_zero)
    diag[-1] = 1.0
    lower[-1] = 0.0
    if left_dirichlet:
        diag[0] = 1.0
        upper[0] = 0.0
    return lower, diag, upper


def tridiag_solve(lower, diag, upper, rhs):
    """Solve the tridiagonal system; returns None if the factorization fails."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    try:
        x = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)):
        return None
    return x
