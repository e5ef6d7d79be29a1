# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled finite-volume kernels (hot inner loops of the Newton solver).

Mirrors singular_plap.kernels._python; selected automatically at import
when built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

BACKEND = "compiled"


cdef inline double _flux(double s, double p, double eps) nogil:
    return pow(s * s + eps * eps, (p - 2.0) / 2.0) * s


cdef inline double _flux_deriv(double s, double p, double eps) nogil:
    cdef double q = s * s + eps * eps
    return pow(q, (p - 4.0) / 2.0) * ((p - 1.0) * s * s + eps * eps)


def residual(const double[::1] u, const double[::1] g, const double[::1] h,
             const double[::1] wf, const double[::1] W, double p, double eps_grad, double eps_zero,
             bint left_dirichlet, bint include_mass):
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] r = out
    cdef Py_ssize_t i
    cdef double F_left = 0.0, F_right, s

    with nogil:
        for i in range(n - 1):
            s = (u[i + 1] - u[i]) / h[i]
            F_right = wf[i] * _flux(s, p, eps_grad)
            r[i] = -(F_right - F_left) / W[i]
            F_left = F_right
        r[n - 1] = F_left / W[n - 1]
        if include_mass:
            for i in range(n):
                r[i] += _flux(u[i], p, eps_zero)
        for i in range(n):
            r[i] -= g[i]
        r[n - 1] = u[n - 1]
        if left_dirichlet:
            r[0] = u[0]
    return out


def jacobian(const double[::1] u, const double[::1] h, const double[::1] wf,
             const double[::1] W, double p, double eps_grad, double eps_zero,
             bint left_dirichlet, bint include_mass):
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[double, ndim=1] lower_a = np.empty(n - 1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] diag_a = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] upper_a = np.empty(n - 1, dtype=np.float64)
    cdef double[::1] lower = lower_a
    cdef double[::1] diag = diag_a
    cdef double[::1] upper = upper_a
    cdef Py_ssize_t i
    cdef double dF_left = 0.0, dF, s

    with nogil:
        for i in range(n - 1):
            s = (u[i + 1] - u[i]) / h[i]
            dF = wf[i] * _flux_deriv(s, p, eps_grad) / h[i]
            diag[i] = (dF + dF_left) / W[i]
            upper[i] = -dF / W[i]
            lower[i] = -dF / W[i + 1]
            dF_left = dF
        diag[n - 1] = dF_left / W[n - 1]
        if include_mass:
            for i in range(n):
                diag[i] += _flux_deriv(u[i], p, eps_zero)
        diag[n - 1] = 1.0
        lower[n - 2] = 0.0
        if left_dirichlet:
            diag[0] = 1.0
            upper[0] = 0.0
    return lower_a, diag_a, upper_a


def tridiag_solve(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs):
    """Thomas algorithm; valid because the rows are diagonally dominant."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef cnp.ndarray[double, ndim=1] x_a = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] c_a = np.empty(n - 1, dtype=np.float64)
    cdef double[::1] x = x_a
    cdef double[::1] cp = c_a
    cdef Py_ssize_t i
    cdef double piv
    cdef bint ok = 1

    with nogil:
        piv = diag[0]
        if piv == 0.0:
            ok = 0
        else:
            cp[0] = upper[0] / piv
            x[0] = rhs[0] / piv
            for i in range(1, n):
                piv = diag[i] - lower[i - 1] * cp[i - 1]
                if piv == 0.0:
                    ok = 0
                    break
                if i < n - 1:
                    cp[i] = upper[i] / piv
                x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / piv
            if ok:
                for i in range(n - 2, -1, -1):
                    x[i] = x[i] - cp[i] * x[i + 1]
    if not ok or not np.all(np.isfinite(x_a)):
        return None
    return x_a
