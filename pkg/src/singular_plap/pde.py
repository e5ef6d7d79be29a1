"""Discrete quasilinear operator, damped Newton solves, and the first eigenpair.

The operator is the conservative finite-volume form of
-(1/w) d/dr (w a(u') u') + b(u) with a(s) = (s^2 + eps^2)^((p-2)/2) and
b(u) = (u^2 + eps^2)^((p-2)/2) u.  Both degenerate nonlinearities are
smoothed because for p != 2 the exact coefficients cannot be Newton
linearized at vanishing slope or value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    NewtonDiverged,
    NoConvergence,
    NumericError,
    SingularJacobian,
)
from .mesh import GridFunction, Mesh, _check_on, integrate, integrate_cells

CONTINUATION_EPS = 1e-4  # first stage of the eps continuation for p != 2


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the damped Newton and outer fixed-point iterations."""

    eps_grad: float = 1e-8
    eps_zero: float = 1e-8
    # absolute residual floor scales with the source magnitude (large near
    # the boundary at deep truncation levels), so 1e-10 is not reachable
    # there in double precision
    newton_tol: float = 1e-9
    max_newton_iters: int = 80
    damping_initial: float = 1.0
    damping_factor: float = 0.5
    damping_min_step: float = 2.0**-20
    picard_tol: float = 1e-8
    max_picard_iters: int = 200

    def __post_init__(self):
        if not (0.0 < self.eps_grad < 1.0 and 0.0 < self.eps_zero < 1.0):
            raise ValueError("smoothing parameters must lie in (0, 1)")
        if self.newton_tol <= 0.0 or self.picard_tol <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Tridiagonal:
    """Tridiagonal matrix record: lower[j]=A[j+1,j], upper[j]=A[j,j+1]."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = kernels.tridiag_solve(self.lower, self.diag, self.upper, rhs)
        if x is None:
            raise SingularJacobian("tridiagonal factorization failed")
        return x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y


def _validate_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite input")


def _residual_vec(mesh, u, g, p, eps_grad, eps_zero, include_mass=True):
    return kernels.residual(
        u, g, mesh.cell_widths, mesh.face_weights, mesh.node_volumes,
        p, eps_grad, eps_zero, mesh.left_is_dirichlet, include_mass,
    )


def _jacobian_tri(mesh, u, p, eps_grad, eps_zero, include_mass=True):
    lower, diag, upper = kernels.jacobian(
        u, mesh.cell_widths, mesh.face_weights, mesh.node_volumes,
        p, eps_grad, eps_zero, mesh.left_is_dirichlet, include_mass,
    )
    return Tridiagonal(lower, diag, upper)


def residual(mesh: Mesh, u: GridFunction, g: GridFunction, p: float,
             opts: SolverOptions) -> GridFunction:
    """Nodal residual; Dirichlet rows carry the constraint value u_i."""
    _check_on(mesh, u)
    _check_on(mesh, g)
    _validate_finite(u.values, g.values)
    r = _residual_vec(mesh, u.values, g.values, p, opts.eps_grad, opts.eps_zero)
    return GridFunction(mesh, r)


def jacobian(mesh: Mesh, u: GridFunction, p: float,
             opts: SolverOptions) -> Tridiagonal:
    """Exact derivative of the smoothed residual; constrained rows are identity."""
    _check_on(mesh, u)
    _validate_finite(u.values)
    return _jacobian_tri(mesh, u.values, p, opts.eps_grad, opts.eps_zero)


def _newton(mesh, p, opts, u0, g_fn, g_prime_fn=None, eps_grad=None,
            eps_zero=None, tol=None, clip=True):
    """Damped Newton with residual-norm backtracking and nonnegativity clipping.

    g_fn(u) returns the source vector; g_prime_fn(u), when given, the
    diagonal contribution -d g / d u added to the Jacobian (used by the
    fully coupled solves).  The tolerance is absolute for unit-scale
    sources and relative to sup|g| beyond that: residual rows inherit the
    source magnitude, so an absolute target below the rounding floor of a
    large source cannot be met in double precision.
    """
    eps_g = opts.eps_grad if eps_grad is None else eps_grad
    eps_z = opts.eps_zero if eps_zero is None else eps_zero
    tol = opts.newton_tol if tol is None else tol

    u = np.array(u0, dtype=float)
    u[-1] = 0.0
    if mesh.left_is_dirichlet:
        u[0] = 0.0
    if clip:
        np.maximum(u, 0.0, out=u)

    g = g_fn(u)
    r = _residual_vec(mesh, u, g, p, eps_g, eps_z)
    rnorm = float(np.max(np.abs(r)))
    for _ in range(opts.max_newton_iters):
        if rnorm <= tol * max(1.0, float(np.max(np.abs(g)))):
            return u
        tri = _jacobian_tri(mesh, u, p, eps_g, eps_z)
        if g_prime_fn is not None:
            extra = g_prime_fn(u)
            diag = tri.diag.copy()
            diag[1:-1] += extra[1:-1]
            if not mesh.left_is_dirichlet:
                diag[0] += extra[0]
            tri = Tridiagonal(tri.lower, diag, tri.upper)
        delta = tri.solve(-r)
        step = opts.damping_initial
        while True:
            u_try = u + step * delta
            if clip:
                np.maximum(u_try, 0.0, out=u_try)
            g_try = g_fn(u_try)
            r_try = _residual_vec(mesh, u_try, g_try, p, eps_g, eps_z)
            r_try_norm = float(np.max(np.abs(r_try)))
            if math.isfinite(r_try_norm) and r_try_norm < rnorm:
                break
            step *= opts.damping_factor
            if step < opts.damping_min_step:
                raise NewtonDiverged(
                    f"line search underflow at residual {rnorm:.3e}"
                )
        u, g, r, rnorm = u_try, g_try, r_try, r_try_norm
    raise NewtonDiverged(
        f"no convergence in {opts.max_newton_iters} iterations "
        f"(residual {rnorm:.3e}, tol {tol:.1e})"
    )


def _linear_solve(mesh, gvec, opts):
    # p = 2 makes the operator linear; one Newton step from zero is exact
    zero = np.zeros(mesh.n_nodes)
    return _newton(mesh, 2.0, opts, zero, lambda _u: gvec)


def solve_frozen(mesh: Mesh, g: GridFunction, p: float, opts: SolverOptions,
                 v0: GridFunction | None = None) -> GridFunction:
    """Solve the monotone problem with frozen nonnegative source g.

    For p != 2 the solve runs a single eps continuation step (coarse
    smoothing first, target smoothing second) unless a warm start ``v0``
    already converges directly.  Negative iterates are clipped; the
    returned function satisfies the unclipped residual tolerance.
    """
    _check_on(mesh, g)
    _validate_finite(g.values)
    if np.min(g.values) < 0.0:
        raise ValueError("frozen source must be nonnegative")
    gvec = g.values
    g_fn = lambda _u: gvec  # noqa: E731

    if p == 2.0:
        u0 = v0.values if v0 is not None else np.zeros(mesh.n_nodes)
        return GridFunction(mesh, _newton(mesh, p, opts, u0, g_fn))

    if v0 is not None:
        try:
            return GridFunction(mesh, _newton(mesh, p, opts, v0.values, g_fn))
        except NewtonDiverged:
            pass  # fall through to continuation from the warm start
        start = v0.values
    else:
        start = _linear_solve(mesh, gvec, opts)

    coarse = max(opts.eps_grad, CONTINUATION_EPS)
    stage_tol = max(opts.newton_tol, 1e-8)
    u = _newton(mesh, p, opts, start, g_fn, eps_grad=coarse,
                eps_zero=max(opts.eps_zero, CONTINUATION_EPS), tol=stage_tol)
    u = _newton(mesh, p, opts, u, g_fn)
    return GridFunction(mesh, u)


def energy(mesh: Mesh, v: GridFunction, g: GridFunction, p: float) -> float:
    """J(v) = (1/p) int |grad v|^p + (1/p) int |v|^p - int g v."""
    _check_on(mesh, v)
    _check_on(mesh, g)
    slopes = np.diff(v.values) / mesh.cell_widths
    grad_term = integrate_cells(mesh, np.abs(slopes) ** p)
    mass_term = integrate(mesh, GridFunction(mesh, np.abs(v.values) ** p))
    source_term = integrate(mesh, GridFunction(mesh, g.values * v.values))
    return (grad_term + mass_term) / p - source_term


@dataclass(frozen=True)
class Eigenpair:
    """First eigenpair of the p-Laplacian: positive, sup-normalized."""

    lam: float
    phi: GridFunction


def _rayleigh_parts(mesh, phi, p):
    slopes = np.diff(phi) / mesh.cell_widths
    num = integrate_cells(mesh, np.abs(slopes) ** p)
    lumped = mesh.volume_constant * mesh.node_quadrature_weights()
    den = float(np.sum(lumped * np.abs(phi) ** p))
    return num, den, lumped


def first_eigenpair(mesh: Mesh, p: float, opts: SolverOptions,
                    max_iters: int = 2000,
                    phi0: GridFunction | None = None) -> Eigenpair:
    """Minimize the Rayleigh quotient int|grad phi|^p / int|phi|^p.

    Preconditioned projected gradient descent: the search direction is the
    gradient solved through the current flux Jacobian, the step is halved
    until the quotient decreases, negatives are clipped and the iterate is
    renormalized after every step.  The default initial guess is the first
    linear-diffusion mode shape (positive, so descent reaches the unique
    positive minimizer); any positive-part guess may be supplied instead,
    and the result does not depend on its scale.
    """
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    if phi0 is not None:
        phi = np.maximum(phi0.values.copy(), 0.0)
    else:
        x = mesh.nodes / mesh.extent
        if mesh.left_is_dirichlet:
            phi = np.sin(math.pi * x)
        else:
            phi = np.cos(0.5 * math.pi * x)
    phi[-1] = 0.0
    if mesh.left_is_dirichlet:
        phi[0] = 0.0

    zero_g = np.zeros(mesh.n_nodes)
    num, den, lumped = _rayleigh_parts(mesh, phi, p)
    phi /= den ** (1.0 / p)
    rq = num / den

    # node mass in the same row scaling (1/W) the flux Jacobian rows use, so
    # the preconditioned step reduces to inverse iteration when p = 2
    mass_scale = lumped / (mesh.volume_constant * mesh.node_volumes)

    tol = max(opts.newton_tol, 1e-13)
    stable = 0
    converged = False
    for _ in range(max_iters):
        flux_rows = _residual_vec(mesh, phi, zero_g, p, opts.eps_grad,
                                  opts.eps_zero, include_mass=False)
        # smoothed |phi|^(p-2) phi: avoids inf * 0 at zero nodes for p < 2
        mass_term = (phi * phi + opts.eps_zero**2) ** ((p - 2.0) / 2.0) * phi
        grad = flux_rows - rq * mass_scale * mass_term
        grad[-1] = 0.0
        if mesh.left_is_dirichlet:
            grad[0] = 0.0

        tri = _jacobian_tri(mesh, phi, p, opts.eps_grad, opts.eps_zero,
                            include_mass=False)
        direction = tri.solve(grad)

        step = 1.0
        accepted = False
        while step >= opts.damping_min_step:
            cand = np.maximum(phi - step * direction, 0.0)
            cand[-1] = 0.0
            if mesh.left_is_dirichlet:
                cand[0] = 0.0
            cnum, cden, _ = _rayleigh_parts(mesh, cand, p)
            if cden > 0.0 and cnum / cden < rq:
                new_rq = cnum / cden
                phi = cand / cden ** (1.0 / p)
                accepted = True
                break
            step *= 0.5

        if not accepted:
            converged = True  # stationary within line-search resolution
            break
        rel_change = (rq - new_rq) / max(abs(new_rq), 1e-300)
        rq = new_rq
        stable = stable + 1 if rel_change <= tol else 0
        if stable >= 3:
            converged = True
            break
    if not converged:
        raise NoConvergence("Rayleigh descent did not stabilize")

    top = float(np.max(phi))
    if top <= 0.0:
        raise NoConvergence("descent collapsed to the zero function")
    return Eigenpair(lam=rq, phi=GridFunction(mesh, phi / top))
