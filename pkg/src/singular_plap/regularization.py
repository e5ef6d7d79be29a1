"""Approximation scheme for the singular problem.

The singular source f/u^alpha is replaced level by level: the data is
truncated at n and the denominator shifted by 1/n, so every level is a
regular monotone problem.  Levels are solved by Picard iteration on the
frozen-source solution map; consecutive levels warm-start each other and
the solutions increase with n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import PicardStalled, SingularPlapError
from .mesh import (
    GridFunction,
    Mesh,
    build_interval_mesh,
    build_radial_mesh,
    cell_gradient,
    integrate,
    integrate_cells,
)
from .pde import SolverOptions, _newton, first_eigenpair, solve_frozen

SOURCE_KINDS = ("constant", "power_cusp", "eigenfunction_power", "nodal")


@dataclass(frozen=True)
class SourceSpec:
    """Description of the data f: constant c, cusp r^(-gamma), a power of the
    first eigenfunction, or explicit nodal values."""

    kind: str
    value: float = 1.0
    gamma: float = 0.0
    beta: float = 1.0
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous problem: domain, exponents, data, and truncation schedule."""

    domain: str  # "interval" or "ball"
    dimension: int
    extent: float
    p: float
    alpha: float
    source: SourceSpec
    schedule: tuple[int, ...]

    def __post_init__(self):
        if self.p <= 1.0:
            raise ValueError("p must exceed 1")
        if self.alpha < 0.0:
            raise ValueError("alpha must be nonnegative")
        sched = tuple(int(n) for n in self.schedule)
        if not sched or any(n <= 0 for n in sched):
            raise ValueError("schedule must contain positive integers")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("schedule must be strictly increasing")
        object.__setattr__(self, "schedule", sched)

    def build_mesh(self, n_cells: int) -> Mesh:
        if self.domain == "interval":
            return build_interval_mesh(n_cells, self.extent)
        return build_radial_mesh(self.dimension, n_cells, self.extent)


def realize_source(spec: ProblemSpec, mesh: Mesh,
                   opts: SolverOptions | None = None,
                   phi: GridFunction | None = None) -> GridFunction:
    """Materialize the data f on a mesh.

    Power cusps are capped at the value one node away from the singular
    point, which keeps nodal values finite without changing integrability
    on the grid.  Eigenfunction powers compute the eigenfunction on demand
    unless one is supplied.
    """
    src = spec.source
    if src.kind == "constant":
        values = np.full(mesh.n_nodes, float(src.value))
    elif src.kind == "power_cusp":
        r = mesh.nodes
        values = np.empty(mesh.n_nodes)
        values[1:] = r[1:] ** (-src.gamma)
        values[0] = values[1]
    elif src.kind == "eigenfunction_power":
        if phi is None:
            phi = first_eigenpair(mesh, spec.p, opts or SolverOptions()).phi
        values = phi.values**src.beta
    else:
        values = np.asarray(src.values, dtype=float)
    f = GridFunction(mesh, values)
    if np.min(f.values) < 0.0 or np.max(f.values) <= 0.0:
        raise ValueError("source must be nonnegative and not identically zero")
    return f


def truncate_source(f: GridFunction, n: int) -> GridFunction:
    """Nodewise min(f, n)."""
    if n <= 0:
        raise ValueError("truncation level must be positive")
    return f.with_values(np.minimum(f.values, float(n)))


def singular_rhs(f_n: GridFunction, w: GridFunction, n: int,
                 alpha: float) -> GridFunction:
    """Nodewise f_n / (|w| + 1/n)^alpha; finite because the shift 1/n > 0."""
    if n <= 0:
        raise ValueError("level must be positive")
    return f_n.with_values(
        f_n.values / (np.abs(w.values) + 1.0 / n) ** alpha
    )


def t_eps(tau, eps: float):
    """Two-sided truncation max(min(tau, eps), -eps)."""
    return np.clip(tau, -eps, eps)


def gamma_map(mesh: Mesh, w: GridFunction, spec: ProblemSpec, n: int,
              sigma: float, opts: SolverOptions,
              f: GridFunction | None = None,
              v0: GridFunction | None = None) -> GridFunction:
    """Frozen-source solution map: solve with source sigma * f_n/(|w|+1/n)^alpha.

    Its fixed points at sigma = 1 are the level-n solutions; sigma = 0
    returns the zero function for every w.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    if f is None:
        f = realize_source(spec, mesh, opts)
    f_n = truncate_source(f, n)
    rhs = singular_rhs(f_n, w, n, spec.alpha)
    if sigma != 1.0:
        rhs = rhs.with_values(sigma * rhs.values)
    return solve_frozen(mesh, rhs, spec.p, opts, v0=v0)


@dataclass(frozen=True)
class LevelSolution:
    n: int
    u: GridFunction
    picard_iters: int
    converged: bool
    used_newton_fallback: bool = False


def _coupled_newton(mesh, spec, f_n_vals, n, u0, opts):
    """Damped Newton on the complete residual, singular term included.

    Fallback for oscillating Picard iterations; the extra diagonal
    alpha f_n/(u+1/n)^(alpha+1) is nonnegative, so it only strengthens
    diagonal dominance.
    """
    alpha = spec.alpha
    shift = 1.0 / n

    def g_fn(u):
        return f_n_vals / (np.abs(u) + shift) ** alpha

    def g_prime_fn(u):
        return alpha * f_n_vals / (np.abs(u) + shift) ** (alpha + 1.0)

    return _newton(mesh, spec.p, opts, u0, g_fn, g_prime_fn=g_prime_fn)


def solve_level(mesh: Mesh, spec: ProblemSpec, n: int, u_init: GridFunction,
                opts: SolverOptions, f: GridFunction | None = None,
                strict: bool = True) -> LevelSolution:
    """Level-n solution via Picard iteration on the frozen-source map.

    Stops when the relative L^p increment drops below picard_tol.  When a
    10-step window shows the increments oscillating, or decaying too slowly
    to converge within the iteration budget, the iteration switches to the
    fully coupled damped Newton from the current iterate.
    """
    if f is None:
        f = realize_source(spec, mesh, opts)
    f_n = truncate_source(f, n)
    f_n_vals = f_n.values
    v = u_init
    v_prev = None
    increments: list[float] = []
    for k in range(opts.max_picard_iters):
        rhs = singular_rhs(f_n, v, n, spec.alpha)
        v_new = solve_frozen(mesh, rhs, spec.p, opts, v0=v)
        scale = max(1.0, analysis.lebesgue_norm(mesh, v_new, max(spec.p, 1.0)))
        diff = v_new.with_values(v_new.values - v.values)
        inc = analysis.lebesgue_norm(mesh, diff, max(spec.p, 1.0)) / scale
        increments.append(inc)
        v_prev, v = v, v_new
        if inc <= opts.picard_tol:
            return LevelSolution(n, v, picard_iters=k + 1, converged=True)
        if k >= 10:
            rate = (increments[-1] / increments[-11]) ** 0.1
            left = opts.max_picard_iters - k - 1
            hopeless = (
                rate >= 1.0
                or inc * rate**left > opts.picard_tol
            )
            if hopeless:
                # consecutive iterates of the antitone map bracket the fixed
                # point, so their average is a safe Newton start; the level's
                # warm start (a subsolution) is the backup
                mid = 0.5 * (v.values + v_prev.values)
                try:
                    u = _coupled_newton(mesh, spec, f_n_vals, n, mid, opts)
                except SingularPlapError:
                    u = _coupled_newton(mesh, spec, f_n_vals, n,
                                        u_init.values, opts)
                return LevelSolution(n, GridFunction(mesh, u),
                                     picard_iters=k + 1, converged=True,
                                     used_newton_fallback=True)
    if strict:
        raise PicardStalled(
            f"level {n}: no convergence in {opts.max_picard_iters} iterations "
            f"(last increment {increments[-1]:.3e})"
        )
    return LevelSolution(n, v, picard_iters=opts.max_picard_iters,
                         converged=False)


@dataclass
class SweepReport:
    """Per-level records across the truncation schedule."""

    spec: ProblemSpec
    n_cells: int
    margin: float
    levels: list[LevelSolution] = field(default_factory=list)
    interior_min: list[float] = field(default_factory=list)
    monotonicity_violation: float = 0.0
    partial: bool = False
    failures: list[tuple[int, str]] = field(default_factory=list)
    norm_table: "analysis.NormTable | None" = None


def _interior_mask(mesh: Mesh, margin: float) -> np.ndarray:
    lo = margin if mesh.left_is_dirichlet else 0.0
    hi = mesh.extent - margin
    return (mesh.nodes >= lo - 1e-12) & (mesh.nodes <= hi + 1e-12)


def sweep_levels(mesh: Mesh, spec: ProblemSpec, opts: SolverOptions,
                 margin: float | None = None) -> SweepReport:
    """Solve every level of the schedule, warm-starting from the previous one.

    Records the worst nodewise violation of the expected increase in n and
    the minimum over the interior subdomain at the given margin (default
    10% of the extent).  A failed level marks the report partial instead of
    aborting the sweep.
    """
    if margin is None:
        margin = 0.1 * mesh.extent
    f = realize_source(spec, mesh, opts)
    report = SweepReport(spec=spec, n_cells=mesh.n_cells, margin=margin)
    mask = _interior_mask(mesh, margin)

    n0 = spec.schedule[0]
    current = solve_frozen(mesh, truncate_source(f, n0), spec.p, opts)
    prev_u = None
    for n in spec.schedule:
        try:
            level = solve_level(mesh, spec, n, current, opts, f=f)
        except SingularPlapError as exc:
            report.partial = True
            report.failures.append((n, str(exc)))
            continue
        report.levels.append(level)
        report.interior_min.append(float(np.min(level.u.values[mask])))
        if prev_u is not None:
            gap = float(np.max(np.maximum(prev_u - level.u.values, 0.0)))
            report.monotonicity_violation = max(
                report.monotonicity_violation, gap
            )
        prev_u = level.u.values
        current = level.u
    return report


@dataclass(frozen=True)
class CauchyDiagnostic:
    l1_gradient_gaps: list[float]
    exceedance_measures: list[float]


def cauchy_gradient_diagnostic(levels: list[LevelSolution], mesh: Mesh,
                               eps: float) -> CauchyDiagnostic:
    """For consecutive levels: int |grad(u_n - u_k)| and measure{|u_n-u_k| > eps}."""
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    gaps = []
    measures = []
    for a, b in zip(levels, levels[1:]):
        diff = GridFunction(mesh, b.u.values - a.u.values)
        gaps.append(integrate_cells(mesh, np.abs(cell_gradient(mesh, diff))))
        saturated = np.abs(t_eps(diff.values, eps)) >= eps
        indicator = GridFunction(mesh, saturated.astype(float))
        measures.append(integrate(mesh, indicator))
    return CauchyDiagnostic(gaps, measures)
