import math

import numpy as np
import pytest
import sympy
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from singular_plap.errors import NumericError
from singular_plap.mesh import (
    GridFunction,
    build_interval_mesh,
    build_radial_mesh,
    integrate,
)
from singular_plap.pde import (
    SolverOptions,
    energy,
    first_eigenpair,
    jacobian,
    residual,
    solve_frozen,
)

OPTS = SolverOptions()


# ---------------------------------------------------------------- residual

def test_residual_zero_input():
    mesh = build_interval_mesh(32, 1.0)
    r = residual(mesh, GridFunction.zeros(mesh), GridFunction.zeros(mesh),
                 2.0, OPTS)
    np.testing.assert_allclose(r.values, 0.0, atol=1e-14)


def test_residual_sin_truncation_second_order():
    # -u'' + u = 2 sin(x) is satisfied exactly by sin; nodal truncation O(h^2)
    sups = []
    for cells in (64, 128):
        mesh = build_interval_mesh(cells, math.pi)
        u = GridFunction(mesh, np.sin(mesh.nodes))
        g = GridFunction(mesh, 2.0 * np.sin(mesh.nodes))
        r = residual(mesh, u, g, 2.0, OPTS)
        sups.append(np.max(np.abs(r.values[1:-1])))
        h = math.pi / cells
        assert sups[-1] <= 0.5 * h * h
    assert sups[0] / sups[1] >= 3.5


def _symbolic_source(p):
    # closed-form differentiation of the unsmoothed operator for v = x(1-x)
    x = sympy.Symbol("x")
    v = x * (1 - x)
    flux = sympy.Abs(v.diff(x)) ** (p - 2) * v.diff(x)
    g = -flux.diff(x) + sympy.Abs(v) ** (p - 2) * v
    return sympy.lambdify(x, sympy.simplify(g), "numpy")


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_residual_matches_symbolic_oracle(p):
    # odd cell counts keep the slope kink of x(1-x) off the nodes; the
    # comparison skips a fixed neighborhood of it where the source is rough
    g_fn = _symbolic_source(p)
    sups = []
    for cells in (65, 129):
        mesh = build_interval_mesh(cells, 1.0)
        v = GridFunction(mesh, mesh.nodes * (1.0 - mesh.nodes))
        g = GridFunction(mesh, np.asarray(g_fn(mesh.nodes), dtype=float))
        r = residual(mesh, v, g, p, OPTS)
        inner = (np.abs(mesh.nodes - 0.5) >= 0.125)
        inner[0] = inner[-1] = False
        sups.append(float(np.max(np.abs(r.values[inner]))))
    rate = math.log2(sups[0] / sups[1])
    assert rate >= 0.9


def test_residual_rejects_nonfinite():
    # non-finite nodal data is refused before it can reach the kernels
    mesh = build_interval_mesh(8, 1.0)
    bad = np.zeros(mesh.n_nodes)
    bad[3] = np.inf
    with pytest.raises(NumericError):
        GridFunction(mesh, bad)


# ---------------------------------------------------------------- jacobian

def _fd_directional(mesh, u, d, p, tau=1e-6):
    g = GridFunction.zeros(mesh)
    r0 = residual(mesh, u, g, p, OPTS).values
    r1 = residual(mesh, GridFunction(mesh, u.values + tau * d), g, p, OPTS).values
    return (r1 - r0) / tau


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_jacobian_matches_finite_differences(p):
    mesh = build_interval_mesh(64, 1.0)
    rng = np.random.default_rng(42)
    for _ in range(5):
        uv = rng.uniform(0.3, 1.0, mesh.n_nodes)
        uv[0] = uv[-1] = 0.0
        dv = rng.uniform(-1.0, 1.0, mesh.n_nodes)
        dv[0] = dv[-1] = 0.0
        u = GridFunction(mesh, uv)
        jd = jacobian(mesh, u, p, OPTS).matvec(dv)
        fd = _fd_directional(mesh, u, dv, p)
        rel = np.max(np.abs(fd - jd)) / np.max(np.abs(jd))
        assert rel <= 1e-5


def test_jacobian_p2_is_constant_second_difference():
    mesh = build_interval_mesh(16, 1.0)
    h = 1.0 / 16
    rng = np.random.default_rng(0)
    uv = rng.uniform(0.0, 1.0, mesh.n_nodes)
    uv[0] = uv[-1] = 0.0
    tri = jacobian(mesh, GridFunction(mesh, uv), 2.0, OPTS)
    tri0 = jacobian(mesh, GridFunction.zeros(mesh), 2.0, OPTS)
    np.testing.assert_allclose(tri.diag, tri0.diag, rtol=1e-12)
    np.testing.assert_allclose(tri.diag[1:-1], 2.0 / h**2 + 1.0, rtol=1e-12)
    np.testing.assert_allclose(tri.upper[1:-1], -1.0 / h**2, rtol=1e-12)


def test_jacobian_finite_at_zero_for_small_p():
    mesh = build_interval_mesh(16, 1.0)
    tri = jacobian(mesh, GridFunction.zeros(mesh), 1.5, OPTS)
    assert np.all(np.isfinite(tri.diag))
    assert np.all(tri.diag > 0)


def test_jacobian_weighted_symmetry():
    # W_i J[i,i+1] == W_{i+1} J[i+1,i] away from constrained rows
    mesh = build_radial_mesh(3, 32, 1.0)
    rng = np.random.default_rng(5)
    uv = rng.uniform(0.1, 1.0, mesh.n_nodes)
    uv[-1] = 0.0
    tri = jacobian(mesh, GridFunction(mesh, uv), 3.0, OPTS)
    W = mesh.node_volumes
    left = W[:-2] * tri.upper[:-1]
    right = W[1:-1] * tri.lower[:-1]
    np.testing.assert_allclose(left, right, rtol=1e-12)


# ------------------------------------------------------------ solve_frozen

def test_solve_frozen_zero_source():
    mesh = build_interval_mesh(32, 1.0)
    v = solve_frozen(mesh, GridFunction.zeros(mesh), 2.5, OPTS)
    np.testing.assert_allclose(v.values, 0.0, atol=1e-12)


def test_solve_frozen_sin_analytic():
    mesh = build_interval_mesh(256, math.pi)
    g = GridFunction(mesh, 2.0 * np.sin(mesh.nodes))
    v = solve_frozen(mesh, g, 2.0, OPTS)
    assert np.max(np.abs(v.values - np.sin(mesh.nodes))) <= 1e-3


def test_solve_frozen_p3_manufactured():
    g_fn = _symbolic_source(3.0)
    errs = []
    for cells in (64, 128):
        mesh = build_interval_mesh(cells, 1.0)
        exact = mesh.nodes * (1.0 - mesh.nodes)
        g = GridFunction(mesh, np.asarray(g_fn(mesh.nodes), dtype=float))
        v = solve_frozen(mesh, g, 3.0, OPTS)
        errs.append(float(np.max(np.abs(v.values - exact))))
    assert errs[1] <= errs[0]  # converging
    assert errs[1] <= 0.5 / 128  # at least O(h)


def test_solve_frozen_residual_tolerance():
    mesh = build_radial_mesh(3, 64, 1.0)
    g = GridFunction.constant(mesh, 1.0)
    v = solve_frozen(mesh, g, 2.0, OPTS)
    r = residual(mesh, v, g, 2.0, OPTS)
    assert np.max(np.abs(r.values)) <= OPTS.newton_tol
    assert np.min(v.values) >= 0.0
    assert v.values[-1] == 0.0


def test_solve_frozen_comparison_principle():
    mesh = build_interval_mesh(64, 1.0)
    g1 = GridFunction.constant(mesh, 1.0)
    g2 = GridFunction(mesh, 1.0 + mesh.nodes)
    for p in (1.5, 2.0, 3.0):
        v1 = solve_frozen(mesh, g1, p, OPTS)
        v2 = solve_frozen(mesh, g2, p, OPTS)
        assert np.max(v1.values - v2.values) <= 1e-8


def test_operator_monotonicity_pairing():
    # quadrature pairing of residual differences against iterate differences
    mesh = build_interval_mesh(48, 1.0)
    rng = np.random.default_rng(17)
    zero = GridFunction.zeros(mesh)
    for p in (1.5, 2.0, 3.0):
        for _ in range(5):
            a = rng.uniform(0.0, 1.0, mesh.n_nodes)
            b = rng.uniform(0.0, 1.0, mesh.n_nodes)
            a[0] = a[-1] = b[0] = b[-1] = 0.0
            ra = residual(mesh, GridFunction(mesh, a), zero, p, OPTS).values
            rb = residual(mesh, GridFunction(mesh, b), zero, p, OPTS).values
            pairing = float(np.sum(mesh.node_volumes * (ra - rb) * (a - b)))
            assert pairing >= -1e-12


# ---------------------------------------------------------------- energy

def test_energy_zero():
    mesh = build_interval_mesh(32, 1.0)
    z = GridFunction.zeros(mesh)
    assert energy(mesh, z, z, 2.0) == 0.0


def test_energy_sin_value():
    mesh = build_interval_mesh(512, 1.0)
    v = GridFunction(mesh, np.sin(math.pi * mesh.nodes))
    val = energy(mesh, v, GridFunction.zeros(mesh), 2.0)
    assert val == pytest.approx((math.pi**2 + 1.0) / 4.0, abs=1e-3)


def test_energy_minimized_by_solver():
    mesh = build_interval_mesh(64, 1.0)
    g = GridFunction(mesh, 1.0 + np.sin(2 * math.pi * mesh.nodes) ** 2)
    rng = np.random.default_rng(3)
    for p in (2.0, 3.0):
        v = solve_frozen(mesh, g, p, OPTS)
        j_star = energy(mesh, v, g, p)
        for _ in range(10):
            trial = rng.uniform(0.0, 0.6, mesh.n_nodes)
            trial[0] = trial[-1] = 0.0
            assert j_star <= energy(mesh, GridFunction(mesh, trial), g, p) + 1e-12


# ------------------------------------------------------------- eigenpair

def shooting_eigenvalue(p, tol=1e-10):
    """First Dirichlet eigenvalue on (0,1) by shooting in flux variables."""

    def rhs(_x, y, lam):
        u, q = y
        du = np.sign(q) * np.abs(q) ** (1.0 / (p - 1.0))
        dq = -lam * np.sign(u) * np.abs(u) ** (p - 1.0)
        return [du, dq]

    def endpoint(lam):
        sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0], args=(lam,),
                        rtol=1e-10, atol=1e-12, dense_output=False)
        return sol.y[0, -1]

    lo, hi = 1.0, 1.0
    while endpoint(hi) > 0.0:
        hi *= 2.0
    while endpoint(lo) < 0.0:
        lo *= 0.5
    return brentq(endpoint, lo, hi, xtol=tol)


def test_eigenpair_interval_p2():
    mesh = build_interval_mesh(256, 1.0)
    eig = first_eigenpair(mesh, 2.0, OPTS)
    assert abs(eig.lam - math.pi**2) / math.pi**2 <= 5e-3
    ref = np.sin(math.pi * mesh.nodes)
    assert np.max(np.abs(eig.phi.values - ref)) <= 1e-3
    assert eig.phi.values.max() == pytest.approx(1.0)
    assert np.min(eig.phi.values) >= 0.0


def test_eigenpair_ball_p2():
    mesh = build_radial_mesh(3, 256, 1.0)
    eig = first_eigenpair(mesh, 2.0, OPTS)
    assert abs(eig.lam - math.pi**2) / math.pi**2 <= 1e-2
    r = mesh.nodes[1:]
    ref = np.sin(math.pi * r) / (math.pi * r)
    assert np.max(np.abs(eig.phi.values[1:] - ref)) <= 1e-3


def test_eigenpair_p15_vs_shooting_oracle():
    lam_ref = shooting_eigenvalue(1.5)
    mesh = build_interval_mesh(256, 1.0)
    eig = first_eigenpair(mesh, 1.5, OPTS)
    assert abs(eig.lam - lam_ref) / lam_ref <= 1e-2


def test_eigenpair_rayleigh_consistency():
    from singular_plap.analysis import lebesgue_norm, sobolev_norm
    mesh = build_interval_mesh(128, 1.0)
    for p in (1.5, 2.0, 3.0):
        eig = first_eigenpair(mesh, p, OPTS)
        semi = sobolev_norm(mesh, eig.phi, p) ** p \
            - lebesgue_norm(mesh, eig.phi, p) ** p
        quotient = semi / lebesgue_norm(mesh, eig.phi, p) ** p
        assert abs(quotient - eig.lam) / eig.lam <= 1e-6


def test_eigenpair_initial_guess_scale_invariance():
    mesh = build_interval_mesh(96, 1.0)
    base = GridFunction(mesh, mesh.nodes * (1.0 - mesh.nodes))
    scaled = GridFunction(mesh, 5.0 * base.values)
    a = first_eigenpair(mesh, 2.0, OPTS, phi0=base)
    b = first_eigenpair(mesh, 2.0, OPTS, phi0=scaled)
    assert math.isclose(a.lam, b.lam, rel_tol=1e-12)
    np.testing.assert_allclose(a.phi.values, b.phi.values, atol=1e-10)
