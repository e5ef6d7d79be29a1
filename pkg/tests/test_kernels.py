"""Backend parity: the compiled kernels must match the NumPy reference."""

import numpy as np
import pytest

from singular_plap import kernels
from singular_plap.kernels import _python
from singular_plap.mesh import build_interval_mesh, build_radial_mesh

compiled = kernels.available_backends().get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled kernels not built")


def _setup(mesh, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, mesh.n_nodes)
    u[-1] = 0.0
    if mesh.left_is_dirichlet:
        u[0] = 0.0
    g = rng.uniform(0.0, 2.0, mesh.n_nodes)
    return u, g


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("builder", [
    lambda: build_interval_mesh(37, 1.7),
    lambda: build_radial_mesh(3, 41, 1.3),
])
def test_residual_parity(p, builder):
    mesh = builder()
    u, g = _setup(mesh)
    args = (mesh.cell_widths, mesh.face_weights, mesh.node_volumes,
            p, 1e-8, 1e-8, mesh.left_is_dirichlet, True)
    r_py = _python.residual(u, g, *args)
    r_cy = compiled.residual(u, g, *args)
    np.testing.assert_allclose(r_cy, r_py, rtol=1e-13, atol=1e-13)


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("include_mass", [True, False])
def test_jacobian_parity(p, include_mass):
    mesh = build_radial_mesh(2, 29, 1.0)
    u, _ = _setup(mesh, seed=3)
    args = (mesh.cell_widths, mesh.face_weights, mesh.node_volumes,
            p, 1e-8, 1e-8, mesh.left_is_dirichlet, include_mass)
    lo_py, di_py, up_py = _python.jacobian(u, *args)
    lo_cy, di_cy, up_cy = compiled.jacobian(u, *args)
    np.testing.assert_allclose(lo_cy, lo_py, rtol=1e-13)
    np.testing.assert_allclose(di_cy, di_py, rtol=1e-13)
    np.testing.assert_allclose(up_cy, up_py, rtol=1e-13)


@needs_compiled
def test_tridiag_solve_parity():
    rng = np.random.default_rng(11)
    n = 53
    diag = rng.uniform(2.5, 4.0, n)
    lower = rng.uniform(-1.0, 0.0, n - 1)
    upper = rng.uniform(-1.0, 0.0, n - 1)
    rhs = rng.uniform(-1.0, 1.0, n)
    x_py = _python.tridiag_solve(lower, diag, upper, rhs)
    x_cy = compiled.tridiag_solve(lower, diag, upper, rhs)
    np.testing.assert_allclose(x_cy, x_py, rtol=1e-12, atol=1e-14)
    # check it actually solves the system
    resid = diag * x_cy
    resid[:-1] += upper * x_cy[1:]
    resid[1:] += lower * x_cy[:-1]
    np.testing.assert_allclose(resid, rhs, rtol=1e-12, atol=1e-12)


def test_selected_backend_reported():
    assert kernels.BACKEND in ("python", "compiled")
    assert "python" in kernels.available_backends()
