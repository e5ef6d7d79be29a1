import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_plap.errors import InvalidMesh, MeshMismatch, NumericError
from singular_plap.mesh import (
    GridFunction,
    build_interval_mesh,
    build_radial_mesh,
    cell_gradient,
    integrate,
)


def test_interval_nodes_uniform():
    mesh = build_interval_mesh(4, 1.0)
    np.testing.assert_allclose(mesh.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    mesh2 = build_interval_mesh(2, 2.0)
    np.testing.assert_allclose(mesh2.nodes, [0.0, 1.0, 2.0])


def test_too_few_cells_rejected():
    with pytest.raises(InvalidMesh):
        build_interval_mesh(1, 1.0)
    with pytest.raises(InvalidMesh):
        build_radial_mesh(3, 1, 1.0)


def test_radial_weights_r_squared():
    mesh = build_radial_mesh(3, 4, 1.0)
    np.testing.assert_allclose(mesh.radial_weight,
                               [0.0, 1 / 16, 1 / 4, 9 / 16, 1.0])


def test_radial_weight_flat_in_1d():
    mesh = build_radial_mesh(1, 4, 1.0)
    np.testing.assert_allclose(mesh.radial_weight, np.ones(5))


def test_volume_constants():
    assert build_radial_mesh(2, 2, 1.0).volume_constant == pytest.approx(2 * math.pi)
    assert build_radial_mesh(1, 2, 1.0).volume_constant == pytest.approx(2.0)
    assert build_radial_mesh(3, 2, 1.0).volume_constant == pytest.approx(4 * math.pi)
    assert build_interval_mesh(2, 1.0).volume_constant == 1.0


def test_integrate_constant_interval():
    mesh = build_interval_mesh(16, 1.0)
    assert integrate(mesh, GridFunction.constant(mesh, 1.0)) == pytest.approx(1.0)


def test_integrate_ball_volume():
    mesh = build_radial_mesh(3, 512, 1.0)
    vol = integrate(mesh, GridFunction.constant(mesh, 1.0))
    assert abs(vol - 4 * math.pi / 3) <= 1e-3


def test_integrate_linear():
    mesh = build_interval_mesh(64, 1.0)
    g = GridFunction(mesh, mesh.nodes.copy())
    assert integrate(mesh, g) == pytest.approx(0.5)


def test_integrate_mesh_mismatch():
    mesh = build_interval_mesh(8, 1.0)
    other = build_interval_mesh(16, 1.0)
    with pytest.raises(MeshMismatch):
        integrate(mesh, GridFunction.constant(other, 1.0))


def test_quadrature_second_order():
    # halving the mesh width must cut the error by at least 3.5x
    exact = 1.0 - math.cos(1.0)
    errs = []
    for cells in (32, 64):
        mesh = build_interval_mesh(cells, 1.0)
        g = GridFunction(mesh, np.sin(mesh.nodes))
        errs.append(abs(integrate(mesh, g) - exact))
    assert errs[0] / errs[1] >= 3.5


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_integrate_linearity(a, b):
    mesh = build_interval_mesh(32, 1.0)
    rng = np.random.default_rng(7)
    g = GridFunction(mesh, rng.uniform(-1, 1, mesh.n_nodes))
    h = GridFunction(mesh, rng.uniform(-1, 1, mesh.n_nodes))
    combined = GridFunction(mesh, a * g.values + b * h.values)
    assert integrate(mesh, combined) == pytest.approx(
        a * integrate(mesh, g) + b * integrate(mesh, h), abs=1e-12)


def test_cell_gradient_linear_exact():
    mesh = build_interval_mesh(16, 2.0)
    u = GridFunction(mesh, mesh.nodes.copy())
    np.testing.assert_allclose(cell_gradient(mesh, u), np.ones(16))
    c = GridFunction.constant(mesh, 3.0)
    np.testing.assert_allclose(cell_gradient(mesh, c), np.zeros(16))


def test_cell_gradient_quadratic_midpoint():
    mesh = build_interval_mesh(8, 1.0)
    u = GridFunction(mesh, mesh.nodes**2)
    mids = mesh.nodes[:-1] + mesh.nodes[1:]
    np.testing.assert_allclose(cell_gradient(mesh, u), mids)


def test_grid_function_checks_finiteness():
    mesh = build_interval_mesh(4, 1.0)
    with pytest.raises(NumericError):
        GridFunction(mesh, np.array([0.0, 1.0, np.nan, 1.0, 0.0]))
    with pytest.raises(MeshMismatch):
        GridFunction(mesh, np.ones(3))


def test_grid_function_values_immutable():
    mesh = build_interval_mesh(4, 1.0)
    g = GridFunction.constant(mesh, 1.0)
    with pytest.raises(ValueError):
        g.values[0] = 2.0
