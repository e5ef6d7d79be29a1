"""Norms and integral functionals used by the bound checks.

Gradient integrals are assembled from cell slopes with cell-midpoint
weights, which makes them exact for piecewise-linear functions; mass
integrals use the weighted trapezoidal rule.  Interior ("loc") variants
restrict all sums to cells fully inside the margin-trimmed subdomain.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InteriorZero, InvalidSubdomain
from .mesh import GridFunction, Mesh, _check_on


def _subdomain_cells(mesh: Mesh, margin: float) -> np.ndarray:
    """Mask of cells contained in the interior subdomain at the given margin."""
    if margin < 0.0:
        raise InvalidSubdomain("margin must be nonnegative")
    if margin >= 0.5 * mesh.extent:
        raise InvalidSubdomain(
            f"margin {margin} leaves no interior in extent {mesh.extent}"
        )
    lo = margin if mesh.left_is_dirichlet else 0.0
    hi = mesh.extent - margin
    left = mesh.nodes[:-1]
    right = mesh.nodes[1:]
    return (left >= lo - 1e-12) & (right <= hi + 1e-12)


def lebesgue_norm(mesh: Mesh, u: GridFunction, s: float) -> float:
    """(int |u|^s)^(1/s) by weighted trapezoidal quadrature."""
    if s < 1.0:
        raise ValueError("exponent s must be at least 1")
    _check_on(mesh, u)
    gw = np.abs(u.values) ** s * mesh.radial_weight
    total = mesh.volume_constant * float(
        np.sum(0.5 * mesh.cell_widths * (gw[:-1] + gw[1:]))
    )
    return total ** (1.0 / s)


def sobolev_norm(mesh: Mesh, u: GridFunction, q: float,
                 interior_margin: float = 0.0) -> float:
    """(int_sub |grad u|^q + int_sub |u|^q)^(1/q) over the margin-trimmed domain."""
    if q < 1.0:
        raise ValueError("exponent q must be at least 1")
    _check_on(mesh, u)
    cells = _subdomain_cells(mesh, interior_margin)
    h = mesh.cell_widths[cells]
    slopes = (np.diff(u.values) / mesh.cell_widths)[cells]
    grad_part = float(np.sum(np.abs(slopes) ** q * mesh.face_weights[cells] * h))
    vals = np.abs(u.values) ** q * mesh.radial_weight
    left = vals[:-1][cells]
    right = vals[1:][cells]
    mass_part = float(np.sum(0.5 * h * (left + right)))
    return (mesh.volume_constant * (grad_part + mass_part)) ** (1.0 / q)


def sup_norm(u: GridFunction) -> float:
    """max |u_i|."""
    return float(np.max(np.abs(u.values)))


def power_transform(u: GridFunction, beta: float) -> GridFunction:
    """Nodewise u^beta for nonnegative u."""
    if beta <= 0.0:
        raise DomainError("power must be positive")
    if np.min(u.values) < 0.0:
        raise DomainError("power transform requires nonnegative values")
    return u.with_values(u.values**beta)


def negative_power_integral(mesh: Mesh, u: GridFunction, r: float) -> float:
    """int u^(-r) with cell-midpoint values (u_i + u_{i+1})/2.

    Boundary zeros never divide by zero because every boundary cell has a
    positive interior endpoint.  A divergent integral shows up as growth
    under refinement, not as an error here.
    """
    if r <= 0.0:
        raise ValueError("power r must be positive")
    _check_on(mesh, u)
    if np.min(u.values) < 0.0:
        raise DomainError("negative-power integral requires nonnegative values")
    interior = u.values[1:-1] if mesh.left_is_dirichlet else u.values[:-1]
    if np.min(interior) <= 0.0:
        raise InteriorZero("function vanishes at an interior node")
    mids = 0.5 * (u.values[:-1] + u.values[1:])
    return mesh.volume_constant * float(
        np.sum(mids ** (-r) * mesh.face_weights * mesh.cell_widths)
    )


def _fmt_exponent(x: float) -> str:
    return format(float(x), "g")


@dataclass
class NormRow:
    n: int
    lp: dict[float, float]
    w1q: dict[float, float]
    w1p_loc: float
    sup: float
    tw1p: float
    npi: dict[float, float]


@dataclass
class NormTable:
    """Per-level norm records; serializes to one CSV row per level."""

    s_list: tuple[float, ...]
    q_list: tuple[float, ...]
    r_list: tuple[float, ...]
    margin: float
    rows: list[NormRow] = field(default_factory=list)

    def header(self) -> list[str]:
        cols = ["n"]
        cols += [f"L{_fmt_exponent(s)}" for s in self.s_list]
        cols += [f"W1{_fmt_exponent(q)}" for q in self.q_list]
        cols += ["W1p_loc", "sup", "TW1p"]
        cols += [f"NPI{_fmt_exponent(r)}" for r in self.r_list]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows:
            rec = [str(row.n)]
            rec += [format(row.lp[s], ".12g") for s in self.s_list]
            rec += [format(row.w1q[q], ".12g") for q in self.q_list]
            rec += [format(row.w1p_loc, ".12g"), format(row.sup, ".12g"),
                    format(row.tw1p, ".12g")]
            rec += [format(row.npi[r], ".12g") for r in self.r_list]
            writer.writerow(rec)
        return buf.getvalue()


def build_norm_table(mesh: Mesh, levels, p: float, alpha: float,
                     s_list=(), q_list=(), r_list=(),
                     margin: float | None = None) -> NormTable:
    """Evaluate the requested norms for every level of a sweep.

    TW1p is the full-gradient norm of u^((p+alpha-1)/p), the transformed
    quantity whose boundedness characterizes the strong-singularity regime.
    """
    if margin is None:
        margin = 0.1 * mesh.extent
    table = NormTable(tuple(s_list), tuple(q_list), tuple(r_list), margin)
    beta = (p + alpha - 1.0) / p
    for level in levels:
        u = level.u
        transformed = power_transform(u, beta)
        row = NormRow(
            n=level.n,
            lp={s: lebesgue_norm(mesh, u, s) for s in table.s_list},
            w1q={q: sobolev_norm(mesh, u, q) for q in table.q_list},
            w1p_loc=sobolev_norm(mesh, u, p, interior_margin=margin),
            sup=sup_norm(u),
            tw1p=sobolev_norm(mesh, transformed, p),
            npi={r: negative_power_integral(mesh, u, r) for r in table.r_list},
        )
        table.rows.append(row)
    return table
