"""Experiment orchestration and report emission.

Each experiment kind produces a ReportBundle: norm tables, regime/bound
reports, experiment-specific records, and a list of asserted inequalities
with their measured slack.  Emission is deterministic given the bundle.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, theory
from .config import ExperimentConfig
from .mesh import GridFunction, build_interval_mesh, cell_gradient, integrate, integrate_cells
from .pde import SolverOptions, first_eigenpair, jacobian, residual, solve_frozen
from .regularization import (
    ProblemSpec,
    SourceSpec,
    cauchy_gradient_diagnostic,
    realize_source,
    sweep_levels,
    truncate_source,
)


@dataclass(frozen=True)
class Flag:
    """One asserted inequality: measured (op) bound."""

    name: str
    measured: float
    bound: float
    op: str  # "<=" or ">="
    passed: bool

    @property
    def slack(self) -> float:
        if self.op == "<=":
            return self.bound - self.measured
        return self.measured - self.bound


def _make_flag(name: str, measured: float, op: str, bound: float) -> Flag:
    if op == "<=":
        passed = measured <= bound
    elif op == ">=":
        passed = measured >= bound
    else:
        raise ValueError(f"unknown comparison {op!r}")
    return Flag(name, float(measured), float(bound), op, bool(passed))


@dataclass
class ReportBundle:
    config: ExperimentConfig
    norm_table: analysis.NormTable | None = None
    regime: theory.RegimeReport | None = None
    regime_input: theory.RegimeInput | None = None
    moser: theory.MoserReport | None = None
    records: dict = field(default_factory=dict)
    flags: list[Flag] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return not self.failures and all(f.passed for f in self.flags)


def _grad_energy(mesh, u: GridFunction, p: float) -> float:
    return integrate_cells(mesh, np.abs(cell_gradient(mesh, u)) ** p)


def _manufactured_case(case: str, p: float, n_cells: int):
    if case == "sin":
        mesh = build_interval_mesh(n_cells, math.pi)
        exact = np.sin(mesh.nodes)
        source = 2.0 * np.sin(mesh.nodes)
        return mesh, exact, source, 2.0
    if case == "parabola":
        if p < 2.0:
            raise ValueError("parabola case needs p >= 2 (source stays bounded)")
        mesh = build_interval_mesh(n_cells, 1.0)
        x = mesh.nodes
        exact = x * (1.0 - x)
        source = 2.0 * (p - 1.0) * np.abs(1.0 - 2.0 * x) ** (p - 2.0) \
            + exact ** (p - 1.0)
        return mesh, exact, source, p
    raise ValueError(f"unknown manufactured case {case!r}")


def _run_manufactured(cfg: ExperimentConfig, opts: SolverOptions) -> ReportBundle:
    bundle = ReportBundle(cfg)
    errors = []
    for n_cells in cfg.cells:
        mesh, exact, source, p = _manufactured_case(cfg.case, cfg.p, n_cells)
        v = solve_frozen(mesh, GridFunction(mesh, source), p, opts)
        errors.append(float(np.max(np.abs(v.values - exact))))
    hs = [1.0 / c for c in cfg.cells]
    slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    bundle.records["cells"] = list(cfg.cells)
    bundle.records["sup_errors"] = errors
    bundle.records["observed_order"] = slope
    bundle.flags.append(_make_flag("convergence_order", slope, ">=",
                                   cfg.order_bound))

    # seeded spot-check of the linearization against finite differences
    rng = np.random.default_rng(cfg.seed)
    mesh, _, _, p = _manufactured_case(cfg.case, cfg.p, cfg.cells[-1])
    worst = 0.0
    for _ in range(3):
        u = GridFunction(mesh, _random_feasible(rng, mesh))
        d = _random_direction(rng, mesh)
        worst = max(worst, _fd_jacobian_error(mesh, u, d, p, opts))
    bundle.records["jacobian_fd_error"] = worst
    bundle.flags.append(_make_flag("jacobian_fd_check", worst, "<=", 1e-5))
    return bundle


def _random_feasible(rng, mesh) -> np.ndarray:
    u = rng.uniform(0.3, 1.0, mesh.n_nodes)
    u[-1] = 0.0
    if mesh.left_is_dirichlet:
        u[0] = 0.0
    return u


def _random_direction(rng, mesh) -> np.ndarray:
    d = rng.uniform(-1.0, 1.0, mesh.n_nodes)
    d[-1] = 0.0
    if mesh.left_is_dirichlet:
        d[0] = 0.0
    return d


def _fd_jacobian_error(mesh, u: GridFunction, d: np.ndarray, p: float,
                       opts: SolverOptions, tau: float = 1e-6) -> float:
    g = GridFunction.zeros(mesh)
    tri = jacobian(mesh, u, p, opts)
    jd = tri.matvec(d)
    shifted = GridFunction(mesh, u.values + tau * d)
    fd = (residual(mesh, shifted, g, p, opts).values
          - residual(mesh, u, g, p, opts).values) / tau
    return float(np.max(np.abs(fd - jd)) / max(np.max(np.abs(jd)), 1e-30))


def _norm_lists(cfg: ExperimentConfig, regime: theory.RegimeReport | None):
    s_list = cfg.s_list or (cfg.p,)
    q_list = list(cfg.q_list)
    if cfg.p not in q_list:
        q_list.append(cfg.p)
    if regime is not None and not math.isnan(regime.q_star) \
            and regime.q_star >= 1.0 and regime.q_star not in q_list:
        q_list.append(regime.q_star)
    r_list = cfg.r_list or (0.9, 1.1)
    return tuple(s_list), tuple(q_list), tuple(r_list)


def _classify(cfg: ExperimentConfig):
    try:
        inp = theory.RegimeInput(cfg.N, cfg.p, cfg.alpha, cfg.m)
        return inp, theory.classify_regime(inp)
    except theory.OutOfRegime:
        return None, None


def _run_existence(cfg: ExperimentConfig, opts: SolverOptions) -> ReportBundle:
    bundle = ReportBundle(cfg)
    bundle.regime_input, bundle.regime = _classify(cfg)
    spec = cfg.problem_spec()
    mesh = spec.build_mesh(cfg.cells[0])
    margin = cfg.margin_fraction * mesh.extent
    report = sweep_levels(mesh, spec, opts, margin=margin)
    if report.partial:
        bundle.failures += [f"level {n}: {msg}" for n, msg in report.failures]

    s_list, q_list, r_list = _norm_lists(cfg, bundle.regime)
    table = analysis.build_norm_table(mesh, report.levels, cfg.p, cfg.alpha,
                                      s_list, q_list, r_list, margin)
    bundle.norm_table = table
    f = realize_source(spec, mesh, opts)
    norm_f_1 = integrate(mesh, f)
    norm_f_m = (analysis.lebesgue_norm(mesh, f, cfg.m)
                if not math.isinf(cfg.m) else analysis.sup_norm(f))
    bundle.records["norm_f_1"] = norm_f_1
    bundle.records["norm_f_m"] = norm_f_m
    bundle.records["interior_min"] = list(report.interior_min)
    bundle.records["picard_iters"] = [l.picard_iters for l in report.levels]

    bundle.flags.append(_make_flag("monotone_levels",
                                   report.monotonicity_violation, "<=",
                                   10.0 * opts.newton_tol))
    bundle.flags.append(_make_flag("interior_min_positive",
                                   min(report.interior_min), ">=",
                                   np.finfo(float).tiny))

    slack = cfg.bound_slack
    if cfg.alpha == 1.0:
        # tested energy identity: full-norm^p bounded by the truncated mass
        for level, row in zip(report.levels, table.rows):
            mass = integrate(mesh, truncate_source(f, level.n))
            bundle.flags.append(_make_flag(
                f"energy_apriori_n{level.n}",
                row.w1q[cfg.p] ** cfg.p, "<=", (1.0 + slack) * mass))
    elif cfg.alpha < 1.0:
        norms = [row.w1q[cfg.p] for row in table.rows]
        running = norms[0]
        worst = 0.0
        for x in norms[1:]:
            worst = max(worst, x / running)
            running = max(running, x)
        bundle.flags.append(_make_flag("w1p_saturation", worst, "<=", 1.05))
        # both candidate data-norm exponents are recorded; only boundedness
        # is asserted along the sweep
        for e_name, e in (("exp_1_over_p", 1.0 / cfg.p),
                          ("exp_weak", (1.0 - cfg.alpha) / (cfg.p + cfg.alpha - 1.0))):
            bundle.records[f"w1p_over_f_{e_name}"] = [
                x / norm_f_m**e for x in norms
            ]
    else:
        bound = (1.0 + slack) * norm_f_1 ** (1.0 / cfg.p)
        for level, row in zip(report.levels, table.rows):
            bundle.flags.append(_make_flag(
                f"transformed_gradient_n{level.n}", row.tw1p, "<=", bound))
        running = None
        worst = 0.0
        for level, row in zip(report.levels, table.rows):
            if running is not None and level.n > 16:
                worst = max(worst, row.w1p_loc / running)
            running = row.w1p_loc if running is None else max(running, row.w1p_loc)
        bundle.flags.append(_make_flag("w1p_loc_saturation", worst, "<=", 1.05))

    if len(report.levels) >= 2:
        diag = cauchy_gradient_diagnostic(report.levels, mesh, cfg.cauchy_eps)
        bundle.records["l1_gradient_gaps"] = diag.l1_gradient_gaps
        bundle.records["exceedance_measures"] = diag.exceedance_measures
    if table.rows:
        bundle.records["npi_level1"] = dict(table.rows[0].npi)
    return bundle


def _run_critical_m(cfg: ExperimentConfig, opts: SolverOptions) -> ReportBundle:
    bundle = ReportBundle(cfg)
    rows = []
    for gamma in cfg.gamma_list:
        spec = ProblemSpec(
            domain=cfg.domain, dimension=cfg.N, extent=cfg.extent,
            p=cfg.p, alpha=cfg.alpha,
            source=SourceSpec("power_cusp", gamma=gamma),
            schedule=cfg.schedule,
        )
        mesh = spec.build_mesh(cfg.cells[0])
        report = sweep_levels(mesh, spec, opts)
        if report.partial:
            bundle.failures += [f"gamma {gamma} level {n}: {msg}"
                                for n, msg in report.failures]
            continue
        m_sup = cfg.N / gamma  # f = r^-gamma lies in L^m exactly for m < N/gamma
        m_probe = 0.999 * m_sup
        try:
            regime = theory.classify_regime(
                theory.RegimeInput(cfg.N, cfg.p, cfg.alpha, m_probe))
        except theory.OutOfRegime:
            regime = None
        w1p = [analysis.sobolev_norm(mesh, l.u, cfg.p) for l in report.levels]
        row = {
            "gamma": gamma,
            "m_sup": m_sup,
            "case": regime.case if regime else "out_of_regime",
            "w1p_per_level": w1p,
        }
        if regime is not None and not math.isnan(regime.q_star):
            row["w1qstar_per_level"] = [
                analysis.sobolev_norm(mesh, l.u, regime.q_star)
                for l in report.levels
            ]
        rows.append(row)
        bundle.flags.append(_make_flag(
            f"monotone_levels_gamma{gamma:g}",
            report.monotonicity_violation, "<=", 10.0 * opts.newton_tol))
    bundle.records["critical_m_table"] = rows
    return bundle


def _run_nonexistence(cfg: ExperimentConfig, opts: SolverOptions) -> ReportBundle:
    bundle = ReportBundle(cfg)
    bundle.regime_input, bundle.regime = _classify(cfg)
    spec = cfg.problem_spec()
    mesh = spec.build_mesh(cfg.cells[0])
    eig = first_eigenpair(mesh, cfg.p, opts)
    f = realize_source(spec, mesh, opts, phi=eig.phi)
    report = sweep_levels(mesh, spec, opts)
    if report.partial:
        bundle.failures += [f"level {n}: {msg}" for n, msg in report.failures]

    sigma = cfg.p / (cfg.p - 1.0 + cfg.alpha)
    phi = eig.phi.values
    mask = phi > 0.0
    D, envelopes, singular_mass = [], [], []
    for level in report.levels:
        D.append(_grad_energy(mesh, level.u, cfg.p))
        envelopes.append(float(np.max(level.u.values[mask] / phi[mask]**sigma)))
        # cell-midpoint quadrature keeps u^(1-alpha) finite at boundary zeros
        mids = 0.5 * (level.u.values[:-1] + level.u.values[1:])
        fmids = 0.5 * (f.values[:-1] + f.values[1:])
        singular_mass.append(
            mesh.volume_constant * float(np.sum(
                fmids * mids ** (1.0 - cfg.alpha)
                * mesh.face_weights * mesh.cell_widths))
        )
    increments = [(b - a) / b for a, b in zip(D, D[1:])]
    bundle.records.update({
        "sigma": sigma,
        "lambda_1": eig.lam,
        "D": D,
        "relative_increments": increments,
        "envelope_ratios": envelopes,
        "envelope_b": envelopes[-1] if envelopes else math.nan,
        "singular_mass": singular_mass,
        "schedule": [l.n for l in report.levels],
    })

    if len(D) >= 2:
        bundle.flags.append(_make_flag("d_strictly_increasing",
                                       min(b - a for a, b in zip(D, D[1:])),
                                       ">=", np.finfo(float).tiny))
        final_inc = increments[-1]
        case = bundle.regime.case if bundle.regime else ""
        if case == "T4_3_not_W1p":
            bundle.flags.append(_make_flag("divergence_final_increment",
                                           final_inc, ">=",
                                           cfg.divergence_threshold))
            growth = envelopes[-1] / envelopes[-2] - 1.0
            bundle.flags.append(_make_flag("envelope_slow_growth", growth,
                                           "<=", cfg.envelope_growth_bound))
        elif case == "T4_2_unique_W1p":
            bundle.flags.append(_make_flag("saturation_final_increment",
                                           final_inc, "<=",
                                           cfg.divergence_threshold))
    return bundle


def run_experiment(cfg: ExperimentConfig) -> ReportBundle:
    """Dispatch one experiment; returns the bundle with all asserted flags."""
    opts = cfg.solver_options()
    if cfg.kind == "manufactured":
        return _run_manufactured(cfg, opts)
    if cfg.kind == "existence":
        return _run_existence(cfg, opts)
    if cfg.kind == "critical_m":
        return _run_critical_m(cfg, opts)
    if cfg.kind == "nonexistence":
        return _run_nonexistence(cfg, opts)
    if cfg.kind == "classify":
        bundle = ReportBundle(cfg)
        bundle.regime_input = theory.RegimeInput(cfg.N, cfg.p, cfg.alpha, cfg.m)
        bundle.regime = theory.classify_regime(bundle.regime_input)
        return bundle
    if cfg.kind == "bound":
        bundle = ReportBundle(cfg)
        bundle.moser = theory.moser_bound(cfg.N, cfg.p, cfg.m, cfg.norm_f_m,
                                          cfg.norm_f_1, mu=cfg.mu, C=cfg.C)
        return bundle
    raise ValueError(f"unknown experiment kind {cfg.kind!r}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, dict):
        return "{" + ", ".join(f"{k}: {_fmt(v)}" for k, v in x.items()) + "}"
    return str(x)


def summary_text(bundle: ReportBundle) -> str:
    lines = [f"experiment kind = {bundle.config.kind}"]
    if bundle.regime_input is not None:
        ri = bundle.regime_input
        lines.append(f"parameters: N={ri.N} p={_fmt(ri.p)} "
                     f"alpha={_fmt(ri.alpha)} m={_fmt(ri.m)}")
    if bundle.regime is not None:
        lines.append(f"regime case = {bundle.regime.case} "
                     f"({bundle.regime.predicted_space})")
    if bundle.moser is not None:
        mo = bundle.moser
        lines.append(f"moser: delta={_fmt(mo.delta)} d0={_fmt(mo.d0)} "
                     f"sup_bound={_fmt(mo.sup_bound)} "
                     f"d0_closed_form={_fmt(mo.d0_closed_form)} "
                     f"k_stabilized={mo.k_stabilized}")
    for key, value in bundle.records.items():
        lines.append(f"record {key} = {_fmt(value)}")
    for fail in bundle.failures:
        lines.append(f"FAILURE {fail}")
    for flag in bundle.flags:
        verdict = "PASS" if flag.passed else "FAIL"
        lines.append(
            f"{flag.name} measured={_fmt(flag.measured)} "
            f"bound={_fmt(flag.bound)} slack={_fmt(flag.slack)} {verdict}"
        )
    status = "ALL PASS" if bundle.all_passed else "NOT ALL PASS"
    lines.append(f"overall: {status}")
    return "\n".join(lines) + "\n"


def emit_reports(bundle: ReportBundle, out_dir) -> list[str]:
    """Write norms.csv / regime.csv / moser.csv as applicable plus summary.txt."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _write(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    if bundle.norm_table is not None:
        _write("norms.csv", bundle.norm_table.to_csv())
    if bundle.regime is not None:
        _write("regime.csv", bundle.regime.to_csv(bundle.regime_input))
    if bundle.moser is not None:
        _write("moser.csv", bundle.moser.to_csv())
    _write("summary.txt", summary_text(bundle))
    return written
