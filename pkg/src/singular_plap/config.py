"""Flat key-value experiment configs.

Format: one ``key = value`` per line, ``#`` starts a comment, arrays are
comma lists.  Unknown and duplicate keys are rejected; every error names
the offending line and field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import DuplicateKey, FieldTypeError, MissingField, UnknownKey
from .pde import SolverOptions
from .regularization import ProblemSpec, SourceSpec

KINDS = ("manufactured", "existence", "critical_m", "nonexistence",
         "classify", "bound")


def _to_float(text: str) -> float:
    if text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(text)


def _to_int(text: str) -> int:
    value = int(text)
    return value


def _to_str(text: str) -> str:
    return text


def _to_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


def _to_float_list(text: str) -> tuple[float, ...]:
    return tuple(_to_float(part.strip()) for part in text.split(",") if part.strip())


@dataclass
class ExperimentConfig:
    kind: str = ""
    # problem parameters
    N: int = 1
    p: float = 2.0
    alpha: float = 1.0
    m: float = math.inf
    domain: str = "interval"
    extent: float = 1.0
    source: str = "constant"
    source_value: float = 1.0
    source_gamma: float = 0.0
    source_beta: float = math.nan  # nonexistence default: 1/(p-1+alpha)
    schedule: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128, 256)
    # discretization / experiment controls
    cells: tuple[int, ...] = (512,)
    case: str = "sin"
    gamma_list: tuple[float, ...] = ()
    s_list: tuple[float, ...] = ()
    q_list: tuple[float, ...] = ()
    r_list: tuple[float, ...] = ()
    margin_fraction: float = 0.1
    cauchy_eps: float = 1e-3
    divergence_threshold: float = 0.01
    envelope_growth_bound: float = 0.05
    order_bound: float = 1.9
    bound_slack: float = 0.02
    seed: int = 0
    out_dir: str = "results"
    # solver overrides
    eps_grad: float = 1e-8
    eps_zero: float = 1e-8
    newton_tol: float = 1e-9
    max_newton_iters: int = 80
    picard_tol: float = 1e-8
    max_picard_iters: int = 200
    # bound-kind inputs
    norm_f_m: float = 1.0
    norm_f_1: float = 1.0
    mu: float = 1.0
    C: float = 1.0

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            eps_grad=self.eps_grad,
            eps_zero=self.eps_zero,
            newton_tol=self.newton_tol,
            max_newton_iters=self.max_newton_iters,
            picard_tol=self.picard_tol,
            max_picard_iters=self.max_picard_iters,
        )

    def source_spec(self) -> SourceSpec:
        beta = self.source_beta
        if math.isnan(beta):
            beta = 1.0 / (self.p - 1.0 + self.alpha)
        return SourceSpec(self.source, value=self.source_value,
                          gamma=self.source_gamma, beta=beta)

    def problem_spec(self) -> ProblemSpec:
        return ProblemSpec(
            domain=self.domain,
            dimension=self.N,
            extent=self.extent,
            p=self.p,
            alpha=self.alpha,
            source=self.source_spec(),
            schedule=self.schedule,
        )


_PARSERS = {
    "kind": _to_str,
    "N": _to_int,
    "p": _to_float,
    "alpha": _to_float,
    "m": _to_float,
    "domain": _to_str,
    "extent": _to_float,
    "source": _to_str,
    "source_value": _to_float,
    "source_gamma": _to_float,
    "source_beta": _to_float,
    "schedule": _to_int_list,
    "cells": _to_int_list,
    "case": _to_str,
    "gamma_list": _to_float_list,
    "s_list": _to_float_list,
    "q_list": _to_float_list,
    "r_list": _to_float_list,
    "margin_fraction": _to_float,
    "cauchy_eps": _to_float,
    "divergence_threshold": _to_float,
    "envelope_growth_bound": _to_float,
    "order_bound": _to_float,
    "bound_slack": _to_float,
    "seed": _to_int,
    "out_dir": _to_str,
    "eps_grad": _to_float,
    "eps_zero": _to_float,
    "newton_tol": _to_float,
    "max_newton_iters": _to_int,
    "picard_tol": _to_float,
    "max_picard_iters": _to_int,
    "norm_f_m": _to_float,
    "norm_f_1": _to_float,
    "mu": _to_float,
    "C": _to_float,
}

_REQUIRED = {
    "manufactured": ("cells",),
    "existence": ("N", "p", "alpha"),
    "critical_m": ("N", "p", "alpha", "gamma_list"),
    "nonexistence": ("alpha", "source"),
    "classify": ("N", "p", "alpha", "m"),
    "bound": ("N", "p", "m", "norm_f_m", "norm_f_1"),
}

assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config_text(text: str, origin: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FieldTypeError(
                f"{origin}:{lineno}: expected 'key = value', got {raw!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise UnknownKey(f"{origin}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise DuplicateKey(f"{origin}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            parsed = _PARSERS[key](value)
        except (ValueError, TypeError) as exc:
            raise FieldTypeError(
                f"{origin}:{lineno}: field {key!r}: cannot parse {value!r} "
                f"({exc})"
            ) from None
        setattr(cfg, key, parsed)

    if "kind" not in seen:
        raise MissingField(f"{origin}: missing required key 'kind'")
    if cfg.kind not in KINDS:
        raise FieldTypeError(
            f"{origin}: kind must be one of {KINDS}, got {cfg.kind!r}"
        )
    for req in _REQUIRED[cfg.kind]:
        if req not in seen:
            raise MissingField(
                f"{origin}: kind '{cfg.kind}' requires key {req!r}"
            )
    if cfg.kind == "nonexistence" and cfg.source != "eigenfunction_power":
        raise FieldTypeError(
            f"{origin}: nonexistence requires source = eigenfunction_power, "
            f"got {cfg.source!r}"
        )
    if cfg.domain not in ("interval", "ball"):
        raise FieldTypeError(
            f"{origin}: domain must be 'interval' or 'ball', got {cfg.domain!r}"
        )
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read and validate a config file; defaults fill unspecified keys."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, origin=str(path))
