"""Greedy sparse recovery over the implicit measurement operator.

All three pursuits keep only length-``k`` residuals and the current support;
support detection goes through one of :data:`sbr.support.DETECTORS`.
Matching pursuit with the chain detector is PTMP.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import MeasurementVector, ShapeError, SparseVector
from .measurement import (
    MeasurementOperator,
    adjoint_entries,
    build_residual_tables,
    column_rows,
    forward_apply,
    gram_matrix,
)
from .support import DETECTORS, AnnealSchedule, ArgmaxResult, UnsupportedStructureError

log = logging.getLogger(__name__)

ALGORITHMS = ("mp", "omp", "gp")
RIDGE = 1e-12


class SolverConfigError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "gp"
    support_detector: str = "chain_dp"
    max_iterations: int = 50
    residual_tolerance: float = 1e-9
    target_sparsity: int | None = None
    normalize_updates: bool = True
    nonneg_project: bool = False
    seed: int = 0
    anneal_schedule: AnnealSchedule | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SolverConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.support_detector not in DETECTORS:
            raise SolverConfigError(f"unknown detector {self.support_detector!r}; choose from {tuple(DETECTORS)}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise SolverConfigError("max_iterations must be a positive integer")
        if self.residual_tolerance < 0:
            raise SolverConfigError("residual_tolerance must be non-negative")
        if self.target_sparsity is not None and self.target_sparsity < 1:
            raise SolverConfigError("target_sparsity must be positive")

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "anneal_schedule"}
        if self.anneal_schedule is not None:
            s = self.anneal_schedule
            out["anneal_schedule"] = {"sweeps": s.sweeps, "t_start": s.t_start, "end_ratio": s.end_ratio}
        return out


@dataclass
class SolveReport:
    algorithm: str
    iterations: int = 0
    residual_norms: list[float] = field(default_factory=list)
    support_trace: list[int] = field(default_factory=list)
    coefficient_updates: list[float] = field(default_factory=list)
    status: str = "running"
    warnings: list[str] = field(default_factory=list)
    solution: SparseVector | None = None

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "iterations": self.iterations,
            "status": self.status,
            "residual_norms": self.residual_norms,
            "support_trace": self.support_trace,
            "coefficient_updates": self.coefficient_updates,
            "warnings": self.warnings,
        }


def _prepare(y: MeasurementVector, op: MeasurementOperator | None, cfg: SolverConfig):
    shape = y.shape if op is None else op.shape
    if y.shape != shape:
        raise ShapeError("measurement vector and operator shapes differ")
    if cfg.support_detector == "chain_dp" and not shape.is_chain():
        raise UnsupportedStructureError("chain_dp detector needs the nearest-neighbour chain; use anneal")
    detector = DETECTORS[cfg.support_detector]
    seeds = np.random.SeedSequence(cfg.seed)

    def detect(r: np.ndarray, iteration: int) -> ArgmaxResult:
        tables = build_residual_tables(r, shape)
        if cfg.support_detector == "anneal":
            return detector(tables, shape, cfg.anneal_schedule, np.random.SeedSequence([seeds.entropy, iteration]))
        return detector(tables, shape)

    return shape, detect


def _stop_reason(cfg: SolverConfig, report: SolveReport, support_size: int) -> str | None:
    if report.residual_norms[-1] <= cfg.residual_tolerance:
        return "converged"
    if cfg.target_sparsity is not None and support_size >= cfg.target_sparsity:
        return "target_sparsity"
    if report.iterations >= cfg.max_iterations:
        return "max_iterations"
    return None


def matching_pursuit(y: MeasurementVector, op: MeasurementOperator | None = None, cfg: SolverConfig | None = None):
    """Plain matching pursuit; PTMP when ``cfg.support_detector == "chain_dp"``.

    Each step adds ``(A^T r)_t / |pairs|`` at the selected index (or the raw
    correlation when ``normalize_updates`` is off).  Reselected indices
    accumulate into one coefficient.
    """
    cfg = cfg or SolverConfig(algorithm="mp")
    shape, detect = _prepare(y, op, cfg)
    n_pairs = len(shape.pairs)
    r = y.flat().copy()
    coeffs: dict[int, float] = {}
    report = SolveReport("mp", residual_norms=[float(np.linalg.norm(r))])

    while (reason := _stop_reason(cfg, report, len(coeffs))) is None:
        hit = detect(r, report.iterations)
        c = hit.value / n_pairs if cfg.normalize_updates else hit.value
        if c == 0.0:
            reason = "stagnation"
            break
        coeffs[hit.index] = coeffs.get(hit.index, 0.0) + c
        r[column_rows(hit.index, shape)] -= c
        report.iterations += 1
        report.support_trace.append(hit.index)
        report.coefficient_updates.append(c)
        report.residual_norms.append(float(np.linalg.norm(r)))

    report.status = reason
    x = SparseVector.from_pairs(coeffs.items())
    report.solution = x
    return x, report


def _least_squares(support: list[int], y_tables, shape, report: SolveReport) -> np.ndarray:
    gram = gram_matrix(support, shape)
    rhs = adjoint_entries(y_tables, support)
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 1e-10 * eig[-1]:
        report.warnings.append(f"singular Gram system at |S|={len(support)}; ridge {RIDGE:g} added")
        gram = gram + RIDGE * np.eye(len(support))
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), rhs)


def omp(y: MeasurementVector, op: MeasurementOperator | None = None, cfg: SolverConfig | None = None):
    """Orthogonal matching pursuit with the Gram system built from pair agreements."""
    cfg = cfg or SolverConfig(algorithm="omp")
    shape, detect = _prepare(y, op, cfg)
    y_flat = y.flat()
    y_tables = build_residual_tables(y)
    r = y_flat.copy()
    support: list[int] = []
    x = SparseVector()
    report = SolveReport("omp", residual_norms=[float(np.linalg.norm(r))])

    while (reason := _stop_reason(cfg, report, len(support))) is None:
        hit = detect(r, report.iterations)
        if hit.index in support or hit.value == 0.0:
            reason = "stagnation"
            break
        support.append(hit.index)
        order = sorted(support)
        z = _least_squares(order, y_tables, shape, report)
        x = SparseVector(tuple(order), z)
        r = y_flat - forward_apply(shape, x).flat()
        report.iterations += 1
        report.support_trace.append(hit.index)
        report.coefficient_updates.append(float(z[order.index(hit.index)]))
        report.residual_norms.append(float(np.linalg.norm(r)))

    report.status = reason
    report.solution = x
    return x, report


def gradient_pursuit(y: MeasurementVector, op: MeasurementOperator | None = None, cfg: SolverConfig | None = None):
    """Gradient pursuit: move along ``A^T r`` restricted to the support with exact line search."""
    cfg = cfg or SolverConfig(algorithm="gp")
    shape, detect = _prepare(y, op, cfg)
    r = y.flat().copy()
    support: list[int] = []
    coeffs: dict[int, float] = {}
    report = SolveReport("gp", residual_norms=[float(np.linalg.norm(r))])

    while (reason := _stop_reason(cfg, report, len(support))) is None:
        hit = detect(r, report.iterations)
        if hit.index not in support:
            support.append(hit.index)
        order = sorted(support)
        g = adjoint_entries(build_residual_tables(r, shape), order)
        ag = forward_apply(shape, SparseVector(tuple(order), g)).flat()
        nn = float(ag @ ag)
        if nn == 0.0:
            reason = "stagnation"
            break
        step = float(r @ ag) / nn
        for t, gt in zip(order, g):
            coeffs[t] = coeffs.get(t, 0.0) + step * gt
        r -= step * ag
        report.iterations += 1
        report.support_trace.append(hit.index)
        report.coefficient_updates.append(step)
        report.residual_norms.append(float(np.linalg.norm(r)))

    report.status = reason
    x = SparseVector.from_pairs(coeffs.items())
    report.solution = x
    return x, report


_DISPATCH = {"mp": matching_pursuit, "omp": omp, "gp": gradient_pursuit}


def reconstruct(y: MeasurementVector, op: MeasurementOperator | None = None, cfg: SolverConfig | None = None):
    cfg = cfg or SolverConfig()
    x, report = _DISPATCH[cfg.algorithm](y, op, cfg)
    if cfg.nonneg_project:
        x = project_nonneg_renormalize(x)
        report.solution = x
    log.debug("%s finished: %s after %d iterations", cfg.algorithm, report.status, report.iterations)
    return x, report


def overlap_metric(x_test: SparseVector, x_solved: SparseVector) -> float:
    """``<x_test, x_solved> / |x_test|^2``; not capped at 1."""
    norm2 = float(x_test.weights @ x_test.weights)
    if norm2 == 0.0:
        raise UndefinedMetricError("x_test has zero norm")
    solved = x_solved.as_dict()
    return sum(w * solved.get(i, 0.0) for i, w in x_test.entries()) / norm2


def project_nonneg_renormalize(x: SparseVector) -> SparseVector:
    keep = [(i, w) for i, w in x.entries() if w > 0]
    total = sum(w for _, w in keep)
    if not keep or total <= 0:
        raise ProjectionError("no positive weight left to renormalise")
    return SparseVector.from_pairs((i, w / total) for i, w in keep)
