"""Quick invariant checks behind ``sbr selftest``."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

from .core import ProblemShape, SparseVector
from .measurement import (
    ResidualTables,
    adjoint_entries,
    build_residual_tables,
    dense_materialize,
    forward_apply,
)
from .oracle import (
    beamsplitter,
    haar_unitary,
    naive_permanent,
    permanent,
    transition_probability,
    unitarity_residual,
)
from .solvers import SolverConfig, overlap_metric, reconstruct
from .support import abs_argmax, brute_argmax, dp_sign_flip


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _dp_vs_brute(rng) -> CheckResult:
    for m in range(2, 7):
        for n in (2, 3, 4):
            shape = ProblemShape.chain(m, n)
            for _ in range(40):
                tables = ResidualTables(shape, rng.normal(size=(m - 1, n, n)))
                fast, slow = abs_argmax(tables), brute_argmax(tables)
                if fast.index != slow.index or abs(fast.value - slow.value) > 1e-12:
                    return CheckResult("dp_vs_brute_argmax", False, f"mismatch at M={m} N={n}: {fast} vs {slow}")
    return CheckResult("dp_vs_brute_argmax", True, "600 instances")


def _adjoint_consistency(rng) -> CheckResult:
    worst = 0.0
    for m, n in [(2, 2), (3, 3), (4, 3)]:
        shape = ProblemShape.chain(m, n)
        a = dense_materialize(shape).astype(float)
        r = rng.normal(size=shape.measurement_count())
        fast = adjoint_entries(build_residual_tables(r, shape), range(shape.dimension()))
        worst = max(worst, float(np.abs(fast - a.T @ r).max()))
        x = SparseVector.from_pairs(zip(rng.choice(shape.dimension(), 3, replace=False), rng.normal(size=3)))
        worst = max(worst, float(np.abs(forward_apply(shape, x).flat() - a @ x.to_dense(shape)).max()))
    return CheckResult("operator_vs_dense", worst <= 1e-12, f"max deviation {worst:.2e}")


def _permanents(rng) -> CheckResult:
    worst = 0.0
    for n in range(1, 7):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        ref = naive_permanent(a)
        worst = max(worst, abs(permanent(a) - ref) / max(abs(ref), 1e-300))
    hom = transition_probability(beamsplitter(), (1, 1), (1, 1))
    ok = worst <= 1e-10 and hom <= 1e-12
    return CheckResult("permanent_and_hom", ok, f"ryser rel err {worst:.2e}, HOM {hom:.1e}")


def _unitarity(rng) -> CheckResult:
    worst = max(unitarity_residual(haar_unitary(m, int(rng.integers(1 << 30))).matrix) for m in range(1, 9))
    return CheckResult("haar_unitarity", worst <= 1e-10, f"residual {worst:.1e}")


def _point_recovery(rng) -> CheckResult:
    shape = ProblemShape.chain(6, 4)
    for algo in ("mp", "omp", "gp"):
        for _ in range(10):
            x = SparseVector.point(int(rng.integers(shape.dimension())))
            sol, rep = reconstruct(forward_apply(shape, x), None, SolverConfig(algorithm=algo))
            if abs(overlap_metric(x, sol) - 1) > 1e-9 or rep.iterations != 1:
                return CheckResult("point_mass_recovery", False, f"{algo} failed on index {x.indices[0]}")
    return CheckResult("point_mass_recovery", True, "mp/omp/gp, 10 each")


CHECKS = (_dp_vs_brute, _adjoint_consistency, _permanents, _unitarity, _point_recovery)


def run_selftest(seed: int = 12345, inject_sign_flip: bool = False) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    ctx = dp_sign_flip() if inject_sign_flip else contextlib.nullcontext()
    with ctx:
        return [check(rng) for check in CHECKS]
