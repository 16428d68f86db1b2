"""Success-rate benchmarks for sparse recovery from pair marginals.

Per-trial seeds come from ``SeedSequence([master_seed, sparsity]).spawn(trials)``,
so any trial can be re-run on its own and parallel runs match serial ones.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ProblemShape
from .measurement import MeasurementOperator, forward_apply
from .oracle import random_sparse_distribution
from .solvers import SolverConfig, overlap_metric, reconstruct

# Success fractions reported for M=6, N=4, chain pairs, GP, <= 50 iterations.
PAPER_FRACTIONS: dict[int, tuple[float, float]] = {
    4: (0.80, 0.74),
    5: (0.64, 0.56),
    6: (0.47, 0.37),
}
PAPER_THRESHOLDS = (0.9, 0.99)
ACCEPTANCE_BAND = 0.10


def _threshold_label(th: float) -> str:
    return "frac_X_gt_" + repr(th).replace(".", "p")


@dataclass
class BenchmarkResult:
    shape: ProblemShape
    sparsity: int
    trials: int
    fractions: dict[float, float]
    mean_iterations: float
    wall_ms: float
    overlaps: list[float] = field(default_factory=list, repr=False)

    @property
    def frac_gt_0p9(self) -> float:
        return self.fractions[0.9]

    @property
    def frac_gt_0p99(self) -> float:
        return self.fractions[0.99]

    def std_error(self, threshold: float) -> float:
        p = self.fractions[threshold]
        return math.sqrt(p * (1 - p) / self.trials)

    def row(self) -> dict:
        out = {"s": self.sparsity, "trials": self.trials}
        for th, frac in self.fractions.items():
            out[_threshold_label(th)] = frac
        out["mean_iters"] = self.mean_iterations
        out["wall_ms"] = self.wall_ms
        return out


def run_trial(shape: ProblemShape, sparsity: int, cfg: SolverConfig, seed) -> float:
    return _trial(shape, sparsity, cfg, seed)[0]


def _trial(shape, sparsity, cfg, seed) -> tuple[float, int]:
    x_test = random_sparse_distribution(shape, sparsity, seed)
    y = forward_apply(shape, x_test)
    x_solved, report = reconstruct(y, MeasurementOperator(shape), cfg)
    return overlap_metric(x_test, x_solved), report.iterations


def _trial_args(args):
    return _trial(*args)


def trial_seeds(master_seed: int, sparsity: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence([master_seed, sparsity]).spawn(trials)


def run_suite(
    shape: ProblemShape,
    sparsities,
    trials: int,
    thresholds=PAPER_THRESHOLDS,
    cfg: SolverConfig | None = None,
    master_seed: int = 0,
    workers: int = 1,
) -> list[BenchmarkResult]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = cfg or SolverConfig()
    results = []
    for s in sparsities:
        start = time.perf_counter()
        jobs = [(shape, s, cfg, seed) for seed in trial_seeds(master_seed, s, trials)]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                outcomes = list(pool.map(_trial_args, jobs, chunksize=max(1, trials // (4 * workers))))
        else:
            outcomes = [_trial(*job) for job in jobs]
        overlaps = np.array([o[0] for o in outcomes])
        results.append(
            BenchmarkResult(
                shape=shape,
                sparsity=s,
                trials=trials,
                fractions={float(th): float(np.mean(overlaps > th)) for th in thresholds},
                mean_iterations=float(np.mean([o[1] for o in outcomes])),
                wall_ms=(time.perf_counter() - start) * 1e3,
                overlaps=overlaps.tolist(),
            )
        )
    return results


def results_csv(results: list[BenchmarkResult]) -> str:
    buf = io.StringIO()
    rows = [r.row() for r in results]
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["s"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def results_json(results: list[BenchmarkResult], cfg: SolverConfig, master_seed: int) -> str:
    shape = results[0].shape if results else None
    return json.dumps(
        {
            "shape": shape.to_json() if shape else None,
            "config": cfg.to_json(),
            "master_seed": master_seed,
            "rows": [r.row() for r in results],
        },
        indent=2,
    )


@dataclass
class PaperComparison:
    operator_dims: tuple[int, int]
    results: list[BenchmarkResult]
    band: float = ACCEPTANCE_BAND

    def cells(self):
        """(s, threshold, measured, published, |deviation|, within band)."""
        for r in self.results:
            for th, published in zip(PAPER_THRESHOLDS, PAPER_FRACTIONS[r.sparsity]):
                measured = r.fractions[th]
                dev = abs(measured - published)
                yield r.sparsity, th, measured, published, dev, dev <= self.band + 1e-12

    def monotone_checks(self):
        """(s, s_next, threshold, holds) with 2-sigma slack on the difference."""
        for a, b in zip(self.results, self.results[1:]):
            for th in PAPER_THRESHOLDS:
                slack = 2 * math.hypot(a.std_error(th), b.std_error(th))
                yield a.sparsity, b.sparsity, th, b.fractions[th] <= a.fractions[th] + slack

    @property
    def passed(self) -> bool:
        return self.operator_dims == (80, 4096) and all(c[-1] for c in self.cells()) and all(
            m[-1] for m in self.monotone_checks()
        )

    def format_text(self) -> str:
        lines = [f"operator: {self.operator_dims[0]} x {self.operator_dims[1]}"]
        lines.append(f"{'s':>2} {'X >':>5} {'measured':>9} {'ref':>6} {'|dev|':>6}  status")
        for s, th, measured, published, dev, ok in self.cells():
            flag = "ok" if ok else f"OUTSIDE +-{self.band * 100:.0f}pp"
            lines.append(f"{s:>2} {th:>5} {measured * 100:8.1f}% {published * 100:5.0f}% {dev * 100:5.1f}  {flag}")
        for s, s2, th, ok in self.monotone_checks():
            lines.append(f"monotone X>{th} s={s}->{s2}: {'ok' if ok else 'VIOLATED'}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def reproduce_paper_experiment(master_seed: int = 0, trials: int = 1000, workers: int = 1) -> PaperComparison:
    shape = ProblemShape.chain(6, 4)
    cfg = SolverConfig(algorithm="gp", support_detector="chain_dp", max_iterations=50)
    results = run_suite(shape, sorted(PAPER_FRACTIONS), trials, PAPER_THRESHOLDS, cfg, master_seed, workers)
    return PaperComparison(MeasurementOperator(shape).dims(), results)
