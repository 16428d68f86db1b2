"""Command-line interface.

Exit codes: 0 success, 1 invariant or acceptance failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import reproduce_paper_experiment, results_csv, results_json, run_suite
from .core import DimensionCapError, IndexRangeError, InvalidPatternError, ProblemShape, ShapeError
from .files import (
    InstanceFile,
    InstanceFormatError,
    atomic_write,
    dumps,
    joint_to_json,
    read_instance,
    sparse_to_json,
    write_instance,
)
from .measurement import MeasurementOperator, forward_apply
from .oracle import Interferometer, haar_unitary, joint_distribution, pair_marginals, random_sparse_distribution
from .selfcheck import run_selftest
from .solvers import ProjectionError, SolverConfig, UndefinedMetricError, overlap_metric, reconstruct
from .support import AnnealSchedule, ScheduleError, UnsupportedStructureError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DETECTOR_FLAGS = {"chain": "chain_dp", "chain_dp": "chain_dp", "anneal": "anneal", "brute": "brute"}

INPUT_ERRORS = (
    InstanceFormatError,
    ShapeError,
    InvalidPatternError,
    IndexRangeError,
    DimensionCapError,
    UnsupportedStructureError,
    ScheduleError,
    ValueError,
    OSError,
)

log = logging.getLogger("sbr")


class UsageError(Exception):
    pass


def parse_pairs(text: str | None, modes: int):
    """``chain`` (default) or an explicit list such as ``1-2,2-3,1-4``."""
    if text is None or text == "chain":
        return None
    try:
        return tuple(tuple(int(v) for v in item.split("-")) for item in text.split(",") if item)
    except ValueError as exc:
        raise UsageError(f"cannot parse --pairs {text!r}; expected 'chain' or e.g. 1-2,2-3") from exc


def parse_pattern(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse pattern {text!r}; expected e.g. 1,1,0,0") from exc


def _shape_from_args(args) -> ProblemShape:
    return ProblemShape(args.modes, args.levels, parse_pairs(args.pairs, args.modes))


def _solver_from_args(args) -> SolverConfig:
    schedule = None
    if getattr(args, "anneal_sweeps", None) or getattr(args, "anneal_t0", None):
        schedule = AnnealSchedule(sweeps=args.anneal_sweeps, t_start=args.anneal_t0)
    return SolverConfig(
        algorithm=args.algorithm,
        support_detector=DETECTOR_FLAGS[args.detector],
        max_iterations=args.max_iters,
        residual_tolerance=args.tol,
        target_sparsity=getattr(args, "target_sparsity", None),
        nonneg_project=getattr(args, "nonneg", False),
        seed=args.seed,
        anneal_schedule=schedule,
    )


def cmd_gen(args) -> int:
    shape = _shape_from_args(args)
    truth = random_sparse_distribution(shape, args.sparsity, args.seed)
    inst = InstanceFile(shape, forward_apply(shape, truth), truth)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: M={shape.modes} N={shape.levels} pairs={len(shape.pairs)} "
          f"marginal entries={shape.measurement_count()} sparsity={truth.sparsity()}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.unitary:
        u = Interferometer.from_json(json.loads(Path(args.unitary).read_text()))
    elif args.haar:
        u = haar_unitary(args.modes, args.seed)
    else:
        u = Interferometer.identity(args.modes)
    if args.input:
        inp = parse_pattern(args.input)
    else:
        if args.photons > args.modes:
            raise UsageError("--photons exceeds --modes; pass --input for multi-photon inputs")
        inp = tuple([1] * args.photons + [0] * (args.modes - args.photons))
    photons = sum(inp)
    levels = args.levels if args.levels else max(2, photons + 1)
    shape = ProblemShape(args.modes, levels, parse_pairs(args.pairs, args.modes))
    joint = joint_distribution(u, inp, shape)
    marginals = pair_marginals(joint)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "unitary.json", dumps(u.to_json()))
    atomic_write(out / "joint.json", dumps(joint_to_json(joint)))
    write_instance(InstanceFile(shape, marginals, joint.as_sparse()), out / "marginals.json")
    print(f"joint over {shape.dimension()} patterns: total={joint.total():.12f} "
          f"truncated_mass={joint.truncated_mass:.3e} nonzero={int((joint.probabilities > 0).sum())}")
    print(f"wrote {out}/unitary.json, joint.json, marginals.json")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    inst = read_instance(args.instance)
    cfg = _solver_from_args(args)
    x, report = reconstruct(inst.marginals, MeasurementOperator(inst.shape), cfg)
    payload = {
        "shape": inst.shape.to_json(),
        "config": cfg.to_json(),
        "solution": sparse_to_json(x, inst.shape),
        "report": report.to_json(),
        "X": None,
    }
    if inst.truth is not None and inst.truth.sparsity():
        payload["X"] = overlap_metric(inst.truth, x)
    atomic_write(args.out, dumps(payload))
    x_text = "n/a" if payload["X"] is None else f"{payload['X']:.12f}"
    print(f"{cfg.algorithm}: {report.status} after {report.iterations} iterations, "
          f"residual {report.residual_norms[-1]:.3e}, support {x.sparsity()}, X={x_text}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.paper:
        comparison = reproduce_paper_experiment(args.seed, args.trials, args.workers)
        results = comparison.results
        cfg = SolverConfig(algorithm="gp")
        print(comparison.format_text())
        status = EXIT_OK if comparison.passed else EXIT_FAIL
    else:
        shape = _shape_from_args(args)
        cfg = _solver_from_args(args)
        sparsities = [int(s) for s in args.sparsity.split(",")]
        results = run_suite(shape, sparsities, args.trials, (0.9, 0.99), cfg, args.seed, args.workers)
        status = EXIT_OK
    table = results_csv(results)
    print(table, end="")
    if args.out:
        atomic_write(f"{args.out}.csv", table)
        atomic_write(f"{args.out}.json", results_json(results, cfg, args.seed) + "\n")
    return status


def cmd_selftest(args) -> int:
    results = run_selftest(args.seed, inject_sign_flip=args.inject_sign_flip)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def _add_shape_flags(p, sparsity_default=None, sparsity_type=int):
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--pairs", default="chain", help="'chain' or explicit list like 1-2,2-3,1-3")
    if sparsity_default is not None:
        p.add_argument("--sparsity", type=sparsity_type, default=sparsity_default)


def _add_solver_flags(p):
    p.add_argument("--algorithm", choices=("mp", "omp", "gp"), default="gp")
    p.add_argument("--detector", choices=tuple(DETECTOR_FLAGS), default="chain")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--anneal-sweeps", type=int, default=None)
    p.add_argument("--anneal-t0", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbr", description="Sparse boson-sampling output reconstruction from pair marginals")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random sparse instance with its marginals")
    _add_shape_flags(p, sparsity_default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="exact output statistics of an interferometer and their marginals")
    p.add_argument("--modes", type=int, default=4)
    p.add_argument("--levels", type=int, default=None, help="default: photons + 1")
    p.add_argument("--pairs", default="chain")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--haar", action="store_true")
    src.add_argument("--identity", action="store_true")
    src.add_argument("--unitary", help="JSON interferometer file")
    p.add_argument("--photons", type=int, default=1, help="one photon in each of the first modes")
    p.add_argument("--input", help="explicit input pattern, e.g. 2,0,1,0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("reconstruct", help="recover the sparse joint distribution from an instance file")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--sparsity", dest="target_sparsity", type=int, default=None, help="stop at this support size")
    p.add_argument("--nonneg", action="store_true", help="clip negatives and renormalise the result")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("benchmark", help="success-rate tables")
    _add_shape_flags(p, sparsity_default="4,5,6", sparsity_type=str)
    _add_solver_flags(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--paper", action="store_true", help="M=6, N=4, GP, <=50 iterations vs published fractions")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="path prefix for .csv and .json outputs")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("selftest", help="run invariant checks")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--inject-sign-flip", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, UndefinedMetricError, ProjectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
