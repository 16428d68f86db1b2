import itertools
from functools import reduce

import numpy as np
import pytest

from sbr.core import ProblemShape

_CRITERIA: dict[str, tuple[bool, str]] = {}


def kron_operator(shape: ProblemShape) -> np.ndarray:
    """Measurement matrix from tensor products of per-mode indicator vectors.

    Independent of ``sbr.measurement``: row (p, u, v) is
    ``1 x .. x e_u x .. x e_v x .. x 1`` with ``e_u`` at mode i and ``e_v`` at mode j.
    """
    n, m = shape.levels, shape.modes
    ones = np.ones(n)
    rows = []
    for i, j in shape.pairs:
        for u, v in itertools.product(range(n), repeat=2):
            factors = [ones] * m
            factors[i - 1] = np.eye(n)[u]
            factors[j - 1] = np.eye(n)[v]
            rows.append(reduce(np.kron, factors))
    return np.array(rows)


def brute_objective(tables: np.ndarray, shape: ProblemShape) -> np.ndarray:
    """``(A^T r)_t`` for every t by explicit enumeration of patterns in index order."""
    out = []
    for pat in itertools.product(range(shape.levels), repeat=shape.modes):
        out.append(sum(tables[p][pat[i - 1], pat[j - 1]] for p, (i, j) in enumerate(shape.pairs)))
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome for the terminal summary."""

    def record(name: str, passed: bool, detail: str = ""):
        _CRITERIA[name] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        passed, detail = _CRITERIA[name]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
