"""Support detection: locate ``argmax_t |(A^T r)_t|`` without scanning ``N**M`` entries.

For a nearest-neighbour chain the objective ``sum_m T_m[n_m, n_{m+1}]`` is a
classical 1D spin-chain energy, maximised exactly by max-sum dynamic
programming in ``O(M N^2)``.  Running it on ``+T`` and ``-T`` gives the
absolute-value maximiser.  General pair graphs fall back to simulated
annealing; :func:`brute_argmax` is the exhaustive oracle.

Tie policy: the lowest flat index wins inside a branch, and the positive
branch wins when both branches reach the same absolute value.
"""

from __future__ import annotations

import contextlib
import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ProblemShape, ShapeError, encode_pattern
from .measurement import ResidualTables, dense_adjoint


class UnsupportedStructureError(ValueError):
    """The detector cannot handle the shape's pair graph."""


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ArgmaxResult:
    index: int
    value: float
    sign: int

    def to_json(self) -> dict:
        return {"index": self.index, "value": self.value, "sign": self.sign}


_faults = threading.local()


@contextlib.contextmanager
def dp_sign_flip():
    """Test hook: make :func:`chain_argmax` optimise the wrong sign."""
    _faults.sign_flip = True
    try:
        yield
    finally:
        _faults.sign_flip = False


def _check_shape(tables: ResidualTables, shape: ProblemShape | None) -> ProblemShape:
    if shape is not None and shape != tables.shape:
        raise ShapeError("tables were built for a different shape")
    return tables.shape


def chain_argmax(tables: ResidualTables, shape: ProblemShape | None = None) -> tuple[int, float]:
    """Exact maximiser of the chain objective; returns ``(flat index, value)``.

    Suffix scores are computed right to left so that the left-to-right
    reconstruction can take the smallest digit at each step; this yields the
    lexicographically smallest, hence lowest-index, maximiser.
    """
    shape = _check_shape(tables, shape)
    if not shape.is_chain():
        raise UnsupportedStructureError("chain_argmax needs the nearest-neighbour chain pair list")
    m_count, n = shape.modes, shape.levels
    t = tables.tables
    if getattr(_faults, "sign_flip", False):
        t = -t

    suffix = np.zeros((m_count, n))
    for m in range(m_count - 2, -1, -1):
        suffix[m] = (t[m] + suffix[m + 1][None, :]).max(axis=1)

    counts = [int(np.argmax(suffix[0]))]
    for m in range(m_count - 1):
        counts.append(int(np.argmax(t[m][counts[-1]] + suffix[m + 1])))
    return encode_pattern(counts, shape), float(suffix[0][counts[0]])


def abs_argmax(tables: ResidualTables, shape: ProblemShape | None = None) -> ArgmaxResult:
    pos_idx, pos_val = chain_argmax(tables, shape)
    neg_idx, neg_val = chain_argmax(-tables, shape)
    if pos_val >= neg_val:
        return ArgmaxResult(pos_idx, pos_val, 1)
    return ArgmaxResult(neg_idx, -neg_val, -1)


def brute_argmax(tables: ResidualTables, shape: ProblemShape | None = None) -> ArgmaxResult:
    _check_shape(tables, shape)
    a = dense_adjoint(tables)
    pos, neg = int(np.argmax(a)), int(np.argmax(-a))
    if a[pos] >= -a[neg]:
        return ArgmaxResult(pos, float(a[pos]), 1)
    return ArgmaxResult(neg, float(a[neg]), -1)


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric temperature ladder from ``t_start`` down to ``t_start * end_ratio``.

    ``None`` fields take defaults at run time: ``t_start = max |T_p|`` and
    ``sweeps = 100 * M``.  One sweep proposes ``N - 1`` random level changes per mode.
    """

    sweeps: int | None = None
    t_start: float | None = None
    end_ratio: float = 1e-3

    def __post_init__(self):
        if self.sweeps is not None and self.sweeps < 1:
            raise ScheduleError("sweeps must be positive")
        if self.t_start is not None and not self.t_start > 0:
            raise ScheduleError("t_start must be positive")
        if not 0 < self.end_ratio <= 1:
            raise ScheduleError("end_ratio must lie in (0, 1] so temperatures do not increase")

    def ladder(self, shape: ProblemShape, tables: np.ndarray) -> np.ndarray:
        sweeps = self.sweeps if self.sweeps is not None else 100 * shape.modes
        t0 = self.t_start if self.t_start is not None else float(np.abs(tables).max(initial=0.0))
        if t0 == 0.0:
            return np.zeros(0)
        if sweeps == 1:
            return np.array([t0])
        return t0 * self.end_ratio ** (np.arange(sweeps) / (sweeps - 1))


def _incidence(shape: ProblemShape) -> list[list[tuple[int, bool, int]]]:
    """For each mode (0-based): (pair index, mode is first member, other mode)."""
    out: list[list[tuple[int, bool, int]]] = [[] for _ in range(shape.modes)]
    for p, (i, j) in enumerate(shape.pairs):
        out[i - 1].append((p, True, j - 1))
        out[j - 1].append((p, False, i - 1))
    return out


def _energy(t: np.ndarray, shape: ProblemShape, state: list[int]) -> float:
    return float(sum(t[p][state[i - 1], state[j - 1]] for p, (i, j) in enumerate(shape.pairs)))


def _anneal_branch(t: np.ndarray, shape: ProblemShape, temps: np.ndarray, rng: np.random.Generator):
    m_count, n = shape.modes, shape.levels
    inc = _incidence(shape)
    state = [int(s) for s in rng.integers(0, n, size=m_count)]
    energy = _energy(t, shape, state)
    best_state, best_energy = list(state), energy

    tries = n - 1
    moves = rng.integers(1, n, size=(len(temps), m_count * tries))
    coins = rng.random(size=(len(temps), m_count * tries))
    for k, temp in enumerate(temps):
        for q in range(m_count * tries):
            m = q // tries
            old = state[m]
            new = (old + int(moves[k, q])) % n
            delta = 0.0
            for p, first, other in inc[m]:
                s = state[other]
                delta += (t[p][new, s] - t[p][old, s]) if first else (t[p][s, new] - t[p][s, old])
            if delta >= 0 or coins[k, q] < math.exp(delta / temp):
                state[m] = new
                energy += delta
                if energy > best_energy:
                    best_state, best_energy = list(state), energy
    # recompute to shed accumulated rounding from incremental updates
    return best_state, _energy(t, shape, best_state)


def anneal_argmax(
    tables: ResidualTables,
    shape: ProblemShape | None = None,
    schedule: AnnealSchedule | None = None,
    seed: int | np.random.SeedSequence | None = 0,
) -> ArgmaxResult:
    """Single-spin-flip Metropolis annealing on ``+T`` and ``-T``; heuristic.

    Works for any pair graph.  For ``N = 2`` the objective is an Ising
    Hamiltonian with couplings and fields read off the tables (see
    :func:`ising_coefficients`).
    """
    shape = _check_shape(tables, shape)
    schedule = schedule or AnnealSchedule()
    temps = schedule.ladder(shape, tables.tables)
    if temps.size == 0:
        return ArgmaxResult(0, 0.0, 1)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    pos_rng, neg_rng = (np.random.default_rng(s) for s in seq.spawn(2))
    pos_state, pos_val = _anneal_branch(tables.tables, shape, temps, pos_rng)
    neg_state, neg_val = _anneal_branch(-tables.tables, shape, temps, neg_rng)
    if pos_val >= neg_val:
        return ArgmaxResult(encode_pattern(pos_state, shape), pos_val, 1)
    return ArgmaxResult(encode_pattern(neg_state, shape), -neg_val, -1)


def ising_coefficients(tables: ResidualTables) -> tuple[float, dict[int, float], dict[tuple[int, int], float]]:
    """Rewrite a two-level objective as ``const + sum h_i s_i + sum J_ij s_i s_j``.

    Spins are ``s = 1 - 2 n`` (level 0 -> +1, level 1 -> -1), modes 1-based.
    """
    shape = tables.shape
    if shape.levels != 2:
        raise UnsupportedStructureError("Ising form requires two levels per mode")
    const = 0.0
    fields: dict[int, float] = {m: 0.0 for m in range(1, shape.modes + 1)}
    couplings: dict[tuple[int, int], float] = {}
    for p, (i, j) in enumerate(shape.pairs):
        (a, b), (c, d) = tables.tables[p]
        const += (a + b + c + d) / 4
        fields[i] += (a + b - c - d) / 4
        fields[j] += (a - b + c - d) / 4
        couplings[(i, j)] = couplings.get((i, j), 0.0) + (a - b - c + d) / 4
    return const, fields, couplings


DETECTORS: dict[str, Callable[..., ArgmaxResult]] = {
    "chain_dp": abs_argmax,
    "anneal": anneal_argmax,
    "brute": brute_argmax,
}
