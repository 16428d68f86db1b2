"""Implicit pairwise-marginal measurement operator.

Row ``(p, u, v)`` of the operator is the indicator of all patterns whose
digits at pair ``p = (i, j)`` equal ``(u, v)``.  Column ``t`` therefore has
exactly one 1 per pair block, at the bin given by digits ``i`` and ``j`` of
``t``.  Nothing here stores a ``k x N**M`` object except
:func:`dense_materialize`, which exists for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    MeasurementVector,
    ProblemShape,
    ShapeError,
    SparseVector,
    all_digits,
    decode_index,
    require_dense,
)


@dataclass(frozen=True)
class MeasurementOperator:
    shape: ProblemShape

    @property
    def rows(self) -> int:
        return self.shape.measurement_count()

    @property
    def cols(self) -> int:
        return self.shape.dimension()

    def dims(self) -> tuple[int, int]:
        return self.rows, self.cols


@dataclass(frozen=True)
class ResidualTables:
    """One ``N x N`` table per measured pair; compressed form of ``A^T r``."""

    shape: ProblemShape
    tables: np.ndarray

    def __post_init__(self):
        n, p = self.shape.levels, len(self.shape.pairs)
        t = np.array(self.tables, dtype=np.float64)
        if t.size != p * n * n:
            raise ShapeError(f"expected {p} tables of {n}x{n}, got {t.size} values")
        t = t.reshape(p, n, n)
        t.setflags(write=False)
        object.__setattr__(self, "tables", t)

    def flatten(self) -> np.ndarray:
        return self.tables.reshape(-1)

    def __neg__(self) -> "ResidualTables":
        return ResidualTables(self.shape, -self.tables)


def _pair_digit_arrays(shape: ProblemShape, indices) -> tuple[np.ndarray, np.ndarray]:
    """Digits at both members of every pair, as ``(len(indices), P)`` int arrays."""
    pats = np.array([decode_index(t, shape).counts for t in indices], dtype=np.int64).reshape(-1, shape.modes)
    first = np.array([i - 1 for i, _ in shape.pairs], dtype=np.int64)
    second = np.array([j - 1 for _, j in shape.pairs], dtype=np.int64)
    return pats[:, first], pats[:, second]


def row_bin_of_index(pair: tuple[int, int], t: int, shape: ProblemShape) -> tuple[int, int]:
    i, j = pair
    if not 1 <= i < j <= shape.modes:
        raise ShapeError(f"invalid pair {pair}")
    pat = decode_index(t, shape)
    return pat[i - 1], pat[j - 1]


def column_rows(t: int, shape: ProblemShape) -> np.ndarray:
    """Flat row positions of the ones in column ``t`` (one per pair)."""
    u, v = _pair_digit_arrays(shape, [t])
    n = shape.levels
    return np.arange(len(shape.pairs)) * n * n + u[0] * n + v[0]


def forward_apply(op: MeasurementOperator | ProblemShape, x: SparseVector) -> MeasurementVector:
    shape = op.shape if isinstance(op, MeasurementOperator) else op
    x.check_range(shape)
    n, p = shape.levels, len(shape.pairs)
    blocks = np.zeros((p, n, n))
    if x.sparsity() and p:
        u, v = _pair_digit_arrays(shape, x.indices)
        pidx = np.broadcast_to(np.arange(p), u.shape)
        np.add.at(blocks, (pidx, u, v), np.broadcast_to(x.weights[:, None], u.shape))
    return MeasurementVector(shape, blocks)


def build_residual_tables(y_like: MeasurementVector | np.ndarray, shape: ProblemShape | None = None) -> ResidualTables:
    if isinstance(y_like, MeasurementVector):
        if shape is not None and shape != y_like.shape:
            raise ShapeError("measurement vector shape differs from requested shape")
        return ResidualTables(y_like.shape, y_like.blocks)
    if shape is None:
        raise ShapeError("a ProblemShape is required for raw arrays")
    arr = np.asarray(y_like, dtype=np.float64).reshape(-1)
    if arr.size != shape.measurement_count():
        raise ShapeError(f"length {arr.size} != measurement count {shape.measurement_count()}")
    return ResidualTables(shape, arr)


def adjoint_entries(tables: ResidualTables, indices) -> np.ndarray:
    """``(A^T r)_t`` for each ``t`` in ``indices``; cost O(len(indices) * P)."""
    indices = list(indices)
    if not indices:
        return np.zeros(0)
    shape = tables.shape
    if not shape.pairs:
        return np.zeros(len(indices))
    u, v = _pair_digit_arrays(shape, indices)
    pidx = np.broadcast_to(np.arange(len(shape.pairs)), u.shape)
    return tables.tables[pidx, u, v].sum(axis=1)


def adjoint_entry(tables: ResidualTables, t: int) -> float:
    return float(adjoint_entries(tables, [t])[0])


def gram_entry(t: int, t2: int, shape: ProblemShape) -> int:
    """``(A^T A)[t, t2]``: number of pairs on which both digits agree."""
    a, b = decode_index(t, shape), decode_index(t2, shape)
    return sum(1 for i, j in shape.pairs if a[i - 1] == b[i - 1] and a[j - 1] == b[j - 1])


def gram_matrix(indices, shape: ProblemShape) -> np.ndarray:
    u, v = _pair_digit_arrays(shape, indices)
    agree = (u[:, None, :] == u[None, :, :]) & (v[:, None, :] == v[None, :, :])
    return agree.sum(axis=2).astype(np.float64)


def dense_adjoint(tables: ResidualTables) -> np.ndarray:
    """Full length-``N**M`` vector ``A^T r``.  Test/oracle use, behind the cap."""
    shape = tables.shape
    digits = all_digits(shape)
    out = np.zeros(shape.dimension())
    for p, (i, j) in enumerate(shape.pairs):
        out += tables.tables[p][digits[:, i - 1], digits[:, j - 1]]
    return out


def dense_materialize(op: MeasurementOperator | ProblemShape) -> np.ndarray:
    """Explicit binary ``k x N**M`` matrix (uint8)."""
    shape = op.shape if isinstance(op, MeasurementOperator) else op
    d, n = shape.dimension(), shape.levels
    require_dense(d, "dense operator")
    digits = all_digits(shape)
    a = np.zeros((shape.measurement_count(), d), dtype=np.uint8)
    cols = np.arange(d)
    for p, (i, j) in enumerate(shape.pairs):
        a[p * n * n + digits[:, i - 1] * n + digits[:, j - 1], cols] = 1
    return a
