"""Problem shapes, sparse vectors and the N-inary index codec.

Flat indices are 0-based and mode 1 is the most significant digit, so the
pattern ``(n_1, ..., n_M)`` maps to ``sum_m n_m * N**(M - m)``.  Indices are
plain Python ints so that shapes with ``N**M`` beyond 64 bits stay exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .audit import note_dense

DEFAULT_DIM_CAP = 2**20


class ShapeError(ValueError):
    """Inconsistent dimensions between shapes, vectors or tables."""


class InvalidPatternError(ValueError):
    pass


class IndexRangeError(IndexError):
    pass


class DimensionCapError(RuntimeError):
    """Raised when a dense (test-only) object would exceed the dimension cap."""


def dim_cap() -> int:
    """Dense/oracle dimension cap; ``SBR_DIM_CAP`` overrides the default."""
    raw = os.environ.get("SBR_DIM_CAP")
    return int(raw) if raw else DEFAULT_DIM_CAP


def require_dense(length: int, what: str) -> None:
    """Refuse dense objects above the cap and report them to the allocation audit."""
    if length > dim_cap():
        raise DimensionCapError(f"{what}: dimension {length} exceeds cap {dim_cap()}")
    note_dense(length, what)


def chain_pairs(modes: int) -> tuple[tuple[int, int], ...]:
    return tuple((m, m + 1) for m in range(1, modes))


@dataclass(frozen=True)
class ProblemShape:
    """Mode count ``modes`` (M), levels per mode ``levels`` (N) and measured pairs.

    Pairs are 1-based ``(i, j)`` with ``i < j``.  When ``pairs`` is omitted the
    non-cyclic nearest-neighbour chain ``(1,2), ..., (M-1,M)`` is used.
    """

    modes: int
    levels: int
    pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 1:
            raise ShapeError(f"modes must be a positive integer, got {self.modes!r}")
        if int(self.levels) != self.levels or self.levels < 2:
            raise ShapeError(f"levels must be an integer >= 2, got {self.levels!r}")
        pairs = chain_pairs(self.modes) if self.pairs is None else self.pairs
        pairs = tuple((int(i), int(j)) for i, j in pairs)
        for i, j in pairs:
            if not (1 <= i < j <= self.modes):
                raise ShapeError(f"invalid pair {(i, j)} for {self.modes} modes")
        if len(set(pairs)) != len(pairs):
            raise ShapeError("pairs must be distinct")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def chain(cls, modes: int, levels: int) -> "ProblemShape":
        return cls(modes, levels, chain_pairs(modes))

    def dimension(self) -> int:
        return self.levels**self.modes

    def measurement_count(self) -> int:
        return len(self.pairs) * self.levels**2

    def is_chain(self) -> bool:
        return self.pairs == chain_pairs(self.modes)

    def place_values(self) -> list[int]:
        """``N**(M-m)`` for m = 1..M, as Python ints."""
        return [self.levels ** (self.modes - m) for m in range(1, self.modes + 1)]

    def to_json(self) -> dict:
        return {"M": self.modes, "N": self.levels, "pairs": [list(p) for p in self.pairs]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProblemShape":
        pairs = obj.get("pairs")
        return cls(int(obj["M"]), int(obj["N"]), None if pairs is None else tuple(map(tuple, pairs)))


@dataclass(frozen=True)
class OccupationPattern:
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __getitem__(self, m):
        return self.counts[m]

    def total(self) -> int:
        return sum(self.counts)

    def label(self) -> str:
        return "".join(map(str, self.counts)) if max(self.counts, default=0) < 10 else ",".join(map(str, self.counts))

    def validate(self, shape: ProblemShape) -> None:
        if len(self.counts) != shape.modes:
            raise InvalidPatternError(f"pattern has {len(self.counts)} modes, shape has {shape.modes}")
        for c in self.counts:
            if not 0 <= c < shape.levels:
                raise InvalidPatternError(f"occupation {c} outside 0..{shape.levels - 1}")


def _as_pattern(pattern) -> OccupationPattern:
    return pattern if isinstance(pattern, OccupationPattern) else OccupationPattern(tuple(pattern))


def encode_pattern(pattern: OccupationPattern | Sequence[int], shape: ProblemShape) -> int:
    pattern = _as_pattern(pattern)
    pattern.validate(shape)
    flat = 0
    for c in pattern.counts:
        flat = flat * shape.levels + c
    return flat


def decode_index(flat: int, shape: ProblemShape) -> OccupationPattern:
    flat = int(flat)
    if not 0 <= flat < shape.dimension():
        raise IndexRangeError(f"index {flat} outside 0..{shape.dimension() - 1}")
    counts = [0] * shape.modes
    for m in range(shape.modes - 1, -1, -1):
        flat, counts[m] = divmod(flat, shape.levels)
    return OccupationPattern(tuple(counts))


def digit(flat: int, mode: int, shape: ProblemShape) -> int:
    """Occupation of 1-based ``mode`` in the pattern of ``flat``."""
    return (flat // shape.levels ** (shape.modes - mode)) % shape.levels


def all_digits(shape: ProblemShape) -> np.ndarray:
    """Dense ``(N**M, M)`` digit table; test/oracle use only, behind the cap."""
    d = shape.dimension()
    require_dense(d, "digit table")
    flat = np.arange(d, dtype=np.int64)
    out = np.empty((d, shape.modes), dtype=np.int64)
    for m, place in enumerate(shape.place_values()):
        out[:, m] = (flat // place) % shape.levels
    return out


@dataclass(frozen=True)
class SparseVector:
    """Sorted, unique flat indices with float64 weights."""

    indices: tuple[int, ...] = ()
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if len(idx) != w.size:
            raise ShapeError(f"{len(idx)} indices but {w.size} weights")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ShapeError("indices must be strictly increasing")
        if idx and idx[0] < 0:
            raise IndexRangeError("negative index")
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_pairs(cls, entries: Iterable[tuple[int, float]]) -> "SparseVector":
        """Build from ``(index, weight)`` pairs; repeated indices are summed."""
        acc: dict[int, float] = {}
        for i, w in entries:
            acc[int(i)] = acc.get(int(i), 0.0) + float(w)
        keys = sorted(acc)
        return cls(tuple(keys), np.array([acc[k] for k in keys]))

    @classmethod
    def point(cls, index: int, weight: float = 1.0) -> "SparseVector":
        return cls((int(index),), np.array([weight]))

    def sparsity(self) -> int:
        return len(self.indices)

    def entries(self) -> list[tuple[int, float]]:
        return [(i, float(w)) for i, w in zip(self.indices, self.weights)]

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries())

    def total(self) -> float:
        return float(self.weights.sum())

    def check_range(self, shape: ProblemShape) -> None:
        if self.indices and self.indices[-1] >= shape.dimension():
            raise IndexRangeError(f"index {self.indices[-1]} outside 0..{shape.dimension() - 1}")

    def to_dense(self, shape: ProblemShape) -> np.ndarray:
        d = shape.dimension()
        require_dense(d, "dense vector")
        self.check_range(shape)
        out = np.zeros(d)
        out[list(self.indices)] = self.weights
        return out

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseVector":
        nz = np.flatnonzero(dense)
        return cls(tuple(int(i) for i in nz), dense[nz])

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.indices == other.indices and np.array_equal(self.weights, other.weights)

    __hash__ = None


def validate_distribution(x: SparseVector, tol: float = 1e-9) -> bool:
    if np.any(x.weights < -tol):
        return False
    return abs(x.total() - 1.0) <= tol


@dataclass(frozen=True)
class MeasurementVector:
    """Stacked pair marginals ``y[p, n_i, n_j]``; flattening is row-major in pair order."""

    shape: ProblemShape
    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=np.float64)
        n, p = self.shape.levels, len(self.shape.pairs)
        if b.size != p * n * n:
            raise ShapeError(f"expected {p * n * n} measurement entries, got {b.size}")
        b = b.reshape(p, n, n)
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def from_flat(cls, flat: np.ndarray, shape: ProblemShape) -> "MeasurementVector":
        return cls(shape, np.asarray(flat))

    def flat(self) -> np.ndarray:
        return self.blocks.reshape(-1)

    def __len__(self):
        return self.blocks.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))
