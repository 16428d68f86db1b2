"""Desk-scale ground truth for boson sampling.

Output statistics come from permanents of submatrices of a unitary; pair
marginals are then summed out of the dense joint distribution.  This stands
in for a polynomial-time marginal engine and is only usable while ``N**M``
stays under the dimension cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MeasurementVector,
    OccupationPattern,
    ProblemShape,
    ShapeError,
    SparseVector,
    all_digits,
    encode_pattern,
    require_dense,
)

MAX_PHOTONS = 12
MAX_PERMANENT_SIZE = 20
UNITARITY_TOL = 1e-10


class NotUnitaryError(ValueError):
    pass


@dataclass(frozen=True)
class Interferometer:
    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=np.complex128)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ShapeError(f"interferometer must be square, got shape {u.shape}")
        if unitarity_residual(u) > UNITARITY_TOL:
            raise NotUnitaryError(f"matrix is not unitary (residual {unitarity_residual(u):.2e})")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, modes: int) -> "Interferometer":
        return cls(np.eye(modes))

    def to_json(self) -> dict:
        return {"M": self.modes, "matrix": [[[z.real, z.imag] for z in row] for row in self.matrix.tolist()]}

    @classmethod
    def from_json(cls, obj: dict) -> "Interferometer":
        m = np.array(obj["matrix"], dtype=np.float64)
        if m.ndim != 3 or m.shape[2] != 2 or m.shape[0] != int(obj.get("M", m.shape[0])):
            raise ShapeError("matrix must be M x M of [re, im] pairs")
        return cls(m[..., 0] + 1j * m[..., 1])


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max(initial=0.0))


def haar_unitary(modes: int, seed=None) -> Interferometer:
    """Haar sample via QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    if modes < 1:
        raise ShapeError("modes must be positive")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return Interferometer(q * (diag / np.abs(diag)))


def permanent(a: np.ndarray) -> complex:
    """Ryser's formula with Gray-code subset order, O(2^n n)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > MAX_PERMANENT_SIZE:
        raise ShapeError(f"permanent limited to n <= {MAX_PERMANENT_SIZE}")
    cols = a.T.copy()
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0j
    gray = 0
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += cols[j]
        else:
            row_sums -= cols[j]
        term = np.prod(row_sums)
        total += -term if bin(gray).count("1") & 1 else term
    return complex((-1) ** n * total)


def _repeat_indices(counts) -> list[int]:
    return [m for m, c in enumerate(counts) for _ in range(c)]


def transition_probability(u: Interferometer | np.ndarray, inp, out) -> float:
    """``|Per(U_{T,S})|^2 / (prod s! prod t!)`` for input ``S`` and output ``T``.

    Patterns with different photon numbers have probability 0 under a
    lossless unitary.
    """
    mat = u.matrix if isinstance(u, Interferometer) else np.asarray(u)
    s = tuple(OccupationPattern(tuple(inp)).counts)
    t = tuple(OccupationPattern(tuple(out)).counts)
    if len(s) != mat.shape[0] or len(t) != mat.shape[0]:
        raise ShapeError("pattern length must equal the number of modes")
    if min(s + t, default=0) < 0:
        raise ShapeError("occupations must be non-negative")
    n = sum(s)
    if n != sum(t):
        return 0.0
    if n > MAX_PHOTONS:
        raise ShapeError(f"at most {MAX_PHOTONS} photons supported")
    sub = mat[np.ix_(_repeat_indices(t), _repeat_indices(s))]
    norm = math.prod(math.factorial(c) for c in s) * math.prod(math.factorial(c) for c in t)
    return abs(permanent(sub)) ** 2 / norm


def _compositions(n: int, modes: int):
    """All length-``modes`` non-negative integer tuples summing to ``n``."""
    if modes == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, modes - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class JointDistribution:
    shape: ProblemShape
    probabilities: np.ndarray
    truncated_mass: float
    photons: int

    def total(self) -> float:
        return float(self.probabilities.sum())

    def as_sparse(self, tol: float = 0.0) -> SparseVector:
        nz = np.flatnonzero(self.probabilities > tol)
        return SparseVector(tuple(int(i) for i in nz), self.probabilities[nz])


def joint_distribution(u: Interferometer, inp, shape: ProblemShape) -> JointDistribution:
    """Output statistics on the truncated index space.

    Outputs with some mode above ``N - 1`` are not representable; their
    combined probability is reported as ``truncated_mass`` and nothing is
    renormalised.
    """
    inp = OccupationPattern(tuple(inp))
    if len(inp) != shape.modes or u.modes != shape.modes:
        raise ShapeError("input pattern, interferometer and shape disagree on mode count")
    d = shape.dimension()
    require_dense(d, "joint distribution")
    n = inp.total()
    probs = np.zeros(d)
    truncated = 0.0
    for out in _compositions(n, shape.modes):
        p = transition_probability(u, inp.counts, out)
        if max(out) < shape.levels:
            probs[encode_pattern(out, shape)] = p
        else:
            truncated += p
    return JointDistribution(shape, probs, truncated, n)


def pair_marginals(x: JointDistribution, pairs=None) -> MeasurementVector:
    """Brute-force pair marginals of a dense joint distribution."""
    shape = x.shape if pairs is None else ProblemShape(x.shape.modes, x.shape.levels, tuple(pairs))
    n = shape.levels
    digits = all_digits(shape)
    blocks = np.zeros((len(shape.pairs), n, n))
    for p, (i, j) in enumerate(shape.pairs):
        np.add.at(blocks[p], (digits[:, i - 1], digits[:, j - 1]), x.probabilities)
    return MeasurementVector(shape, blocks)


def random_sparse_distribution(shape: ProblemShape, sparsity: int, seed=None) -> SparseVector:
    """Uniform random support of size ``sparsity`` with uniform(0,1) weights normalised to 1."""
    d = shape.dimension()
    if not 1 <= sparsity <= d:
        raise ValueError(f"sparsity must lie in 1..{d}")
    rng = np.random.default_rng(seed)
    if d <= 2**62:
        support = rng.choice(d, size=sparsity, replace=False)
    else:
        chosen: set[int] = set()
        while len(chosen) < sparsity:
            chosen.add(int(sum(int(rng.integers(0, shape.levels)) * pv for pv in shape.place_values())))
        support = list(chosen)
    w = rng.uniform(0.0, 1.0, size=sparsity)
    w = w / w.sum()
    return SparseVector.from_pairs(zip((int(t) for t in support), w))


def all_output_patterns(n: int, modes: int) -> list[tuple[int, ...]]:
    return list(_compositions(n, modes))


def beamsplitter() -> Interferometer:
    """Balanced two-mode beamsplitter."""
    return Interferometer(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2))


def naive_permanent(a: np.ndarray) -> complex:
    """Permutation-sum definition, O(n! n).  Reference for tests only."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    return complex(sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))))
