import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbr.core import (
    IndexRangeError,
    InvalidPatternError,
    MeasurementVector,
    OccupationPattern,
    ProblemShape,
    ShapeError,
    SparseVector,
    decode_index,
    encode_pattern,
    validate_distribution,
)
from sbr.oracle import random_sparse_distribution


class TestProblemShape:
    def test_chain_default(self):
        shape = ProblemShape(6, 4)
        assert shape.pairs == ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6))
        assert shape.dimension() == 4096
        assert shape.measurement_count() == 80
        assert shape.is_chain()

    def test_explicit_pairs(self):
        shape = ProblemShape(4, 3, ((1, 3), (2, 4)))
        assert not shape.is_chain()
        assert shape.measurement_count() == 18

    @pytest.mark.parametrize(
        "args",
        [(0, 2, None), (3, 1, None), (3, 2, ((1, 1),)), (3, 2, ((2, 1),)), (3, 2, ((1, 4),)), (3, 2, ((1, 2), (1, 2)))],
    )
    def test_invalid(self, args):
        with pytest.raises(ShapeError):
            ProblemShape(*args)

    def test_json_round_trip(self):
        shape = ProblemShape(5, 3, ((1, 2), (2, 5)))
        assert ProblemShape.from_json(shape.to_json()) == shape


class TestCodec:
    def test_worked_example(self):
        # 01101 at N=2 is the 14th position, flat index 13
        shape = ProblemShape(5, 2)
        assert encode_pattern((0, 1, 1, 0, 1), shape) == 13
        assert decode_index(13, shape).counts == (0, 1, 1, 0, 1)

    @pytest.mark.parametrize("m,n", [(1, 2), (4, 3), (6, 4)])
    def test_extremes(self, m, n):
        shape = ProblemShape(m, n)
        assert encode_pattern([0] * m, shape) == 0
        assert decode_index(0, shape).counts == (0,) * m
        assert decode_index(n**m - 1, shape).counts == (n - 1,) * m

    def test_random_round_trip_m6_n4(self, rng):
        shape = ProblemShape(6, 4)
        for pat in rng.integers(0, 4, size=(1000, 6)):
            assert decode_index(encode_pattern(pat, shape), shape).counts == tuple(pat)

    @pytest.mark.parametrize("m,n", [(2, 2), (3, 3), (6, 4), (4, 5)])
    def test_exhaustive_bijection_and_monotone(self, m, n):
        shape = ProblemShape(m, n)
        # itertools.product enumerates in lexicographic order
        for expected, pat in enumerate(itertools.product(range(n), repeat=m)):
            assert encode_pattern(pat, shape) == expected
            assert decode_index(expected, shape).counts == pat

    @given(st.integers(2, 5), st.integers(1, 30), st.data())
    def test_round_trip_large(self, n, m, data):
        shape = ProblemShape(m, n)
        flat = data.draw(st.integers(0, n**m - 1))
        assert encode_pattern(decode_index(flat, shape), shape) == flat

    def test_huge_index_space_stays_exact(self):
        shape = ProblemShape(64, 2)
        pat = [1] * 64
        assert encode_pattern(pat, shape) == 2**64 - 1

    def test_errors(self):
        shape = ProblemShape(3, 2)
        with pytest.raises(InvalidPatternError):
            encode_pattern((0, 2, 0), shape)
        with pytest.raises(InvalidPatternError):
            encode_pattern((0, 1), shape)
        with pytest.raises(IndexRangeError):
            decode_index(8, shape)
        with pytest.raises(IndexRangeError):
            decode_index(-1, shape)

    def test_pattern_label(self):
        assert OccupationPattern((0, 1, 2)).label() == "012"


class TestSparseVector:
    def test_from_pairs_merges(self):
        x = SparseVector.from_pairs([(3, 0.5), (1, 0.25), (3, 0.25)])
        assert x.indices == (1, 3)
        np.testing.assert_array_equal(x.weights, [0.25, 0.75])
        assert x.sparsity() == 2

    def test_rejects_unsorted(self):
        with pytest.raises(ShapeError):
            SparseVector((3, 1), np.array([1.0, 1.0]))
        with pytest.raises(ShapeError):
            SparseVector((1, 1), np.array([1.0, 1.0]))

    def test_immutable(self):
        x = SparseVector.point(2)
        with pytest.raises(ValueError):
            x.weights[0] = 3.0


class TestValidateDistribution:
    def test_point_mass(self):
        assert validate_distribution(SparseVector.point(0))

    def test_not_normalised(self):
        assert not validate_distribution(SparseVector.from_pairs([(0, 0.5), (3, 0.6)]), tol=1e-9)

    def test_negative(self):
        assert not validate_distribution(SparseVector.from_pairs([(0, 1.5), (3, -0.5)]))

    def test_generator_output(self):
        shape = ProblemShape(6, 4)
        for seed in range(50):
            assert validate_distribution(random_sparse_distribution(shape, 5, seed), tol=1e-12)


def test_measurement_vector_layout():
    shape = ProblemShape(3, 2)
    flat = np.arange(8.0)
    y = MeasurementVector.from_flat(flat, shape)
    assert y.blocks[1, 0, 1] == 5.0
    np.testing.assert_array_equal(y.flat(), flat)
    with pytest.raises(ShapeError):
        MeasurementVector.from_flat(np.zeros(7), shape)
