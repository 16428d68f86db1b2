import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kron_operator
from sbr.core import DimensionCapError, ProblemShape, ShapeError, SparseVector, decode_index, encode_pattern
from sbr.measurement import (
    MeasurementOperator,
    ResidualTables,
    adjoint_entries,
    adjoint_entry,
    build_residual_tables,
    dense_materialize,
    forward_apply,
    gram_entry,
    row_bin_of_index,
)

SMALL_SHAPES = [ProblemShape(m, n) for m in range(2, 5) for n in (2, 3)] + [
    ProblemShape(4, 3, ((1, 3), (2, 4), (1, 4))),
    ProblemShape(3, 2, ((1, 3),)),
]


class TestDenseMaterialize:
    def test_reference_dimensions(self):
        a = dense_materialize(MeasurementOperator(ProblemShape(6, 4)))
        assert a.shape == (80, 4096)

    @pytest.mark.parametrize("shape", SMALL_SHAPES + [ProblemShape(6, 4)], ids=str)
    def test_matches_tensor_products(self, shape):
        np.testing.assert_array_equal(dense_materialize(shape), kron_operator(shape))

    @pytest.mark.parametrize("shape", SMALL_SHAPES, ids=str)
    def test_row_and_column_sums(self, shape):
        a = dense_materialize(shape)
        assert (a.sum(axis=0) == len(shape.pairs)).all()
        assert (a.sum(axis=1) == shape.levels ** (shape.modes - 2)).all()

    def test_worked_row(self):
        # row for pair (2,3), (n_2, n_3) = (1, 0) at M=5, N=2: (11)(01)(10)(11)(11)
        shape = ProblemShape(5, 2)
        a = dense_materialize(shape)
        row = a[1 * 4 + 1 * 2 + 0]
        expected = np.kron(np.kron(np.kron(np.kron([1, 1], [0, 1]), [1, 0]), [1, 1]), [1, 1])
        np.testing.assert_array_equal(row, expected)
        # the overlap with column 13 (pattern 01101) is zero: mode 3 reads 1, the row wants 0
        assert row[13] == 0

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("SBR_DIM_CAP", "100")
        with pytest.raises(DimensionCapError):
            dense_materialize(ProblemShape(7, 2))


class TestRowBin:
    def test_worked_example(self):
        assert row_bin_of_index((2, 3), 13, ProblemShape(5, 2)) == (1, 1)

    def test_zero(self):
        shape = ProblemShape(4, 3)
        for pair in shape.pairs:
            assert row_bin_of_index(pair, 0, shape) == (0, 0)

    def test_cross_check_dense(self, rng):
        shape = ProblemShape(6, 4)
        a = dense_materialize(shape)
        n = shape.levels
        for t in rng.integers(0, shape.dimension(), size=100):
            for p, pair in enumerate(shape.pairs):
                u, v = row_bin_of_index(pair, int(t), shape)
                block = a[p * n * n : (p + 1) * n * n, t]
                assert np.flatnonzero(block).tolist() == [u * n + v]


class TestForwardApply:
    def test_two_point_masses(self):
        shape = ProblemShape(2, 2)
        y = forward_apply(shape, SparseVector.from_pairs([(0, 0.7), (3, 0.3)]))
        np.testing.assert_array_equal(y.blocks[0], [[0.7, 0.0], [0.0, 0.3]])

    def test_point_mass_hits_one_bin_per_pair(self):
        shape = ProblemShape(5, 3)
        y = forward_apply(shape, SparseVector.point(100))
        assert (np.count_nonzero(y.blocks.reshape(len(shape.pairs), -1), axis=1) == 1).all()
        assert y.flat().sum() == len(shape.pairs)

    @pytest.mark.parametrize("shape", SMALL_SHAPES, ids=str)
    def test_matches_dense(self, shape, rng):
        a = dense_materialize(shape).astype(float)
        for s in (1, 2, min(5, shape.dimension())):
            for _ in range(20):
                idx = rng.choice(shape.dimension(), s, replace=False)
                x = SparseVector.from_pairs(zip(idx, rng.normal(size=s)))
                np.testing.assert_allclose(forward_apply(shape, x).flat(), a @ x.to_dense(shape), atol=1e-12)

    def test_matches_dense_m6_n4(self, rng):
        shape = ProblemShape(6, 4)
        a = dense_materialize(shape).astype(float)
        for _ in range(20):
            idx = rng.choice(4096, 5, replace=False)
            x = SparseVector.from_pairs(zip(idx, rng.uniform(size=5)))
            np.testing.assert_allclose(forward_apply(shape, x).flat(), a @ x.to_dense(shape), atol=1e-12)

    def test_mass_conservation(self, rng):
        shape = ProblemShape(6, 4)
        x = SparseVector.from_pairs(zip(rng.choice(4096, 7, replace=False), rng.normal(size=7)))
        np.testing.assert_allclose(forward_apply(shape, x).blocks.sum(axis=(1, 2)), x.total(), atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            forward_apply(ProblemShape(3, 2), SparseVector.point(8))


class TestAdjoint:
    def test_zero_tables(self):
        shape = ProblemShape(4, 3)
        tables = build_residual_tables(np.zeros(shape.measurement_count()), shape)
        assert np.all(adjoint_entries(tables, range(shape.dimension())) == 0)

    def test_indicator_table(self):
        shape = ProblemShape(3, 2, ((1, 3),))
        t = np.zeros((1, 2, 2))
        t[0, 1, 0] = 1.0
        tables = ResidualTables(shape, t)
        for flat in range(8):
            pat = decode_index(flat, shape)
            assert adjoint_entry(tables, flat) == (1.0 if (pat[0], pat[2]) == (1, 0) else 0.0)

    @pytest.mark.parametrize("shape", SMALL_SHAPES, ids=str)
    def test_exhaustive_against_dense(self, shape, rng):
        a = dense_materialize(shape).astype(float)
        for _ in range(10):
            r = rng.normal(size=shape.measurement_count())
            tables = build_residual_tables(r, shape)
            got = np.array([adjoint_entry(tables, t) for t in range(shape.dimension())])
            np.testing.assert_allclose(got, a.T @ r, atol=1e-12, rtol=0)

    def test_duality(self, rng):
        shape = ProblemShape(6, 4)
        for _ in range(50):
            idx = rng.choice(4096, 6, replace=False)
            x = SparseVector.from_pairs(zip(idx, rng.normal(size=6)))
            r = rng.normal(size=80)
            lhs = forward_apply(shape, x).flat() @ r
            rhs = x.weights @ adjoint_entries(build_residual_tables(r, shape), x.indices)
            assert abs(lhs - rhs) <= 1e-10


class TestResidualTables:
    def test_round_trip(self, rng):
        shape = ProblemShape(5, 3)
        r = rng.normal(size=shape.measurement_count())
        tables = build_residual_tables(r, shape)
        np.testing.assert_array_equal(tables.flatten(), r)
        assert tables.tables[2, 1, 2] == r[2 * 9 + 1 * 3 + 2]

    def test_zero(self):
        shape = ProblemShape(3, 2)
        assert np.all(build_residual_tables(np.zeros(8), shape).tables == 0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            build_residual_tables(np.zeros(7), ProblemShape(3, 2))


class TestGram:
    def test_diagonal(self, rng):
        shape = ProblemShape(6, 4)
        for t in rng.integers(0, 4096, size=50):
            assert gram_entry(int(t), int(t), shape) == 5

    def test_interior_mode_change(self):
        shape = ProblemShape(6, 4)
        base = [1, 2, 3, 0, 1, 2]
        for m in range(1, 5):
            other = list(base)
            other[m] = (other[m] + 1) % 4
            assert gram_entry(encode_pattern(base, shape), encode_pattern(other, shape), shape) == 3

    def test_random_against_dense(self, rng):
        shape = ProblemShape(6, 4)
        a = dense_materialize(shape).astype(np.int64)
        for t, t2 in rng.integers(0, 4096, size=(300, 2)):
            assert gram_entry(int(t), int(t2), shape) == int(a[:, t] @ a[:, t2])

    @pytest.mark.parametrize("shape", SMALL_SHAPES, ids=str)
    def test_exhaustive_small(self, shape):
        a = dense_materialize(shape).astype(np.int64)
        g = a.T @ a
        for t, t2 in itertools.product(range(shape.dimension()), repeat=2):
            assert gram_entry(t, t2, shape) == g[t, t2]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_duality_property(m, n, seed):
    shape = ProblemShape(m, n)
    rng = np.random.default_rng(seed)
    s = min(4, shape.dimension())
    x = SparseVector.from_pairs(zip(rng.choice(shape.dimension(), s, replace=False), rng.normal(size=s)))
    r = rng.normal(size=shape.measurement_count())
    lhs = forward_apply(shape, x).flat() @ r
    rhs = x.weights @ adjoint_entries(build_residual_tables(r, shape), x.indices)
    assert abs(lhs - rhs) <= 1e-10
