import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencelab.f2linalg import (
    AffineMapF2,
    BitMatrix,
    cnot_map,
    compose,
    eraser_map,
    gaussian_eliminate,
    image_entropy,
    pack_bits,
    rank,
    replay_row_ops,
    row_space_contains,
    unpack_bits,
)


def slow_rank(a):
    """Plain integer elimination, independent of the packed kernels."""
    rows = [int("".join(map(str, r[::-1])), 2) if len(r) else 0 for r in a]
    basis = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


@st.composite
def bit_arrays(draw, max_rows=12, max_cols=140):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    seed = draw(st.integers(0, 2**32 - 1))
    dens = draw(st.sampled_from([0.1, 0.5, 0.9]))
    return (np.random.default_rng(seed).random((r, c)) < dens).astype(np.uint8)


@given(bit_arrays())
def test_pack_roundtrip(a):
    words = pack_bits(a)
    assert np.array_equal(unpack_bits(words, a.shape[1]), a)


@given(bit_arrays())
def test_rank_matches_integer_elimination(a):
    assert rank(BitMatrix.from_array(a)) == slow_rank(a)


@given(bit_arrays())
def test_rank_bounded_and_transpose_invariant(a):
    r = rank(BitMatrix.from_array(a))
    assert r <= min(a.shape)
    if a.shape[0]:
        assert rank(BitMatrix.from_array(a.T.copy())) == r


@given(bit_arrays(max_rows=10, max_cols=80))
def test_elimination_log_replays(a):
    m = BitMatrix.from_array(a)
    red, ops = gaussian_eliminate(m)
    assert replay_row_ops(m, ops) == red
    assert rank(red) == rank(m)
    arr = red.to_array()
    # pivot columns are unit vectors
    for row in arr:
        nz = np.flatnonzero(row)
        if nz.size:
            assert arr[:, nz[0]].sum() == 1


def test_elimination_respects_column_order():
    m = BitMatrix.from_strings(["110", "011"])
    red, _ = gaussian_eliminate(m, column_order=[2, 1])
    arr = red.to_array()
    assert arr[:, 2].sum() == 1 and arr[:, 1].sum() == 1


@pytest.mark.parametrize("order", [[0, 0], [3], [-1]])
def test_bad_column_order(order):
    with pytest.raises(ValueError):
        gaussian_eliminate(BitMatrix.from_strings(["101"]), column_order=order)


@given(bit_arrays(max_rows=8, max_cols=70), st.integers(0, 2**32 - 1))
def test_row_space_membership(a, seed):
    m = BitMatrix.from_array(a)
    rng = np.random.default_rng(seed)
    if a.shape[0]:
        combo = (rng.integers(0, 2, a.shape[0]) @ a) % 2
        assert row_space_contains(m, combo)
    v = rng.integers(0, 2, a.shape[1])
    stacked = np.vstack([a, v]) if a.shape[0] else v[None, :]
    assert row_space_contains(m, v) == (slow_rank(stacked) == slow_rank(a))


def test_setitem_and_bounds():
    m = BitMatrix(2, 70)
    m[1, 69] = 1
    assert m[1, 69] == 1 and m.to_array().sum() == 1
    with pytest.raises(IndexError):
        m[2, 0]


def enumerate_image(a: AffineMapF2, inputs):
    outs = set()
    for bits in itertools.product((0, 1), repeat=len(inputs)):
        x = np.zeros(a.dim_in, dtype=np.int64)
        x[list(inputs)] = bits
        outs.add(tuple(a(x)))
    return len(outs)


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_image_entropy_counts_outputs(L, seed):
    rng = np.random.default_rng(seed)
    a = AffineMapF2.identity(L)
    for _ in range(10):
        if rng.random() < 0.7:
            c, t = rng.choice(L, 2, replace=False)
            a = compose(cnot_map(L, int(c), int(t)), a)
        else:
            a = compose(eraser_map(L, int(rng.integers(L))), a)
    inputs = sorted(rng.choice(L, int(rng.integers(0, L + 1)), replace=False).tolist())
    assert 2 ** image_entropy(a, inputs) == enumerate_image(a, inputs)
    assert 2 ** image_entropy(a) == enumerate_image(a, list(range(L)))


def test_cnot_map_acts_on_x_bits():
    a = cnot_map(3, 0, 2)
    assert a([0, 0, 1]).tolist() == [1, 0, 1]
    assert a([1, 0, 0]).tolist() == [1, 0, 0]


def test_compose_order():
    L = 3
    e, c = eraser_map(L, 2), cnot_map(L, 0, 2)
    x = np.array([0, 0, 1])
    assert compose(e, c)(x).tolist() == e(c(x)).tolist() == [1, 0, 0]
    assert compose(c, e)(x).tolist() == [0, 0, 0]


def test_affine_shape_checks():
    with pytest.raises(ValueError):
        AffineMapF2(BitMatrix.identity(2), np.zeros(3))
    with pytest.raises(ValueError):
        compose(AffineMapF2.identity(2), AffineMapF2.identity(3))
