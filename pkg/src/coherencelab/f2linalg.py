"""Bit-packed linear algebra over GF(2)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K

WORD = 64


def n_words(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 2D 0/1 array into ``uint64`` words, bit j of a row at word j//64."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8) & 1)
    rows, cols = bits.shape
    W = n_words(cols)
    padded = np.zeros((rows, W * WORD), dtype=np.uint8)
    padded[:, :cols] = bits
    by = np.packbits(padded.reshape(rows, W, WORD), axis=2, bitorder="little")
    return np.ascontiguousarray(by).view(np.uint64).reshape(rows, W).copy()


def unpack_bits(words: np.ndarray, cols: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    by = words.view(np.uint8).reshape(rows, -1)
    return np.unpackbits(by, axis=1, bitorder="little")[:, :cols].astype(np.uint8)


class BitMatrix:
    """Dense GF(2) matrix stored as row-major packed 64-bit words.

    Args:
        rows: number of rows.
        cols: number of columns.
        words: optional ``(rows, ceil(cols/64))`` uint64 array to wrap.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        self.rows = int(rows)
        self.cols = int(cols)
        W = n_words(cols)
        if words is None:
            words = np.zeros((rows, W), dtype=np.uint64)
        else:
            words = np.asarray(words, dtype=np.uint64)
            if words.shape != (rows, W):
                raise ValueError(f"word array has shape {words.shape}, expected {(rows, W)}")
        self.words = words

    @classmethod
    def from_array(cls, a) -> "BitMatrix":
        a = np.asarray(a, dtype=np.uint8)
        if a.ndim == 1:
            a = a[None, :]
        if a.size and a.max() > 1:
            raise ValueError("entries must be 0 or 1")
        rows, cols = a.shape
        if rows == 0:
            return cls(0, cols)
        return cls(rows, cols, pack_bits(a))

    @classmethod
    def from_strings(cls, rows: Iterable[str]) -> "BitMatrix":
        rows = [r.strip() for r in rows if r.strip()]
        return cls.from_array([[int(c) for c in r] for r in rows])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    def to_array(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        return unpack_bits(self.words, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"bit ({i}, {j}) outside {self.rows}x{self.cols} matrix")

    def __getitem__(self, ij) -> int:
        i, j = ij
        self._check(i, j)
        return int((int(self.words[i, j >> 6]) >> (j & 63)) & 1)

    def __setitem__(self, ij, value) -> None:
        i, j = ij
        self._check(i, j)
        mask = np.uint64(1 << (j & 63))
        if value & 1:
            self.words[i, j >> 6] |= mask
        else:
            self.words[i, j >> 6] &= ~mask

    def add_row(self, target: int, source: int) -> None:
        """row[target] ^= row[source]"""
        if not (0 <= target < self.rows and 0 <= source < self.rows):
            raise IndexError("row index out of range")
        self.words[target] ^= self.words[source]

    def swap_rows(self, a: int, b: int) -> None:
        if not (0 <= a < self.rows and 0 <= b < self.rows):
            raise IndexError("row index out of range")
        self.words[[a, b]] = self.words[[b, a]]

    def column_subset(self, cols: Sequence[int]) -> "BitMatrix":
        cols = list(cols)
        for c in cols:
            if not 0 <= c < self.cols:
                raise IndexError(f"column {c} out of range")
        return BitMatrix.from_array(self.to_array()[:, cols]) if self.rows else BitMatrix(0, len(cols))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.words, other.words)
        )

    def __repr__(self) -> str:
        body = "\n".join("".join(map(str, r)) for r in self.to_array())
        return f"BitMatrix({self.rows}x{self.cols})\n{body}"


def rank(m: BitMatrix) -> int:
    """Dimension of the row space of ``m``."""
    if m.rows == 0 or m.cols == 0:
        return 0
    work = m.words.copy()
    return int(K.echelon_count(work, m.cols, 0))


def gaussian_eliminate(m: BitMatrix, column_order: Sequence[int] | None = None):
    """Reduced row echelon form with respect to ``column_order``.

    Pivot rows are chosen as the lowest available index.  Columns outside
    ``column_order`` are carried along but never pivoted on.

    Returns:
        ``(reduced, log)`` where ``log`` is a list of ``("swap", a, b)`` and
        ``("add", target, source)`` operations; :func:`replay_row_ops` applied
        to ``m`` reproduces ``reduced``.
    """
    if column_order is None:
        column_order = range(m.cols)
    order = np.asarray(list(column_order), dtype=np.int64)
    if len(set(order.tolist())) != len(order) or np.any((order < 0) | (order >= m.cols)):
        raise ValueError("column_order must list distinct valid columns")
    work = m.words.copy()
    if m.rows == 0:
        return BitMatrix(0, m.cols), []
    cap = m.rows * (min(m.rows, len(order)) + 1) + 1
    log = np.zeros((cap, 3), dtype=np.int64)
    _, nlog = K.rref_logged(work, order, log)
    ops = [("swap" if k == 0 else "add", int(a), int(b)) for k, a, b in log[:nlog]]
    return BitMatrix(m.rows, m.cols, work), ops


def replay_row_ops(m: BitMatrix, ops) -> BitMatrix:
    out = m.copy()
    for kind, a, b in ops:
        if kind == "swap":
            out.swap_rows(a, b)
        elif kind == "add":
            out.add_row(a, b)
        else:
            raise ValueError(f"unknown row op {kind!r}")
    return out


def row_space_contains(m: BitMatrix, v) -> bool:
    """True if bit vector ``v`` (0/1 sequence) lies in the row space of ``m``."""
    v = np.asarray(v, dtype=np.uint8)[None, :]
    stacked = BitMatrix.from_array(np.vstack([m.to_array(), v]))
    return rank(stacked) == rank(m)


@dataclass(frozen=True)
class AffineMapF2:
    """x -> matrix @ x + offset over GF(2).  Rows index outputs."""

    matrix: BitMatrix
    offset: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=np.uint8) & 1
        object.__setattr__(self, "offset", off)
        if off.shape != (self.matrix.rows,):
            raise ValueError("offset length must equal the number of matrix rows")

    @property
    def dim_out(self) -> int:
        return self.matrix.rows

    @property
    def dim_in(self) -> int:
        return self.matrix.cols

    @classmethod
    def identity(cls, L: int) -> "AffineMapF2":
        return cls(BitMatrix.identity(L), np.zeros(L, dtype=np.uint8))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64) & 1
        if x.shape[-1] != self.dim_in:
            raise ValueError("input length mismatch")
        return ((self.matrix.to_array().astype(np.int64) @ x) + self.offset) % 2


def compose(a: AffineMapF2, b: AffineMapF2) -> AffineMapF2:
    """The map x -> a(b(x))."""
    if a.dim_in != b.dim_out:
        raise ValueError(f"cannot compose: a takes {a.dim_in} bits, b emits {b.dim_out}")
    A = a.matrix.to_array().astype(np.int64)
    B = b.matrix.to_array().astype(np.int64)
    mat = (A @ B) % 2
    off = (A @ b.offset.astype(np.int64) + a.offset) % 2
    return AffineMapF2(BitMatrix.from_array(mat), off)


def cnot_map(L: int, control: int, target: int) -> AffineMapF2:
    """Action of CNOT(control, target) on X-basis bits: x_c <- x_c xor x_t."""
    m = np.eye(L, dtype=np.uint8)
    m[control, target] ^= 1
    return AffineMapF2(BitMatrix.from_array(m), np.zeros(L, dtype=np.uint8))


def eraser_map(L: int, site: int) -> AffineMapF2:
    """Reset of X-basis bit ``site`` to 0."""
    m = np.eye(L, dtype=np.uint8)
    m[site, site] = 0
    return AffineMapF2(BitMatrix.from_array(m), np.zeros(L, dtype=np.uint8))


def image_entropy(a: AffineMapF2, inputs: Sequence[int] | None = None) -> int:
    """Shannon entropy (bits) of a(x) for x uniform.

    With ``inputs`` given, only those input bits are uniform and the rest are
    held fixed, so the result is the rank of the corresponding columns.
    """
    if inputs is None:
        return rank(a.matrix)
    return rank(a.matrix.column_subset(inputs))
