"""Signed Pauli strings in the symplectic (x, z) representation.

Site ``i`` of a string is bit ``i`` of the Python-int masks.  The operator
for masks (x, z) and sign s is (-1)^s * prod_i i^(x_i z_i) X_i^x_i Z_i^z_i,
so x=z=1 at a site is the Hermitian Y.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}
AXES = "XYZ"


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """Signed L-qubit Pauli operator."""

    length: int
    x: int = 0
    z: int = 0
    sign: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        full = (1 << self.length) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise ValueError("mask has bits beyond the string length")
        object.__setattr__(self, "sign", self.sign & 1)

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, L: int) -> "PauliString":
        return cls(L)

    @classmethod
    def single(cls, L: int, site: int, axis: str) -> "PauliString":
        _check_site(site, L)
        xb, zb = _BITS[axis.upper()]
        return cls(L, xb << site, zb << site)

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse ``+XIZY`` / ``-XX`` (a missing sign means +)."""
        s = text.strip()
        sign = 0
        if s[:1] in "+-":
            sign = 1 if s[0] == "-" else 0
            s = s[1:]
        x = z = 0
        for i, ch in enumerate(s):
            try:
                xb, zb = _BITS[ch.upper()]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {text!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(s), x, z, sign)

    @classmethod
    def from_sparse(cls, L: int, ops: dict[int, str], sign: int = 0) -> "PauliString":
        x = z = 0
        for site, axis in ops.items():
            _check_site(site, L)
            xb, zb = _BITS[axis.upper()]
            x |= xb << site
            z |= zb << site
        return cls(L, x, z, sign)

    # views ------------------------------------------------------------
    def to_text(self) -> str:
        letters = "".join(self.letter(i) for i in range(self.length))
        return ("-" if self.sign else "+") + letters

    def __str__(self) -> str:
        return self.to_text()

    def letter(self, site: int) -> str:
        return _LETTER[((self.x >> site) & 1, (self.z >> site) & 1)]

    @property
    def support(self) -> int:
        return self.x | self.z

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.length, self.x, self.z, 0)

    def __neg__(self) -> "PauliString":
        return PauliString(self.length, self.x, self.z, self.sign ^ 1)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def symplectic(self) -> int:
        """(x | z << L) as one 2L-bit integer."""
        return self.x | (self.z << self.length)


def _check_site(site: int, L: int) -> None:
    if not 0 <= site < L:
        raise IndexError(f"site {site} out of range for {L} qubits")


def _check_len(p: PauliString, q: PauliString) -> None:
    if p.length != q.length:
        raise ValueError(f"length mismatch: {p.length} vs {q.length}")


def commute(p: PauliString, q: PauliString) -> bool:
    _check_len(p, q)
    return _popcount((p.x & q.z) ^ (p.z & q.x)) % 2 == 0


def phase_exponent(p: PauliString, q: PauliString) -> int:
    """e such that p*q = i^e * r with r the Hermitian string of the XOR masks."""
    x3, z3 = p.x ^ q.x, p.z ^ q.z
    e = _popcount(p.x & p.z) + _popcount(q.x & q.z) - _popcount(x3 & z3)
    e += 2 * _popcount(p.z & q.x) + 2 * (p.sign + q.sign)
    return e % 4


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Sign-exact product of commuting strings."""
    _check_len(p, q)
    if not commute(p, q):
        raise ValueError("product of anticommuting Pauli strings is not Hermitian")
    e = phase_exponent(p, q)
    return PauliString(p.length, p.x ^ q.x, p.z ^ q.z, e >> 1)


def hermitian_product(p: PauliString, q: PauliString) -> PauliString:
    """p*q for commuting inputs, i*p*q for anticommuting ones."""
    _check_len(p, q)
    e = phase_exponent(p, q)
    if e % 2:
        e = (e + 1) % 4
    return PauliString(p.length, p.x ^ q.x, p.z ^ q.z, e >> 1)


def weight(p: PauliString) -> int:
    return _popcount(p.x | p.z)


# gates ----------------------------------------------------------------

@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("CNOT needs distinct control and target")


@dataclass(frozen=True)
class PHASE:
    site: int


@dataclass(frozen=True)
class HADAMARD:
    """Basis change X <-> Z; not part of the circuit gate set."""

    site: int


def conjugate_by_gate(p: PauliString, gate) -> PauliString:
    """U p U^dagger for U a CNOT, PHASE or HADAMARD gate."""
    L = p.length
    x, z, s = p.x, p.z, p.sign
    if isinstance(gate, CNOT):
        c, t = gate.control, gate.target
        _check_site(c, L)
        _check_site(t, L)
        xc, zc = (x >> c) & 1, (z >> c) & 1
        xt, zt = (x >> t) & 1, (z >> t) & 1
        s ^= xc & zt & (xt ^ zc ^ 1)
        x ^= xc << t
        z ^= zt << c
    elif isinstance(gate, PHASE):
        i = gate.site
        _check_site(i, L)
        xi, zi = (x >> i) & 1, (z >> i) & 1
        s ^= xi & zi
        z ^= xi << i
    elif isinstance(gate, HADAMARD):
        i = gate.site
        _check_site(i, L)
        xi, zi = (x >> i) & 1, (z >> i) & 1
        s ^= xi & zi
        if xi != zi:
            x ^= 1 << i
            z ^= 1 << i
    else:
        raise TypeError(f"unsupported gate {gate!r}")
    return PauliString(L, x, z, s)


# local bases ----------------------------------------------------------

@dataclass(frozen=True)
class LocalPauliBasis:
    """Per-site choice of the diagonal Pauli axis (X, Y or Z)."""

    axes: str

    def __post_init__(self):
        a = self.axes.upper()
        if any(ch not in AXES for ch in a):
            raise ValueError(f"basis axes must be drawn from XYZ, got {self.axes!r}")
        object.__setattr__(self, "axes", a)

    def __len__(self) -> int:
        return len(self.axes)

    @classmethod
    def uniform(cls, L: int, axis: str = "X") -> "LocalPauliBasis":
        return cls(axis.upper() * L)

    @classmethod
    def random(cls, L: int, rng: np.random.Generator) -> "LocalPauliBasis":
        return cls("".join(AXES[i] for i in rng.integers(0, 3, L)))

    def codes(self) -> np.ndarray:
        """Axis indices 0/1/2 for X/Y/Z."""
        return np.array([AXES.index(a) for a in self.axes], dtype=np.int64)

    def operator(self, site: int) -> PauliString:
        return PauliString.single(len(self.axes), site, self.axes[site])

    def extended(self, extra: str) -> "LocalPauliBasis":
        return LocalPauliBasis(self.axes + extra)


def as_basis(basis, L: int) -> LocalPauliBasis:
    """Accept a LocalPauliBasis, a single axis letter, or a full axis string."""
    if isinstance(basis, LocalPauliBasis):
        b = basis
    elif isinstance(basis, str) and len(basis) == 1:
        b = LocalPauliBasis.uniform(L, basis)
    else:
        b = LocalPauliBasis(str(basis))
    if len(b) != L:
        raise ValueError(f"basis has {len(b)} sites, state has {L}")
    return b


def pauli_words(p: PauliString, W: int) -> tuple[np.ndarray, np.ndarray]:
    """Pack the masks into ``W`` uint64 words each."""
    return int_to_words(p.x, W), int_to_words(p.z, W)


def int_to_words(v: int, W: int) -> np.ndarray:
    out = np.zeros(W, dtype=np.uint64)
    mask = (1 << 64) - 1
    for w in range(W):
        out[w] = (v >> (64 * w)) & mask
    return out


def words_to_int(words: Sequence[int] | np.ndarray) -> int:
    v = 0
    for w, word in enumerate(words):
        v |= int(word) << (64 * w)
    return v


def parse_lines(lines: Iterable[str]) -> list[PauliString]:
    return [PauliString.from_text(s) for s in lines if s.strip()]
