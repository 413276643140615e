"""Mixed stabilizer states: updates, entropies, CSS gauge and coherence.

A state on ``n`` qubits with ``N_s`` independent commuting generators is
rho = 2^-n prod_i (1 + g_i).  Internally the generators are kept inside a
full symplectic basis (generators, their destabilizers, and logical pairs
of the mixed part) so that every measurement is an O(n^2/64) update.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .f2linalg import n_words, pack_bits, unpack_bits
from .pauli import (
    CNOT,
    HADAMARD,
    PHASE,
    LocalPauliBasis,
    PauliString,
    as_basis,
    commute,
    int_to_words,
    multiply,
    words_to_int,
)


class PostselectionError(RuntimeError):
    """A postselected outcome contradicts a deterministic one."""


class MeasurementCase(enum.IntEnum):
    NO_EFFECT = 1
    ENTROPY_REDUCING = 2
    STATE_CHANGING = 3


@dataclass(frozen=True)
class RandomOutcome:
    rng: np.random.Generator


@dataclass(frozen=True)
class Postselect:
    bit: int


@dataclass(frozen=True)
class ForcedRecord:
    """Use ``bit`` whenever the outcome is undetermined; otherwise record it."""

    bit: int


@dataclass(frozen=True)
class MeasurementRecord:
    operator: PauliString
    outcome: int
    deterministic: bool
    case: MeasurementCase


@dataclass(frozen=True)
class CssGauge:
    n_x: int
    n_z: int
    n_y: int
    x_block: tuple
    z_block: tuple
    y_block: tuple
    basis: LocalPauliBasis

    @property
    def generators(self) -> tuple:
        return self.x_block + self.z_block + self.y_block


def _omega(a: int, b: int, n: int) -> int:
    full = (1 << n) - 1
    return bin(((a & full) & (b >> n)) ^ ((a >> n) & (b & full))).count("1") & 1


def _complete_basis(n: int, stabs: list[int]):
    """Destabilizers and logical pairs for independent commuting ``stabs``.

    Vectors are 2n-bit ints ``x | z << n``.
    """
    m = len(stabs)
    full = (1 << n) - 1
    # rows of A pick out omega(s_i, .) as a dot product
    rows = [((s >> n) | ((s & full) << n)) for s in stabs]
    track = [1 << i for i in range(m)]
    pivots = []
    r = 0
    for col in range(2 * n):
        bit = 1 << col
        piv = next((k for k in range(r, m) if rows[k] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        track[r], track[piv] = track[piv], track[r]
        for k in range(m):
            if k != r and rows[k] & bit:
                rows[k] ^= rows[r]
                track[k] ^= track[r]
        pivots.append(col)
        r += 1
        if r == m:
            break
    if r != m:
        raise ValueError("generators are not independent")
    destabs = []
    for i in range(m):
        d = 0
        for k in range(m):
            if (track[k] >> i) & 1:
                d |= 1 << pivots[k]
        destabs.append(d)
    for i in range(m):
        for j in range(i + 1, m):
            if _omega(destabs[i], destabs[j], n):
                destabs[j] ^= stabs[i]
    pool = []
    for col in range(2 * n):
        e = 1 << col
        v = e
        for s, d in zip(stabs, destabs):
            if _omega(e, d, n):
                v ^= s
            if _omega(e, s, n):
                v ^= d
        if v:
            pool.append(v)
    pairs = []
    while pool and len(pairs) < n - m:
        a = pool.pop(0)
        if not a:
            continue
        k = next((k for k, b in enumerate(pool) if _omega(a, b, n)), None)
        if k is None:
            continue
        b = pool.pop(k)
        new = []
        for w in pool:
            if _omega(w, b, n):
                w ^= a
            if _omega(w, a, n):
                w ^= b
            if w:
                new.append(w)
        pool = new
        pairs.append((a, b))
    if len(pairs) != n - m:
        raise RuntimeError("failed to complete the symplectic basis")
    return destabs, pairs


class StabilizerTableau:
    """Mixed stabilizer state on ``n`` qubits.

    Mutating methods update the state in place and return ``self`` (or a
    record); use :meth:`copy` to branch.
    """

    __slots__ = ("n", "X", "Z", "R", "ns")

    def __init__(self, n: int, X: np.ndarray, Z: np.ndarray, R: np.ndarray, ns: int):
        self.n = int(n)
        self.X = X
        self.Z = Z
        self.R = R
        self.ns = int(ns)

    # construction -----------------------------------------------------
    @classmethod
    def _blank(cls, n: int) -> "StabilizerTableau":
        W = n_words(n)
        return cls(
            n,
            np.zeros((2 * n, W), dtype=np.uint64),
            np.zeros((2 * n, W), dtype=np.uint64),
            np.zeros(2 * n, dtype=np.uint8),
            0,
        )

    @classmethod
    def maximally_mixed(cls, n: int) -> "StabilizerTableau":
        t = cls._blank(n)
        eye = pack_bits(np.eye(n, dtype=np.uint8)) if n else t.X[:0]
        t.X[:n] = eye
        t.Z[n:] = eye
        return t

    @classmethod
    def product(cls, axes: str, signs: Sequence[int] | None = None) -> "StabilizerTableau":
        """Pure product state with site i polarized along ``axes[i]``."""
        axes = axes.upper()
        n = len(axes)
        t = cls._blank(n)
        if n == 0:
            return t
        a = np.array(["XYZ".index(c) for c in axes])
        eye = np.eye(n, dtype=np.uint8)
        sx = eye * (a != 2)[:, None]
        sz = eye * (a != 0)[:, None]
        dx = eye * (a == 2)[:, None]
        dz = eye * (a != 2)[:, None]
        t.X[:n] = pack_bits(sx)
        t.Z[:n] = pack_bits(sz)
        t.X[n:] = pack_bits(dx)
        t.Z[n:] = pack_bits(dz)
        if signs is not None:
            t.R[:n] = np.asarray(signs, dtype=np.uint8) & 1
        t.ns = n
        return t

    @classmethod
    def from_generators(cls, n: int, generators: Iterable[PauliString]) -> "StabilizerTableau":
        gens = list(generators)
        for g in gens:
            if g.length != n:
                raise ValueError("generator length does not match n")
        for i, g in enumerate(gens):
            for h in gens[i + 1:]:
                if not commute(g, h):
                    raise ValueError(f"generators {g} and {h} anticommute")
        stabs = [g.symplectic() for g in gens]
        destabs, pairs = _complete_basis(n, stabs)
        t = cls._blank(n)
        W = t.X.shape[1]
        full = (1 << n) - 1

        def put(row, v, sign=0):
            t.X[row] = int_to_words(v & full, W)
            t.Z[row] = int_to_words(v >> n, W)
            t.R[row] = sign

        for i, (g, d) in enumerate(zip(gens, destabs)):
            put(i, stabs[i], g.sign)
            put(n + i, d)
        m = len(gens)
        for k, (a, b) in enumerate(pairs):
            put(m + k, a)
            put(n + m + k, b)
        t.ns = m
        return t

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.n, self.X.copy(), self.Z.copy(), self.R.copy(), self.ns)

    # views ------------------------------------------------------------
    @property
    def length(self) -> int:
        return self.n

    @property
    def n_stab(self) -> int:
        return self.ns

    def entropy(self) -> int:
        return self.n - self.ns

    def _row(self, r: int) -> PauliString:
        return PauliString(self.n, words_to_int(self.X[r]), words_to_int(self.Z[r]), int(self.R[r]))

    @property
    def generators(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.ns)]

    def destabilizers(self) -> list[PauliString]:
        return [self._row(self.n + i).unsigned() for i in range(self.ns)]

    def logical_pairs(self) -> list[tuple[PauliString, PauliString]]:
        n = self.n
        return [(self._row(i).unsigned(), self._row(n + i).unsigned()) for i in range(self.ns, n)]

    def check_matrix(self) -> np.ndarray:
        """N_s x 2n 0/1 array [x | z] of the generators."""
        if self.ns == 0:
            return np.zeros((0, 2 * self.n), dtype=np.uint8)
        x = unpack_bits(self.X[: self.ns], self.n)
        z = unpack_bits(self.Z[: self.ns], self.n)
        return np.hstack([x, z])

    def __repr__(self) -> str:
        return f"StabilizerTableau(n={self.n}, N_s={self.ns})"

    # snapshot format --------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{self.n} {self.ns}"] + [g.to_text() for g in self.generators]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StabilizerTableau":
        lines = [s for s in text.splitlines() if s.strip()]
        if not lines:
            raise ValueError("empty tableau snapshot")
        try:
            n, ns = (int(v) for v in lines[0].split())
        except ValueError:
            raise ValueError(f"bad snapshot header {lines[0]!r}") from None
        gens = [PauliString.from_text(s) for s in lines[1:]]
        if len(gens) != ns:
            raise ValueError(f"header announces {ns} generators, found {len(gens)}")
        return cls.from_generators(n, gens)

    # updates ----------------------------------------------------------
    def _site(self, q: int) -> int:
        if not 0 <= q < self.n:
            raise IndexError(f"site {q} out of range for {self.n} qubits")
        return int(q)

    def apply_gate(self, gate) -> "StabilizerTableau":
        if isinstance(gate, CNOT):
            c, t = self._site(gate.control), self._site(gate.target)
            K.tab_cnot(self.X, self.Z, self.R, c, t)
        elif isinstance(gate, PHASE):
            K.tab_phase(self.X, self.Z, self.R, self._site(gate.site))
        elif isinstance(gate, HADAMARD):
            K.tab_hadamard(self.X, self.Z, self.R, self._site(gate.site))
        else:
            raise TypeError(f"unsupported gate {gate!r}")
        return self

    def flip_x(self, q: int) -> "StabilizerTableau":
        """Conjugate by Z_q (maps X_q -> -X_q)."""
        K.tab_flip_x(self.X, self.Z, self.R, self._site(q))
        return self

    def _words(self, p: PauliString):
        if p.length != self.n:
            raise ValueError(f"operator on {p.length} qubits, state has {self.n}")
        W = self.X.shape[1]
        return int_to_words(p.x, W), int_to_words(p.z, W)

    def classify(self, p: PauliString) -> MeasurementCase:
        px, pz = self._words(p)
        return MeasurementCase(int(K.tab_classify(self.X, self.Z, self.ns, px, pz)))

    def measure(self, p: PauliString, policy) -> MeasurementRecord:
        if p.is_identity():
            raise ValueError("cannot measure the identity")
        px, pz = self._words(p)
        if isinstance(policy, RandomOutcome):
            want = int(policy.rng.integers(0, 2))
        elif isinstance(policy, (Postselect, ForcedRecord)):
            want = int(policy.bit) & 1
        else:
            raise TypeError(f"unknown measurement policy {policy!r}")
        case, out, ns = K.tab_measure(self.X, self.Z, self.R, self.ns, px, pz, want ^ p.sign)
        self.ns = int(ns)
        outcome = int(out) ^ p.sign
        case = MeasurementCase(int(case))
        if case is MeasurementCase.NO_EFFECT and isinstance(policy, Postselect) and outcome != want:
            raise PostselectionError(
                f"postselected {want} but {p} has deterministic outcome {outcome}"
            )
        return MeasurementRecord(p, outcome, case is MeasurementCase.NO_EFFECT, case)

    def dephase(self, p: PauliString) -> "StabilizerTableau":
        px, pz = self._words(p)
        self.ns = int(K.tab_dephase(self.X, self.Z, self.R, self.ns, px, pz))
        return self

    # entropies --------------------------------------------------------
    def subsystem_entropy(self, region: Iterable[int]) -> int:
        A = sorted(set(int(q) for q in region))
        for q in A:
            self._site(q)
        inA = np.zeros(self.n, dtype=bool)
        inA[A] = True
        comp = np.flatnonzero(~inA).astype(np.int64)
        r = int(K.region_rank(self.X, self.Z, self.ns, comp)) if len(comp) else 0
        return len(A) - (self.ns - r)

    def interval_entropies(self, order: Sequence[int], upto: int | None = None) -> np.ndarray:
        """S of the first l sites of ``order`` for l = 0..upto.

        ``order`` must list every qubit; sites past ``upto`` are never part
        of a counted region.
        """
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(self.n)):
            raise ValueError("order must be a permutation of all qubits")
        upto = self.n if upto is None else int(upto)
        cnt = K.interval_support_counts(self.X, self.Z, self.ns, order)
        ls = np.arange(upto + 1)
        return ls - cnt[: upto + 1]

    # coherence --------------------------------------------------------
    def coherence(self, basis="X") -> int:
        b = as_basis(basis, self.n)
        M = K.gather_conjugate(
            self.X, self.Z, self.ns, np.zeros(0, dtype=np.int64), np.arange(self.n), b.codes()
        )
        return int(K.echelon_count(M, self.n, 0))

    def marginal_coherence(self, sites: Sequence[int], basis="X") -> int:
        """Coherence of the reduced state on ``sites``."""
        sites = np.asarray(sorted(set(int(q) for q in sites)), dtype=np.int64)
        b = as_basis(basis, len(sites))
        inA = np.zeros(self.n, dtype=bool)
        inA[sites] = True
        lead = np.flatnonzero(~inA).astype(np.int64)
        M = K.gather_conjugate(self.X, self.Z, self.ns, lead, sites, b.codes())
        return int(K.echelon_count(M, 2 * len(lead) + len(sites), 2 * len(lead)))

    def css_gauge(self, basis="X") -> CssGauge:
        return css_gauge(self, basis)

    # dense view -------------------------------------------------------
    def density_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (qubit 0 is the most significant)."""
        if self.n > 10:
            raise ValueError("dense conversion limited to 10 qubits")
        dim = 2 ** self.n
        rho = np.eye(dim, dtype=complex)
        for g in self.generators:
            rho = rho @ (np.eye(dim) + pauli_matrix(g)) / 2
        return rho / 2 ** (self.n - self.ns)


_PM = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(p: PauliString) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for i in range(p.length):
        out = np.kron(out, _PM[p.letter(i)])
    return -out if p.sign else out


# functional API ---------------------------------------------------------

def apply_gate(state: StabilizerTableau, gate) -> StabilizerTableau:
    return state.apply_gate(gate)


def measure(state: StabilizerTableau, p: PauliString, policy):
    """Measure ``p`` in place; returns ``(record, state)``."""
    rec = state.measure(p, policy)
    return rec, state


def dephase(state: StabilizerTableau, p: PauliString) -> StabilizerTableau:
    return state.dephase(p)


def subsystem_entropy(state: StabilizerTableau, region: Iterable[int]) -> int:
    return state.subsystem_entropy(region)


def coherence(state: StabilizerTableau, basis="X") -> int:
    return state.coherence(basis)


def coherent_information(state: StabilizerTableau, system_sites, ancilla_sites) -> int:
    """S(rho_S) - S(rho_SA)."""
    S = set(int(q) for q in system_sites)
    A = set(int(q) for q in ancilla_sites)
    if S & A:
        raise ValueError("system and ancilla regions overlap")
    return state.subsystem_entropy(S) - state.subsystem_entropy(S | A)


def coherence_oracle(state: StabilizerTableau, basis="X", rng=None) -> int:
    """n_u + N_s - n from sequential basis measurements on a copy."""
    b = as_basis(basis, state.n)
    rng = np.random.default_rng() if rng is None else rng
    work = state.copy()
    policy = RandomOutcome(rng)
    n_u = 0
    for i in range(state.n):
        rec = work.measure(b.operator(i), policy)
        n_u += not rec.deterministic
    return n_u + state.ns - state.n


def _relabel_masks(basis: LocalPauliBasis):
    mx = my = mz = 0
    for i, a in enumerate(basis.axes):
        if a == "X":
            mx |= 1 << i
        elif a == "Y":
            my |= 1 << i
        else:
            mz |= 1 << i
    return mx, my, mz


def diag_conj(p: PauliString, masks) -> tuple[int, int]:
    """Split ``p`` into basis-diagonal and basis-conjugate bit masks."""
    mx, my, mz = masks
    d = (p.x & (mx | my)) | (p.z & mz)
    c = (p.z & mx) | (p.x & mz) | ((p.x ^ p.z) & my)
    return d, c


def _reduce(rows, key, pivot_rows=None):
    """RREF of ``rows`` (lists [pauli, d, c]) on field ``key`` (1 = d, 2 = c).

    Returns the indices of pivot rows.  Rows are multiplied as Pauli strings
    so signs stay exact.
    """
    piv = []
    used = set()
    for col in range(max((r[key].bit_length() for r in rows), default=0)):
        bit = 1 << col
        k = next((i for i in range(len(rows)) if i not in used and rows[i][key] & bit), None)
        if k is None:
            continue
        used.add(k)
        piv.append((k, bit))
        for i in range(len(rows)):
            if i != k and rows[i][key] & bit:
                rows[i][0] = multiply(rows[i][0], rows[k][0])
                rows[i][1] ^= rows[k][1]
                rows[i][2] ^= rows[k][2]
    return piv


def css_gauge(state: StabilizerTableau, basis="X") -> CssGauge:
    """Split the generators into basis-diagonal, conjugate and mixed blocks."""
    b = as_basis(basis, state.n)
    masks = _relabel_masks(b)
    rows = [[g, *diag_conj(g, masks)] for g in state.generators]
    cpiv = _reduce(rows, 2)
    conj_rows = [rows[k] for k, _ in cpiv]
    diag_rows = [r for i, r in enumerate(rows) if i not in {k for k, _ in cpiv}]
    # reduce the diagonal parts of conj rows against the diagonal block
    dpiv = _reduce(diag_rows, 1)
    for k, bit in dpiv:
        for r in conj_rows:
            if r[1] & bit:
                r[0] = multiply(r[0], diag_rows[k][0])
                r[1] ^= diag_rows[k][1]
                r[2] ^= diag_rows[k][2]
    mpiv = _reduce(conj_rows, 1)
    mixed = {k for k, _ in mpiv}
    y_block = tuple(conj_rows[k][0] for k in sorted(mixed))
    z_block = tuple(r[0] for i, r in enumerate(conj_rows) if i not in mixed)
    x_block = tuple(r[0] for r in diag_rows)
    return CssGauge(len(x_block), len(z_block), len(y_block), x_block, z_block, y_block, b)


def random_state(
    n: int,
    rng: np.random.Generator,
    *,
    depth: int | None = None,
    mixed: bool = False,
) -> StabilizerTableau:
    """Random stabilizer state from a random product state and Clifford layers.

    With ``mixed`` a random number of generators is dephased away.
    """
    axes = "".join("XYZ"[i] for i in rng.integers(0, 3, n))
    t = StabilizerTableau.product(axes, rng.integers(0, 2, n))
    depth = 4 * n if depth is None else depth
    for _ in range(depth):
        r = rng.random()
        if n > 1 and r < 0.5:
            c, tg = rng.choice(n, size=2, replace=False)
            t.apply_gate(CNOT(int(c), int(tg)))
        elif r < 0.75:
            t.apply_gate(PHASE(int(rng.integers(n))))
        else:
            t.apply_gate(HADAMARD(int(rng.integers(n))))
    if mixed:
        for _ in range(int(rng.integers(0, n + 1))):
            q = int(rng.integers(n))
            t.dephase(PauliString.single(n, q, "XYZ"[int(rng.integers(3))]))
    return t
