"""Bit erasers and ancilla-register initial states.

Register layout: system qubits occupy ``0..L-1`` and ancillas ``L..L+|A|-1``;
ancilla ``j`` is paired with system qubit ``j``.
"""
from __future__ import annotations

import enum

import numpy as np

from . import _kernels as K
from .f2linalg import n_words, pack_bits
from .stabilizer import StabilizerTableau


class EraserKind(str, enum.Enum):
    COHERENCE_MAINTAINING = "coherence_maintaining"
    COHERENCE_DESTROYING = "coherence_destroying"
    FORGOTTEN = "forgotten"

    @property
    def code(self) -> int:
        return {
            EraserKind.COHERENCE_MAINTAINING: K.ERASE_MAINTAIN,
            EraserKind.COHERENCE_DESTROYING: K.ERASE_DESTROY,
            EraserKind.FORGOTTEN: K.ERASE_FORGET,
        }[self]

    @classmethod
    def parse(cls, value) -> "EraserKind":
        if isinstance(value, cls):
            return value
        aliases = {"maintaining": "coherence_maintaining", "destroying": "coherence_destroying"}
        v = str(value).lower()
        return cls(aliases.get(v, v))


def apply_eraser(state: StabilizerTableau, site: int, kind, rng: np.random.Generator) -> StabilizerTableau:
    """Reset ``site`` to the +X eigenstate with the chosen eraser, in place.

    Outcomes of the intermediate measurements are drawn from ``rng`` and
    recorded rather than postselected.
    """
    kind = EraserKind.parse(kind)
    q = state._site(site)
    W = state.X.shape[1]
    px = np.zeros(W, dtype=np.uint64)
    pz = np.zeros(W, dtype=np.uint64)
    bits = int(rng.integers(0, 4))
    state.ns = int(K.tab_erase(state.X, state.Z, state.R, state.ns, q, kind.code, bits, px, pz))
    return state


def _pairs_tableau(n: int, stab_x, stab_z, destab_x, destab_z, ns: int) -> StabilizerTableau:
    """Tableau from 0/1 arrays of shape (n, n) for rows 0..n-1 and n..2n-1."""
    t = StabilizerTableau(
        n,
        np.vstack([pack_bits(stab_x), pack_bits(destab_x)]),
        np.vstack([pack_bits(stab_z), pack_bits(destab_z)]),
        np.zeros(2 * n, dtype=np.uint8),
        ns,
    )
    assert t.X.shape == (2 * n, n_words(n))
    return t


def init_classical_register(L: int, ancilla_count: int) -> StabilizerTableau:
    """System bits perfectly correlated with ancillas: generators X_a X_s and +X_s."""
    A = int(ancilla_count)
    if not 0 <= A <= L:
        raise ValueError("ancilla_count must lie in [0, L]")
    n = L + A
    sx = np.zeros((n, n), np.uint8)
    sz = np.zeros((n, n), np.uint8)
    dx = np.zeros((n, n), np.uint8)
    dz = np.zeros((n, n), np.uint8)
    row = 0
    # stabilizers first: Bell-like X parities, then the untouched system qubits
    for j in range(A):
        sx[row, j] = sx[row, L + j] = 1
        dz[row, L + j] = 1
        row += 1
    for s in range(A, L):
        sx[row, s] = 1
        dz[row, s] = 1
        row += 1
    # logical pairs of the mixed part: (X_s, Z_a Z_s)
    for j in range(A):
        sx[row, j] = 1
        dz[row, j] = dz[row, L + j] = 1
        row += 1
    return _pairs_tableau(n, sx, sz, dx, dz, L)


def init_quantum_register(L: int, ancilla_count: int) -> StabilizerTableau:
    """Bell pairs (X_a X_s, Z_a Z_s) between ancilla j and system qubit j."""
    A = int(ancilla_count)
    if not 0 <= A <= L:
        raise ValueError("ancilla_count must lie in [0, L]")
    n = L + A
    sx = np.zeros((n, n), np.uint8)
    sz = np.zeros((n, n), np.uint8)
    dx = np.zeros((n, n), np.uint8)
    dz = np.zeros((n, n), np.uint8)
    row = 0
    for j in range(A):
        sx[row, j] = sx[row, L + j] = 1
        dz[row, L + j] = 1
        row += 1
        sz[row, j] = sz[row, L + j] = 1
        dx[row, j] = 1
        row += 1
    for s in range(A, L):
        sx[row, s] = 1
        dz[row, s] = 1
        row += 1
    return _pairs_tableau(n, sx, sz, dx, dz, n)


def system_sites(L: int) -> list[int]:
    return list(range(L))


def ancilla_sites(L: int, ancilla_count: int) -> list[int]:
    return list(range(L, L + ancilla_count))
