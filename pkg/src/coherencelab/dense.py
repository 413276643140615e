"""Dense density-matrix reference simulator for a handful of qubits.

Used as an independent oracle for the tableau code.  Qubit 0 is the most
significant bit of the matrix index, as in ``StabilizerTableau.density_matrix``.
"""
from __future__ import annotations

import numpy as np

from .circuits import CircuitConfig, ProbeSchedule, classical_shadow_run, run
from .f2linalg import image_entropy
from .pauli import CNOT, HADAMARD, PHASE, LocalPauliBasis, PauliString
from .stabilizer import RandomOutcome, pauli_matrix, random_state

_I2 = np.eye(2)
_S = np.diag([1, 1j])
_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
# columns are the basis vectors diagonalizing each axis
_ROT = {"X": _H, "Y": np.array([[1, 1], [1j, -1j]]) / np.sqrt(2), "Z": _I2}


def single_qubit_op(n: int, q: int, u: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for i in range(n):
        out = np.kron(out, u if i == q else _I2)
    return out


def cnot_matrix(n: int, c: int, t: int) -> np.ndarray:
    dim = 2**n
    U = np.zeros((dim, dim))
    for b in range(dim):
        a = b ^ (1 << (n - 1 - t)) if b >> (n - 1 - c) & 1 else b
        U[a, b] = 1
    return U


def gate_matrix(n: int, gate) -> np.ndarray:
    if isinstance(gate, CNOT):
        return cnot_matrix(n, gate.control, gate.target)
    if isinstance(gate, PHASE):
        return single_qubit_op(n, gate.site, _S)
    if isinstance(gate, HADAMARD):
        return single_qubit_op(n, gate.site, _H)
    raise TypeError(f"unknown gate {gate!r}")


def von_neumann(rho: np.ndarray) -> float:
    e = np.linalg.eigvalsh(rho)
    e = e[e > 1e-12]
    return float(-(e * np.log2(e)).sum())


def partial_trace(rho: np.ndarray, n: int, keep) -> np.ndarray:
    keep = sorted(set(keep))
    r = rho.reshape([2] * (2 * n))
    for i in sorted((i for i in range(n) if i not in keep), reverse=True):
        r = np.trace(r, axis1=i, axis2=i + r.ndim // 2)
    k = len(keep)
    return r.reshape(2**k, 2**k)


def basis_unitary(basis: LocalPauliBasis) -> np.ndarray:
    U = np.array([[1.0 + 0j]])
    for a in basis.axes:
        U = np.kron(U, _ROT[a])
    return U


def coherence(rho: np.ndarray, basis: LocalPauliBasis) -> float:
    """S(diagonal part) - S(rho) in the given local basis."""
    U = basis_unitary(basis)
    d = np.real(np.diag(U.conj().T @ rho @ U))
    d = d[d > 1e-12]
    return float(-(d * np.log2(d)).sum()) - von_neumann(rho)


def projector(p: PauliString, bit: int) -> np.ndarray:
    P = pauli_matrix(p)
    return (np.eye(len(P)) + (-1) ** bit * P) / 2


def measure_branch(rho, p: PauliString, bit: int):
    """(probability, post-measurement state) for outcome ``bit``."""
    Pb = projector(p, bit)
    prob = float(np.real(np.trace(Pb @ rho)))
    if prob < 1e-12:
        return 0.0, None
    return prob, Pb @ rho @ Pb / prob


def dephase(rho, p: PauliString):
    P = pauli_matrix(p)
    return (rho + P @ rho @ P) / 2


def eraser_branches(rho, n: int, q: int, kind: str) -> list:
    """Post-eraser states of every outcome record with non-zero probability."""
    X = PauliString.single(n, q, "X")
    Z = PauliString.single(n, q, "Z")
    flip = single_qubit_op(n, q, np.diag([1, -1]))

    def fix(r, b):
        return flip @ r @ flip if b else r

    if kind == "forgotten":
        red = partial_trace(rho, n, [i for i in range(n) if i != q])
        plus = np.full((2, 2), 0.5)
        # reinsert qubit q
        full = np.kron(red, plus).reshape([2] * (2 * n))
        order = list(range(n - 1))
        order.insert(q, n - 1)
        perm = order + [n + i for i in order]
        return [full.transpose(perm).reshape(2**n, 2**n)]
    out = []
    firsts = [(1.0, rho)] if kind == "coherence_destroying" else [measure_branch(rho, Z, b) for b in (0, 1)]
    for pz, r1 in firsts:
        if r1 is None:
            continue
        for b in (0, 1):
            px, r2 = measure_branch(r1, X, b)
            if r2 is not None:
                out.append(fix(r2, b))
    return out


def _matches_any(rho, branches) -> bool:
    return any(np.allclose(rho, b, atol=1e-9) for b in branches)


def random_program_mismatches(programs: int, rng, max_qubits: int = 4, length: int = 8) -> int:
    """Run random gate/measure/dephase/erase programs on a tableau and a dense
    matrix side by side; count programs whose states ever disagree."""
    from .channels import EraserKind, apply_eraser

    bad = 0
    for _ in range(programs):
        n = int(rng.integers(1, max_qubits + 1))
        t = random_state(n, rng, mixed=bool(rng.integers(2)))
        rho = t.density_matrix()
        for _ in range(length):
            u = rng.random()
            if u < 0.25 and n > 1:
                c, tg = (int(v) for v in rng.choice(n, 2, replace=False))
                g = CNOT(c, tg)
            elif u < 0.4:
                g = (PHASE if rng.random() < 0.5 else HADAMARD)(int(rng.integers(n)))
            else:
                g = None
            if g is not None:
                t.apply_gate(g)
                U = gate_matrix(n, g)
                rho = U @ rho @ U.conj().T
            elif u < 0.75:
                w = int(rng.integers(1, n + 1))
                sites = rng.choice(n, w, replace=False)
                p = PauliString.from_sparse(n, {int(s): "XYZ"[int(rng.integers(3))] for s in sites}, int(rng.integers(2)))
                rec = t.measure(p, RandomOutcome(rng))
                prob, rho = measure_branch(rho, p, rec.outcome)
                expected = 1.0 if rec.deterministic else 0.5
                if rho is None or abs(prob - expected) > 1e-9:
                    bad += 1
                    break
            elif u < 0.85:
                p = PauliString.single(n, int(rng.integers(n)), "XYZ"[int(rng.integers(3))])
                t.dephase(p)
                rho = dephase(rho, p)
            else:
                q = int(rng.integers(n))
                kind = list(EraserKind)[int(rng.integers(3))]
                branches = eraser_branches(rho, n, q, kind.value)
                apply_eraser(t, q, kind, rng)
                got = t.density_matrix()
                if not _matches_any(got, branches):
                    bad += 1
                    break
                rho = got
            if not np.allclose(t.density_matrix(), rho, atol=1e-9):
                bad += 1
                break
    return bad


def shadow_mismatches(runs: int, rng) -> int:
    """Coherence-free circuits: tableau entropy vs rank of the classical map."""
    bad = 0
    for r in range(runs):
        L = int(rng.integers(2, 20))
        A = int(rng.integers(0, L + 1))
        cfg = CircuitConfig(
            L=L, ancillas=A, p_e=float(rng.uniform(0, 0.3)), t=float(rng.uniform(0, 5)),
            init="classical_register", seed=int(rng.integers(2**31)),
            boundary=("open", "periodic")[r % 2], scramble_time=float(rng.uniform(0, 2)),
        )
        res = run(cfg, ProbeSchedule.final(cfg, ("S_sys",)))
        if int(res.series["S_sys"][-1]) != image_entropy(classical_shadow_run(cfg), inputs=range(A)):
            bad += 1
    return bad
