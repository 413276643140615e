"""Stabilizer codes: distance, coherence of code states and coherence bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .pauli import (
    LocalPauliBasis,
    PauliString,
    as_basis,
    commute,
    hermitian_product,
    multiply,
    weight,
)
from .stabilizer import (
    ForcedRecord,
    MeasurementCase,
    StabilizerTableau,
    _complete_basis,
    _relabel_masks,
    diag_conj,
)


class CodeError(ValueError):
    pass


class CodeParseError(CodeError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class DistanceBudgetExceeded(RuntimeError):
    """Raised when the search stops early; ``searched_weight`` is a lower bound minus one."""

    def __init__(self, searched_weight: int, budget: int):
        super().__init__(f"distance exceeds {searched_weight} (candidate budget {budget} exhausted)")
        self.searched_weight = searched_weight
        self.budget = budget


class EnumerationBudgetExceeded(RuntimeError):
    pass


class BoundViolation(AssertionError):
    pass


# small GF(2) helpers on python-int bit vectors ---------------------------------

def _reduce(vectors: Iterable[int]):
    """Echelon basis as {pivot bit: vector}, fully reduced."""
    basis: dict[int, int] = {}
    for v in vectors:
        for p, b in basis.items():
            if v >> p & 1:
                v ^= b
        if v:
            p = v.bit_length() - 1
            for q in list(basis):
                if basis[q] >> p & 1:
                    basis[q] ^= v
            basis[p] = v
    return basis


def _in_span(basis: dict, v: int) -> bool:
    for p, b in basis.items():
        if v >> p & 1:
            v ^= b
    return v == 0


def f2_rank(vectors: Iterable[int]) -> int:
    return len(_reduce(vectors))


def _nullspace(rows: Sequence[int], n: int) -> list[int]:
    """Basis of {v : <row, v> = 0 for every row} in F2^n."""
    basis = _reduce(rows)
    pivots = set(basis)
    out = []
    for f in range(n):
        if f in pivots:
            continue
        v = 1 << f
        for p, b in basis.items():
            if b >> f & 1:
                v |= 1 << p
        out.append(v)
    return out


def _dot(a: int, b: int) -> int:
    return bin(a & b).count("1") & 1


# code specification --------------------------------------------------------------

@dataclass(frozen=True)
class CodeSpec:
    """[[n, k]] stabilizer code with checks and k logical pairs (X~_j, Z~_j)."""

    n: int
    checks: tuple
    logicals: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "checks", tuple(self.checks))
        object.__setattr__(self, "logicals", tuple(tuple(p) for p in self.logicals))
        self.validate()

    @property
    def k(self) -> int:
        return len(self.logicals)

    def validate(self) -> None:
        n = self.n
        for g in self.checks:
            if g.length != n:
                raise CodeError("check length does not match n")
        for i, g in enumerate(self.checks):
            for h in self.checks[i + 1:]:
                if not commute(g, h):
                    raise CodeError(f"checks {g} and {h} anticommute")
        if f2_rank(g.symplectic() for g in self.checks) != len(self.checks):
            raise CodeError("checks are not independent")
        if len(self.checks) + len(self.logicals) != n:
            raise CodeError(f"{len(self.checks)} checks and {len(self.logicals)} logical pairs on {n} qubits")
        ops = [p for pair in self.logicals for p in pair]
        for p in ops:
            if p.length != n:
                raise CodeError("logical length does not match n")
            if not all(commute(p, g) for g in self.checks):
                raise CodeError(f"logical {p} does not commute with the checks")
        for i, (xi, zi) in enumerate(self.logicals):
            if commute(xi, zi):
                raise CodeError(f"logical pair {i} commutes")
            for j, (xj, zj) in enumerate(self.logicals):
                if i != j and not (commute(xi, xj) and commute(xi, zj) and commute(zi, zj)):
                    raise CodeError(f"logical pairs {i} and {j} do not commute")
        if f2_rank([g.symplectic() for g in self.checks] + [p.symplectic() for p in ops]) != n + self.k:
            raise CodeError("logicals are not independent of the checks")

    def stabilizer_group_set(self) -> set:
        """All unsigned elements of the check group as symplectic ints."""
        vecs = {0}
        for g in self.checks:
            s = g.symplectic()
            vecs |= {v ^ s for v in vecs}
        return vecs

    def to_text(self) -> str:
        lines = [f"{self.n} {self.k}"]
        lines += [g.to_text() for g in self.checks]
        lines += [f"{x.to_text()} {z.to_text()}" for x, z in self.logicals]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, name: str = "") -> "CodeSpec":
        """Header ``n k``, then n-k check lines, then k lines ``X~ Z~``.

        Blank lines and ``#`` comments are ignored.
        """
        rows = []
        for no, raw in enumerate(text.splitlines(), 1):
            s = raw.split("#", 1)[0].strip()
            if s:
                rows.append((no, s))
        if not rows:
            raise CodeParseError(1, "empty code file")
        no, head = rows[0]
        try:
            n, k = (int(v) for v in head.split())
        except ValueError:
            raise CodeParseError(no, f"expected header 'n k', got {head!r}") from None
        if not 0 <= k <= n:
            raise CodeParseError(no, "need 0 <= k <= n")
        body = rows[1:]
        if len(body) != n:
            last = body[-1][0] if body else no
            raise CodeParseError(last, f"expected {n - k} check lines and {k} logical lines, found {len(body)} lines")

        def parse(no, tok):
            try:
                p = PauliString.from_text(tok)
            except ValueError as e:
                raise CodeParseError(no, str(e)) from None
            if p.length != n:
                raise CodeParseError(no, f"operator {tok!r} has length {p.length}, expected {n}")
            return p

        checks = [parse(no, s) for no, s in body[: n - k]]
        logicals = []
        for no, s in body[n - k:]:
            toks = s.split()
            if len(toks) != 2:
                raise CodeParseError(no, "logical line needs two operators 'X~ Z~'")
            logicals.append((parse(no, toks[0]), parse(no, toks[1])))
        # locate the first offending line before the whole-code validation
        seen = []
        for (no, _), g in zip(body, checks):
            for h in seen:
                if not commute(g, h):
                    raise CodeParseError(no, f"check {g} anticommutes with {h}")
            if f2_rank([s.symplectic() for s in seen] + [g.symplectic()]) != len(seen) + 1:
                raise CodeParseError(no, f"check {g} depends on earlier checks")
            seen.append(g)
        for (no, _), pair in zip(body[n - k:], logicals):
            for p in pair:
                bad = [g for g in checks if not commute(p, g)]
                if bad:
                    raise CodeParseError(no, f"logical {p} anticommutes with check {bad[0]}")
        try:
            return cls(n, tuple(checks), tuple(logicals), name)
        except CodeError as e:
            raise CodeParseError(body[-1][0], str(e)) from None


def code_from_checks(n: int, checks: Sequence[PauliString], name: str = "") -> CodeSpec:
    """Complete independent commuting checks with symplectic logical pairs."""
    stabs = [g.symplectic() for g in checks]
    _, pairs = _complete_basis(n, stabs)
    full = (1 << n) - 1

    def op(v):
        return PauliString(n, v & full, v >> n)

    return CodeSpec(n, tuple(checks), tuple((op(a), op(b)) for a, b in pairs), name)


# named codes ------------------------------------------------------------------

def repetition(L: int) -> CodeSpec:
    """Span of the X-basis states |0...0> and |1...1>."""
    if L < 2:
        raise CodeError("repetition code needs L >= 2")
    checks = [PauliString.from_sparse(L, {i: "X", i + 1: "X"}) for i in range(L - 1)]
    logical = (PauliString(L, 0, (1 << L) - 1), PauliString.single(L, 0, "X"))
    return CodeSpec(L, tuple(checks), (logical,), f"repetition({L})")


def five_qubit() -> CodeSpec:
    base = "XZZXI"
    checks = [PauliString.from_text(base[-i:] + base[:-i] if i else base) for i in range(4)]
    return CodeSpec(5, tuple(checks), ((PauliString.from_text("XXXXX"), PauliString.from_text("ZZZZZ")),), "five_qubit")


def shor() -> CodeSpec:
    checks = []
    for b in (0, 3, 6):
        checks.append(PauliString.from_sparse(9, {b: "Z", b + 1: "Z"}))
        checks.append(PauliString.from_sparse(9, {b + 1: "Z", b + 2: "Z"}))
    checks.append(PauliString.from_sparse(9, {i: "X" for i in range(6)}))
    checks.append(PauliString.from_sparse(9, {i: "X" for i in range(3, 9)}))
    logical = (PauliString.from_text("Z" * 9), PauliString.from_text("X" * 9))
    return CodeSpec(9, tuple(checks), (logical,), "shor")


def load_code_file(path) -> CodeSpec:
    with open(path) as fh:
        return CodeSpec.from_text(fh.read(), name=Path(path).stem)


def steane() -> CodeSpec:
    text = resources.files("coherencelab").joinpath("data/steane.code").read_text()
    return CodeSpec.from_text(text, name="steane")


def parse_binary_matrix(text: str, start_line: int = 1) -> np.ndarray:
    rows = []
    for off, raw in enumerate(text.splitlines()):
        s = raw.strip().replace(" ", "")
        if not s:
            continue
        if set(s) - {"0", "1"}:
            raise CodeParseError(start_line + off, f"non-binary row {raw!r}")
        rows.append([int(c) for c in s])
    if rows and len({len(r) for r in rows}) != 1:
        raise CodeParseError(start_line, "rows have different lengths")
    return np.array(rows, dtype=np.uint8)


def parse_css_text(text: str):
    """Blocks headed by lines ``Hx`` and ``Hz``; rows of 0/1 follow."""
    blocks = {}
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        key = s.rstrip(":").lower()
        if key in ("hx", "hz"):
            current = key
            blocks[current] = []
            continue
        if current is None:
            raise CodeParseError(no, "matrix row before an 'Hx' or 'Hz' header")
        blocks[current].append((no, s))
    if set(blocks) != {"hx", "hz"}:
        raise CodeParseError(1, "need both Hx and Hz blocks")
    mats = []
    for key in ("hx", "hz"):
        rows = blocks[key]
        first = rows[0][0] if rows else 1
        mats.append(parse_binary_matrix("\n".join(s for _, s in rows), first))
    return mats[0], mats[1]


def css(Hx, Hz, name: str = "css") -> CodeSpec:
    """CSS code with X checks from rows of Hx and Z checks from rows of Hz."""
    Hx = np.atleast_2d(np.asarray(Hx, dtype=np.uint8))
    Hz = np.atleast_2d(np.asarray(Hz, dtype=np.uint8))
    if Hx.shape[1] != Hz.shape[1]:
        raise CodeError("Hx and Hz must have the same number of columns")
    n = Hx.shape[1]
    if np.any((Hx.astype(int) @ Hz.T.astype(int)) % 2):
        raise CodeError("Hx and Hz rows are not orthogonal over F2")

    def to_int(row):
        return sum(int(b) << i for i, b in enumerate(row))

    rx = [to_int(r) for r in Hx]
    rz = [to_int(r) for r in Hz]
    bx = list(_reduce(rx).values())
    bz = list(_reduce(rz).values())
    # X-type logicals: ker(Hz) modulo rowspace(Hx); Z-type likewise
    def quotient(kernel, sub):
        span = _reduce(sub)
        out = []
        for v in kernel:
            if not _in_span(span, v):
                out.append(v)
                span = _reduce(list(span.values()) + [v])
        return out

    lx = quotient(_nullspace(rz, n), bx)
    lz = quotient(_nullspace(rx, n), bz)
    # pair them so that <lx_i, lz_j> = delta_ij
    lz_new = []
    lx_work = list(lx)
    pool = list(lz)
    for i in range(len(lx_work)):
        j = next(j for j, v in enumerate(pool) if _dot(lx_work[i], v))
        z = pool.pop(j)
        pool = [v ^ z if _dot(lx_work[i], v) else v for v in pool]
        for m in range(i + 1, len(lx_work)):
            if _dot(lx_work[m], z):
                lx_work[m] ^= lx_work[i]
        lz_new.append(z)
    # lz_new is upper triangular against lx_work; clean the remaining overlaps
    for i in reversed(range(len(lx_work))):
        for j in range(i):
            if _dot(lx_work[j], lz_new[i]):
                lz_new[i] ^= lz_new[j]
    checks = [PauliString(n, v, 0) for v in bx] + [PauliString(n, 0, v) for v in bz]
    logicals = [(PauliString(n, x, 0), PauliString(n, 0, z)) for x, z in zip(lx_work, lz_new)]
    return CodeSpec(n, tuple(checks), tuple(logicals), name)


def css_ranks(code_or_H) -> tuple[int, int]:
    """(k_x, k_z) = (n - rank Hx, n - rank Hz) of a CSS code."""
    code = code_or_H
    n = code.n
    rx = sum(1 for g in code.checks if g.z == 0)
    rz = sum(1 for g in code.checks if g.x == 0)
    return n - rx, n - rz


def build_named_code(name: str, *args) -> CodeSpec:
    key = name.lower().replace("-", "_")
    if key == "repetition":
        return repetition(int(args[0]) if args else 3)
    if key == "steane":
        return steane()
    if key == "shor":
        return shor()
    if key in ("five_qubit", "five", "513"):
        return five_qubit()
    if key == "css":
        if len(args) != 2:
            raise CodeError("css needs Hx and Hz")
        return css(*args)
    raise CodeError(f"unknown code {name!r}")


# distance ----------------------------------------------------------------------

_LETTER_X = np.array([1, 1, 0], dtype=np.int64)  # X, Y, Z
_LETTER_Z = np.array([0, 1, 1], dtype=np.int64)


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for s in (32, 16, 8, 4, 2, 1):
        v ^= v >> s
    return v & 1


def brute_force_distance(
    code: CodeSpec,
    basis=None,
    budget: int = 20_000_000,
    max_weight: int | None = None,
):
    """Minimum weight of a Pauli string in C(S) minus S (unsigned).

    With ``basis`` the search is restricted to strings whose letter on every
    support site is that site's basis axis (dephasing errors in that basis).
    Returns ``(d, witness)``; ``(None, None)`` when k = 0.
    """
    n = code.n
    if code.k == 0:
        return None, None
    if n > 62:
        raise CodeError("brute-force distance is limited to 62 qubits")
    chk_x = np.array([g.x for g in code.checks], dtype=np.int64)
    chk_z = np.array([g.z for g in code.checks], dtype=np.int64)
    group = code.stabilizer_group_set() if len(code.checks) <= 22 else None
    span = _reduce(g.symplectic() for g in code.checks)
    if basis is not None:
        b = as_basis(basis, n)
        codes = b.codes()
    spent = 0
    top = n if max_weight is None else min(n, max_weight)
    for w in range(1, top + 1):
        combos = np.array(list(itertools.combinations(range(n), w)), dtype=np.int64)
        if basis is None:
            letters = np.array(list(itertools.product(range(3), repeat=w)), dtype=np.int64)
        else:
            letters = None
        count = len(combos) * (len(letters) if letters is not None else 1)
        if spent + count > budget:
            raise DistanceBudgetExceeded(w - 1, budget)
        spent += count
        shifts = np.int64(1) << combos  # (C, w)
        if letters is None:
            xs = (_LETTER_X[codes[combos]] * shifts).sum(axis=1)
            zs = (_LETTER_Z[codes[combos]] * shifts).sum(axis=1)
        else:
            xs = (_LETTER_X[letters][None, :, :] * shifts[:, None, :]).sum(axis=2).ravel()
            zs = (_LETTER_Z[letters][None, :, :] * shifts[:, None, :]).sum(axis=2).ravel()
        ok = np.ones(len(xs), dtype=bool)
        for cx, cz in zip(chk_x, chk_z):
            ok &= _parity((xs & cz) ^ (zs & cx)) == 0
        for idx in np.flatnonzero(ok):
            x, z = int(xs[idx]), int(zs[idx])
            v = x | (z << n)
            inside = (v in group) if group is not None else _in_span(span, v)
            if not inside:
                return w, PauliString(n, x, z)
    if max_weight is not None and top < n:
        raise DistanceBudgetExceeded(top, budget)
    raise CodeError("no logical error found; code has no logical qubits")


# code-state enumeration ------------------------------------------------------

def _symp(a: int, b: int, k: int) -> int:
    m = (1 << k) - 1
    return (bin((a & m) & (b >> k)).count("1") + bin((a >> k) & (b & m)).count("1")) & 1


def _span(vectors) -> frozenset:
    s = {0}
    for v in vectors:
        s |= {u ^ v for u in s}
    return frozenset(s)


def isotropic_subspaces(k: int, dim: int) -> list[list[int]]:
    """Bases of all ``dim``-dimensional isotropic subspaces of F2^{2k}."""
    if dim == 0:
        return [[]]
    level = {frozenset([0]): []}
    for _ in range(dim):
        nxt = {}
        for span, basis in level.items():
            for v in range(1, 1 << (2 * k)):
                if v in span or any(_symp(v, b, k) for b in basis):
                    continue
                new = basis + [v]
                key = _span(new)
                if key not in nxt:
                    nxt[key] = new
        level = nxt
    return list(level.values())


def lagrangian_count(k: int) -> int:
    return math.prod(2 ** j + 1 for j in range(1, k + 1))


def code_state_count(k: int) -> int:
    """Number of stabilizer states in a 2^k-dimensional code space."""
    return 2 ** k * lagrangian_count(k)


def logical_operator(code: CodeSpec, v: int) -> PauliString:
    """Hermitian logical Pauli for v = (a | b << k): prod X~^a Z~^b."""
    k = code.k
    p = PauliString.identity(code.n)
    for j, (xj, zj) in enumerate(code.logicals):
        if v >> j & 1:
            p = hermitian_product(p, xj)
        if v >> (k + j) & 1:
            p = hermitian_product(p, zj)
    return p


@dataclass(frozen=True)
class CodeStateEnumeration:
    code: CodeSpec
    states: tuple  # (lagrangian basis, signs, generators)

    def __len__(self):
        return len(self.states)

    def tableau(self, i: int) -> StabilizerTableau:
        return StabilizerTableau.from_generators(self.code.n, self.states[i][2])


def _check_k(code: CodeSpec, max_k: int):
    if code.k > max_k:
        raise EnumerationBudgetExceeded(f"k={code.k} exceeds the enumeration limit {max_k}")


def enumerate_code_states(code: CodeSpec, max_k: int = 3) -> CodeStateEnumeration:
    _check_k(code, max_k)
    k = code.k
    states = []
    for basis in isotropic_subspaces(k, k):
        ops = [logical_operator(code, v) for v in basis]
        for signs in itertools.product((0, 1), repeat=k):
            gens = list(code.checks) + [(-p if s else p) for p, s in zip(ops, signs)]
            states.append((tuple(basis), signs, tuple(gens)))
    return CodeStateEnumeration(code, tuple(states))


def _conj_vector(p: PauliString, masks) -> int:
    return diag_conj(p, masks)[1]


def _coherence_of(gens: Sequence[PauliString], masks) -> int:
    return f2_rank(_conj_vector(g, masks) for g in gens)


def max_coherent_code_state(code: CodeSpec, basis="X", max_k: int = 3):
    """(tableau, C_PD): the most coherent stabilizer state of the code space."""
    _check_k(code, max_k)
    b = as_basis(basis, code.n)
    masks = _relabel_masks(b)
    best, best_gens = -1, None
    for lag in isotropic_subspaces(code.k, code.k):
        gens = list(code.checks) + [logical_operator(code, v) for v in lag]
        c = _coherence_of(gens, masks)
        if c > best:
            best, best_gens = c, gens
    return StabilizerTableau.from_generators(code.n, best_gens), best


def tight_bound(code: CodeSpec, basis="X", max_k: int = 3) -> int:
    """Smallest C_PD over the one-logical-qubit subcodes of the code.

    A subcode fixes k-1 commuting logicals W; its three logical classes are
    the non-trivial cosets of W-perp / W.  Every logical error of a subcode is
    a logical error of the code, so the distance is bounded by each subcode's
    C_PD.  For k <= 1 this is C_PD itself.
    """
    _check_k(code, max_k)
    k = code.k
    b = as_basis(basis, code.n)
    masks = _relabel_masks(b)
    if k <= 1:
        return max_coherent_code_state(code, b, max_k)[1]
    best = math.inf
    for W in isotropic_subspaces(k, k - 1):
        span = _span(W)
        perp = [v for v in range(1, 1 << (2 * k)) if all(_symp(v, w, k) == 0 for w in W)]
        reps = []
        seen = set(span)
        for v in perp:
            if v not in seen:
                reps.append(v)
                seen |= {v ^ u for u in span}
        assert len(reps) == 3
        base = list(code.checks) + [logical_operator(code, v) for v in W]
        c = max(_coherence_of(base + [logical_operator(code, r)], masks) for r in reps)
        best = min(best, c)
    return int(best)


def basis_state_coherences(code: CodeSpec, basis="X") -> list[int]:
    """Coherence of the 2^k basis states diagonal in the chosen Z~ logicals."""
    b = as_basis(basis, code.n)
    masks = _relabel_masks(b)
    gens = list(code.checks) + [z for _, z in code.logicals]
    return [_coherence_of(gens, masks)] * (2 ** code.k)


def verify_coherence_bound(code: CodeSpec, bases: Sequence, budget: int = 20_000_000) -> dict:
    """d <= tight_bound <= C_PD for every basis; raises BoundViolation otherwise."""
    d, witness = brute_force_distance(code, budget=budget)
    rows = []
    for basis in bases:
        b = as_basis(basis, code.n)
        _, cpd = max_coherent_code_state(code, b)
        tb = tight_bound(code, b)
        dd, _ = brute_force_distance(code, basis=b, budget=budget)
        row = {
            "basis": b.axes,
            "d": d,
            "dephasing_d": dd,
            "C_PD": cpd,
            "tight": tb,
            "slack": None if d is None else tb - d,
        }
        rows.append(row)
        if tb > cpd or (d is not None and d > tb):
            raise BoundViolation(f"bound violated for {code.name} in basis {b.axes}: {row}")
    return {"code": code.name, "n": code.n, "k": code.k, "d": d, "witness": None if witness is None else witness.to_text(), "rows": rows}


# measurement constructions -----------------------------------------------------

def attack_sequence(state: StabilizerTableau, basis, M: int) -> list[PauliString]:
    """M single-site basis measurements that lower the entropy by min(M - C, S).

    The first C measurements sit on the pivot sites of the echelon form of
    the generators' basis-conjugate parts; the rest are basis operators not
    yet in the stabilizer group.
    """
    b = as_basis(basis, state.n)
    C = state.coherence(b)
    S = state.entropy()
    if M <= C:
        raise ValueError(f"need M > C_D = {C}")
    if S == 0:
        raise ValueError("state is pure; nothing to purify")
    masks = _relabel_masks(b)
    conj = [diag_conj(g, masks)[1] for g in state.generators]
    # pivots: lowest set bit of each row after elimination on the conjugate part
    pivots = []
    rows = list(conj)
    for col in range(state.n):
        bit = 1 << col
        piv = next((i for i, r in enumerate(rows) if r & bit), None)
        if piv is None:
            continue
        pr = rows.pop(piv)
        rows = [r ^ pr if r & bit else r for r in rows]
        pivots.append(col)
    work = state.copy()
    seq = []
    for q in pivots:
        p = b.operator(q)
        work.measure(p, ForcedRecord(0))
        seq.append(p)
    q = 0
    while len(seq) < M and q < state.n:
        p = b.operator(q)
        if work.classify(p) is MeasurementCase.ENTROPY_REDUCING:
            work.measure(p, ForcedRecord(0))
            seq.append(p)
        q += 1
    while len(seq) < M:
        seq.append(b.operator(len(seq) % state.n))
    return seq


def reduce_to_product(state: StabilizerTableau, basis) -> list[int]:
    """Sites whose sequential basis measurement is uncertain (pure input)."""
    if state.entropy() != 0:
        raise ValueError("reduce_to_product needs a pure state")
    b = as_basis(basis, state.n)
    work = state.copy()
    sites = []
    for q in range(state.n):
        rec = work.measure(b.operator(q), ForcedRecord(0))
        if not rec.deterministic:
            sites.append(q)
    return sites


def random_css(n: int, rng: np.random.Generator, k_range=(1, 3), max_tries: int = 1000):
    """Random CSS code on n qubits with 1 <= k <= 3 (rejection sampled)."""
    for _ in range(max_tries):
        rz = int(rng.integers(1, n))
        Hz = rng.integers(0, 2, (rz, n)).astype(np.uint8)
        rows = [sum(int(b) << i for i, b in enumerate(r)) for r in Hz]
        null = _nullspace(rows, n)
        if not null:
            continue
        m = int(rng.integers(0, len(null) + 1))
        coeffs = rng.integers(0, 2, (m, len(null)))
        hx = []
        for c in coeffs:
            v = 0
            for bit, u in zip(c, null):
                if bit:
                    v ^= u
            hx.append([(v >> i) & 1 for i in range(n)])
        Hx = np.array(hx, dtype=np.uint8).reshape(m, n)
        if Hx.shape[0] == 0:
            Hx = np.zeros((0, n), dtype=np.uint8)
        try:
            code = css(Hx if len(Hx) else np.zeros((1, n), np.uint8), Hz)
        except CodeError:
            continue
        if k_range[0] <= code.k <= k_range[1] and all(weight(g) for g in code.checks):
            return code, Hx, Hz
    raise RuntimeError("failed to sample a CSS code")
