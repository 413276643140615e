import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencelab import dense
from coherencelab.codes import (
    BoundViolation,
    CodeError,
    CodeParseError,
    CodeSpec,
    DistanceBudgetExceeded,
    EnumerationBudgetExceeded,
    attack_sequence,
    brute_force_distance,
    build_named_code,
    code_from_checks,
    code_state_count,
    css,
    css_ranks,
    enumerate_code_states,
    isotropic_subspaces,
    lagrangian_count,
    max_coherent_code_state,
    parse_css_text,
    random_css,
    reduce_to_product,
    tight_bound,
    verify_coherence_bound,
)
from coherencelab.pauli import LocalPauliBasis, PauliString, commute, multiply
from coherencelab.stabilizer import ForcedRecord, MeasurementCase, RandomOutcome, random_state

NAMED = [("repetition", (3,)), ("repetition", (5,)), ("steane", ()), ("five_qubit", ()), ("shor", ())]
PARAMS = {"repetition(3)": (3, 1, 1), "repetition(5)": (5, 1, 1), "steane": (7, 1, 3), "five_qubit": (5, 1, 3), "shor": (9, 1, 3)}


def named(name, args):
    return build_named_code(name, *args)


def slow_distance(code):
    """Scan all 4^n strings; membership in S by explicit group products."""
    n = code.n
    group = {(0, 0)}
    for g in code.checks:
        group |= {(x ^ g.x, z ^ g.z) for x, z in group}
    best = None
    for letters in itertools.product("IXYZ", repeat=n):
        p = PauliString.from_text("".join(letters))
        if p.is_identity() or (p.x, p.z) in group:
            continue
        if all(commute(p, g) for g in code.checks):
            w = sum(c != "I" for c in letters)
            best = w if best is None else min(best, w)
    return best


@pytest.mark.parametrize("name, args", NAMED)
def test_named_code_parameters(name, args):
    code = named(name, args)
    n, k, d = PARAMS[code.name]
    assert (code.n, code.k) == (n, k)
    got, witness = brute_force_distance(code)
    assert got == d
    assert all(commute(witness, g) for g in code.checks)


@pytest.mark.parametrize("name, args", NAMED[:4])
def test_distance_against_full_scan(name, args):
    code = named(name, args)
    assert brute_force_distance(code)[0] == slow_distance(code)


def test_distance_budget_and_k0():
    with pytest.raises(DistanceBudgetExceeded) as e:
        brute_force_distance(named("steane", ()), budget=50)
    assert e.value.searched_weight < 3
    k0 = code_from_checks(2, [PauliString.from_text("XX"), PauliString.from_text("ZZ")])
    assert brute_force_distance(k0) == (None, None)


def test_dephasing_distance():
    rep = named("repetition", (5,))
    # Z errors flip the X-basis bits; the code only fails at full weight
    assert brute_force_distance(rep, basis="Z")[0] == 5
    assert brute_force_distance(rep, basis="X")[0] == 1


@pytest.mark.parametrize("name, args", NAMED)
def test_text_roundtrip(name, args):
    code = named(name, args)
    back = CodeSpec.from_text(code.to_text())
    assert back.checks == code.checks and back.logicals == code.logicals


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("3\n", 1),
        ("2 1\nXQ\nXX ZZ\n", 2),
        ("2 1\nXXX\nXX ZZ\n", 2),
        ("3 1\nXXI\nZIZ\nXXX ZZZ\n", 3),
        ("3 1\nXXI\nXXI\nXXX ZZZ\n", 3),
        ("2 1\nXX\nZI IZ\n", 3),
        ("2 1\nXX\nZZ\n", 3),
        ("# comment\n2 1\nXX\n", 3),
    ],
)
def test_parse_errors_report_lines(text, line):
    with pytest.raises(CodeParseError) as e:
        CodeSpec.from_text(text)
    assert e.value.line == line
    assert str(e.value).startswith(f"line {line}:")


def test_css_construction_and_errors():
    H = [[1, 1, 1, 1, 0, 0, 0], [1, 1, 0, 0, 1, 1, 0], [1, 0, 1, 0, 1, 0, 1]]
    code = css(H, H, name="steane-css")
    assert (code.n, code.k) == (7, 1)
    assert brute_force_distance(code)[0] == 3
    assert css_ranks(code) == (4, 4)
    with pytest.raises(CodeError):
        css([[1, 0]], [[1, 1]])
    with pytest.raises(CodeError):
        css([[1, 0, 0]], [[1, 1]])
    hx, hz = parse_css_text("Hx\n1111000\n# c\nHz:\n1111000\n")
    assert hx.shape == hz.shape == (1, 7)
    with pytest.raises(CodeParseError) as e:
        parse_css_text("Hx\n1121\nHz\n1111\n")
    assert e.value.line == 2
    with pytest.raises(CodeParseError):
        parse_css_text("1111\n")


def test_unknown_code():
    with pytest.raises(CodeError):
        build_named_code("toric")
    with pytest.raises(CodeError):
        build_named_code("repetition", 1)


def test_invalid_code_specs():
    x, z = PauliString.from_text("XX"), PauliString.from_text("ZZ")
    with pytest.raises(CodeError):
        CodeSpec(2, (x,), ((z, PauliString.from_text("ZI")),))
    with pytest.raises(CodeError):
        CodeSpec(2, (x, z), ((x, z),))


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_lagrangian_enumeration_count(k):
    assert len(isotropic_subspaces(k, k)) == lagrangian_count(k)


@pytest.mark.parametrize("seed", range(4))
def test_enumerated_code_states_are_code_states(seed):
    rng = np.random.default_rng(seed)
    code, _, _ = random_css(int(rng.integers(4, 8)), rng, k_range=(1, 2))
    enum = enumerate_code_states(code)
    assert len(enum) == code_state_count(code.k)
    seen = set()
    for i in range(len(enum)):
        t = enum.tableau(i)
        assert t.entropy() == 0
        for g in code.checks:
            rec = t.copy().measure(g, ForcedRecord(1))
            assert rec.case is MeasurementCase.NO_EFFECT and rec.outcome == 0
        seen.add(t.to_text())
    assert len(seen) == len(enum)


def test_enumeration_limit():
    code, _, _ = random_css(8, np.random.default_rng(0), k_range=(2, 3))
    with pytest.raises(EnumerationBudgetExceeded):
        enumerate_code_states(code, max_k=1)


@pytest.mark.parametrize("name, args", NAMED[:4])
@pytest.mark.parametrize("axis", "XYZ")
def test_c_pd_matches_dense_maximum(name, args, axis):
    code = named(name, args)
    b = LocalPauliBasis.uniform(code.n, axis)
    enum = enumerate_code_states(code)
    want = max(dense.coherence(enum.tableau(i).density_matrix(), b) for i in range(len(enum)))
    t, cpd = max_coherent_code_state(code, b)
    assert cpd == pytest.approx(want, abs=1e-9)
    assert t.coherence(b) == cpd


@pytest.mark.parametrize("name, args", NAMED)
def test_bound_chain_random_bases(name, args, rng):
    code = named(name, args)
    bases = [a for a in "XYZ"] + [LocalPauliBasis.random(code.n, rng) for _ in range(5)]
    report = verify_coherence_bound(code, bases)
    for row in report["rows"]:
        assert row["d"] <= row["tight"] <= row["C_PD"]
        assert row["dephasing_d"] >= row["d"]


def test_repetition_x_bound_is_one():
    for L in (3, 5, 8):
        assert tight_bound(named("repetition", (L,)), "X") == 1


@pytest.mark.parametrize("seed", range(8))
def test_css_tight_bound_singleton_form(seed):
    rng = np.random.default_rng(100 + seed)
    code, _, _ = random_css(int(rng.integers(4, 9)), rng)
    kx, kz = css_ranks(code)
    assert tight_bound(code, "X") == code.n - kz + 1
    assert tight_bound(code, "Z") == code.n - kx + 1


def test_bound_violation_is_assertion():
    assert issubclass(BoundViolation, AssertionError)


@given(st.integers(0, 2**32 - 1))
def test_attack_sequence_postcondition(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    state = random_state(n, rng, mixed=True)
    S = state.entropy()
    b = LocalPauliBasis.random(n, rng)
    C = state.coherence(b)
    if S == 0:
        with pytest.raises(ValueError):
            attack_sequence(state, b, C + 1)
        return
    with pytest.raises(ValueError):
        attack_sequence(state, b, C)
    M = C + int(rng.integers(1, n + 2))
    seq = attack_sequence(state, b, M)
    assert len(seq) == M
    assert all(p.length == n and bin(p.support).count("1") == 1 for p in seq)
    work = state.copy()
    for p in seq:
        work.measure(p, RandomOutcome(rng))
    assert S - work.entropy() == min(M - C, S)


@given(st.integers(0, 2**32 - 1))
def test_reduce_to_product_counts_coherence(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    state = random_state(n, rng)
    b = LocalPauliBasis.random(n, rng)
    assert len(reduce_to_product(state, b)) == state.coherence(b)
    with pytest.raises(ValueError):
        reduce_to_product(random_state(2, rng, mixed=True).dephase(PauliString.from_text("XI")).dephase(PauliString.from_text("ZI")), b.axes[:1] * 2)


def test_code_from_checks_completes_logicals():
    code = code_from_checks(4, [PauliString.from_text("XXXX"), PauliString.from_text("ZZZZ")])
    assert code.k == 2
    for x, z in code.logicals:
        assert not commute(x, z)
        assert all(commute(x, g) and commute(z, g) for g in code.checks)
    assert multiply(code.checks[0], code.checks[1]).to_text() == "+YYYY"
