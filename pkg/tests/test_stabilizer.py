import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencelab import dense
from coherencelab.pauli import CNOT, HADAMARD, PHASE, LocalPauliBasis, PauliString, commute
from coherencelab.stabilizer import (
    ForcedRecord,
    MeasurementCase,
    Postselect,
    PostselectionError,
    RandomOutcome,
    StabilizerTableau,
    coherence_oracle,
    coherent_information,
    diag_conj,
    pauli_matrix,
    _relabel_masks,
    random_state,
)

seeds = st.integers(0, 2**32 - 1)


def state_and_basis(seed, max_n=5, mixed=None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_n + 1))
    m = bool(rng.integers(2)) if mixed is None else mixed
    return random_state(n, rng, mixed=m), LocalPauliBasis.random(n, rng), rng


def test_product_state_matrix():
    t = StabilizerTableau.product("XZ", signs=[1, 0])
    minus = np.array([1, -1]) / np.sqrt(2)
    zero = np.array([1, 0])
    psi = np.kron(minus, zero)
    assert np.allclose(t.density_matrix(), np.outer(psi, psi))
    assert t.entropy() == 0


def test_maximally_mixed():
    t = StabilizerTableau.maximally_mixed(3)
    assert t.entropy() == 3 and t.n_stab == 0
    assert np.allclose(t.density_matrix(), np.eye(8) / 8)
    assert t.coherence("X") == 0


def test_from_generators_bell_pair():
    t = StabilizerTableau.from_generators(2, [PauliString.from_text("XX"), PauliString.from_text("-ZZ")])
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    assert np.allclose(t.density_matrix(), np.outer(psi, psi))
    assert t.subsystem_entropy([0]) == 1
    with pytest.raises(ValueError):
        StabilizerTableau.from_generators(2, [PauliString.from_text("XI"), PauliString.from_text("ZI")])


@given(seeds)
def test_entropies_match_dense(seed):
    t, _, rng = state_and_basis(seed)
    rho = t.density_matrix()
    assert t.entropy() == pytest.approx(dense.von_neumann(rho), abs=1e-9)
    for r in range(t.n + 1):
        for region in itertools.combinations(range(t.n), r):
            want = dense.von_neumann(dense.partial_trace(rho, t.n, region)) if region else 0.0
            assert t.subsystem_entropy(region) == pytest.approx(want, abs=1e-9)


@given(seeds)
def test_coherence_matches_dense_and_oracle(seed):
    t, b, rng = state_and_basis(seed)
    rho = t.density_matrix()
    c = t.coherence(b)
    assert c == pytest.approx(dense.coherence(rho, b), abs=1e-9)
    assert c == coherence_oracle(t, b, rng)


@given(seeds)
def test_marginal_coherence_matches_dense(seed):
    t, _, rng = state_and_basis(seed)
    sites = sorted(rng.choice(t.n, int(rng.integers(1, t.n + 1)), replace=False).tolist())
    b = LocalPauliBasis.random(len(sites), rng)
    red = dense.partial_trace(t.density_matrix(), t.n, sites)
    assert t.marginal_coherence(sites, b) == pytest.approx(dense.coherence(red, b), abs=1e-9)


@given(seeds)
def test_interval_entropies_agree_with_regions(seed):
    t, _, rng = state_and_basis(seed, max_n=8)
    order = rng.permutation(t.n).tolist()
    prof = t.interval_entropies(order)
    assert prof.tolist() == [t.subsystem_entropy(order[:l]) for l in range(t.n + 1)]


@given(seeds)
def test_measurement_cases(seed):
    t, _, rng = state_and_basis(seed)
    n = t.n
    p = PauliString(n, int(rng.integers(0, 2**n)), int(rng.integers(0, 2**n)))
    if p.is_identity():
        return
    gens = t.generators
    anti = any(not commute(p, g) for g in gens)
    case = t.classify(p)
    if anti:
        assert case is MeasurementCase.STATE_CHANGING
    else:
        # the dense oracle decides whether +-p is in the stabilizer group
        rho = t.density_matrix()
        ev = np.real(np.trace(rho @ pauli_matrix(p)))
        assert case is (MeasurementCase.NO_EFFECT if abs(abs(ev) - 1) < 1e-9 else MeasurementCase.ENTROPY_REDUCING)
    S0 = t.entropy()
    rec = t.copy().measure(p, RandomOutcome(rng))
    assert rec.case is case and rec.deterministic == (case is MeasurementCase.NO_EFFECT)
    after = t.copy()
    after.measure(p, RandomOutcome(rng))
    assert after.entropy() == S0 - (case is MeasurementCase.ENTROPY_REDUCING)


def test_dense_program_oracle(rng):
    assert dense.random_program_mismatches(120, rng, max_qubits=4) == 0


def test_postselection():
    t = StabilizerTableau.product("Z")
    z = PauliString.from_text("Z")
    assert t.copy().measure(z, Postselect(0)).outcome == 0
    with pytest.raises(PostselectionError):
        t.copy().measure(z, Postselect(1))
    # forced records never raise
    assert t.copy().measure(z, ForcedRecord(1)).outcome == 0
    x = PauliString.from_text("-X")
    rec = t.copy().measure(x, ForcedRecord(1))
    assert rec.outcome == 1 and not rec.deterministic
    with pytest.raises(ValueError):
        t.measure(PauliString.identity(1), ForcedRecord(0))
    with pytest.raises(TypeError):
        t.measure(z, "random")


def test_dephase_is_irreversible_mixing():
    t = StabilizerTableau.product("X")
    t.dephase(PauliString.from_text("Z"))
    assert t.entropy() == 1
    t2 = StabilizerTableau.product("Z")
    t2.dephase(PauliString.from_text("Z"))
    assert t2.entropy() == 0


@pytest.mark.parametrize("gate, times", [(HADAMARD(0), 2), (PHASE(0), 4), (CNOT(0, 1), 2)])
def test_gate_orders(gate, times, rng):
    t = random_state(2, rng)
    rho = t.density_matrix()
    for _ in range(times):
        t.apply_gate(gate)
    assert np.allclose(t.density_matrix(), rho)


@given(seeds)
def test_css_gauge_blocks(seed):
    t, b, _ = state_and_basis(seed, max_n=8)
    g = t.css_gauge(b)
    masks = _relabel_masks(b)
    assert g.n_x + g.n_y + g.n_z == t.n_stab
    # diagonal block has no conjugate part; conjugate block has no diagonal part
    assert all(diag_conj(p, masks)[1] == 0 for p in g.x_block)
    assert all(diag_conj(p, masks)[0] == 0 for p in g.z_block)
    assert g.n_z + g.n_y == t.coherence(b)
    rebuilt = StabilizerTableau.from_generators(t.n, g.generators)
    assert np.allclose(rebuilt.density_matrix(), t.density_matrix()) if t.n <= 6 else True


@given(seeds)
def test_text_roundtrip(seed):
    t, _, _ = state_and_basis(seed, max_n=6)
    back = StabilizerTableau.from_text(t.to_text())
    assert np.allclose(back.density_matrix(), t.density_matrix())


def test_coherent_information_bell():
    t = StabilizerTableau.from_generators(2, [PauliString.from_text("XX"), PauliString.from_text("ZZ")])
    assert coherent_information(t, [0], [1]) == 1
    with pytest.raises(ValueError):
        coherent_information(t, [0], [0, 1])


@given(seeds)
def test_pure_state_entanglement_below_coherence(seed):
    t, _, _ = state_and_basis(seed, max_n=8, mixed=False)
    c = min(t.coherence("X"), t.coherence("Z"))
    for l in range(t.n + 1):
        assert t.subsystem_entropy(range(l)) <= c
