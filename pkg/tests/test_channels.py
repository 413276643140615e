import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencelab import dense
from coherencelab.channels import (
    EraserKind,
    ancilla_sites,
    apply_eraser,
    init_classical_register,
    init_quantum_register,
    system_sites,
)
from coherencelab.pauli import PauliString
from coherencelab.stabilizer import ForcedRecord, MeasurementCase, coherent_information, random_state

KINDS = list(EraserKind)


@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS))
def test_eraser_matches_a_dense_branch(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    t = random_state(n, rng, mixed=bool(rng.integers(2)))
    q = int(rng.integers(n))
    branches = dense.eraser_branches(t.density_matrix(), n, q, kind.value)
    apply_eraser(t, q, kind, rng)
    got = t.density_matrix()
    assert any(np.allclose(got, b, atol=1e-9) for b in branches)


@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS))
def test_eraser_leaves_plus_x(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    t = random_state(n, rng, mixed=True)
    q = int(rng.integers(n))
    apply_eraser(t, q, kind, rng)
    rec = t.copy().measure(PauliString.single(n, q, "X"), ForcedRecord(1))
    assert rec.case is MeasurementCase.NO_EFFECT and rec.outcome == 0


def test_forgotten_eraser_is_deterministic(rng):
    t = random_state(4, rng)
    a, b = t.copy(), t.copy()
    apply_eraser(a, 2, "forgotten", np.random.default_rng(0))
    apply_eraser(b, 2, "forgotten", np.random.default_rng(99))
    assert np.allclose(a.density_matrix(), b.density_matrix())


@pytest.mark.parametrize(
    "value, kind",
    [
        ("maintaining", EraserKind.COHERENCE_MAINTAINING),
        ("coherence_destroying", EraserKind.COHERENCE_DESTROYING),
        ("DESTROYING", EraserKind.COHERENCE_DESTROYING),
        (EraserKind.FORGOTTEN, EraserKind.FORGOTTEN),
    ],
)
def test_eraser_kind_parse(value, kind):
    assert EraserKind.parse(value) is kind


def test_eraser_kind_rejects_unknown():
    with pytest.raises(ValueError):
        EraserKind.parse("shredder")


@pytest.mark.parametrize("L, A", [(4, 0), (6, 2), (5, 5), (70, 10)])
def test_register_initial_states(L, A):
    q = init_quantum_register(L, A)
    assert q.entropy() == 0
    assert coherent_information(q, system_sites(L), ancilla_sites(L, A)) == A
    c = init_classical_register(L, A)
    sys_, anc = system_sites(L), ancilla_sites(L, A)
    assert c.entropy() == A
    i_x = c.subsystem_entropy(sys_) + c.subsystem_entropy(anc) - c.subsystem_entropy(sys_ + anc)
    assert i_x == A
    assert coherent_information(c, sys_, anc) == 0
    # system starts in the X basis: no coherence in it
    assert c.marginal_coherence(sys_, "X") == 0


def test_register_bounds():
    with pytest.raises(ValueError):
        init_quantum_register(3, 4)
    with pytest.raises(ValueError):
        init_classical_register(3, -1)


def test_destroying_eraser_removes_quantum_register():
    L, A = 3, 1
    t = init_quantum_register(L, A)
    apply_eraser(t, 0, "coherence_destroying", np.random.default_rng(1))
    assert coherent_information(t, system_sites(L), ancilla_sites(L, A)) == 0


def test_maintaining_eraser_on_untouched_site_is_trivial():
    L, A = 4, 2
    t = init_classical_register(L, A)
    before = t.density_matrix()
    apply_eraser(t, 3, "coherence_maintaining", np.random.default_rng(1))
    assert np.allclose(t.density_matrix(), before)
