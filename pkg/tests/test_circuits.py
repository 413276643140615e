import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencelab import dense
from coherencelab.circuits import (
    ENSEMBLE_COLUMNS,
    CircuitConfig,
    ProbeSchedule,
    classical_shadow_run,
    classical_shadow_series,
    evaluate_probes,
    final_state,
    initial_state,
    rates_from_delta,
    realization_rngs,
    run,
    run_ensemble,
    run_sweep,
    sample_events,
    scramble_key,
    scrambled_state,
    step,
    to_csv,
    to_jsonl,
)
from coherencelab.f2linalg import image_entropy
from coherencelab.stabilizer import StabilizerTableau


@given(st.floats(-1, 1), st.floats(0, 1))
def test_rates_from_delta_roundtrip(dx, py):
    px, py2, pz = rates_from_delta(dx, py)
    assert px + py2 + pz == pytest.approx(1)
    if py < 1 - 1e-9:
        cfg = CircuitConfig(p_x=px, p_y=py2, p_z=pz, p_m=0.1)
        assert cfg.delta_x == pytest.approx(dx, abs=1e-9)


@pytest.mark.parametrize(
    "kw",
    [
        dict(L=1),
        dict(p_m=1.5),
        dict(p_x=0.5, p_z=0.2),
        dict(boundary="twisted"),
        dict(init="thermal"),
        dict(ancillas=2),
        dict(init="quantum_register", ancillas=99),
        dict(n_x=3, n_z=3),
        dict(placement="sideways"),
        dict(t=-1.0),
        dict(eraser="shredder"),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        CircuitConfig(**{"L": 8, **kw})


def test_from_dict_forms():
    a = CircuitConfig.from_dict({"L": 8, "delta_x": 0.5, "p_y": 0.2})
    assert (a.p_x, a.p_z) == pytest.approx((0.6, 0.2))
    b = CircuitConfig.from_dict({"L": 8, "p_x": 0.3, "p_y": 0.2})
    assert b.p_z == pytest.approx(0.5)
    with pytest.raises(ValueError):
        CircuitConfig.from_dict({"L": 8, "delta_x": 0.5, "p_x": 0.2})
    with pytest.raises(ValueError):
        CircuitConfig.from_dict({"L": 8, "colour": "red"})
    assert CircuitConfig.from_dict(a.to_dict()) == a
    assert a.with_(delta_x=0.0).p_x == pytest.approx(0.4)


def test_schedule_validation():
    cfg = CircuitConfig(L=8, t=2)
    with pytest.raises(ValueError):
        ProbeSchedule((1.0, 0.5))
    with pytest.raises(ValueError):
        ProbeSchedule((-1.0,))
    with pytest.raises(ValueError):
        ProbeSchedule((1.0,), ("entanglement",))
    with pytest.raises(ValueError):
        ProbeSchedule((3.0,)).sample_steps(cfg)
    assert ProbeSchedule.linspace(cfg, 3).times == (0.0, 1.0, 2.0)


def test_realization_streams_are_distinct():
    a, _ = realization_rngs(5, 0)
    b, _ = realization_rngs(5, 1)
    c, _ = realization_rngs(5, 0)
    x = a.random()
    assert x != b.random() and x == c.random()


def small_cfg(**kw):
    base = dict(L=12, p_m=0.1, p_x=0.4, p_y=0.2, p_z=0.4, p_R=0.05, t=3.0, seed=3, n_z=4)
    base.update(kw)
    return CircuitConfig(**base)


def test_run_is_deterministic():
    cfg = small_cfg()
    sched = ProbeSchedule.linspace(cfg, 4, ("S_half", "C_x", "I_3", "S_profile"))
    a, b = run(cfg, sched, 2), run(cfg, sched, 2)
    for k in a.series:
        assert np.array_equal(a.series[k], b.series[k])
    c = run(cfg.with_(seed=4), sched, 2)
    assert any(not np.array_equal(a.series[k], c.series[k]) for k in a.series)


def test_worker_count_does_not_change_results():
    cfg = small_cfg()
    sched = ProbeSchedule.final(cfg, ("S_half", "C_x"))
    one = run_ensemble(cfg, sched, 6, workers=1)
    two = run_ensemble(cfg, sched, 6, workers=2)
    assert one.records() == two.records()


def test_sweep_shares_scramble_without_changing_results():
    base = small_cfg(p_R=0.0, scramble_time=2.0)
    cfgs = [base.with_(p_m=pm) for pm in (0.0, 0.1, 0.2)]
    assert len({scramble_key(c) for c in cfgs}) == 1
    sched = ProbeSchedule.linspace(base, 3, ("S_half", "C_z"))
    swept = run_sweep(cfgs, sched, 4)
    for cfg, agg in zip(cfgs, swept):
        assert agg.records() == run_ensemble(cfg, sched, 4).records()
    scr = scrambled_state(base, 1)
    with_scr = run(base, sched, 1, scrambled=scr)
    plain = run(base, sched, 1)
    for k in plain.series:
        assert np.array_equal(with_scr.series[k], plain.series[k])


def test_final_state_matches_last_sample():
    cfg = small_cfg()
    st_ = final_state(cfg, 1)
    res = run(cfg, ProbeSchedule.final(cfg, ("S_half", "C_x")), 1)
    assert res.series["S_half"][-1] == st_.subsystem_entropy(range(6))
    assert res.series["C_x"][-1] == st_.coherence("X")


def test_event_stream_rates():
    cfg = CircuitConfig(L=50, t=40, p_m=0.2, p_R=0.1, p_e=0.05, n_z=0)
    ev = sample_events(cfg, 0)
    n = cfg.n_steps
    counts = np.bincount(ev.kind, minlength=4)
    # CNOT, measurement, phase, eraser per step
    for k, p in enumerate((1.0, 0.2, 0.1, 0.05)):
        assert abs(counts[k] - p * n) < 5 * np.sqrt(n * p * (1 - p)) + 1


@given(st.integers(0, 10**6))
def test_cnot_only_circuits_preserve_x_coherence(seed):
    rng = np.random.default_rng(seed)
    L = int(rng.integers(4, 20))
    c = int(rng.integers(0, L + 1))
    cfg = CircuitConfig(L=L, n_z=c, t=float(rng.uniform(0, 4)), seed=seed,
                        boundary=("open", "periodic")[seed % 2])
    res = run(cfg, ProbeSchedule.linspace(cfg, 3, ("C_x", "bound_slack")))
    assert np.all(res.series["C_x"] == c)
    assert np.all(res.series["bound_slack"] >= 0)


@given(st.integers(0, 10**6))
def test_pure_hybrid_states_respect_entanglement_bound(seed):
    rng = np.random.default_rng(seed)
    L = int(rng.integers(4, 16))
    cfg = CircuitConfig(L=L, n_z=L // 2, n_x=L - L // 2, p_m=0.2, p_x=0.3, p_y=0.3, p_z=0.4,
                        p_R=0.1, t=3.0, seed=seed)
    res = run(cfg, ProbeSchedule.linspace(cfg, 4, ("bound_slack",)))
    assert np.all(res.series["bound_slack"] >= 0)


def test_classical_shadow_matches_tableau(rng):
    assert dense.shadow_mismatches(40, rng) == 0


def test_shadow_series_tracks_register_information():
    cfg = CircuitConfig(L=16, ancillas=4, p_e=0.1, t=4.0, init="classical_register",
                        eraser="coherence_maintaining", seed=11)
    sched = ProbeSchedule.linspace(cfg, 5, ("I_x",))
    res = run(cfg, sched, 0)
    assert np.array_equal(res.series["I_x"], classical_shadow_series(cfg, sched, 0))
    assert classical_shadow_series(cfg, sched, 0)[-1] == image_entropy(classical_shadow_run(cfg), range(4))
    with pytest.raises(ValueError):
        classical_shadow_run(cfg.with_(p_m=0.1))


def test_initial_states():
    cfg = CircuitConfig(L=10, n_x=5, n_z=3, n_y=2, seed=1)
    t = initial_state(cfg, np.random.default_rng(0))
    assert t.coherence("X") == 5 and t.coherence("Z") == 7
    ordered = initial_state(cfg.with_(placement="ordered"), np.random.default_rng(0))
    assert ordered.to_text() == StabilizerTableau.product("XXXXXZZZYY").to_text()
    mm = initial_state(CircuitConfig(L=6, init="maximally_mixed"), None)
    assert mm.entropy() == 6


def test_probes_on_product_state():
    cfg = CircuitConfig(L=8, n_z=8, n_x=0, placement="ordered")
    t = StabilizerTableau.product("Z" * 8)
    out = evaluate_probes(t, cfg, ("S_half", "C_x", "C_z", "I_2", "I_3", "S_profile", "bound_slack"))
    assert out["S_half"] == 0 and out["I_3"] == 0 and out["I_2"] == 0
    assert out["C_x"] == 8 and out["C_z"] == 0
    assert out["bound_slack"] == 0
    assert np.all(out["S_profile"] == 0)


def test_step_reference_path(rng):
    cfg = CircuitConfig(L=6, p_m=0.5, p_x=0.5, p_z=0.5, p_R=0.5, p_e=0.5, eraser="forgotten", n_z=3)
    t = StabilizerTableau.product("XXXZZZ")
    kinds = set()
    for _ in range(40):
        t, log = step(t, cfg, rng)
        kinds |= {e[0] for e in log}
    assert kinds == {"CNOT", "MEASURE", "PHASE", "ERASE"}
    assert 0 <= t.entropy() <= 6


def test_serialization():
    cfg = small_cfg()
    agg = run_ensemble(cfg, ProbeSchedule.final(cfg, ("S_half",)), 3)
    text = to_csv(agg.records(), ENSEMBLE_COLUMNS)
    assert text.splitlines()[0] == "probe,t,mean,stderr,n"
    lines = to_jsonl(agg.records(), ENSEMBLE_COLUMNS, echo=cfg.to_dict()).splitlines()
    assert json.loads(lines[0])["config"]["L"] == 12
    assert json.loads(lines[1])["n"] == 3
