"""Figure-scale experiments, each reduced to a pass/fail check.

Every function returns a :class:`Check`.  Sizes default to desk scale;
``full=True`` moves toward the large runs.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import markov
from .circuits import (
    CircuitConfig,
    ProbeSchedule,
    classical_shadow_series,
    rates_from_delta,
    run,
    run_ensemble,
    run_sweep,
    scrambled_state,
)
from .codes import (
    attack_sequence,
    brute_force_distance,
    build_named_code,
    css_ranks,
    max_coherent_code_state,
    random_css,
    tight_bound,
)
from .pauli import LocalPauliBasis
from .scaling import collapse_fit, crossing_detect
from .stabilizer import RandomOutcome, coherence_oracle, random_state

FULL_ENV = "COHERENCELAB_FULL"


def full_scale() -> bool:
    return os.environ.get(FULL_ENV, "") not in ("", "0")


@dataclass
class Check:
    number: int | str
    name: str
    passed: bool
    summary: str
    data: dict = field(default_factory=dict, repr=False)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number}. {self.name}: {self.summary} ({self.seconds:.0f}s)"


class SlackTracker:
    """Smallest min(C_x, C_z) - S(interval) seen over pure states."""

    def __init__(self):
        self.min_slack = math.inf
        self.states = 0

    def add(self, values):
        v = np.asarray(values, float).ravel()
        v = v[~np.isnan(v)]
        if v.size:
            self.min_slack = min(self.min_slack, float(v.min()))
            self.states += int(v.size)

    @property
    def ok(self) -> bool:
        return self.min_slack >= 0


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        chk = fn(*a, **kw)
        chk.seconds = time.perf_counter() - t0
        return chk

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _runs(cfg, schedule, realizations, workers=None):
    agg, runs = run_ensemble(cfg, schedule, realizations, workers=workers, keep_runs=True)
    return agg, runs


def _half_crossing(x, y, level):
    """First x where y falls through ``level`` (linear interpolation)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float) - level
    for i in range(len(x) - 1):
        if y[i] == 0:
            return float(x[i])
        if y[i] * y[i + 1] < 0:
            return float(x[i] + (x[i + 1] - x[i]) * y[i] / (y[i] - y[i + 1]))
    return None


# 1 ---------------------------------------------------------------------------------

def _prefix_ranks(rows) -> list:
    basis = {}
    out = [0]
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
        out.append(len(basis))
    return out


def random_subspace_profile(L: int, C: int, samples: int, rng) -> np.ndarray:
    """Mean S(x) of a uniform superposition over a random C-dim subspace of
    X-basis strings: rank(G_A) + rank(G_B) - C for a random L x C generator G."""
    acc = np.zeros(L + 1)
    done = 0
    while done < samples:
        rows = [int(v) for v in rng.integers(0, 2**C, L)] if C else [0] * L
        pre = _prefix_ranks(rows)
        if pre[-1] < C:
            continue
        suf = _prefix_ranks(rows[::-1])[::-1]
        acc += np.array(pre) + np.array(suf) - C
        done += 1
    return acc / samples


@_timed
def entanglement_plateau(L=64, coherences=(4, 8, 16, 32), t_over_L=40.0, realizations=200, seed=1, tol=0.5, slack=None):
    """CNOT-only circuits: S(x) saturates min(x, L - x, C_x) at late times."""
    worst = 0.0
    profiles = {}
    x = np.arange(L + 1)
    for c in coherences:
        cfg = CircuitConfig(L=L, t=t_over_L * L, n_z=c, n_x=L - c, seed=seed + c)
        sched = ProbeSchedule.final(cfg, ("S_profile", "C_x", "bound_slack"))
        agg, runs = _runs(cfg, sched, realizations)
        mean = agg.mean["S_profile"][-1]
        target = np.minimum(np.minimum(x, L - x), c)
        dev = float(np.max(np.abs(mean - target)))
        worst = max(worst, dev)
        model = random_subspace_profile(L, c, 2000, np.random.default_rng(seed + c))
        profiles[c] = {
            "mean": mean.tolist(), "target": target.tolist(), "max_dev": dev,
            "model": model.tolist(), "model_dev": float(np.max(np.abs(model - target))),
            "sim_vs_model": float(np.max(np.abs(mean - model))),
        }
        if slack is not None:
            slack.add([r.series["bound_slack"] for r in runs])
        assert np.all(agg.mean["C_x"] == c)
    devs = ", ".join(f"C_x={c}: {profiles[c]['max_dev']:.2f}" for c in coherences)
    model = ", ".join(f"{profiles[c]['model_dev']:.2f}" for c in coherences)
    agree = max(profiles[c]["sim_vs_model"] for c in coherences)
    summary = (
        f"max |S(x) - min(x, L-x, C_x)| per C_x [{devs}], tol {tol}; "
        f"random-subspace model deviations [{model}], simulation vs model {agree:.2f}"
    )
    return Check(1, "entanglement plateau", worst <= tol, summary, profiles)


# 2 ---------------------------------------------------------------------------------

@_timed
def classical_purification(
    sizes=(16, 32, 64, 128),
    p_e=tuple(np.round(np.arange(0.02, 0.2001, 0.02), 3)),
    ancillas=10,
    realizations=100,
    seed=2,
    target=0.10,
    tol=0.02,
    t=None,
    t_over_L=10.0,
    scramble_over_L=40.0,
):
    """I_x(p_e) curves for CNOT + maintaining-eraser circuits cross near 0.1.

    The hybrid phase lasts t_over_L * L unless a fixed ``t`` is given; at a
    fixed short time larger systems simply have not purified yet.
    """
    curves = {}
    for L in sizes:
        dur = t if t is not None else t_over_L * L
        cfgs = [
            CircuitConfig(
                L=L, ancillas=ancillas, p_e=float(pe), t=dur, scramble_time=scramble_over_L * L,
                init="classical_register", eraser="coherence_maintaining", seed=seed,
            )
            for pe in p_e
        ]
        aggs = run_sweep(cfgs, ProbeSchedule.final(cfgs[0], ("I_x",)), realizations)
        means = [float(a.mean["I_x"][-1]) for a in aggs]
        errs = [float(a.stderr["I_x"][-1]) for a in aggs]
        curves[L] = (list(p_e), means, errs)
    cr = crossing_detect(curves)
    ok = cr.found and abs(cr.delta_c - target) <= tol
    return Check(2, "classical purification transition", ok, f"I_x crossing at p_e = {cr} (target {target} +/- {tol}); adjacent pairs {[(a, b, None if c is None else round(c, 3)) for a, b, c in cr.pairs]}", {"curves": curves, "crossing": cr})


# 3 ---------------------------------------------------------------------------------

@_timed
def eraser_dichotomy(
    L=128, p_e=0.02, ancillas=10, t_max=8.0, dt=0.25, realizations=40, seed=3, deadline=5.0,
    scramble_over_L=40.0, slack=None,
):
    """Destroying erasers kill the coherent information; maintaining ones track I_x."""
    times = tuple(np.round(np.arange(0, t_max + 1e-9, dt), 6))
    base = CircuitConfig(
        L=L, ancillas=ancillas, p_e=p_e, t=t_max, init="quantum_register", seed=seed,
        scramble_time=scramble_over_L * L,
    )
    sched = ProbeSchedule(times, ("coherent_info", "bound_slack"))
    dcfg = base.with_(eraser="coherence_destroying")
    mcfg = base.with_(eraser="coherence_maintaining")
    hits = []
    d_mean = np.zeros(len(times))
    m_mean = np.zeros(len(times))
    mismatches = 0
    for r in range(realizations):
        scr = scrambled_state(base, r)
        res = run(dcfg, sched, r, scrambled=scr)
        ci = res.series["coherent_info"]
        d_mean += ci / realizations
        zero = np.flatnonzero(ci == 0)
        hits.append(times[zero[0]] if zero.size else math.inf)
        if slack is not None:
            slack.add(res.series["bound_slack"])
        res = run(mcfg, sched, r, scrambled=scr)
        oracle = classical_shadow_series(mcfg, sched, r)
        mismatches += int(np.sum(res.series["coherent_info"] != oracle))
        m_mean += res.series["coherent_info"] / realizations
        if slack is not None:
            slack.add(res.series["bound_slack"])
    median_hit = float(np.median(hits))
    ok = median_hit <= deadline and mismatches == 0
    summary = (
        f"destroying: median time to coherent info 0 = {median_hit:.2f} (need <= {deadline}); "
        f"maintaining vs classical oracle mismatches = {mismatches}/{realizations * len(times)}"
    )
    return Check(3, "eraser dichotomy", ok, summary, {"times": times, "destroying_mean": d_mean.tolist(), "maintaining_mean": m_mean.tolist(), "hits": hits})


# 4 ---------------------------------------------------------------------------------

@_timed
def measurement_only_steady(L=1000, steps=10**6, triples=3, seed=4, tol=0.02):
    """Stationary means of the measurement-only walker are p_alpha L."""
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for _ in range(triples):
        p = rng.dirichlet(np.ones(3))
        nx, nz, ny = markov.stationary_means("measurement_only", (p[0], p[1], p[2]), L, steps, rng)
        dev = max(abs(nx / L - p[0]), abs(nz / L - p[2]), abs(ny / L - p[1]))
        worst = max(worst, dev)
        rows.append({"p": p.tolist(), "means": [nx / L, ny / L, nz / L], "dev": dev})
    return Check(4, "measurement-only steady state", worst < tol, f"max |N_alpha/L - p_alpha| = {worst:.4f} (tol {tol})", {"rows": rows})


# 5 ---------------------------------------------------------------------------------

@_timed
def weak_walker(seed=5, drift_rates=((0.5, 0.25, 0.25), (0.2, 0.3, 0.5), (0.6, 0.3, 0.1)), edge_px=(0.55, 0.65, 0.75), L=200):
    """Bulk drift of the weak-limit walker and its edge localization length."""
    rng = np.random.default_rng(seed)
    drift_ok = True
    rows = []
    for r in drift_rates:
        px, py, pz = r
        mean, err = markov.bulk_drift(r, 3000, 400, 2000, rng)
        expect = np.array([px - pz - py, pz - px - py])
        z = np.abs(np.asarray(mean) - expect) / np.maximum(np.asarray(err), 1e-12)
        drift_ok &= bool(np.all(z < 3))
        rows.append({"rates": r, "drift": list(map(float, mean)), "stderr": list(map(float, err)), "expected": expect.tolist()})
    lam = []
    for px in edge_px:
        r = (px, (1 - px) / 2, (1 - px) / 2)
        h = markov.edge_histogram(r, L, 2 * 10**6, rng)
        lam.append(markov.localization_length(h))
    gaps = [abs(px - (1 - px)) for px in edge_px]
    products = [l * g for l, g in zip(lam, gaps)]
    ratio = max(products) / min(products)
    ok = drift_ok and ratio <= 2.0
    summary = f"drift within 3 sigma: {drift_ok}; lambda * |p_y + p_z - p_x| = {', '.join(f'{v:.2f}' for v in products)} (spread x{ratio:.2f}, need <= 2)"
    return Check(5, "weak-limit walker", ok, summary, {"drift": rows, "lambda": lam})


# 6 and 8 ---------------------------------------------------------------------------

def critical_line_data(
    sizes=(32, 64, 128),
    deltas=tuple(np.round(np.linspace(0.2, 0.466, 9), 4)),
    realizations=100,
    p_m=0.01,
    p_y=0.25,
    times_over_L=(5,),
    seed=6,
    slack=None,
    workers=None,
):
    """I_3 and C_x from pure product starts; coherent info from a maximally mixed start."""
    out = {"sizes": list(sizes), "deltas": list(deltas), "I_3": {}, "C_x": {}, "S_half": {}, "coherent_info": {}}
    for L in sizes:
        i3, cx, sh = [], [], []
        ci = {tl: [] for tl in times_over_L}
        for d in deltas:
            px, py, pz = rates_from_delta(float(d), p_y)
            n_x, n_y = round(px * L), round(py * L)
            n_z = L - n_x - n_y
            cfg = CircuitConfig(L=L, p_m=p_m, p_x=px, p_y=py, p_z=pz, t=5 * L, n_x=n_x, n_y=n_y, n_z=n_z, seed=seed)
            agg, runs = run_ensemble(cfg, ProbeSchedule.final(cfg, ("I_3", "C_x", "S_half", "bound_slack")), realizations, workers=workers, keep_runs=True)
            if slack is not None:
                slack.add([r.series["bound_slack"] for r in runs])
            i3.append((float(agg.mean["I_3"][-1]), float(agg.stderr["I_3"][-1])))
            cx.append((float(agg.mean["C_x"][-1]), float(agg.stderr["C_x"][-1])))
            sh.append((float(agg.mean["S_half"][-1]), float(agg.stderr["S_half"][-1])))
            mcfg = CircuitConfig(L=L, p_m=p_m, p_x=px, p_y=py, p_z=pz, t=max(times_over_L) * L, init="maximally_mixed", seed=seed + 1)
            sched = ProbeSchedule(tuple(float(tl * L) for tl in times_over_L), ("coherent_info",))
            magg = run_ensemble(mcfg, sched, realizations, workers=workers)
            for k, tl in enumerate(times_over_L):
                ci[tl].append((float(magg.mean["coherent_info"][k]), float(magg.stderr["coherent_info"][k])))
        out["I_3"][L] = i3
        out["C_x"][L] = cx
        out["S_half"][L] = sh
        out["coherent_info"][L] = ci
    return out


def _curves(data, key, tl=None):
    res = {}
    for L in data["sizes"]:
        series = data[key][L] if tl is None else data[key][L][tl]
        res[L] = (data["deltas"], [m for m, _ in series], [e for _, e in series])
    return res


@_timed
def critical_line(data=None, tol=0.05, target=1 / 3, **kw):
    """I_3 crossing, C_x = L/2 crossing and coherent-info transition at Delta_x = 1/3."""
    data = critical_line_data(**kw) if data is None else data
    i3 = crossing_detect(_curves(data, "I_3"))
    half = []
    for L in data["sizes"]:
        m = [v / L for v, _ in data["C_x"][L]]
        # C_x / L decreases with Delta_x on the X-classical side
        h = _half_crossing(data["deltas"], m, 0.5)
        if h is not None:
            half.append(h)
    cx_cross = float(np.mean(half)) if half else None
    tl0 = sorted(data["coherent_info"][data["sizes"][0]])[0]
    ci = crossing_detect(_curves(data, "coherent_info", tl0))
    ok_i3 = i3.found and abs(i3.delta_c - target) <= tol
    ok_cx = cx_cross is not None and i3.found and abs(cx_cross - i3.delta_c) <= tol
    ok_ci = ci.found and i3.found and abs(ci.delta_c - i3.delta_c) <= tol
    summary = (
        f"I_3 crossing {i3} (target {target:.3f} +/- {tol}); "
        f"C_x = L/2 at {cx_cross if cx_cross is None else round(cx_cross, 3)}; "
        f"coherent info crossing {ci} (t = {tl0}L); all within {tol} of the I_3 crossing: {ok_cx and ok_ci}"
    )
    return Check(6, "coherence-tuned critical line", ok_i3 and ok_cx and ok_ci, summary, {"data": data, "I_3": i3, "C_x_half": cx_cross, "coherent_info": ci})


def _stack(data, key, tl=None):
    Ls, ds, vs = [], [], []
    for L in data["sizes"]:
        series = data[key][L] if tl is None else data[key][L][tl]
        for d, (m, _) in zip(data["deltas"], series):
            Ls.append(L)
            ds.append(d)
            vs.append(m)
    return np.array(Ls), np.array(ds), np.array(vs)


@_timed
def scaling_collapse(data, nu_range=(1.0, 1.35), beta_range=(0.5, 0.8), degree=4):
    """Collapse exponents from the critical-line data."""
    fit_i3 = collapse_fit(*_stack(data, "I_3"), form="I3", degree=degree)
    fits_ci = {}
    for tl in sorted(data["coherent_info"][data["sizes"][0]]):
        fits_ci[tl] = collapse_fit(*_stack(data, "coherent_info", tl), form="coherent_info", degree=degree)
    betas = [f.beta for f in fits_ci.values()]
    nus = [f.nu for f in fits_ci.values()]
    dcs = [f.delta_c for f in fits_ci.values()]
    ok_nu = nu_range[0] <= fit_i3.nu <= nu_range[1]
    beta = float(np.mean(betas))
    ok_beta = beta_range[0] <= beta <= beta_range[1]
    summary = (
        f"I_3: nu = {fit_i3.nu:.3f}, Delta_c = {fit_i3.delta_c:.3f} (need nu in {list(nu_range)}); "
        f"coherent info: beta = {beta:.3f} (spread {np.ptp(betas):.3f}), nu = {np.mean(nus):.3f}, "
        f"Delta_c = {np.mean(dcs):.3f} (need beta in {list(beta_range)})"
    )
    return Check(8, "scaling collapse", ok_nu and ok_beta, summary, {"I3": fit_i3.to_dict(), "coherent_info": {k: f.to_dict() for k, f in fits_ci.items()}})


# 7 ---------------------------------------------------------------------------------

@_timed
def phase_gate_threshold(
    L=128,
    ancillas=10,
    rate=0.05,
    r_d=(0.25, 0.5, 0.75, 1.0),
    p_R=tuple(np.round(np.arange(0.0, 0.2501, 0.025), 4)),
    t_over_L=10.0,
    realizations=50,
    seed=7,
    target=0.10,
    tol=0.03,
    scramble_over_L=0.0,
    slack=None,
):
    """Coherent-info > 1 boundary in (r_d, p_R): p_R ~ 0.1 at r_d = 1, linear in r_d.

    The register starts unscrambled and the hybrid circuit runs for t = 10 L,
    long enough for C_x to reach its steady state.
    """
    t = t_over_L * L
    cfgs = [
        CircuitConfig(
            L=L, ancillas=ancillas, p_m=rate * rd, p_e=rate * (1 - rd), p_R=float(pr),
            p_x=1.0, p_y=0.0, p_z=0.0, t=t, scramble_time=scramble_over_L * L,
            init="quantum_register", seed=seed,
        )
        for rd in r_d
        for pr in p_R
    ]
    sched = ProbeSchedule.final(cfgs[0], ("coherent_info", "C_x", "bound_slack"))
    results = iter(run_sweep(cfgs, sched, realizations, keep_runs=True))
    grid = {}
    cx = {}
    boundary = {}
    for rd in r_d:
        means, cmeans = [], []
        for pr in p_R:
            agg, runs = next(results)
            if slack is not None:
                slack.add([r.series["bound_slack"] for r in runs])
            means.append(float(agg.mean["coherent_info"][-1]))
            cmeans.append(float(agg.mean["C_x"][-1]))
        grid[rd] = means
        cx[rd] = cmeans
        # coherent info rises through 1 as p_R grows
        boundary[rd] = _half_crossing(p_R, [-m for m in means], -1.0)
    xs = np.array([rd for rd in r_d if boundary[rd] is not None])
    ys = np.array([boundary[rd] for rd in xs])
    if len(xs) >= 2:
        slope = float(xs @ ys / (xs @ xs))
        ss_res = float(np.sum((ys - slope * xs) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 0.0
    else:
        slope, r2 = math.nan, math.nan
    b1 = boundary.get(1.0)
    ok = b1 is not None and abs(b1 - target) <= tol and r2 > 0.9
    bstr = ", ".join(f"{rd}: {'none' if boundary[rd] is None else round(boundary[rd], 3)}" for rd in r_d)
    summary = f"boundary p_R by r_d [{bstr}]; at r_d=1 need {target} +/- {tol}; line through origin R^2 = {r2:.3f} (need > 0.9)"
    return Check(7, "phase-gate threshold", ok, summary, {"grid": grid, "C_x": cx, "boundary": boundary, "slope": slope, "r2": r2})


# 9 ---------------------------------------------------------------------------------

@_timed
def code_bounds(random_bases=20, random_codes=10, attack_states=1000, seed=9):
    """d <= tight bound <= C_PD; CSS Singleton form; Theorem-2 attacks."""
    rng = np.random.default_rng(seed)
    problems = []
    codes = [build_named_code("repetition", 3), build_named_code("repetition", 5)] + [
        build_named_code(n) for n in ("steane", "shor", "five_qubit")
    ]
    checked = 0
    for code in codes:
        d, _ = brute_force_distance(code)
        bases = [LocalPauliBasis.uniform(code.n, a) for a in "XYZ"]
        bases += [LocalPauliBasis.random(code.n, rng) for _ in range(random_bases)]
        for b in bases:
            tb = tight_bound(code, b)
            _, cpd = max_coherent_code_state(code, b)
            checked += 1
            if not d <= tb <= cpd:
                problems.append(f"{code.name} {b.axes}: d={d} tight={tb} C_PD={cpd}")
    for L in (3, 5):
        tb = tight_bound(build_named_code("repetition", L), "X")
        if tb != 1:
            problems.append(f"repetition({L}) X-basis bound {tb} != 1")
    for _ in range(random_codes):
        code, _, _ = random_css(int(rng.integers(4, 9)), rng)
        kx, kz = css_ranks(code)
        tx, tz = tight_bound(code, "X"), tight_bound(code, "Z")
        if tx != code.n - kz + 1 or tz != code.n - kx + 1:
            problems.append(f"CSS n={code.n}: tight X {tx} vs {code.n - kz + 1}, Z {tz} vs {code.n - kx + 1}")
    attacked = 0
    while attacked < attack_states:
        n = int(rng.integers(2, 9))
        st = random_state(n, rng, mixed=True)
        S = st.entropy()
        if S == 0:
            continue
        b = LocalPauliBasis.random(n, rng)
        C = st.coherence(b)
        M = C + int(rng.integers(1, n + 2))
        work = st.copy()
        for p in attack_sequence(st, b, M):
            work.measure(p, RandomOutcome(rng))
        if S - work.entropy() != min(M - C, S):
            problems.append(f"attack on n={n}: entropy drop {S - work.entropy()} != {min(M - C, S)}")
        attacked += 1
    summary = f"{checked} code/basis pairs, {random_codes} random CSS codes, {attacked} attacks; violations: {len(problems)}"
    return Check(9, "code bounds", not problems, summary, {"problems": problems[:20]})


# 10 --------------------------------------------------------------------------------

@_timed
def oracle_equivalences(states=1000, programs=1000, paired=1000, seed=10, slack=None):
    """(a) coherence vs measurement oracle, (b) dense simulation, (c) classical
    shadows, (d) entanglement never exceeds coherence on pure states."""
    from . import dense as _dense

    rng = np.random.default_rng(seed)
    bad_a = 0
    for _ in range(states):
        n = int(rng.integers(1, 9))
        st = random_state(n, rng, mixed=bool(rng.integers(2)))
        b = LocalPauliBasis.random(n, rng)
        if st.coherence(b) != coherence_oracle(st, b, rng):
            bad_a += 1
    bad_b = _dense.random_program_mismatches(programs, rng, max_qubits=4)
    bad_c = _dense.shadow_mismatches(paired, rng)
    parts = [f"(a) {bad_a}/{states}", f"(b) {bad_b}/{programs}", f"(c) {bad_c}/{paired}"]
    ok = bad_a == bad_b == bad_c == 0
    if slack is not None:
        ok_d = slack.ok and slack.states > 0
        parts.append(f"(d) min slack {slack.min_slack:g} over {slack.states} pure states")
        ok = ok and ok_d
    return Check(10, "oracle equivalences", ok, "mismatches " + ", ".join(parts))
