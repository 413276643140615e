"""Random hybrid circuit engine.

Each step independently hosts, in this order, a nearest-neighbour CNOT
(probability p_u), a single-site Pauli measurement (p_m), a phase gate
(p_R) and a bit eraser (p_e).  Time is t = n / L.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from .channels import EraserKind, init_classical_register, init_quantum_register
from .f2linalg import AffineMapF2, BitMatrix, image_entropy, n_words
from .pauli import CNOT, PHASE, PauliString
from .stabilizer import StabilizerTableau

INITS = ("pure_product", "classical_register", "quantum_register", "maximally_mixed")
BOUNDARIES = ("periodic", "open")
PROBES = (
    "S_profile",
    "S_half",
    "C_x",
    "C_z",
    "C_x_joint",
    "C_z_joint",
    "I_2",
    "I_3",
    "S_sys",
    "coherent_info",
    "I_x",
    "bound_slack",
)
BLOCK = 1 << 14
WORKERS_ENV = "COHERENCELAB_WORKERS"


def rates_from_delta(delta_x: float, p_y: float) -> tuple[float, float, float]:
    """(p_x, p_y, p_z) with (p_x - p_z) / (1 - p_y) = delta_x."""
    if not -1 <= delta_x <= 1:
        raise ValueError("delta_x must lie in [-1, 1]")
    rest = 1.0 - p_y
    return rest * (1 + delta_x) / 2, p_y, rest * (1 - delta_x) / 2


@dataclass(frozen=True)
class CircuitConfig:
    """Rates, sizes and initial state of one circuit family.

    ``t`` is the duration of the hybrid phase in units of L steps (``steps``
    overrides it).  ``scramble_time`` prepends a CNOT-only phase; probe times
    are measured from its end.
    """

    L: int = 64
    ancillas: int = 0
    p_u: float = 1.0
    p_m: float = 0.0
    p_x: float = 1.0
    p_y: float = 0.0
    p_z: float = 0.0
    p_R: float = 0.0
    p_e: float = 0.0
    t: float = 1.0
    steps: int | None = None
    scramble_time: float = 0.0
    seed: int = 0
    boundary: str = "periodic"
    eraser: str = "coherence_maintaining"
    init: str = "pure_product"
    n_x: int | None = None
    n_z: int = 0
    n_y: int = 0
    placement: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "eraser", EraserKind.parse(self.eraser).value)
        if self.n_x is None and self.init == "pure_product":
            object.__setattr__(self, "n_x", self.L - self.n_z - self.n_y)
        self.validate()

    def validate(self) -> None:
        if self.L < 2:
            raise ValueError("L must be at least 2")
        for name in ("p_u", "p_m", "p_x", "p_y", "p_z", "p_R", "p_e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.p_x + self.p_y + self.p_z - 1.0) > 1e-9:
            raise ValueError("p_x + p_y + p_z must equal 1")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if not 0 <= self.ancillas <= self.L:
            raise ValueError("ancillas must lie in [0, L]")
        registers = ("classical_register", "quantum_register")
        if self.ancillas and self.init not in registers:
            raise ValueError(f"init {self.init!r} takes no ancillas")
        if self.init == "pure_product":
            if min(self.n_x, self.n_z, self.n_y) < 0 or self.n_x + self.n_z + self.n_y != self.L:
                raise ValueError("n_x + n_z + n_y must equal L")
        if self.placement not in ("random", "ordered"):
            raise ValueError("placement must be 'random' or 'ordered'")
        if self.t < 0 or self.scramble_time < 0 or (self.steps is not None and self.steps < 0):
            raise ValueError("durations must be non-negative")

    # derived ---------------------------------------------------------
    @property
    def delta_x(self) -> float:
        return (self.p_x - self.p_z) / (1 - self.p_y) if self.p_y < 1 else 0.0

    @property
    def n_steps(self) -> int:
        return int(self.steps) if self.steps is not None else int(round(self.t * self.L))

    @property
    def scramble_steps(self) -> int:
        return int(round(self.scramble_time * self.L))

    @property
    def duration(self) -> float:
        return self.n_steps / self.L

    @property
    def n_qubits(self) -> int:
        return self.L + self.ancillas

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitConfig":
        d = dict(d)
        if "delta_x" in d:
            dx = d.pop("delta_x")
            if dx is not None:
                if "p_x" in d or "p_z" in d:
                    raise ValueError("give either delta_x or (p_x, p_z), not both")
                px, py, pz = rates_from_delta(float(dx), float(d.get("p_y", 0.0)))
                d.update(p_x=px, p_y=py, p_z=pz)
        elif "p_x" in d and "p_z" not in d:
            d["p_z"] = 1.0 - d["p_x"] - d.get("p_y", 0.0)
        elif "p_z" in d and "p_x" not in d:
            d["p_x"] = 1.0 - d["p_z"] - d.get("p_y", 0.0)
        if "p_x" in d and "p_z" in d and "p_y" not in d:
            d["p_y"] = max(0.0, 1.0 - d["p_x"] - d["p_z"])
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def with_(self, **kw) -> "CircuitConfig":
        if "delta_x" in kw:
            dx = kw.pop("delta_x")
            px, py, pz = rates_from_delta(dx, kw.get("p_y", self.p_y))
            kw.update(p_x=px, p_y=py, p_z=pz)
        return replace(self, **kw)


@dataclass(frozen=True)
class ProbeSchedule:
    times: tuple
    probes: tuple = ("S_half", "C_x", "C_z")

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if list(times) != sorted(times):
            raise ValueError("sample times must be sorted")
        if any(t < 0 for t in times):
            raise ValueError("sample times must be non-negative")
        bad = set(self.probes) - set(PROBES)
        if bad:
            raise ValueError(f"unknown probes {sorted(bad)}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probes", tuple(self.probes))

    @classmethod
    def final(cls, config: CircuitConfig, probes=("S_half", "C_x", "C_z")) -> "ProbeSchedule":
        return cls((config.duration,), tuple(probes))

    @classmethod
    def linspace(cls, config: CircuitConfig, count: int, probes=("S_half", "C_x", "C_z")):
        return cls(tuple(np.linspace(0, config.duration, count)), tuple(probes))

    def sample_steps(self, config: CircuitConfig) -> np.ndarray:
        steps = np.array([int(round(t * config.L)) for t in self.times], dtype=np.int64)
        if len(steps) and steps[-1] > config.n_steps:
            raise ValueError(
                f"sample time {self.times[-1]} beyond run duration {config.duration}"
            )
        return steps + config.scramble_steps


@dataclass
class RunResult:
    config: dict
    realization: int
    times: np.ndarray
    series: dict = field(default_factory=dict)

    def records(self) -> list[tuple]:
        out = []
        for name, arr in self.series.items():
            for k, t in enumerate(self.times):
                v = arr[k]
                if np.ndim(v):
                    out.extend((f"{name}:{x}", float(t), float(y)) for x, y in enumerate(v))
                else:
                    out.append((name, float(t), float(v)))
        return out


@dataclass
class EnsembleResult:
    config: dict
    times: np.ndarray
    n: int
    mean: dict
    stderr: dict

    def records(self) -> list[tuple]:
        out = []
        for name in self.mean:
            m, s = self.mean[name], self.stderr[name]
            for k, t in enumerate(self.times):
                if np.ndim(m[k]):
                    out.extend(
                        (f"{name}:{x}", float(t), float(a), float(b), self.n)
                        for x, (a, b) in enumerate(zip(m[k], s[k]))
                    )
                else:
                    out.append((name, float(t), float(m[k]), float(s[k]), self.n))
        return out


# seeds -------------------------------------------------------------------

def realization_rngs(seed: int, realization: int):
    """(event rng, initial-state rng) for one realization."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(realization),))
    ev, ini = ss.spawn(2)
    return np.random.default_rng(ev), np.random.default_rng(ini)


# events ------------------------------------------------------------------

@dataclass
class EventBlock:
    step: np.ndarray
    kind: np.ndarray
    a: np.ndarray
    b: np.ndarray
    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.step)

    def slice(self, lo: int, hi: int) -> "EventBlock":
        return EventBlock(self.step[lo:hi], self.kind[lo:hi], self.a[lo:hi], self.b[lo:hi], self.bits[lo:hi])


def _neighbour(sites, dirs, L, boundary):
    tgt = sites + np.where(dirs == 1, 1, -1)
    if boundary == "periodic":
        return tgt % L
    out = (tgt < 0) | (tgt >= L)
    return np.where(out, sites - np.where(dirs == 1, 1, -1), tgt)


def _sample_block(config: CircuitConfig, rng, start: int, n: int, hybrid: bool) -> EventBlock:
    L = config.L
    steps = np.arange(start, start + n, dtype=np.int64)
    parts = []
    # CNOT
    mask = rng.random(n) < config.p_u
    site = rng.integers(0, L, n)
    dirs = rng.integers(0, 2, n)
    tgt = _neighbour(site, dirs, L, config.boundary)
    parts.append((steps[mask], K.EV_CNOT, site[mask], tgt[mask], np.zeros(mask.sum(), np.int64)))
    if hybrid:
        mask = rng.random(n) < config.p_m
        site = rng.integers(0, L, n)
        u = rng.random(n)
        axis = np.where(u < config.p_x, 0, np.where(u < config.p_x + config.p_y, 1, 2))
        bit = rng.integers(0, 2, n)
        parts.append((steps[mask], K.EV_MEASURE, site[mask], axis[mask], bit[mask]))
        mask = rng.random(n) < config.p_R
        site = rng.integers(0, L, n)
        parts.append((steps[mask], K.EV_PHASE, site[mask], np.zeros(mask.sum(), np.int64), np.zeros(mask.sum(), np.int64)))
        mask = rng.random(n) < config.p_e
        site = rng.integers(0, L, n)
        bits = rng.integers(0, 4, n)
        parts.append((steps[mask], K.EV_ERASE, site[mask], np.zeros(mask.sum(), np.int64), bits[mask]))
    st = np.concatenate([p[0] for p in parts])
    kind = np.concatenate([np.full(len(p[0]), p[1], np.int64) for p in parts])
    order = np.argsort(st * 4 + kind, kind="stable")
    cat = lambda i: np.concatenate([np.asarray(p[i], np.int64) for p in parts])[order]
    return EventBlock(st[order], kind[order], cat(2), cat(3), cat(4))


def iter_events(config: CircuitConfig, rng, skip_scramble: bool = False, hybrid_phase: bool = True) -> Iterator[EventBlock]:
    """Event stream of a realization in blocks of at most BLOCK steps.

    Blocks never straddle the scramble/hybrid boundary, and the stream does
    not depend on any probe schedule.  Skipped scramble blocks are still
    drawn so the hybrid part of the stream is unchanged.
    """
    for start, stop, hybrid in (
        (0, config.scramble_steps, False),
        (config.scramble_steps, config.scramble_steps + config.n_steps, True),
    ):
        if hybrid and not hybrid_phase:
            return
        s = start
        while s < stop:
            n = min(BLOCK, stop - s)
            blk = _sample_block(config, rng, s, n, hybrid)
            if hybrid or not skip_scramble:
                yield blk
            s += n


def sample_events(config: CircuitConfig, realization: int = 0) -> EventBlock:
    """Whole event stream of one realization as a single block."""
    ev_rng, _ = realization_rngs(config.seed, realization)
    blocks = list(iter_events(config, ev_rng))
    if not blocks:
        e = np.zeros(0, np.int64)
        return EventBlock(e, e, e, e, e)
    return EventBlock(*(np.concatenate([getattr(b, f) for b in blocks]) for f in ("step", "kind", "a", "b", "bits")))


# initial states ------------------------------------------------------------

def initial_state(config: CircuitConfig, rng: np.random.Generator) -> StabilizerTableau:
    L, A = config.L, config.ancillas
    if config.init == "classical_register":
        return init_classical_register(L, A)
    if config.init == "quantum_register":
        return init_quantum_register(L, A)
    if config.init == "maximally_mixed":
        return StabilizerTableau.maximally_mixed(L)
    axes = np.array(list("X" * config.n_x + "Z" * config.n_z + "Y" * config.n_y))
    if config.placement == "random":
        axes = axes[rng.permutation(L)]
    return StabilizerTableau.product("".join(axes))


# probes ------------------------------------------------------------------

def quarter_regions(L: int) -> list[list[int]]:
    return [list(range((k * L) // 4, ((k + 1) * L) // 4)) for k in range(4)]


def max_interval_entropy(state: StabilizerTableau, L: int, periodic: bool = True) -> int:
    """Largest entropy of a contiguous block of the first L sites."""
    rest = list(range(L, state.n))
    best = 0
    starts = range(L) if periodic else range(L)
    for s in starts:
        ring = list(range(s, L)) + (list(range(0, s)) if periodic else [])
        order = ring + rest + ([] if periodic else list(range(0, s)))
        prof = state.interval_entropies(order, upto=len(ring))
        best = max(best, int(prof.max()))
    return best


def evaluate_probes(state: StabilizerTableau, config: CircuitConfig, probes: Sequence[str]) -> dict:
    L, A = config.L, config.ancillas
    sys_ = list(range(L))
    anc = list(range(L, L + A))
    out = {}
    cache = {}

    def S(region):
        key = tuple(region)
        if key not in cache:
            cache[key] = state.subsystem_entropy(region)
        return cache[key]

    for name in probes:
        if name == "S_profile":
            out[name] = state.interval_entropies(sys_ + anc, upto=L).astype(float)
        elif name == "S_half":
            out[name] = S(list(range(L // 2)))
        elif name in ("C_x", "C_z"):
            axis = name[-1].upper()
            out[name] = state.coherence(axis) if A == 0 else state.marginal_coherence(sys_, axis)
        elif name in ("C_x_joint", "C_z_joint"):
            out[name] = state.coherence(name[2].upper())
        elif name in ("I_2", "I_3"):
            R1, R2, R3, _ = quarter_regions(L)
            if name == "I_2":
                out[name] = S(R1) + S(R3) - S(R1 + R3)
            else:
                out[name] = 4 * S(R1) - 2 * S(R1 + R2) - S(R1 + R3)
        elif name == "S_sys":
            out[name] = S(sys_)
        elif name == "coherent_info":
            if config.init == "maximally_mixed":
                # the implicit reference purifies the system exactly
                out[name] = S(sys_)
            else:
                out[name] = S(sys_) - S(sys_ + anc)
        elif name == "I_x":
            out[name] = S(sys_) + S(anc) - S(sys_ + anc)
        elif name == "bound_slack":
            if state.ns != state.n:
                out[name] = math.nan
            else:
                c = min(state.coherence("X"), state.coherence("Z"))
                out[name] = c - max_interval_entropy(state, L, config.boundary == "periodic")
    return out


# running -------------------------------------------------------------------

def _apply_block(state: StabilizerTableau, blk: EventBlock, erase_code: int) -> None:
    if len(blk):
        state.ns = int(
            K.run_events(state.X, state.Z, state.R, state.ns, blk.kind, blk.a, blk.b, blk.bits, erase_code)
        )


def scramble_key(config: CircuitConfig) -> tuple:
    """Fields that determine the CNOT-only scramble phase."""
    d = config.to_dict()
    for k in ("p_m", "p_x", "p_y", "p_z", "p_R", "p_e", "t", "steps", "eraser"):
        d.pop(k)
    return tuple(sorted(d.items()))


def scrambled_state(config: CircuitConfig, realization: int = 0) -> StabilizerTableau:
    """State at the end of the scramble phase of one realization."""
    ev_rng, init_rng = realization_rngs(config.seed, realization)
    state = initial_state(config, init_rng)
    for blk in iter_events(config, ev_rng, hybrid_phase=False):
        _apply_block(state, blk, 0)
    return state


def run(
    config: CircuitConfig,
    schedule: ProbeSchedule,
    realization: int = 0,
    scrambled: StabilizerTableau | None = None,
) -> RunResult:
    """Evolve one realization and sample the scheduled probes.

    ``scrambled`` may carry the output of :func:`scrambled_state` for a
    config with the same :func:`scramble_key`; it is copied, not modified.
    """
    sample_steps = schedule.sample_steps(config)
    ev_rng, init_rng = realization_rngs(config.seed, realization)
    if config.init == "maximally_mixed" and config.eraser == "forgotten" and "coherent_info" in schedule.probes:
        raise ValueError("coherent_info from a maximally mixed start needs a pure purification")
    code = EraserKind.parse(config.eraser).code
    if scrambled is None:
        state = initial_state(config, init_rng)
        blocks = iter_events(config, ev_rng)
    else:
        state = scrambled.copy()
        blocks = iter_events(config, ev_rng, skip_scramble=True)
    rows = []
    k = 0
    pending = next(blocks, None)
    while k < len(sample_steps):
        target = sample_steps[k]
        # apply every event with step < target
        while pending is not None:
            cut = int(np.searchsorted(pending.step, target, side="left"))
            _apply_block(state, pending.slice(0, cut), code)
            if cut < len(pending):
                pending = pending.slice(cut, len(pending))
                break
            pending = next(blocks, None)
        rows.append(evaluate_probes(state, config, schedule.probes))
        k += 1
    series = {p: np.array([r[p] for r in rows]) for p in schedule.probes}
    return RunResult(config.to_dict(), realization, np.array(schedule.times), series)


def final_state(config: CircuitConfig, realization: int = 0) -> StabilizerTableau:
    """State after the full event stream of one realization."""
    ev_rng, init_rng = realization_rngs(config.seed, realization)
    state = initial_state(config, init_rng)
    code = EraserKind.parse(config.eraser).code
    for blk in iter_events(config, ev_rng):
        _apply_block(state, blk, code)
    return state


def step(state: StabilizerTableau, config: CircuitConfig, rng: np.random.Generator):
    """One circuit step with scalar draws; returns ``(state, events)``.

    A reference path for inspection and tests; ensemble runs use the block
    sampler, which draws the same event distribution in a different order.
    """
    L = config.L
    log = []
    if rng.random() < config.p_u:
        i = int(rng.integers(L))
        d = int(rng.integers(2))
        j = int(_neighbour(np.array([i]), np.array([d]), L, config.boundary)[0])
        state.apply_gate(CNOT(i, j))
        log.append(("CNOT", i, j))
    if rng.random() < config.p_m:
        i = int(rng.integers(L))
        u = rng.random()
        axis = "X" if u < config.p_x else ("Y" if u < config.p_x + config.p_y else "Z")
        from .stabilizer import RandomOutcome

        rec = state.measure(PauliString.single(state.n, i, axis), RandomOutcome(rng))
        log.append(("MEASURE", i, axis, rec.outcome))
    if rng.random() < config.p_R:
        i = int(rng.integers(L))
        state.apply_gate(PHASE(i))
        log.append(("PHASE", i))
    if rng.random() < config.p_e:
        from .channels import apply_eraser

        i = int(rng.integers(L))
        apply_eraser(state, i, config.eraser, rng)
        log.append(("ERASE", i, config.eraser))
    return state, log


def _run_many(args):
    config, schedule, idx = args
    return [run(config, schedule, i) for i in idx]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_ensemble(
    config: CircuitConfig,
    schedule: ProbeSchedule,
    realizations: int,
    workers: int | None = None,
    keep_runs: bool = False,
):
    """Mean and standard error of every probe over child-seeded realizations."""
    if realizations < 1:
        raise ValueError("need at least one realization")
    workers = default_workers() if workers is None else max(1, int(workers))
    idx = list(range(realizations))
    if workers == 1:
        runs = [run(config, schedule, i) for i in idx]
    else:
        chunks = [idx[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_many, [(config, schedule, c) for c in chunks]))
        runs = sorted((r for p in parts for r in p), key=lambda r: r.realization)
    agg = aggregate(runs, config)
    return (agg, runs) if keep_runs else agg


def _sweep_chunk(args):
    configs, schedules, idx = args
    out = [[] for _ in configs]
    for r in idx:
        cache = {}
        for j, (cfg, sched) in enumerate(zip(configs, schedules)):
            scr = None
            if cfg.scramble_steps:
                key = scramble_key(cfg)
                if key not in cache:
                    cache[key] = scrambled_state(cfg, r)
                scr = cache[key]
            out[j].append(run(cfg, sched, r, scrambled=scr))
    return out


def run_sweep(configs: Sequence[CircuitConfig], schedule, realizations: int, workers: int | None = None, keep_runs: bool = False):
    """Ensembles for many configs; scramble phases are shared when identical.

    ``schedule`` is one ProbeSchedule or one per config.  Results match
    :func:`run_ensemble` config by config.
    """
    configs = list(configs)
    schedules = list(schedule) if isinstance(schedule, (list, tuple)) else [schedule] * len(configs)
    if len(schedules) != len(configs):
        raise ValueError("need one schedule per config")
    if realizations < 1:
        raise ValueError("need at least one realization")
    workers = default_workers() if workers is None else max(1, int(workers))
    idx = list(range(realizations))
    if workers == 1:
        parts = [_sweep_chunk((configs, schedules, idx))]
    else:
        chunks = [idx[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_sweep_chunk, [(configs, schedules, c) for c in chunks]))
    results = []
    for j, cfg in enumerate(configs):
        runs = sorted((r for p in parts for r in p[j]), key=lambda r: r.realization)
        agg = aggregate(runs, cfg)
        results.append((agg, runs) if keep_runs else agg)
    return results


def aggregate(runs: Sequence[RunResult], config: CircuitConfig | dict) -> EnsembleResult:
    n = len(runs)
    mean, err = {}, {}
    for name in runs[0].series:
        stack = np.stack([r.series[name] for r in runs]).astype(float)
        mean[name] = stack.mean(axis=0)
        err[name] = stack.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean[name])
    cfg = config.to_dict() if isinstance(config, CircuitConfig) else dict(config)
    return EnsembleResult(cfg, runs[0].times, n, mean, err)


def classical_shadow_run(config: CircuitConfig, realization: int = 0) -> AffineMapF2:
    """The realization's event stream acting on X-basis bit strings."""
    if config.p_m > 0 or config.p_R > 0:
        raise ValueError("classical shadow needs a circuit of CNOTs and erasers only")
    L = config.L
    M = BitMatrix.identity(L).words.copy()
    off = np.zeros(L, dtype=np.uint8)
    ev_rng, _ = realization_rngs(config.seed, realization)
    for blk in iter_events(config, ev_rng):
        K.affine_events(M, off, blk.kind, blk.a, blk.b)
    assert M.shape == (L, n_words(L))
    return AffineMapF2(BitMatrix(L, L, M), off)


def classical_shadow_series(config: CircuitConfig, schedule: ProbeSchedule, realization: int = 0) -> np.ndarray:
    """Classical-oracle I_x: rank of the shadow map restricted to the first
    ``ancillas`` inputs, at every scheduled time."""
    if config.p_m > 0 or config.p_R > 0:
        raise ValueError("classical shadow needs a circuit of CNOTs and erasers only")
    L = config.L
    M = BitMatrix.identity(L).words.copy()
    off = np.zeros(L, dtype=np.uint8)
    ev_rng, _ = realization_rngs(config.seed, realization)
    targets = schedule.sample_steps(config)
    inputs = list(range(config.ancillas))
    out = []
    blocks = iter_events(config, ev_rng)
    pending = next(blocks, None)
    for target in targets:
        while pending is not None:
            cut = int(np.searchsorted(pending.step, target, side="left"))
            head = pending.slice(0, cut)
            K.affine_events(M, off, head.kind, head.a, head.b)
            if cut < len(pending):
                pending = pending.slice(cut, len(pending))
                break
            pending = next(blocks, None)
        out.append(image_entropy(AffineMapF2(BitMatrix(L, L, M.copy()), off.copy()), inputs=inputs))
    return np.array(out, dtype=np.int64)


# serialization ---------------------------------------------------------------

RUN_COLUMNS = ("probe", "t", "value")
ENSEMBLE_COLUMNS = ("probe", "t", "mean", "stderr", "n")


def to_csv(records, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def to_jsonl(records, columns, echo: dict | None = None) -> str:
    lines = []
    if echo is not None:
        lines.append(json.dumps({"config": echo}, sort_keys=True))
    for r in records:
        lines.append(json.dumps(dict(zip(columns, r)), sort_keys=True))
    return "\n".join(lines) + "\n"
