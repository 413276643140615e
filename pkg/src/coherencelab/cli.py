"""Command-line driver: ``coherencelab {sweep,purify,walker,codes,collapse}``.

Exit codes: 0 success, 1 usage or input error, 2 bound violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import markov
from .circuits import (
    ENSEMBLE_COLUMNS,
    PROBES,
    CircuitConfig,
    ProbeSchedule,
    run_sweep,
)
from .codes import (
    BoundViolation,
    CodeError,
    CodeParseError,
    DistanceBudgetExceeded,
    EnumerationBudgetExceeded,
    build_named_code,
    css,
    load_code_file,
    parse_css_text,
    verify_coherence_bound,
)
from .pauli import LocalPauliBasis
from .scaling import collapse_fit, crossing_detect

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

# spec keys that are not CircuitConfig fields
SPEC_KEYS = ("grid", "realizations", "probes", "times", "samples", "t_over_L", "scramble_over_L", "format")
CONFIG_KEYS = tuple(f.name for f in fields(CircuitConfig)) + ("delta_x",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# sweep specs -------------------------------------------------------------------

def load_json(path: str) -> dict:
    """A JSON object, or the config echo line of a previous CSV/JSONL output."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    first = text.split("\n", 1)[0]
    if first.startswith("# {"):
        text = first[2:]
    elif first.startswith('{"config"'):
        text = first
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    if isinstance(data, dict) and set(data) == {"config"}:
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return data


def _point_config(base: dict, point: dict, spec: dict) -> CircuitConfig:
    d = dict(base)
    if "delta_x" in point:
        d.pop("p_x", None)
        d.pop("p_z", None)
    elif "p_x" in point and "p_z" not in point:
        d.pop("p_z", None)
    elif "p_z" in point and "p_x" not in point:
        d.pop("p_x", None)
    if "delta_x" in d and ("p_x" in point or "p_z" in point):
        d.pop("delta_x")
    d.update(point)
    L = d.get("L", CircuitConfig.L)
    if spec.get("t_over_L") is not None:
        d["t"] = spec["t_over_L"] * L
    if spec.get("scramble_over_L") is not None:
        d["scramble_time"] = spec["scramble_over_L"] * L
    return CircuitConfig.from_dict(d)


def normalize_spec(raw: dict, default_probes=("S_half", "C_x", "C_z")) -> dict:
    """Fill defaults and validate; the result is stable under re-normalization."""
    unknown = set(raw) - set(SPEC_KEYS) - set(CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    base = {k: raw[k] for k in CONFIG_KEYS if k in raw}
    grid = raw.get("grid", {}) or {}
    if not isinstance(grid, dict):
        raise UsageError("'grid' must map parameter names to lists")
    for k, v in grid.items():
        if k not in CONFIG_KEYS:
            raise UsageError(f"cannot sweep unknown parameter {k!r}")
        if not isinstance(v, list) or not v:
            raise UsageError(f"grid entry {k!r} must be a non-empty list")
    probes = list(raw.get("probes", default_probes))
    bad = set(probes) - set(PROBES)
    if bad:
        raise UsageError(f"unknown probes {sorted(bad)}")
    realizations = int(raw.get("realizations", 1))
    if realizations < 1:
        raise UsageError("realizations must be positive")
    spec = {
        **base,
        "grid": grid,
        "realizations": realizations,
        "probes": probes,
        "times": raw.get("times"),
        "samples": raw.get("samples"),
        "t_over_L": raw.get("t_over_L"),
        "scramble_over_L": raw.get("scramble_over_L"),
        "format": raw.get("format", "csv"),
    }
    if spec["format"] not in ("csv", "jsonl"):
        raise UsageError("format must be 'csv' or 'jsonl'")
    return spec


def grid_points(spec: dict):
    keys = list(spec["grid"])
    for values in itertools.product(*(spec["grid"][k] for k in keys)):
        yield dict(zip(keys, values))


def build_points(spec: dict):
    base = {k: spec[k] for k in CONFIG_KEYS if k in spec}
    out = []
    for point in grid_points(spec):
        try:
            cfg = _point_config(base, point, spec)
        except (ValueError, TypeError) as e:
            raise UsageError(f"invalid config at grid point {point}: {e}") from None
        if spec["times"] is not None:
            sched = ProbeSchedule(tuple(spec["times"]), tuple(spec["probes"]))
        elif spec["samples"]:
            sched = ProbeSchedule.linspace(cfg, int(spec["samples"]), spec["probes"])
        else:
            sched = ProbeSchedule.final(cfg, spec["probes"])
        try:
            sched.sample_steps(cfg)
        except ValueError as e:
            raise UsageError(f"invalid schedule at grid point {point}: {e}") from None
        out.append((point, cfg, sched))
    return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


def render(rows, columns, fmt: str, echo: dict) -> str:
    if fmt == "jsonl":
        lines = [json.dumps({"config": echo}, sort_keys=True)]
        lines += [json.dumps({c: v for c, v in zip(columns, r)}, sort_keys=True) for r in rows]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(echo, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def execute_sweep(spec: dict, workers=None):
    points = build_points(spec)
    configs = [c for _, c, _ in points]
    schedules = [s for _, _, s in points]
    aggs = run_sweep(configs, schedules, spec["realizations"], workers=workers)
    keys = list(spec["grid"])
    # L is always emitted so tables feed straight into collapse
    extra = [] if "L" in keys else ["L"]
    rows = []
    for (point, cfg, _), agg in zip(points, aggs):
        coords = [cfg.L for _ in extra] + [point[k] for k in keys]
        for rec in agg.records():
            rows.append(tuple(coords) + tuple(rec))
    return extra + keys + list(ENSEMBLE_COLUMNS), rows


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    spec = normalize_spec(load_json(args.config))
    if args.format:
        spec["format"] = args.format
    columns, rows = execute_sweep(spec, args.workers)
    _emit(render(rows, columns, spec["format"], spec), args.out)
    return EXIT_OK


def cmd_purify(args) -> int:
    raw = load_json(args.config)
    raw.setdefault("init", "quantum_register")
    if raw["init"] not in ("classical_register", "quantum_register"):
        raise UsageError("purify needs init 'classical_register' or 'quantum_register'")
    probes = ["coherent_info", "S_sys"] + (["I_x"] if raw["init"] == "classical_register" else [])
    raw.setdefault("probes", probes)
    raw.setdefault("samples", 21)
    spec = normalize_spec(raw)
    if args.format:
        spec["format"] = args.format
    columns, rows = execute_sweep(spec, args.workers)
    _emit(render(rows, columns, spec["format"], spec), args.out)
    return EXIT_OK


# walker ---------------------------------------------------------------------------

def cmd_walker(args) -> int:
    try:
        rates = markov.RatePoint(*args.rates)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from None
    L = args.L
    rng = np.random.default_rng(args.seed)
    if args.xi is not None:
        try:
            nx, nz, res, it = markov.solve_xi_steady(rates, args.xi, L, y_term=args.y_term)
        except markov.ConvergenceError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_VIOLATION
        row = {"p_x": rates.p_x, "p_y": rates.p_y, "p_z": rates.p_z, "xi": args.xi, "Nx_bar": nx, "Nz_bar": nz, "residual": res}
        _emit(json.dumps(row, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    start = args.start if args.start is not None else (L // 3, L // 3)
    try:
        w0 = markov.WalkerState(start[0], start[1], L)
    except ValueError as e:
        raise UsageError(str(e)) from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trajectory", "m", "N_x", "N_z"])
    hist = np.zeros((L + 1, L + 1), dtype=np.int64)
    burn = args.steps // 2
    for k in range(args.trajectories):
        _, traj, _ = markov.simulate_walk(args.kind, w0, rates, args.steps, rng)
        for m in range(0, len(traj), args.stride):
            w.writerow([k, m, int(traj[m, 0]), int(traj[m, 1])])
        np.add.at(hist, (traj[burn:, 0], traj[burn:, 1]), 1)
    _emit(buf.getvalue(), args.out)
    if args.hist:
        hb = io.StringIO()
        hw = csv.writer(hb, lineterminator="\n")
        hw.writerow(["N_x", "N_z", "count"])
        for nx, nz in zip(*np.nonzero(hist)):
            hw.writerow([int(nx), int(nz), int(hist[nx, nz])])
        Path(args.hist).write_text(hb.getvalue())
    return EXIT_OK


# codes ----------------------------------------------------------------------------

def _load_code(args):
    if args.file:
        return load_code_file(args.file)
    if args.css:
        try:
            text = Path(args.css).read_text()
        except OSError as e:
            raise UsageError(f"cannot read {args.css}: {e.strerror}") from None
        hx, hz = parse_css_text(text)
        return css(hx, hz, name=Path(args.css).stem)
    if not args.name:
        raise UsageError("give a code name, --file or --css")
    extra = [int(a) for a in args.params]
    return build_named_code(args.name, *extra)


def cmd_codes(args) -> int:
    code = _load_code(args)
    rng = np.random.default_rng(args.seed)
    bases = [LocalPauliBasis.uniform(code.n, a) for a in args.basis]
    bases += [LocalPauliBasis.random(code.n, rng) for _ in range(args.random_bases)]
    status = EXIT_OK
    try:
        report = verify_coherence_bound(code, bases, budget=args.budget)
    except BoundViolation as e:
        print(f"BOUND VIOLATION: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    if args.json:
        _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
        return status
    lines = [f"code {report['code']}  [[{report['n']},{report['k']}]]  d = {report['d']}"]
    lines.append(f"{'basis':<{max(5, code.n)}}  {'d':>3} {'d_deph':>6} {'C_PD':>5} {'tight':>5} {'slack':>5}")
    for r in report["rows"]:
        lines.append(
            f"{r['basis']:<{max(5, code.n)}}  {str(r['d']):>3} {str(r['dephasing_d']):>6} {r['C_PD']:>5} {r['tight']:>5} {str(r['slack']):>5}"
        )
    lines.append("bound d <= tight <= C_PD holds for every basis")
    _emit("\n".join(lines) + "\n", args.out)
    return status


# collapse -------------------------------------------------------------------------

def read_table(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if path.endswith(".jsonl"):
        rows = [json.loads(ln) for ln in lines]
        return [r for r in rows if "config" not in r]
    return list(csv.DictReader(lines))


def _time_groups(rows, args) -> dict:
    """Split rows by time (or time / L) when every group spans >= 3 sizes."""
    tc, Lc = args.time_column, args.L_column
    if args.joint or tc not in rows[0]:
        return {None: rows}
    for keyf in (lambda r: float(r[tc]), lambda r: round(float(r[tc]) / float(r[Lc]), 9)):
        groups = {}
        for r in rows:
            groups.setdefault(keyf(r), []).append(r)
        if all(len({r[Lc] for r in g}) >= 3 for g in groups.values()):
            return groups
    return {None: rows}


def cmd_collapse(args) -> int:
    rows = read_table(args.data)
    if args.probe:
        rows = [r for r in rows if r.get("probe") == args.probe]
    if not rows:
        raise UsageError("no data rows selected")
    for col in (args.L_column, args.x, args.y):
        if col not in rows[0]:
            raise UsageError(f"column {col!r} not found; have {sorted(rows[0])}")
    groups = _time_groups(rows, args)
    out = {"form": args.form, "degree": args.degree, "fits": []}
    for key in sorted(groups, key=lambda v: (v is None, v)):
        g = groups[key]
        L = np.array([float(r[args.L_column]) for r in g])
        x = np.array([float(r[args.x]) for r in g])
        y = np.array([float(r[args.y]) for r in g])
        try:
            fit = collapse_fit(
                L, x, y, form=args.form, degree=args.degree,
                delta_range=tuple(args.delta_range), nu_range=tuple(args.nu_range),
                beta_range=tuple(args.beta_range), fixed_nu=args.fixed_nu,
            )
        except ValueError as e:
            raise UsageError(str(e)) from None
        curves = {}
        for Lv in sorted(set(L)):
            m = L == Lv
            curves[int(Lv)] = (x[m], y[m])
        cross = crossing_detect(curves, n_boot=0) if len(curves) >= 2 else None
        entry = {"t": key, **fit.to_dict()}
        entry["crossing"] = None if cross is None or not cross.found else cross.delta_c
        out["fits"].append(entry)
    nus = [f["nu"] for f in out["fits"]]
    out["nu_mean"] = float(np.mean(nus))
    out["nu_spread"] = float(np.ptp(nus))
    if args.form == "coherent_info":
        betas = [f["beta"] for f in out["fits"]]
        out["beta_mean"] = float(np.mean(betas))
        out["beta_spread"] = float(np.ptp(betas))
    _emit(json.dumps(out, sort_keys=True, indent=1) + "\n", args.out)
    return EXIT_OK


# parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coherencelab", description="Coherence and entanglement in random hybrid Clifford circuits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("config", help="JSON file: CircuitConfig keys plus grid/realizations/probes/times/samples")
        sp.add_argument("-o", "--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "jsonl"), help="override the output format")
        sp.add_argument("-j", "--workers", type=int, help="worker processes (default $COHERENCELAB_WORKERS or 1)")

    sp = sub.add_parser("sweep", help="ensemble averages over a parameter grid")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("purify", help="coherent information of an ancilla register over time")
    common(sp)
    sp.set_defaults(func=cmd_purify)

    sp = sub.add_parser("walker", help="random walk of the known-bit counts (N_x, N_z)")
    sp.add_argument("--kind", choices=tuple(markov.KINDS), default="weak_limit")
    sp.add_argument("--rates", type=float, nargs=3, metavar=("P_X", "P_Y", "P_Z"), required=True)
    sp.add_argument("--L", type=int, default=100)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--trajectories", type=int, default=1)
    sp.add_argument("--start", type=int, nargs=2, metavar=("N_X", "N_Z"))
    sp.add_argument("--stride", type=int, default=1, help="write every stride-th step")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--hist", help="write the late-time (N_x, N_z) histogram here")
    sp.add_argument("--xi", type=float, help="solve the xi rate equation instead of walking")
    sp.add_argument("--y-term", choices=("main", "appendix"), default="main")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_walker)

    sp = sub.add_parser("codes", help="distance and coherence bounds of a stabilizer code")
    sp.add_argument("name", nargs="?", help="repetition, steane, shor, five_qubit")
    sp.add_argument("params", nargs="*", help="code parameters, e.g. the repetition length")
    sp.add_argument("--file", help="code file: 'n k', check lines, logical pairs")
    sp.add_argument("--css", help="CSS file with Hx and Hz blocks")
    sp.add_argument("--basis", nargs="+", default=["X", "Y", "Z"], type=str.upper, choices=("X", "Y", "Z"))
    sp.add_argument("--random-bases", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=20_000_000, help="distance search candidate budget")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_codes)

    sp = sub.add_parser("collapse", help="finite-size scaling collapse of sweep output")
    sp.add_argument("data", help="CSV or JSONL table (sweep output works directly)")
    sp.add_argument("--form", choices=("I3", "coherent_info"), default="I3")
    sp.add_argument("--probe", help="keep rows whose 'probe' column equals this")
    sp.add_argument("--x", default="delta_x", help="tuning-parameter column")
    sp.add_argument("--y", default="mean", help="value column")
    sp.add_argument("--L-column", default="L")
    sp.add_argument("--time-column", default="t", help="fits are made per value of t, or of t/L")
    sp.add_argument("--joint", action="store_true", help="one fit across all times")
    sp.add_argument("--degree", type=int, default=4)
    sp.add_argument("--delta-range", type=float, nargs=2, default=(0.2, 0.5))
    sp.add_argument("--nu-range", type=float, nargs=2, default=(0.5, 2.5))
    sp.add_argument("--beta-range", type=float, nargs=2, default=(0.0, 1.5))
    sp.add_argument("--fixed-nu", type=float)
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_collapse)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CodeParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DistanceBudgetExceeded, EnumerationBudgetExceeded) as e:
        print(f"error: budget exceeded: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK
    except CodeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
