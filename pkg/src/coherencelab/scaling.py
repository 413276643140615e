"""Crossing detection and finite-size scaling collapse."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

FORMS = ("I3", "coherent_info")


@dataclass(frozen=True)
class Curve:
    x: np.ndarray
    y: np.ndarray
    err: np.ndarray | None = None

    @classmethod
    def make(cls, x, y, err=None) -> "Curve":
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        order = np.argsort(x)
        e = None if err is None else np.asarray(err, float)[order]
        return cls(x[order], y[order], e)


@dataclass(frozen=True)
class CrossingResult:
    found: bool
    delta_c: float | None
    error: float | None
    pairs: tuple = ()  # ((L1, L2, crossing or None), ...)

    def __str__(self) -> str:
        if not self.found:
            return "no crossing found"
        return f"{self.delta_c:.4f} +/- {self.error:.4f}"


def _as_curves(curves) -> dict:
    out = {}
    for L, c in curves.items():
        if isinstance(c, Curve):
            out[int(L)] = c
        else:
            out[int(L)] = Curve.make(*c)
    return out


def _pair_crossing(a: Curve, ya: np.ndarray, b: Curve, yb: np.ndarray):
    lo, hi = max(a.x[0], b.x[0]), min(a.x[-1], b.x[-1])
    grid = np.union1d(a.x, b.x)
    grid = grid[(grid >= lo) & (grid <= hi)]
    if len(grid) < 2:
        return None
    diff = np.interp(grid, b.x, yb) - np.interp(grid, a.x, ya)
    best, best_jump = None, -1.0
    for i in range(len(grid) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0 and d1 == 0:
            continue
        if d0 == 0:
            cand = grid[i]
        elif d0 * d1 < 0:
            cand = grid[i] + (grid[i + 1] - grid[i]) * d0 / (d0 - d1)
        else:
            continue
        jump = abs(d1 - d0)
        if jump > best_jump:
            best, best_jump = float(cand), jump
    return best


def _estimate(curves: dict, ys: dict):
    Ls = sorted(curves)
    pairs = []
    for L1, L2 in zip(Ls, Ls[1:]):
        pairs.append((L1, L2, _pair_crossing(curves[L1], ys[L1], curves[L2], ys[L2])))
    found = [c for _, _, c in pairs if c is not None]
    return pairs, found


def crossing_detect(curves: Mapping, n_boot: int = 200, seed: int = 0) -> CrossingResult:
    """Crossing point of curves for different L.

    ``curves`` maps L to a Curve or an ``(x, y[, err])`` tuple.  Adjacent
    sizes are intersected by linear interpolation; when several sign
    changes occur the steepest one is kept.  The error is the bootstrap
    spread obtained by resampling each point within its error bar, or half
    the spread of the pairwise crossings when no errors are given.
    """
    cs = _as_curves(curves)
    if len(cs) < 2:
        raise ValueError("need at least two system sizes")
    pairs, found = _estimate(cs, {L: c.y for L, c in cs.items()})
    if not found:
        return CrossingResult(False, None, None, tuple(pairs))
    est = float(np.mean(found))
    if all(c.err is not None for c in cs.values()) and n_boot > 0:
        rng = np.random.default_rng(seed)
        boots = []
        for _ in range(n_boot):
            ys = {L: c.y + c.err * rng.standard_normal(len(c.y)) for L, c in cs.items()}
            _, f = _estimate(cs, ys)
            if f:
                boots.append(np.mean(f))
        err = float(np.std(boots)) if len(boots) > 1 else 0.0
    else:
        err = 0.5 * (max(found) - min(found))
    return CrossingResult(True, est, err, tuple(pairs))


# scaling collapse ------------------------------------------------------------------

@dataclass(frozen=True)
class CollapseFit:
    delta_c: float
    nu: float
    beta: float | None
    residual: float
    degree: int
    form: str
    history: tuple = field(default=(), repr=False)  # best residual per refinement level

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "delta_c": self.delta_c,
            "nu": self.nu,
            "beta": self.beta,
            "residual": self.residual,
            "degree": self.degree,
            "history": list(self.history),
        }


def collapse_coordinates(L, delta, value, delta_c, nu, beta=None):
    """x = (delta - delta_c) L^(1/nu); y = value L^(-beta/nu) when beta is given."""
    L = np.asarray(L, float)
    x = (np.asarray(delta, float) - delta_c) * L ** (1.0 / nu)
    y = np.asarray(value, float)
    if beta is not None:
        y = y * L ** (-beta / nu)
    return x, y


def collapse_residual(L, delta, value, delta_c, nu, beta=None, degree: int = 4) -> float:
    """SS_res / SS_tot of a single polynomial through the collapsed points."""
    with np.errstate(over="ignore", invalid="ignore"):
        x, y = collapse_coordinates(L, delta, value, delta_c, nu, beta)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return np.inf
    span = np.ptp(x)
    if span == 0:
        return np.inf
    xs = (x - x.mean()) / span
    tot = float(np.sum((y - y.mean()) ** 2))
    if tot == 0:
        return np.inf
    coef = np.polynomial.polynomial.polyfit(xs, y, degree)
    res = y - np.polynomial.polynomial.polyval(xs, coef)
    return float(np.sum(res**2) / tot)


def collapse_fit(
    L,
    delta,
    value,
    form: str = "I3",
    degree: int = 4,
    delta_range: tuple = (0.2, 0.5),
    nu_range: tuple = (0.5, 2.5),
    beta_range: tuple = (0.0, 1.5),
    grid: int = 11,
    levels: int = 6,
    shrink: float = 0.4,
    fixed_nu: float | None = None,
) -> CollapseFit:
    """Grid search plus zoomed refinements over (delta_c, nu[, beta]).

    Each refined grid contains the previous optimum, so the best residual
    never increases from one level to the next.  ``fixed_nu`` pins nu, which
    helps when the data only constrain (1 + beta) / nu.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    L = np.asarray(L, float)
    delta = np.asarray(delta, float)
    value = np.asarray(value, float)
    if not (L.shape == delta.shape == value.shape):
        raise ValueError("L, delta and value must have the same shape")
    if len(np.unique(L)) < 3:
        raise ValueError("need at least three system sizes")
    if np.ptp(value) == 0:
        raise ValueError("degenerate data: value is constant")
    with_beta = form == "coherent_info"
    if fixed_nu is not None:
        nu_range = (fixed_nu, fixed_nu)
    ranges = [tuple(delta_range), tuple(nu_range)] + ([tuple(beta_range)] if with_beta else [])
    ranges = [(float(a), float(b)) for a, b in ranges]
    if ranges[1][0] < 0.05:
        raise ValueError("nu range must stay above 0.05")
    bounds = list(ranges)
    best = None
    best_r = np.inf
    history = []
    for level in range(levels):
        axes = [np.unique(np.linspace(a, b, grid)) for a, b in ranges]
        if best is not None:
            axes = [np.union1d(ax, [v]) for ax, v in zip(axes, best)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        for p in pts:
            r = collapse_residual(L, delta, value, p[0], p[1], p[2] if with_beta else None, degree)
            if r < best_r:
                best_r, best = r, tuple(float(v) for v in p)
        history.append(best_r)
        widths = [(b - a) * shrink for a, b in ranges]
        ranges = [
            (max(v - w / 2, a0), min(v + w / 2, b0)) for v, w, (a0, b0) in zip(best, widths, bounds)
        ]
        if fixed_nu is not None:
            ranges[1] = (fixed_nu, fixed_nu)
    if best is None:
        raise ValueError("no valid collapse parameters in range")
    return CollapseFit(
        best[0], best[1], best[2] if with_beta else None, float(best_r), degree, form, tuple(history)
    )


def stack_curves(curves: Mapping):
    """(L, delta, value) arrays from a mapping L -> (delta, value[, err])."""
    Ls, ds, vs = [], [], []
    for L, c in _as_curves(curves).items():
        Ls.append(np.full(len(c.x), L))
        ds.append(c.x)
        vs.append(c.y)
    return np.concatenate(Ls), np.concatenate(ds), np.concatenate(vs)
