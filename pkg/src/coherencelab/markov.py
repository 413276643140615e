"""Markov models for the number of known X / Z basis bits (N_x, N_z).

Two chains are provided: the measurement-only chain, where N_x, N_z, N_y
count polarized qubits of a product state, and the weak-measurement walk
on the triangle 0 <= N_x, N_z, N_x + N_z <= L.  Rate equations and the
phenomenological xi steady state complement them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class WalkerState:
    n_x: int
    n_z: int
    L: int

    def __post_init__(self):
        if self.n_x < 0 or self.n_z < 0 or self.n_x + self.n_z > self.L:
            raise ValueError(f"({self.n_x}, {self.n_z}) outside the triangle for L={self.L}")

    @property
    def n_y(self) -> int:
        return self.L - self.n_x - self.n_z

    @property
    def c_x(self) -> int:
        return self.L - self.n_x

    @property
    def c_z(self) -> int:
        return self.L - self.n_z


@dataclass(frozen=True)
class RatePoint:
    p_x: float
    p_y: float
    p_z: float
    xi: float | None = None
    L: int | None = None

    def __post_init__(self):
        p = (self.p_x, self.p_y, self.p_z)
        if min(p) < 0 or abs(sum(p) - 1) > 1e-9:
            raise ValueError(f"rates {p} are not a probability vector")

    @classmethod
    def from_delta(cls, delta_x: float, p_y: float, **kw) -> "RatePoint":
        rest = 1 - p_y
        return cls(rest * (1 + delta_x) / 2, p_y, rest * (1 - delta_x) / 2, **kw)

    def as_tuple(self):
        return self.p_x, self.p_y, self.p_z


def _rates(rates):
    if isinstance(rates, RatePoint):
        return rates.as_tuple()
    return RatePoint(*rates).as_tuple()


# single steps ---------------------------------------------------------------

@njit(cache=True)
def _mo_move(nx, nz, L, px, py, u_axis, u_site):
    ny = L - nx - nz
    if u_axis < px:
        if u_site * L < ny:
            return nx + 1, nz
        if u_site * L < ny + nz:
            return nx + 1, nz - 1
    elif u_axis < px + py:
        if u_site * L < nx:
            return nx - 1, nz
        if u_site * L < nx + nz:
            return nx, nz - 1
    else:
        if u_site * L < ny:
            return nx, nz + 1
        if u_site * L < ny + nx:
            return nx - 1, nz + 1
    return nx, nz


@njit(cache=True)
def _weak_move(nx, nz, L, px, py, u_axis):
    if u_axis < px:
        dx, dz = 1, -1
    elif u_axis < px + py:
        dx, dz = -1, -1
    else:
        dx, dz = -1, 1
    # edge rules: a lost bit that is not there to lose leaves that axis alone
    if nz == 0 and dz < 0:
        dz = 0
    if nx == 0 and dx < 0:
        dx = 0
    x = nx + dx
    z = nz + dz
    if x < 0 or z < 0 or x + z > L:
        return nx, nz
    return x, z


@njit(cache=True)
def _walk(kind, nx, nz, L, px, py, u_axis, u_site, record):
    m = u_axis.shape[0]
    if record:
        traj = np.empty((m + 1, 2), dtype=np.int64)
        traj[0, 0] = nx
        traj[0, 1] = nz
    else:
        traj = np.empty((1, 2), dtype=np.int64)
    sx = 0.0
    sz = 0.0
    for k in range(m):
        if kind == 0:
            nx, nz = _mo_move(nx, nz, L, px, py, u_axis[k], u_site[k])
        else:
            nx, nz = _weak_move(nx, nz, L, px, py, u_axis[k])
        if nx < 0 or nz < 0 or nx + nz > L:
            raise ValueError("walker left the triangle")
        sx += nx
        sz += nz
        if record:
            traj[k + 1, 0] = nx
            traj[k + 1, 1] = nz
    return nx, nz, sx, sz, traj


@njit(cache=True)
def _edge_histogram(nx, nz, L, px, py, u_axis, burn):
    hist = np.zeros(L + 1, dtype=np.int64)
    for k in range(u_axis.shape[0]):
        nx, nz = _weak_move(nx, nz, L, px, py, u_axis[k])
        if k >= burn and nz == 0:
            hist[nx] += 1
    return hist


KINDS = {"measurement_only": 0, "weak_limit": 1}


def step_measurement_only(w: WalkerState, rates, rng: np.random.Generator) -> WalkerState:
    px, py, _ = _rates(rates)
    nx, nz = _mo_move(w.n_x, w.n_z, w.L, px, py, rng.random(), rng.random())
    return WalkerState(int(nx), int(nz), w.L)


def step_weak_limit(w: WalkerState, rates, rng: np.random.Generator) -> WalkerState:
    px, py, _ = _rates(rates)
    nx, nz = _weak_move(w.n_x, w.n_z, w.L, px, py, rng.random())
    return WalkerState(int(nx), int(nz), w.L)


def simulate_walk(kind: str, w0: WalkerState, rates, steps: int, rng, record: bool = True):
    """Run a chain for ``steps`` measurements.

    Returns ``(final_state, trajectory or None, time_average (N_x, N_z))``.
    """
    px, py, _ = _rates(rates)
    u_axis = rng.random(steps)
    u_site = rng.random(steps) if kind == "measurement_only" else np.zeros(0)
    if kind == "weak_limit":
        u_site = np.zeros(steps)
    nx, nz, sx, sz, traj = _walk(KINDS[kind], w0.n_x, w0.n_z, w0.L, px, py, u_axis, u_site, record)
    avg = (sx / max(steps, 1), sz / max(steps, 1))
    return WalkerState(int(nx), int(nz), w0.L), (traj if record else None), avg


def stationary_means(kind: str, rates, L: int, steps: int, rng, burn: int | None = None, w0=None):
    """Time-averaged (N_x, N_z, N_y) after a burn-in."""
    burn = min(steps // 10, 10 * L) if burn is None else burn
    w0 = WalkerState(L // 3, L // 3, L) if w0 is None else w0
    w, _, _ = simulate_walk(kind, w0, rates, burn, rng, record=False)
    _, _, (ax, az) = simulate_walk(kind, w, rates, steps - burn, rng, record=False)
    return ax, az, L - ax - az


def edge_histogram(rates, L: int, steps: int, rng, burn: int = 1000) -> np.ndarray:
    """Visit counts of N_x on the N_z = 0 edge for the weak-limit walk."""
    px, py, _ = _rates(rates)
    return _edge_histogram(L, 0, L, px, py, rng.random(steps), burn)


def localization_length(hist: np.ndarray, min_count: int = 50) -> float:
    """Decay length of the edge profile, fit from the log-counts near its peak.

    The profile is read as a function of the distance from its most visited
    site; only bins with at least ``min_count`` visits enter the fit.
    """
    hist = np.asarray(hist, dtype=float)
    peak = int(np.argmax(hist))
    side = hist[: peak + 1][::-1] if peak > len(hist) // 2 else hist[peak:]
    k = np.flatnonzero(side >= min_count)
    k = k[k == np.arange(len(k))]  # contiguous run from the peak
    if len(k) < 2:
        raise ValueError("edge profile too narrow to fit a decay length")
    slope = np.polyfit(k, np.log(side[k]), 1)[0]
    if slope >= 0:
        return math.inf
    return -1.0 / slope


def bulk_drift(rates, L: int, steps: int, walkers: int, rng):
    """Mean displacement per measurement and its standard error.

    Walkers start at the centre of a large triangle and run few enough steps
    that they never reach an edge.
    """
    px, py, _ = _rates(rates)
    if 2 * steps >= L // 3:
        raise ValueError("L too small for a bulk-only drift estimate")
    disp = np.empty((walkers, 2))
    x0 = z0 = L // 3
    for i in range(walkers):
        nx, nz, _, _, _ = _walk(1, x0, z0, L, px, py, rng.random(steps), np.zeros(steps), False)
        disp[i] = (nx - x0) / steps, (nz - z0) / steps
    return disp.mean(axis=0), disp.std(axis=0, ddof=1) / np.sqrt(walkers)


# rate equations --------------------------------------------------------------

def _project(nx: float, nz: float, L: float):
    nx = min(max(nx, 0.0), L)
    nz = min(max(nz, 0.0), L)
    excess = nx + nz - L
    if excess > 0:
        nx -= excess / 2
        nz -= excess / 2
        if nx < 0:
            nz, nx = L, 0.0
        elif nz < 0:
            nx, nz = L, 0.0
    return nx, nz


def integrate_rate_eq(kind: str, rates, n0, steps: int, L: int) -> np.ndarray:
    """Explicit Euler with one step per measurement; rows are (m, N_x, N_z)."""
    px, py, pz = _rates(rates)
    nx, nz = float(n0[0]), float(n0[1])
    out = np.empty((steps + 1, 3))
    out[0] = 0, nx, nz
    for m in range(1, steps + 1):
        if kind == "measurement_only":
            dx = px * (L - nx) / L - (pz + py) * nx / L
            dz = pz * (L - nz) / L - (px + py) * nz / L
            nx, nz = nx + dx, nz + dz
        elif kind == "weak_limit":
            nx, nz = _project(nx + px - pz - py, nz + pz - px - py, L)
        else:
            raise ValueError(f"unknown rate equation {kind!r}")
        out[m] = m, nx, nz
    return out


def xi_rhs(nx: float, nz: float, rates, xi: float, L: float, y_term: str = "main"):
    """Right-hand sides (dN_x/dm, dN_z/dm) of the phenomenological xi equation."""
    px, py, pz = _rates(rates)
    bx, bz = nx / L, nz / L
    if y_term == "main":
        by_x = (L - nx + nz) / L
        by_z = (L - nz + nx) / L
    elif y_term == "appendix":
        by_x = by_z = (L - nx - nz) / L
    else:
        raise ValueError("y_term must be 'main' or 'appendix'")
    # clip rounding excursions so fractional powers stay real
    bx, bz, by_x, by_z = (min(max(b, 0.0), 1.0) for b in (bx, bz, by_x, by_z))
    fx = px * (1 - bx ** xi) - pz * (1 - bz ** xi) - py * (1 - by_x ** xi)
    fz = pz * (1 - bz ** xi) - px * (1 - bx ** xi) - py * (1 - by_z ** xi)
    return fx, fz


def _newton_xi(nx, nz, fx, fz, rates, xi, L, y_term):
    """Projected Newton step on the coordinates not pinned to an edge, or None."""
    h = 1e-7 * L
    pinned = [(nx <= 0 and fx < 0) or (nx >= L and fx > 0), (nz <= 0 and fz < 0) or (nz >= L and fz > 0)]
    free = [i for i in range(2) if not pinned[i]]
    if not free:
        return None
    x = np.array([nx, nz])
    f = np.array([fx, fz])
    J = np.empty((2, 2))
    for j in range(2):
        d = x.copy()
        d[j] += h
        J[:, j] = (np.array(xi_rhs(d[0], d[1], rates, xi, L, y_term)) - f) / h
    Jf = J[np.ix_(free, free)]
    if abs(np.linalg.det(Jf)) < 1e-300:
        return None
    x[free] -= np.linalg.solve(Jf, f[free])
    if not np.all(np.isfinite(x)):
        return None
    return _project(float(x[0]), float(x[1]), L)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


def solve_xi_steady(
    rates,
    xi: float,
    L: int,
    *,
    init=None,
    y_term: str = "main",
    damping: float = 0.5,
    max_iter: int = 10_000,
    tol: float = 1e-10,
):
    """Damped fixed-point iteration for the steady state of the xi equation.

    The update is N <- P(N + damping * (L / xi) * F(N)) with P the projection
    onto the triangle; the residual is the size of the projected step.
    Returns ``(N_x, N_z, residual, iterations)``.
    """
    if xi < 1:
        raise ValueError("xi must be at least 1")
    nx, nz = (L / 2, L / 2) if init is None else (float(init[0]), float(init[1]))
    nx, nz = _project(nx, nz, L)
    scale = damping * L / xi

    def residual(x, z):
        fx, fz = xi_rhs(x, z, rates, xi, L, y_term)
        ax, az = _project(x + fx, z + fz, L)
        return max(abs(ax - x), abs(az - z)) / L, fx, fz

    res = math.inf
    for it in range(1, max_iter + 1):
        res, fx, fz = residual(nx, nz)
        if res < tol:
            return nx, nz, res, it
        # the contraction of the fixed point vanishes like b^(xi-1); polish with Newton when it helps
        trial = _newton_xi(nx, nz, fx, fz, rates, xi, L, y_term)
        if trial is not None and residual(*trial)[0] < res:
            nx, nz = trial
        else:
            nx, nz = _project(nx + scale * fx, nz + scale * fz, L)
    raise ConvergenceError(f"xi steady state not reached in {max_iter} iterations", res)


def phase_gate_rate_balance(p_R: float, p_x: float, xi: float, L: int, K: int) -> dict:
    """Compare p_R with the critical rate p_x [1 - (1 - K/L)^xi].

    The steady state of dC_x/dm = p_R - p_x (1 - (N_x/L)^xi) reaches C_x >= K
    exactly when p_R is at or above the critical rate.
    """
    if not 0 <= K <= L:
        raise ValueError("K must lie in [0, L]")
    crit = p_x * (1 - (1 - K / L) ** xi)
    if p_x > 0:
        frac = max(0.0, 1 - p_R / p_x)
        cx = L - L * frac ** (1 / xi)
    else:
        cx = float(L)
    return {"critical_p_R": crit, "above": p_R >= crit and p_R > 0 or K == 0, "steady_C_x": cx}
