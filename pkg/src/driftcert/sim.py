"""Tamed Euler-Maruyama integration with explosion detection.

Superlinear drift makes plain Euler blow up for numerical reasons alone;
the tamed increment dt*b/(1 + dt*|b|) caps per-step drift motion at 1
while remaining consistent as dt -> 0, so a threshold crossing reflects
the dynamics rather than the scheme.  Explosion is recorded at the first
time |Z| reaches the threshold.

All stochastic operations are pure functions of (inputs, seed): noise is
drawn per (seed, path, step) from the counter-based stream in
:mod:`driftcert.rng`, and ensemble reductions are ordered by path index,
so results are independent of scheduling and worker count
(``DRIFTCERT_THREADS`` caps workers without affecting output).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .params import ModelParams, State
from .rng import normals_at

__all__ = [
    "Trajectory",
    "EnsembleStats",
    "Histogram2D",
    "ExplodedError",
    "sde_step",
    "integrate",
    "ensemble",
    "ensemble_states_at",
    "invariant_histogram",
    "tv_distance",
    "phase_diagram",
    "wilson_ci95",
    "worker_count",
    "parallel_map",
]

ALIVE, EXPLODED, STEP_FAILURE = 0, 1, 2
_STATUS_NAMES = {ALIVE: "alive", EXPLODED: "exploded", STEP_FAILURE: "step_failure"}


class ExplodedError(RuntimeError):
    """Raised when a computation that needs a full-horizon path hits the threshold."""

    def __init__(self, t_exp: float):
        super().__init__(f"trajectory exploded at t = {t_exp:.6g}")
        self.t_exp = t_exp


def worker_count() -> int:
    env = os.environ.get("DRIFTCERT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Map preserving order; thread count never changes the results."""
    items = list(items)
    w = min(worker_count(), len(items)) if items else 1
    if w <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# dataclasses

@dataclass(frozen=True)
class Trajectory:
    """Recorded path with explosion status.

    status is 'alive' (ran to the horizon), 'exploded' (first crossing of
    the threshold at status_time) or 'step_failure' (non-finite state at
    status_time).  states holds only finite entries; for an exploded path
    the last recorded state is the crossing state.
    """

    times: np.ndarray
    states: np.ndarray
    status: str
    status_time: float
    threshold: float

    @property
    def exploded(self) -> bool:
        return self.status == "exploded"

    @property
    def final_state(self) -> State:
        return State(float(self.states[-1, 0]), float(self.states[-1, 1]))


@dataclass(frozen=True)
class EnsembleStats:
    n: int
    n_exploded: int
    explosion_fraction: float
    wilson_ci95: tuple
    mean_t_exp: Optional[float]


@dataclass(frozen=True)
class Histogram2D:
    """Occupation-time mass on a uniform grid; off-box mass kept separately."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    mass: np.ndarray
    outside_mass: float

    def total_mass(self) -> float:
        return float(self.mass.sum() + self.outside_mass)


def wilson_ci95(k: int, n: int):
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = 1.959963984540054
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True, nogil=True)
def _run_path(x, y, dt, nsteps, a1, a2, al1, al2, k1, k2, seed, path, threshold):
    """Step one path; returns (status, status_time, x, y, steps_done)."""
    s1 = np.sqrt(2.0 * k1 * dt)
    s2 = np.sqrt(2.0 * k2 * dt)
    thr2 = threshold * threshold
    for i in range(nsteps):
        z1, z2 = normals_at(seed, path, i)
        bx = a1 * x - al1 * x * x + y * y
        by = a2 * y - al2 * x * y
        den = 1.0 + dt * np.sqrt(bx * bx + by * by)
        x = x + dt * bx / den + s1 * z1
        y = y + dt * by / den + s2 * z2
        if not (np.isfinite(x) and np.isfinite(y)):
            return STEP_FAILURE, (i + 1) * dt, x, y, i + 1
        if x * x + y * y >= thr2:
            return EXPLODED, (i + 1) * dt, x, y, i + 1
    return ALIVE, nsteps * dt, x, y, nsteps


@njit(cache=True, nogil=True)
def _run_path_recorded(x, y, dt, nsteps, a1, a2, al1, al2, k1, k2, seed, path,
                       threshold, stride, times_out, xs_out, ys_out):
    """Like _run_path but records every stride-th state (plus start/end)."""
    s1 = np.sqrt(2.0 * k1 * dt)
    s2 = np.sqrt(2.0 * k2 * dt)
    thr2 = threshold * threshold
    k = 0
    times_out[k] = 0.0
    xs_out[k] = x
    ys_out[k] = y
    k += 1
    status = ALIVE
    status_time = nsteps * dt
    for i in range(nsteps):
        z1, z2 = normals_at(seed, path, i)
        bx = a1 * x - al1 * x * x + y * y
        by = a2 * y - al2 * x * y
        den = 1.0 + dt * np.sqrt(bx * bx + by * by)
        xn = x + dt * bx / den + s1 * z1
        yn = y + dt * by / den + s2 * z2
        t = (i + 1) * dt
        if not (np.isfinite(xn) and np.isfinite(yn)):
            status = STEP_FAILURE
            status_time = t
            break
        x = xn
        y = yn
        if x * x + y * y >= thr2:
            status = EXPLODED
            status_time = t
            times_out[k] = t
            xs_out[k] = x
            ys_out[k] = y
            k += 1
            break
        if (i + 1) % stride == 0 and i + 1 < nsteps:
            times_out[k] = t
            xs_out[k] = x
            ys_out[k] = y
            k += 1
    if status == ALIVE:
        times_out[k] = nsteps * dt
        xs_out[k] = x
        ys_out[k] = y
        k += 1
    return status, status_time, k


@njit(cache=True, nogil=True)
def _run_path_occupation(x, y, dt, nburn, nsteps, a1, a2, al1, al2, k1, k2,
                         seed, path, threshold,
                         x_lo, inv_dx, nx, y_lo, inv_dy, ny, counts):
    """Accumulate post-burn-in occupation counts; returns status info."""
    s1 = np.sqrt(2.0 * k1 * dt)
    s2 = np.sqrt(2.0 * k2 * dt)
    thr2 = threshold * threshold
    outside = 0
    recorded = 0
    for i in range(nsteps):
        z1, z2 = normals_at(seed, path, i)
        bx = a1 * x - al1 * x * x + y * y
        by = a2 * y - al2 * x * y
        den = 1.0 + dt * np.sqrt(bx * bx + by * by)
        x = x + dt * bx / den + s1 * z1
        y = y + dt * by / den + s2 * z2
        if not (np.isfinite(x) and np.isfinite(y)):
            return STEP_FAILURE, (i + 1) * dt, recorded, outside
        if x * x + y * y >= thr2:
            return EXPLODED, (i + 1) * dt, recorded, outside
        if i + 1 > nburn:
            ix = int((x - x_lo) * inv_dx)
            iy = int((y - y_lo) * inv_dy)
            if x >= x_lo and y >= y_lo and ix < nx and iy < ny:
                counts[ix, iy] += 1
            else:
                outside += 1
            recorded += 1
    return ALIVE, nsteps * dt, recorded, outside


@njit(cache=True, nogil=True)
def _run_path_checkpoints(x, y, dt, steps_at, a1, a2, al1, al2, k1, k2,
                          seed, path, threshold, out_xy):
    """Record the state at given step counts; NaN entries after an explosion."""
    s1 = np.sqrt(2.0 * k1 * dt)
    s2 = np.sqrt(2.0 * k2 * dt)
    thr2 = threshold * threshold
    nsteps = steps_at[-1]
    j = 0
    for i in range(nsteps):
        z1, z2 = normals_at(seed, path, i)
        bx = a1 * x - al1 * x * x + y * y
        by = a2 * y - al2 * x * y
        den = 1.0 + dt * np.sqrt(bx * bx + by * by)
        x = x + dt * bx / den + s1 * z1
        y = y + dt * by / den + s2 * z2
        bad = (not (np.isfinite(x) and np.isfinite(y))) or x * x + y * y >= thr2
        if bad:
            for jj in range(j, steps_at.shape[0]):
                out_xy[jj, 0] = np.nan
                out_xy[jj, 1] = np.nan
            return EXPLODED, (i + 1) * dt
        while j < steps_at.shape[0] and i + 1 == steps_at[j]:
            out_xy[j, 0] = x
            out_xy[j, 1] = y
            j += 1
    return ALIVE, nsteps * dt


# ---------------------------------------------------------------------------
# public operations

def sde_step(p: ModelParams, z: State, dt: float, xi1: float, xi2: float) -> State:
    """One tamed Euler-Maruyama step driven by explicit standard normals."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    bx = p.a1 * z.x - p.alpha1 * z.x * z.x + z.y * z.y
    by = p.a2 * z.y - p.alpha2 * z.x * z.y
    den = 1.0 + dt * math.sqrt(bx * bx + by * by)
    x = z.x + dt * bx / den + math.sqrt(2.0 * p.kappa1 * dt) * xi1
    y = z.y + dt * by / den + math.sqrt(2.0 * p.kappa2 * dt) * xi2
    return State(x, y)


def _check_sim_args(dt, threshold):
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if threshold < 1e3:
        raise ValueError("threshold must be at least 1e3")


def integrate(p: ModelParams, z0: State, dt: float, horizon: float,
              threshold: float = 1e6, seed: int = 0, record_stride: int = 1,
              path_index: int = 0) -> Trajectory:
    """Integrate one path, recording every record_stride-th step."""
    _check_sim_args(dt, threshold)
    nsteps = int(round(horizon / dt))
    stride = max(1, int(record_stride))
    cap = nsteps // stride + 3
    times = np.empty(cap)
    xs = np.empty(cap)
    ys = np.empty(cap)
    status, status_time, k = _run_path_recorded(
        z0.x, z0.y, dt, nsteps, p.a1, p.a2, p.alpha1, p.alpha2,
        p.kappa1, p.kappa2, np.uint64(seed), np.uint64(path_index),
        threshold, stride, times, xs, ys)
    return Trajectory(times[:k].copy(), np.column_stack([xs[:k], ys[:k]]),
                      _STATUS_NAMES[status], float(status_time), threshold)


def _ensemble_raw(p: ModelParams, z0: State, n: int, dt: float, horizon: float,
                  threshold: float, master_seed: int, path_offset: int = 0):
    nsteps = int(round(horizon / dt))

    def one(i):
        return _run_path(z0.x, z0.y, dt, nsteps, p.a1, p.a2, p.alpha1, p.alpha2,
                         p.kappa1, p.kappa2, np.uint64(master_seed),
                         np.uint64(path_offset + i), threshold)

    return parallel_map(one, range(n))


def ensemble(p: ModelParams, z0: State, n: int, dt: float, horizon: float,
             threshold: float = 1e6, master_seed: int = 0,
             path_offset: int = 0) -> EnsembleStats:
    """n independent paths with per-path noise keyed by (seed, path index)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_sim_args(dt, threshold)
    results = _ensemble_raw(p, z0, n, dt, horizon, threshold, master_seed, path_offset)
    t_exps = [st for (code, st, _, _, _) in results if code == EXPLODED]
    n_exp = len(t_exps)
    mean_t = float(np.mean(t_exps)) if t_exps else None
    return EnsembleStats(n, n_exp, n_exp / n, wilson_ci95(n_exp, n), mean_t)


def ensemble_states_at(p: ModelParams, z0: State, n: int, dt: float, times,
                       threshold: float = 1e6, master_seed: int = 0):
    """States of n paths sampled at the given times; exploded paths are NaN.

    Returns (array of shape (len(times), n, 2), n_exploded).
    """
    _check_sim_args(dt, threshold)
    steps_at = np.array(sorted(int(round(t / dt)) for t in times), dtype=np.int64)
    if np.any(steps_at <= 0):
        raise ValueError("checkpoint times must be positive")

    def one(i):
        out = np.empty((len(steps_at), 2))
        code, _ = _run_path_checkpoints(
            z0.x, z0.y, dt, steps_at, p.a1, p.a2, p.alpha1, p.alpha2,
            p.kappa1, p.kappa2, np.uint64(master_seed), np.uint64(i),
            threshold, out)
        return code, out

    results = parallel_map(one, range(n))
    arr = np.stack([out for _, out in results], axis=1)
    n_exp = sum(1 for code, _ in results if code == EXPLODED)
    return arr, n_exp


def histogram_from_points(x, y, box, bins) -> Histogram2D:
    """Normalized histogram of scattered points on the given box."""
    (x_lo, x_hi), (y_lo, y_hi) = box
    nx, ny = bins
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    total = x.size
    if total == 0:
        raise ValueError("no finite points to histogram")
    counts, xe, ye = np.histogram2d(x, y, bins=[nx, ny],
                                    range=[[x_lo, x_hi], [y_lo, y_hi]])
    inside = counts.sum()
    return Histogram2D(xe, ye, counts / total, float((total - inside) / total))


def invariant_histogram(p: ModelParams, z0: State, burn_in: float, horizon: float,
                        dt: float, box, bins, seed: int = 0,
                        threshold: float = 1e6, path_index: int = 0) -> Histogram2D:
    """Occupation-time histogram of one long path after burn-in.

    Raises ExplodedError if the path leaves the threshold ball, which in
    the ergodic regime indicates a configuration problem.
    """
    _check_sim_args(dt, threshold)
    if not burn_in < horizon:
        raise ValueError("burn_in must be smaller than horizon")
    (x_lo, x_hi), (y_lo, y_hi) = (tuple(map(float, box[0])), tuple(map(float, box[1])))
    nx, ny = int(bins[0]), int(bins[1])
    nburn = int(round(burn_in / dt))
    nsteps = int(round(horizon / dt))
    counts = np.zeros((nx, ny), dtype=np.int64)
    inv_dx = nx / (x_hi - x_lo)
    inv_dy = ny / (y_hi - y_lo)
    status, status_time, recorded, outside = _run_path_occupation(
        z0.x, z0.y, dt, nburn, nsteps, p.a1, p.a2, p.alpha1, p.alpha2,
        p.kappa1, p.kappa2, np.uint64(seed), np.uint64(path_index), threshold,
        x_lo, inv_dx, nx, y_lo, inv_dy, ny, counts)
    if status != ALIVE:
        raise ExplodedError(status_time)
    x_edges = np.linspace(x_lo, x_hi, nx + 1)
    y_edges = np.linspace(y_lo, y_hi, ny + 1)
    return Histogram2D(x_edges, y_edges, counts / recorded, outside / recorded)


def tv_distance(h1: Histogram2D, h2: Histogram2D) -> float:
    """Total variation distance between histograms on identical bins."""
    if (not np.array_equal(h1.x_edges, h2.x_edges)
            or not np.array_equal(h1.y_edges, h2.y_edges)):
        raise ValueError("histograms have mismatched bin edges")
    return float(0.5 * np.abs(h1.mass - h2.mass).sum()
                 + 0.5 * abs(h1.outside_mass - h2.outside_mass))


@dataclass(frozen=True)
class PhaseDiagram:
    alpha1s: np.ndarray
    alpha2s: np.ndarray
    stats: list  # stats[i][j] is the EnsembleStats for (alpha1s[i], alpha2s[j])
    starts: list

    def fractions(self) -> np.ndarray:
        return np.array([[s.explosion_fraction for s in row] for row in self.stats])


def phase_diagram(alpha1s, alpha2s, a, kappa, z0, n: int, dt: float,
                  horizon: float, threshold: float = 1e4,
                  master_seed: int = 0, start_fn=None) -> PhaseDiagram:
    """Explosion fraction on a grid of (alpha1, alpha2) cells.

    z0 may be None when start_fn supplies a per-cell start (used for
    wedge-adapted starts); path seeds are disjoint across cells so the
    matrix is independent of evaluation order.
    """
    alpha1s = np.asarray(alpha1s, float)
    alpha2s = np.asarray(alpha2s, float)
    if z0 is None and start_fn is None:
        raise ValueError("either z0 or start_fn is required")
    stats, starts = [], []
    for i, a1v in enumerate(alpha1s):
        row, row_starts = [], []
        for j, a2v in enumerate(alpha2s):
            p = ModelParams(a[0], a[1], float(a1v), float(a2v), kappa[0], kappa[1])
            start = start_fn(p) if start_fn is not None else z0
            offset = (i * len(alpha2s) + j) * n
            row.append(ensemble(p, start, n, dt, horizon, threshold,
                                master_seed, path_offset=offset))
            row_starts.append(start)
        stats.append(row)
        starts.append(row_starts)
    return PhaseDiagram(alpha1s, alpha2s, stats, starts)
