"""Explosive wedge certificates for the regime alpha1 > alpha2.

The wedge W = {x < -M} intersect {xi |y| < |x|} is invariant for the
noiseless flow once M is large enough, and -x grows at a quadratic rate
there, giving finite-time blow-up with an explicit time bound.  The
bounded bump g = h * rho supported on the closed wedge satisfies
L g >= C g everywhere, which is the sampled certificate that noise does
not rescue solutions started in the wedge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .certify import CertificationError
from .fields import Region, ScalarField, apply_generator, piecewise_jet
from .jets import Jet2
from .params import ModelParams, State
from .sim import Trajectory

__all__ = [
    "WedgeSpec",
    "InstabilityCertificate",
    "wedge_region",
    "choose_wedge",
    "deterministic_flow",
    "blowup_bound_check",
    "g_field",
    "verify_instability",
    "wedge_start",
]

C_GRID_LEVELS = 60


@dataclass(frozen=True)
class WedgeSpec:
    """Wedge geometry (slope xi, offset M) and the blow-up rate constant."""

    xi: float
    M: float
    C_blow: float

    def window_ok(self, p: ModelParams) -> bool:
        """xi lies in the working window for these parameters."""
        gap = p.alpha1 - p.alpha2
        return gap > 0.0 and 0.5 * gap < self.xi ** -2 < gap


@dataclass(frozen=True)
class InstabilityCertificate:
    spec: WedgeSpec
    C_g: float
    n_samples: int
    radius_band: tuple
    min_margin: float
    violations: list
    seed: int

    @property
    def passed(self) -> bool:
        return not self.violations and self.min_margin >= 0.0 and self.C_g > 0.0


def wedge_region(spec: WedgeSpec) -> Region:
    xi, M = spec.xi, spec.M

    def contains(x, y):
        return (x < -M) & (xi * np.abs(y) < np.abs(x)) & (x < 0)

    def sampler(rng, n, band):
        lo = max(band[0], M) * (1.0 + 1e-9)
        r = np.exp(rng.uniform(math.log(lo), math.log(band[1]), n))
        q = rng.uniform(-1.0, 1.0, n) * (1.0 - 1e-9)
        return -r, q * r / xi

    return Region(contains, f"wedge xi={xi:g} M={M:g}", sampler)


def _psi_rates(p: ModelParams, xi, x, y):
    """Noiseless drift applied to -x, xi*y - x and -xi*y - x."""
    bx = p.a1 * x - p.alpha1 * x * x + y * y
    by = p.a2 * y - p.alpha2 * x * y
    return -bx, xi * by - bx, -xi * by - bx


def choose_wedge(p: ModelParams, n: int = 10_000, seed: int = 1234,
                 require_noise_margin: bool = False) -> WedgeSpec:
    """Wedge at the 3/4 point of the slope window, offset by doubling search.

    M doubles until, at n sampled wedge points, the noiseless flow moves
    all three defining functionals up and -x grows at least quadratically;
    the blow-up constant is the largest dyadic C that the samples support.
    With require_noise_margin the search also demands a positive sampled
    margin for the bump-function inequality L g >= C g.
    """
    if p.alpha1 <= p.alpha2:
        raise ValueError("explosive wedge requires alpha1 > alpha2")
    xi = 1.0 / math.sqrt(0.75 * (p.alpha1 - p.alpha2))
    rng = np.random.default_rng(seed)
    M = 1.0
    for _ in range(60):
        spec_try = WedgeSpec(xi, M, 1.0)
        region = wedge_region(spec_try)
        band = (M, 100.0 * (M + 1.0))
        pts = region.sample(rng, n, band)
        x, y = pts[:, 0], pts[:, 1]
        r1, r2, r3 = _psi_rates(p, xi, x, y)
        if np.all(r1 > 0.0) and np.all(r2 > 0.0) and np.all(r3 > 0.0):
            ratio = r1 / (x * x)
            C = _largest_dyadic_below(0.9 * float(ratio.min()))
            if C is not None:
                spec = WedgeSpec(xi, M, C)
                if not require_noise_margin or _noise_margin_ok(p, spec):
                    return spec
        M *= 2.0
    raise CertificationError("no invariant wedge offset found by doubling")


def _noise_margin_ok(p: ModelParams, spec: WedgeSpec, n: int = 4096) -> bool:
    try:
        cert = verify_instability(p, spec, n, seed=571)
    except CertificationError:
        return False
    return cert.passed


def _largest_dyadic_below(value: float):
    if not (value > 0.0):
        return None
    k = max(0, math.ceil(-math.log2(value)))
    if k >= C_GRID_LEVELS:
        return None
    return 2.0 ** (-k)


# ---------------------------------------------------------------------------
# deterministic flow (adaptive RK4)

@njit(cache=True, nogil=True)
def _rk4_flow(x, y, a1, a2, al1, al2, horizon, dt_max, cfl, thr,
              times_out, xs_out, ys_out, record):
    """Adaptive RK4 on the noiseless drift; dt shrinks with |b|.

    Returns (status, t_cross_or_horizon, n_recorded); the crossing time is
    linearly interpolated inside the step that reaches the threshold.
    """
    t = 0.0
    k = 0
    if record:
        times_out[k] = t
        xs_out[k] = x
        ys_out[k] = y
        k += 1
    max_steps = times_out.shape[0] if record else 50_000_000
    steps = 0
    while t < horizon and steps < max_steps - 2:
        steps += 1
        bx = a1 * x - al1 * x * x + y * y
        by = a2 * y - al2 * x * y
        bn = np.sqrt(bx * bx + by * by)
        r = np.sqrt(x * x + y * y)
        # relative step control: per-step motion stays near cfl*(1 + |z|)
        dt = min(dt_max, cfl * (1.0 + r) / (1.0 + bn))
        if t + dt > horizon:
            dt = horizon - t
        k1x, k1y = bx, by
        x2 = x + 0.5 * dt * k1x
        y2 = y + 0.5 * dt * k1y
        k2x = a1 * x2 - al1 * x2 * x2 + y2 * y2
        k2y = a2 * y2 - al2 * x2 * y2
        x3 = x + 0.5 * dt * k2x
        y3 = y + 0.5 * dt * k2y
        k3x = a1 * x3 - al1 * x3 * x3 + y3 * y3
        k3y = a2 * y3 - al2 * x3 * y3
        x4 = x + dt * k3x
        y4 = y + dt * k3y
        k4x = a1 * x4 - al1 * x4 * x4 + y4 * y4
        k4y = a2 * y4 - al2 * x4 * y4
        xn = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        yn = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        tn = t + dt
        if not (np.isfinite(xn) and np.isfinite(yn)):
            return 2, tn, k
        rn = np.sqrt(xn * xn + yn * yn)
        if rn >= thr:
            frac = (thr - r) / (rn - r)
            t_cross = t + dt * frac
            if record:
                times_out[k] = tn
                xs_out[k] = xn
                ys_out[k] = yn
                k += 1
            return 1, t_cross, k
        x, y, t = xn, yn, tn
        if record:
            times_out[k] = t
            xs_out[k] = x
            ys_out[k] = y
            k += 1
    return 0, t, k


def deterministic_flow(p: ModelParams, z0: State, horizon: float,
                       dt_max: float = 1e-3, cfl: float = 1e-2,
                       threshold: float = 1e6) -> Trajectory:
    """Noiseless reference integration with explosion detection."""
    cap = int(horizon / dt_max) + 200_000
    times = np.empty(cap)
    xs = np.empty(cap)
    ys = np.empty(cap)
    status, t_status, k = _rk4_flow(
        z0.x, z0.y, p.a1, p.a2, p.alpha1, p.alpha2,
        horizon, dt_max, cfl, threshold, times, xs, ys, True)
    names = {0: "alive", 1: "exploded", 2: "step_failure"}
    return Trajectory(times[:k].copy(), np.column_stack([xs[:k], ys[:k]]),
                      names[status], float(t_status), threshold)


def _blowup_time(p, z0, horizon, cfl, threshold):
    empty = np.empty(1)
    status, t_cross, _ = _rk4_flow(
        z0.x, z0.y, p.a1, p.a2, p.alpha1, p.alpha2,
        horizon, 1e-3, cfl, threshold, empty, empty, empty, False)
    return status, t_cross


def blowup_bound_check(p: ModelParams, spec: WedgeSpec, z0: State,
                       threshold: float = 1e6, cfl: float = 1e-2):
    """Numerical blow-up time and the certificate bound 1/(C |x0|).

    The time is Richardson-refined from runs at two step controls; a path
    that survives ten times the bound falsifies the certificate.
    """
    if not wedge_region(spec).contains(z0):
        raise ValueError(f"start {z0} is not inside the wedge")
    bound = 1.0 / (spec.C_blow * abs(z0.x))
    horizon = 10.0 * bound
    s1, t1 = _blowup_time(p, z0, horizon, cfl, threshold)
    s2, t2 = _blowup_time(p, z0, horizon, 0.5 * cfl, threshold)
    if s1 != 1 or s2 != 1:
        raise CertificationError(
            f"no blow-up from {z0} before 10x the bound; certificate falsified")
    t_num = 2.0 * t2 - t1
    return float(t_num), float(bound)


# ---------------------------------------------------------------------------
# the bump certificate

def g_field(spec: WedgeSpec) -> ScalarField:
    """Smooth bump supported on the closed wedge, with closed-form jets.

    g = h * rho where h = exp(1/(x+M)) for x < -M (else 0) and
    rho = f(xi y / x) with f(t) = exp(-1/(1-t^2)) on [-1, 1] (else 0).
    The derivative formulas are written with x-denominators so the
    centerline y = 0 is regular.
    """
    xi, M = spec.xi, spec.M

    def inside_fn(x, y):
        q = xi * y / x
        w = 1.0 - q * q
        w2 = w * w
        f = np.exp(-1.0 / w)
        h = np.exp(1.0 / (x + M))
        xm = x + M
        hx = -h / (xm * xm)
        hxx = h * (1.0 / xm ** 4 + 2.0 / xm ** 3)
        rx = 2.0 * q * q / (x * w2) * f
        ry = -2.0 * q * xi / (x * w2) * f
        rxx = 2.0 * q * q * (q ** 4 + 4.0 * q * q - 3.0) / (x * x * w2 * w2) * f
        ryy = 2.0 * xi * xi * (3.0 * q ** 4 - 1.0) / (x * x * w2 * w2) * f
        rxy = -4.0 * q * xi * (q ** 4 + q * q - 1.0) / (x * x * w2 * w2) * f
        return Jet2(
            h * f,
            hx * f + h * rx,
            h * ry,
            hxx * f + 2.0 * hx * rx + h * rxx,
            hx * ry + h * rxy,
            h * ryy,
        )

    def zero_fn(x, y):
        z = np.zeros_like(x)
        return Jet2(z, z, z, z, z, z)

    region = wedge_region(spec)

    def fn(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        inside = region.contains_xy(x, y)
        return piecewise_jet(x, y, [
            (inside, inside_fn),
            (np.ones_like(inside), zero_fn),
        ])

    return ScalarField(fn, region, label="g")


def verify_instability(p: ModelParams, spec: WedgeSpec, n: int,
                       seed: int = 0) -> InstabilityCertificate:
    """Fit the largest dyadic C with L g >= C g sampled, re-verify fresh.

    Outside the wedge both sides vanish, so sampling concentrates inside;
    the fitted constant keeps a 10% stability margin below the smallest
    sampled ratio L g / g.
    """
    if p.alpha1 <= p.alpha2:
        raise ValueError("instability certificate requires alpha1 > alpha2")
    if not spec.window_ok(p):
        raise ValueError("wedge slope outside the admissible window")
    field = g_field(spec)
    region = field.domain
    band = (spec.M, 100.0 * (spec.M + 1.0))
    rng = np.random.default_rng(seed)
    pts = region.sample(rng, n, band)
    x, y = pts[:, 0], pts[:, 1]
    g = field.jet_fn(x, y).v
    lg = apply_generator(p, field, x, y)
    pos = g > 0.0
    if np.any(lg[~pos] < 0.0):
        raise CertificationError("L g negative where g vanishes")
    if not np.any(pos):
        raise CertificationError("no interior samples with g > 0")
    ratio_min = float((lg[pos] / g[pos]).min())
    C = _largest_dyadic_below(0.9 * ratio_min)
    if C is None:
        raise CertificationError(
            "no positive dyadic C with sampled L g >= C g is feasible")
    fresh = region.sample(np.random.default_rng(seed + 1), n, band)
    xf, yf = fresh[:, 0], fresh[:, 1]
    gf = field.jet_fn(xf, yf).v
    lgf = apply_generator(p, field, xf, yf)
    margin = lgf - C * gf
    bad = np.flatnonzero(margin < 0.0)
    violations = [State(float(xf[i]), float(yf[i])) for i in bad[:64]]
    return InstabilityCertificate(
        spec=spec,
        C_g=float(C),
        n_samples=int(n),
        radius_band=(float(band[0]), float(band[1])),
        min_margin=float(margin.min()),
        violations=violations,
        seed=int(seed),
    )


def wedge_start(p: ModelParams, depth: float = 2.0, height: float = 0.5,
                seed: int = 1234) -> State:
    """A start deep inside the wedge, off the centerline.

    For alpha2 >= alpha1 (no wedge exists) an analogous off-axis deep-left
    point is returned; in that regime the start is immaterial because the
    dynamics is nonexplosive, but staying off the axis keeps tamed paths
    clear of the unstable axis trajectory.
    """
    if p.alpha1 > p.alpha2:
        ws = choose_wedge(p, seed=seed)
        x0 = -depth * max(ws.M, 5.0)
        return State(x0, height * (-x0) / (2.0 * ws.xi))
    x0 = -20.0
    return State(x0, height * (-x0) / 2.0)
