"""Construction of the five-piece Lyapunov covering and its smooth gluing.

For alpha2 > alpha1 the plane minus a ball is covered by five regions,
each carrying a closed-form function whose generator image decays; the
pieces are blended pairwise with smooth transition weights and the result
is extended across a central ball by a radial blend onto 1 + |z|^2.  All
derivative information is carried by second-order jets, so the generator
can be applied analytically everywhere.

Region shapes (N is the computed offset constant):

    U1: x < -2,   |y| < 2|x|^(-1/2)      spine of the negative x-axis
    U2: x < -2,   |x|^(-1/2) < |y| < 2   sliver above/below U1
    U3: x < -1/2, |y| > 1                left outer sector
    U4: -1 < x < N, |y| > 1              vertical strip
    U5: x > N/2                          right half plane

The strong subcover V1..V5 shrinks every defining inequality by a fixed
factor so that the V boundaries stay clear of the U boundaries while the
union still covers the plane outside the reported radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Region, ScalarField, piecewise_jet
from .jets import Jet2, abs_pow, jet_xy, pos_pow, smoothstep
from .params import ModelParams

__all__ = [
    "CoverParams",
    "LyapunovPiece",
    "cover_params",
    "check_cover_params",
    "make_piece",
    "region_U",
    "strong_subcover",
    "covering_radius",
    "band_radius",
    "overlap_region",
    "patch",
    "patch_parts",
    "global_phi",
    "GlobalPhi",
]


@dataclass(frozen=True)
class CoverParams:
    """All constants of the covering for one (a, alpha) configuration."""

    sigma: float
    delta: float
    beta: float
    gamma: float
    eta: float
    Dcap: float
    Ncap: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    kappa2_star: float


@dataclass(frozen=True)
class LyapunovPiece:
    phi: ScalarField
    region: Region
    index: int


def _build_cover_params(p: ModelParams, kappa2: float) -> CoverParams:
    sigma = (p.alpha1 + p.alpha2) / (2.0 * p.alpha2)
    delta = kappa2 / (8.0 * p.alpha1)
    beta = (2.0 + sigma) * delta
    gamma = (1.0 - sigma) * delta
    eta = p.alpha2 / 2.0
    Dcap = 1.0 + (p.alpha2 + 2.0 * abs(p.a2)) * (p.alpha2 - p.alpha1) / p.alpha2
    Ncap = 1.0 + 4.0 * abs(p.a2) / p.alpha2
    C1 = 2.0
    C2 = 1.0
    C3 = 1.0 / (2.0 * Dcap ** delta)
    C4 = 1.0 / (3.0 * Ncap * Dcap ** delta)
    C5 = 1.0 / (4.0 * Dcap ** delta)
    return CoverParams(sigma, delta, beta, gamma, eta, Dcap, Ncap,
                       C1, C2, C3, C4, C5, kappa2)


def _closed_form_ok(p: ModelParams, cp: CoverParams) -> bool:
    if not (0.0 < cp.delta < 0.5 and 0.0 < cp.gamma < 0.5):
        return False
    lhs = (p.alpha1 - cp.sigma * p.alpha2) \
        + cp.kappa2_star * cp.sigma * (2.0 * cp.sigma * cp.delta + 1.0)
    return lhs < 0.0


def check_cover_params(p: ModelParams, cp: CoverParams) -> None:
    """Assert every structural identity and inequality of the constants."""
    if p.alpha2 <= p.alpha1:
        raise ValueError("covering requires alpha2 > alpha1")
    assert cp.sigma == (p.alpha1 + p.alpha2) / (2.0 * p.alpha2)
    assert p.alpha1 / p.alpha2 < cp.sigma < 1.0
    assert cp.delta == cp.kappa2_star / (8.0 * p.alpha1)
    assert cp.beta == (2.0 + cp.sigma) * cp.delta
    assert cp.gamma == (1.0 - cp.sigma) * cp.delta
    assert cp.eta == p.alpha2 / 2.0
    assert cp.Dcap == 1.0 + (p.alpha2 + 2.0 * abs(p.a2)) * (p.alpha2 - p.alpha1) / p.alpha2
    assert cp.Ncap == 1.0 + 4.0 * abs(p.a2) / p.alpha2
    # strict when a2 != 0; equality only in the degenerate a2 = 0 case
    assert cp.Dcap > max(1.0, (p.alpha2 + 2.0 * abs(p.a2)) * (1.0 - cp.sigma))
    assert cp.Ncap >= max(1.0, 4.0 * abs(p.a2) / p.alpha2)
    assert cp.C1 == 2.0 and cp.C2 == 1.0
    assert cp.C3 == 1.0 / (2.0 * cp.Dcap ** cp.delta)
    assert cp.C4 == 1.0 / (3.0 * cp.Ncap * cp.Dcap ** cp.delta)
    assert cp.C5 == 1.0 / (4.0 * cp.Dcap ** cp.delta)
    assert cp.C1 > cp.C2
    assert cp.C3 < cp.C2 / cp.Dcap ** cp.delta
    assert cp.Ncap * cp.C4 < cp.C3
    assert cp.Ncap * cp.C4 > cp.C5
    assert 0.0 < cp.delta < 0.5 and 0.0 < cp.gamma < 0.5
    assert _closed_form_ok(p, cp)


def cover_params(p: ModelParams, kappa2_max: float = 1.0) -> CoverParams:
    """Select kappa2* and return the full constant set.

    kappa2 is halved from kappa2_max until the closed-form inequalities
    hold and the numerically fitted drift bound on the first patch overlap
    verifies for kappa1 in {0, 1}; the first feasible value is kept.
    """
    if p.alpha2 <= p.alpha1:
        raise ValueError(
            "cover_params requires alpha2 > alpha1; in the opposite regime "
            "solutions explode and no covering exists")
    kappa2 = float(kappa2_max)
    for _ in range(60):
        cp = _build_cover_params(p, kappa2)
        if _closed_form_ok(p, cp) and _patch1_margin_ok(p, cp):
            return cp
        kappa2 *= 0.5
    raise RuntimeError("no feasible kappa2 found above 2^-60")


def _patch1_margin_ok(p: ModelParams, cp: CoverParams, n: int = 2048) -> bool:
    """Fit-then-verify the drift bound for the first patch on its overlap."""
    from .certify import CertificationError, fit_drift_constants, verify_drift

    band = (band_radius(cp), 100.0 * band_radius(cp))
    field = patch(1, p, cp)
    region = overlap_region(1, cp)
    for kappa1 in (0.0, 1.0):
        pk = p.with_kappa(kappa1, cp.kappa2_star)
        try:
            C, D = fit_drift_constants(pk, field, region, band, n, seed=101)
        except CertificationError:
            return False
        cert = verify_drift(pk, field, region, band, n, C, D, seed=202)
        if not cert.passed:
            return False
    return True


# ---------------------------------------------------------------------------
# regions and samplers

def _loguni(rng, n, lo, hi):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _signs(rng, n):
    return np.where(rng.random(n) < 0.5, -1.0, 1.0)


def _axis_sliver_region(xc: float, yfac: float, describe: str) -> Region:
    """{x < -xc} intersect {|y| < yfac |x|^(-1/2)}; radial scale is |x|."""

    def contains(x, y):
        return (x < -xc) & (np.abs(y) < yfac * np.abs(x) ** -0.5)

    def sampler(rng, n, band):
        r = _loguni(rng, n, max(band[0], xc * 1.0001), band[1])
        u = rng.uniform(-1.0, 1.0, n) * (1.0 - 1e-9)
        return -r, u * yfac * r ** -0.5

    return Region(contains, describe, sampler)


def _band_sliver_region(xc, ylo_fac, yhi, describe) -> Region:
    """{x < -xc} intersect {ylo_fac |x|^(-1/2) < |y| < yhi}."""

    def contains(x, y):
        ay = np.abs(y)
        return (x < -xc) & (ay > ylo_fac * np.abs(x) ** -0.5) & (ay < yhi)

    def sampler(rng, n, band):
        r = _loguni(rng, n, max(band[0], xc * 1.0001), band[1])
        lo = ylo_fac * r ** -0.5
        w = rng.uniform(1e-9, 1.0 - 1e-9, n)
        ay = lo * (yhi / lo) ** w
        return -r, _signs(rng, n) * ay

    return Region(contains, describe, sampler)


def _sector_region(xc, yc, describe) -> Region:
    """{x < -xc} intersect {|y| > yc}, sampled by annulus rejection."""

    def contains(x, y):
        return (x < -xc) & (np.abs(y) > yc)

    def sampler(rng, n, band):
        xs = np.empty(n)
        ys = np.empty(n)
        k = 0
        while k < n:
            m = max(64, 2 * (n - k))
            r = _loguni(rng, m, band[0], band[1])
            th = rng.uniform(0.0, 2.0 * math.pi, m)
            x = r * np.cos(th)
            y = r * np.sin(th)
            good = contains(x, y)
            take = min(int(good.sum()), n - k)
            xs[k:k + take] = x[good][:take]
            ys[k:k + take] = y[good][:take]
            k += take
        return xs, ys

    return Region(contains, describe, sampler)


def _strip_region(x_lo, x_hi, yc, describe) -> Region:
    """{x_lo < x < x_hi} intersect {|y| > yc}; radial scale is |z|."""

    def contains(x, y):
        return (x > x_lo) & (x < x_hi) & (np.abs(y) > yc)

    def sampler(rng, n, band):
        r = _loguni(rng, n, band[0], band[1])
        x = rng.uniform(x_lo + 1e-9, x_hi - 1e-9, n)
        ay = np.sqrt(np.maximum(r * r - x * x, yc * yc * 4.0))
        return x, _signs(rng, n) * ay

    return Region(contains, describe, sampler)


def _half_plane_region(xc, describe) -> Region:
    """{x > xc}, sampled by annulus rejection."""

    def contains(x, y):
        return x > xc

    def sampler(rng, n, band):
        xs = np.empty(n)
        ys = np.empty(n)
        k = 0
        while k < n:
            m = max(64, 3 * (n - k))
            r = _loguni(rng, m, max(band[0], abs(xc) * 1.5 + 1.0), band[1])
            th = rng.uniform(0.0, 2.0 * math.pi, m)
            x = r * np.cos(th)
            y = r * np.sin(th)
            good = contains(x, y)
            take = min(int(good.sum()), n - k)
            xs[k:k + take] = x[good][:take]
            ys[k:k + take] = y[good][:take]
            k += take
        return xs, ys

    return Region(contains, describe, sampler)


def region_U(i: int, cp: CoverParams) -> Region:
    """The i-th covering region."""
    N = cp.Ncap
    if i == 1:
        return _axis_sliver_region(2.0, 2.0, "U1: x<-2, |y|<2|x|^-1/2")
    if i == 2:
        return _band_sliver_region(2.0, 1.0, 2.0, "U2: x<-2, |x|^-1/2<|y|<2")
    if i == 3:
        return _sector_region(0.5, 1.0, "U3: x<-1/2, |y|>1")
    if i == 4:
        return _strip_region(-1.0, N, 1.0, f"U4: -1<x<{N:g}, |y|>1")
    if i == 5:
        return _half_plane_region(N / 2.0, f"U5: x>{N / 2.0:g}")
    raise ValueError("piece index must be 1..5")


def strong_subcover(i: int, cp: CoverParams) -> Region:
    """The shrunken region V_i whose closure avoids the boundary of U_i."""
    N = cp.Ncap
    if i == 1:
        return _axis_sliver_region(3.0, 1.5, "V1: x<-3, |y|<1.5|x|^-1/2")
    if i == 2:
        return _band_sliver_region(3.0, 1.25, 1.75, "V2: x<-3, 1.25|x|^-1/2<|y|<1.75")
    if i == 3:
        return _sector_region(0.6, 1.2, "V3: x<-0.6, |y|>1.2")
    if i == 4:
        return _strip_region(-0.9, 0.9 * N, 1.2, f"V4: -0.9<x<{0.9 * N:g}, |y|>1.2")
    if i == 5:
        return _half_plane_region(0.6 * N, f"V5: x>{0.6 * N:g}")
    raise ValueError("piece index must be 1..5")


def covering_radius(cp: CoverParams) -> float:
    """Radius outside which V1..V5 (hence U1..U5) cover the plane."""
    return max(6.0, cp.Ncap + 1.0)


def band_radius(cp: CoverParams) -> float:
    """Default inner radius R for certificate bands and the gluing ball."""
    return 1.25 * covering_radius(cp)


# ---------------------------------------------------------------------------
# pieces

def _phi1_jet(cp):
    def fn(x, y):
        X, Y = jet_xy(x, y)
        return cp.C1 * (5.0 * abs_pow(X, cp.beta) - Y * Y * abs_pow(X, cp.beta + 1.0))
    return fn


def _phi2_jet(cp):
    two_d = 2.0 * cp.delta

    def fn(x, y):
        X, Y = jet_xy(x, y)
        return cp.C2 * ((abs_pow(X, two_d) + abs_pow(Y, two_d))
                        * abs_pow(Y, -2.0 * cp.sigma * cp.delta))
    return fn


def _phi3_jet(cp):
    def fn(x, y):
        X, Y = jet_xy(x, y)
        core = (cp.Dcap * X * X + Y * Y) * abs_pow(Y, -2.0 * cp.sigma)
        return cp.C3 * pos_pow(core, cp.delta)
    return fn


def _phi4_jet(cp):
    expo = 2.0 * (1.0 - cp.sigma) * cp.delta

    def fn(x, y):
        X, Y = jet_xy(x, y)
        return cp.C4 * (-X + cp.Ncap * abs_pow(Y, expo))
    return fn


def _phi5_jet(cp):
    def fn(x, y):
        X, Y = jet_xy(x, y)
        return cp.C5 * pos_pow(cp.eta * X * X + Y * Y, cp.gamma)
    return fn


_PIECE_JETS = {1: _phi1_jet, 2: _phi2_jet, 3: _phi3_jet, 4: _phi4_jet, 5: _phi5_jet}


def make_piece(i: int, p: ModelParams, cp: CoverParams) -> LyapunovPiece:
    """The i-th (function, region) pair with analytic jets."""
    if i not in _PIECE_JETS:
        raise ValueError("piece index must be 1..5")
    check_cover_params(p, cp)
    region = region_U(i, cp)
    field = ScalarField(_PIECE_JETS[i](cp), region, label=f"phi{i}")
    return LyapunovPiece(field, region, i)


# ---------------------------------------------------------------------------
# patches

def _overlap12(cp) -> Region:
    def contains(x, y):
        t = np.abs(x) ** 0.5 * np.abs(y)
        return (x < -2.0) & (t > 1.0) & (t < 2.0)

    def sampler(rng, n, band):
        r = _loguni(rng, n, max(band[0], 2.2), band[1])
        t = rng.uniform(1.0 + 1e-9, 2.0 - 1e-9, n)
        return -r, _signs(rng, n) * t * r ** -0.5

    return Region(contains, "U1&U2: x<-2, 1<|x|^1/2|y|<2", sampler)


def _overlap23(cp) -> Region:
    def contains(x, y):
        return (x < -2.0) & (np.abs(y) > 1.0) & (np.abs(y) < 2.0)

    def sampler(rng, n, band):
        r = _loguni(rng, n, max(band[0], 2.2), band[1])
        ay = rng.uniform(1.0 + 1e-9, 2.0 - 1e-9, n)
        return -r, _signs(rng, n) * ay

    return Region(contains, "U2&U3: x<-2, 1<|y|<2", sampler)


def _overlap34(cp) -> Region:
    def contains(x, y):
        return (x > -1.0) & (x < -0.5) & (np.abs(y) > 1.0)

    def sampler(rng, n, band):
        r = _loguni(rng, n, band[0], band[1])
        x = rng.uniform(-1.0 + 1e-9, -0.5 - 1e-9, n)
        ay = np.sqrt(np.maximum(r * r - x * x, 4.0))
        return x, _signs(rng, n) * ay

    return Region(contains, "U3&U4: -1<x<-1/2, |y|>1", sampler)


def _overlap45(cp) -> Region:
    N = cp.Ncap

    def contains(x, y):
        return (x > N / 2.0) & (x < N) & (np.abs(y) > 1.0)

    def sampler(rng, n, band):
        r = _loguni(rng, n, band[0], band[1])
        x = rng.uniform(N / 2.0 + 1e-9, N - 1e-9, n)
        ay = np.sqrt(np.maximum(r * r - x * x, 4.0))
        return x, _signs(rng, n) * ay

    return Region(contains, f"U4&U5: {cp.Ncap / 2.0:g}<x<{cp.Ncap:g}, |y|>1", sampler)


def overlap_region(i: int, cp: CoverParams) -> Region:
    builders = {1: _overlap12, 2: _overlap23, 3: _overlap34, 4: _overlap45}
    if i not in builders:
        raise ValueError("patch index must be 1..4")
    return builders[i](cp)


def _blend_arg_jet(i: int, cp: CoverParams):
    """Jet of the smooth-step argument of the i-th blend.

    Blend 1 uses |x|^(1/2)|y| - 1; blends 2..4 use affine step arguments
    k(|y|-1), k(2x+2) and k(2x/N - 1).
    """
    if i == 1:
        def fn(x, y):
            X, Y = jet_xy(x, y)
            return abs_pow(X, 0.5) * abs_pow(Y, 1.0) + (-1.0)
    elif i == 2:
        def fn(x, y):
            X, Y = jet_xy(x, y)
            return abs_pow(Y, 1.0) + (-1.0)
    elif i == 3:
        def fn(x, y):
            X, Y = jet_xy(x, y)
            return 2.0 * X + 2.0
    elif i == 4:
        N = cp.Ncap

        def fn(x, y):
            X, Y = jet_xy(x, y)
            return (2.0 / N) * X + (-1.0)
    else:
        raise ValueError("patch index must be 1..4")
    return fn


def patch_parts(i: int, p: ModelParams, cp: CoverParams):
    """Blend weight, the two pieces, the patched field and the overlap.

    Returned as (rho, phi_lo, phi_hi, patched, overlap) where the patched
    field equals rho*phi_hi + (1-rho)*phi_lo with jets assembled by the
    product rule; outside the transition zone only the live piece is
    evaluated, so the formula never touches a foreign domain.
    """
    if i not in (1, 2, 3, 4):
        raise ValueError("patch index must be 1..4")
    lo = make_piece(i, p, cp)
    hi = make_piece(i + 1, p, cp)
    arg_fn = _blend_arg_jet(i, cp)
    overlap = overlap_region(i, cp)

    def rho_fn(x, y):
        return smoothstep.jet(arg_fn(x, y))

    def patched_fn(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        t = arg_fn(x, y).v
        return piecewise_jet(x, y, [
            (t <= 0.0, lo.phi.jet_fn),
            (t >= 1.0, hi.phi.jet_fn),
            (np.ones_like(t, dtype=bool), _mix_fn(rho_fn, lo.phi.jet_fn, hi.phi.jet_fn)),
        ])

    union = Region(
        lambda x, y: lo.region.contains_xy(x, y) | hi.region.contains_xy(x, y),
        f"U{i}|U{i + 1}")
    rho = ScalarField(rho_fn, overlap, label=f"rho{i}{i + 1}")
    patched = ScalarField(patched_fn, union, label=f"phi{i}{i + 1}")
    return rho, lo.phi, hi.phi, patched, overlap


def _mix_fn(rho_fn, lo_fn, hi_fn):
    def fn(x, y):
        r = rho_fn(x, y)
        return r * hi_fn(x, y) + (1.0 + (-r)) * lo_fn(x, y)
    return fn


def patch(i: int, p: ModelParams, cp: CoverParams) -> ScalarField:
    """The blended function on the union of adjacent regions."""
    return patch_parts(i, p, cp)[3]


# ---------------------------------------------------------------------------
# global function

@dataclass(frozen=True)
class GlobalPhi:
    field: ScalarField
    R: float
    piece_scales: tuple


def _glue_scales(p: ModelParams, cp: CoverParams, band, n: int = 4096):
    """Positive level factors keeping each blend ordered on the band.

    A blend rho*hi + (1-rho)*lo only inherits the pieces' drift decay
    when hi <= lo across the overlap (the weight-gradient term carries
    the sign of hi - lo against a quadratically growing drift).  The
    covering constants order pieces 1..4 at any radius, but the fourth
    overlap needs the last piece scaled down: its partner nearly
    vanishes at the overlap's far edge while the asymptotic ordering
    only kicks in at astronomically large |y|.  Scaling a piece by a
    positive constant preserves its own drift inequality, so this
    changes nothing about the covering itself.
    """
    scales = [1.0]
    for i in range(1, 5):
        lo = _PIECE_JETS[i](cp)
        hi = _PIECE_JETS[i + 1](cp)
        region = overlap_region(i, cp)
        rng = np.random.default_rng(911 + i)
        pts = region.sample(rng, n, band)
        x, y = pts[:, 0], pts[:, 1]
        ratio = scales[-1] * lo(x, y).v / hi(x, y).v
        scales.append(min(scales[-1], 0.9 * float(ratio.min())))
    return tuple(scales)


def _outer_jet_fn(p: ModelParams, cp: CoverParams, scales):
    """Case split of the covering outside radius 0.8*R.

    Outside that radius only consecutive regions overlap, so every point
    is either in exactly one region (take its piece, level-scaled) or in
    one pairwise overlap (take the blended value).  Seams are smooth
    because the blend weights are flat at 0 and 1.
    """
    piece = {i: _scaled_fn(_PIECE_JETS[i](cp), scales[i - 1])
             for i in range(1, 6)}
    mix = {i: _mix_fn(
        lambda x, y, i=i: smoothstep.jet(_blend_arg_jet(i, cp)(x, y)),
        piece[i], piece[i + 1]) for i in range(1, 5)}
    N = cp.Ncap

    def fn(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ay = np.abs(y)
        t12 = np.where(x < 0.0, np.abs(x) ** 0.5 * ay, 0.0)
        left = x <= -2.0
        branches = [
            (left & (ay >= 2.0), piece[3]),
            (left & (ay > 1.0), mix[2]),
            (left & (t12 >= 2.0), piece[2]),
            (left & (t12 > 1.0), mix[1]),
            (left, piece[1]),
            ((x > -2.0) & (x <= -1.0), piece[3]),
            ((x > -1.0) & (x < -0.5), mix[3]),
            ((x >= -0.5) & (x <= N / 2.0), piece[4]),
            ((x > N / 2.0) & (x < N), mix[4]),
            (x >= N, piece[5]),
        ]
        return piecewise_jet(x, y, branches)

    return fn


def _scaled_fn(fn, scale):
    if scale == 1.0:
        return fn

    def scaled(x, y):
        return scale * fn(x, y)

    return scaled


def global_phi(p: ModelParams, cp: CoverParams) -> GlobalPhi:
    """Smooth everywhere-defined function matching the covering far out.

    Equal to the (level-scaled) pieces and their blends for |z| > R, to
    1 + |z|^2 for |z| < 0.8*R, and to a radial smooth-step blend between
    the two on the annulus; R = band_radius(cp) and the piece level
    factors are reported alongside the field.
    """
    check_cover_params(p, cp)
    R = band_radius(cp)
    r_in = 0.8 * R
    scales = _glue_scales(p, cp, (R, 100.0 * R))
    outer = _outer_jet_fn(p, cp, scales)

    def parab(x, y):
        X, Y = jet_xy(x, y)
        return 1.0 + X * X + Y * Y

    def blend(x, y):
        X, Y = jet_xy(x, y)
        r = pos_pow(X * X + Y * Y, 0.5)
        w = smoothstep.jet((r + (-r_in)) * (1.0 / (R - r_in)))
        return w * outer(x, y) + (1.0 + (-w)) * parab(x, y)

    def fn(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        r = np.hypot(x, y)
        return piecewise_jet(x, y, [
            (r <= r_in, parab),
            (r < R, blend),
            (np.ones_like(r, dtype=bool), outer),
        ])

    whole_plane = Region(lambda x, y: np.ones(np.shape(x), dtype=bool), "R^2",
                         sampler=_annulus_sampler)
    return GlobalPhi(ScalarField(fn, whole_plane, label="Phi"), R, scales)


def _annulus_sampler(rng, n, band):
    r = _loguni(rng, n, band[0], band[1])
    th = rng.uniform(0.0, 2.0 * math.pi, n)
    return r * np.cos(th), r * np.sin(th)
