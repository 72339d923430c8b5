"""Numerical drift certificates: fit constants, then verify at fresh points.

A drift certificate for (phi, region, band) is sampled evidence that
L phi <= -C phi + D on the region within the radial band.  Fitting scans
C over the dyadic grid 2^0 .. 2^-59 and keeps the largest value for which
the sampled profile of L phi + C phi does not grow toward the outer edge
of the band (a growing profile means the bound would need an unbounded D
on the full region, i.e. that C is inadmissible).  D is the sampled
maximum plus a small resolution slack so that verification at freshly
seeded points is well-posed; only existence of (C, D) matters, not
optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Region, ScalarField, apply_generator
from .jets import Jet2
from .params import ModelParams, State

__all__ = [
    "CertificationError",
    "DriftCertificate",
    "fit_drift_constants",
    "verify_drift",
    "scaling_identity_check",
]

C_GRID_LEVELS = 60


class CertificationError(RuntimeError):
    """No admissible constants exist for the requested certificate."""


@dataclass(frozen=True)
class DriftCertificate:
    region_label: str
    field_label: str
    n_samples: int
    radius_band: tuple
    C_est: float
    D_est: float
    min_margin: float
    violations: list  # States where the margin went negative
    seed: int

    @property
    def passed(self) -> bool:
        return not self.violations and self.min_margin >= 0.0


def _sample_values(p, field, region, band, n, seed):
    rng = np.random.default_rng(seed)
    pts = region.sample(rng, n, band)
    x, y = pts[:, 0], pts[:, 1]
    phi = field.jet_fn(x, y).v
    lphi = apply_generator(p, field, x, y)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(lphi))):
        raise CertificationError(
            f"non-finite field values while sampling {region.describe!r}")
    return x, y, phi, lphi


def _outer_inner_max(values, radii, band):
    """Max over the outer quarter (log scale) of the band vs the rest."""
    lo, hi = math.log(band[0]), math.log(band[1])
    split = math.exp(hi - 0.25 * (hi - lo))
    outer = values[radii >= split]
    inner = values[radii < split]
    if outer.size == 0 or inner.size == 0:
        return None
    return float(outer.max()), float(inner.max())


def fit_drift_constants(p: ModelParams, field: ScalarField, region: Region,
                        band, n: int, seed: int = 0):
    """Largest dyadic C with a non-growing profile, and its D.

    Raises CertificationError when even the smallest grid C leaves
    L phi + C phi growing toward the outer band edge (positive limsup of
    L phi / phi: no admissible constants).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x, y, phi, lphi = _sample_values(p, field, region, band, n, seed)
    radii = np.hypot(x, y)
    for k in range(C_GRID_LEVELS):
        C = 2.0 ** (-k)
        m = lphi + C * phi
        pair = _outer_inner_max(m, radii, band)
        if pair is None:
            # degenerate band split; accept on boundedness alone
            pass
        else:
            outer, inner = pair
            if outer > inner + 1e-9 * (1.0 + abs(inner)):
                continue
        d_raw = float(m.max())
        spread = float(m.max() - m.min())
        D = d_raw + max(1e-3 * spread, 1e-9 * (1.0 + abs(d_raw)))
        return C, D
    raise CertificationError(
        f"no admissible C on {region.describe!r}: L phi / phi has positive "
        "limsup over the sampled band")


def verify_drift(p: ModelParams, field: ScalarField, region: Region, band,
                 n: int, C: float, D: float, seed: int = 1) -> DriftCertificate:
    """Evaluate the margin -C phi + D - L phi at freshly sampled points."""
    if C <= 0.0:
        raise ValueError("C must be positive")
    x, y, phi, lphi = _sample_values(p, field, region, band, n, seed)
    margin = -C * phi + D - lphi
    bad = np.flatnonzero(margin < 0.0)
    violations = [State(float(x[i]), float(y[i])) for i in bad[:64]]
    return DriftCertificate(
        region_label=region.describe,
        field_label=field.label,
        n_samples=int(n),
        radius_band=(float(band[0]), float(band[1])),
        C_est=float(C),
        D_est=float(D),
        min_margin=float(margin.min()),
        violations=violations,
        seed=int(seed),
    )


def _rescaled_field(psi: ScalarField, c: float) -> ScalarField:
    """The field z -> psi(c z), with jets scaled by the chain rule."""

    def fn(x, y):
        j = psi.jet_fn(c * np.asarray(x, float), c * np.asarray(y, float))
        return Jet2(j.v, c * j.dx, c * j.dy,
                    c * c * j.dxx, c * c * j.dxy, c * c * j.dyy)

    return ScalarField(fn, psi.domain, label=f"{psi.label}(c z)")


def scaling_identity_check(p_target: ModelParams, psi: ScalarField,
                           kappa2_ref: float, n: int, seed: int = 0,
                           radius: float = 10.0) -> float:
    """Residual of the generator rescaling identity.

    With c = (kappa2_ref / iota2)^(1/3), a = c*b and
    kappa = (c^3 iota1, kappa2_ref), the function Phi(z) = Psi(c z)
    satisfies L^iota_{b,alpha} Phi(z) = (1/c) (L^kappa_{a,alpha} Psi)(c z);
    returns the max absolute difference of the two sides over n points
    sampled uniformly in the disk of the given radius.
    """
    if kappa2_ref <= 0.0:
        raise ValueError("kappa2_ref must be positive")
    iota1, iota2 = p_target.kappa1, p_target.kappa2
    c = (kappa2_ref / iota2) ** (1.0 / 3.0)
    p_ref = ModelParams(c * p_target.a1, c * p_target.a2,
                        p_target.alpha1, p_target.alpha2,
                        c ** 3 * iota1, kappa2_ref)
    phi = _rescaled_field(psi, c)
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    th = rng.uniform(0.0, 2.0 * math.pi, n)
    x, y = r * np.cos(th), r * np.sin(th)
    lhs = apply_generator(p_target, phi, x, y)
    rhs = apply_generator(p_ref, psi, c * x, c * y) / c
    return float(np.max(np.abs(lhs - rhs)))
