"""Drift evaluation, generator application and scalar fields with jets.

The generator of the diffusion is

    L = (a1*x - alpha1*x^2 + y^2) d/dx + (a2*y - alpha2*x*y) d/dy
        + kappa1 d^2/dx^2 + kappa2 d^2/dy^2.

`generator_apply` evaluates L f from the second-order jet of f; everything
here is pure and broadcasts over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import Jet2, jet_xy
from .params import ModelParams, State

__all__ = [
    "drift",
    "drift_xy",
    "generator_apply",
    "Region",
    "ScalarField",
    "apply_generator",
    "piecewise_jet",
]


def drift_xy(p: ModelParams, x, y):
    """Drift vector field, vectorized over coordinate arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    bx = p.a1 * x - p.alpha1 * x * x + y * y
    by = p.a2 * y - p.alpha2 * x * y
    return bx, by


def drift(p: ModelParams, z: State):
    bx, by = drift_xy(p, z.x, z.y)
    return float(bx), float(by)


def generator_apply(p: ModelParams, j: Jet2, z):
    """Apply the generator to the jet of a C^2 function at z.

    z may be a State or a pair of (array) coordinates matching the jet.
    """
    if isinstance(z, State):
        x, y = z.x, z.y
    else:
        x, y = z
    bx, by = drift_xy(p, x, y)
    out = bx * j.dx + by * j.dy + p.kappa1 * j.dxx + p.kappa2 * j.dyy
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class Region:
    """A subset of the plane with a membership test and a tailored sampler.

    sampler(rng, n, (r_lo, r_hi)) must return points inside the region
    whose norms essentially fill the requested radial band; `sample`
    asserts containment of everything the sampler produced.
    """

    contains_xy: Callable
    describe: str
    sampler: Callable = None

    def contains(self, z) -> bool:
        if isinstance(z, State):
            x, y = z.x, z.y
        else:
            x, y = z
        return bool(np.all(self.contains_xy(np.asarray(x, float), np.asarray(y, float))))

    def sample(self, rng, n: int, band) -> np.ndarray:
        if self.sampler is None:
            raise ValueError(f"region {self.describe!r} has no sampler")
        x, y = self.sampler(rng, int(n), (float(band[0]), float(band[1])))
        inside = self.contains_xy(x, y)
        if not np.all(inside):
            bad = np.flatnonzero(~inside)[:3]
            raise AssertionError(
                f"sampler for {self.describe!r} left the region at indices {bad}")
        return np.column_stack([x, y])


@dataclass
class ScalarField:
    """A scalar function given by its second-order jet on a domain."""

    jet_fn: Callable
    domain: Region
    label: str = ""

    def jet(self, x, y) -> Jet2:
        return self.jet_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def jet_at(self, z: State) -> Jet2:
        j = self.jet_fn(np.asarray(z.x, float), np.asarray(z.y, float))
        return Jet2(*(float(c) for c in
                      (j.v, j.dx, j.dy, j.dxx, j.dxy, j.dyy)))

    def value(self, x, y):
        return self.jet(x, y).v


def apply_generator(p: ModelParams, f: ScalarField, x, y):
    """L f evaluated at (array) points via the field's analytic jets."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    j = f.jet_fn(x, y)
    bx, by = drift_xy(p, x, y)
    return bx * j.dx + by * j.dy + p.kappa1 * j.dxx + p.kappa2 * j.dyy


def piecewise_jet(x, y, branches) -> Jet2:
    """Assemble a jet from disjoint branches: [(mask, jet_fn), ...].

    Each jet_fn is evaluated only on its own points, so formulas with
    restricted domains never see foreign coordinates.  Masks must cover
    every point; overlapping masks resolve in favor of the first branch.
    """
    shape = np.shape(np.asarray(x))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    comps = [np.zeros_like(x) for _ in range(6)]
    done = np.zeros(x.shape, dtype=bool)
    for mask, fn in branches:
        take = np.atleast_1d(np.asarray(mask, bool)) & ~done
        if not np.any(take):
            continue
        j = fn(x[take], y[take])
        for comp, val in zip(comps, (j.v, j.dx, j.dy, j.dxx, j.dxy, j.dyy)):
            comp[take] = val
        done |= take
    if not np.all(done):
        raise ValueError("piecewise jet: branches do not cover all points")
    return Jet2(*(c.reshape(shape) for c in comps))


def jet_seeds(x, y):
    """Coordinate jets; re-exported for field constructors."""
    return jet_xy(x, y)
