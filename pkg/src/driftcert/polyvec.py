"""Polynomial vector fields on the plane: exact Lie brackets and rank checks.

Polynomials are sparse maps (degx, degy) -> coefficient with zero
coefficients never stored, so equality is map equality and bracket
identities hold exactly whenever the inputs have exactly representable
coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from .params import ModelParams, State

__all__ = [
    "Poly2",
    "PolyVecField",
    "lie_bracket",
    "noise_fields",
    "drift_field",
    "control_fields",
    "bracket_generations",
    "hormander_rank",
]


@dataclass(frozen=True)
class Poly2:
    """Sparse bivariate polynomial with float coefficients, canonical form."""

    coeffs: tuple  # sorted tuple of ((degx, degy), coeff) with coeff != 0

    @staticmethod
    def from_dict(d: dict) -> "Poly2":
        items = tuple(sorted((k, float(v)) for k, v in d.items() if v != 0.0))
        return Poly2(items)

    @staticmethod
    def zero() -> "Poly2":
        return Poly2(())

    @staticmethod
    def const(c: float) -> "Poly2":
        return Poly2.from_dict({(0, 0): c})

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Poly2") -> "Poly2":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0.0) + v
        return Poly2.from_dict(d)

    def __neg__(self) -> "Poly2":
        return Poly2(tuple((k, -v) for k, v in self.coeffs))

    def __sub__(self, other: "Poly2") -> "Poly2":
        return self + (-other)

    def scale(self, c: float) -> "Poly2":
        if c == 0.0:
            return Poly2.zero()
        return Poly2.from_dict({k: c * v for k, v in self.coeffs})

    def __mul__(self, other: "Poly2") -> "Poly2":
        d = {}
        for (i1, j1), v1 in self.coeffs:
            for (i2, j2), v2 in other.coeffs:
                k = (i1 + i2, j1 + j2)
                d[k] = d.get(k, 0.0) + v1 * v2
        return Poly2.from_dict(d)

    def diff_x(self) -> "Poly2":
        return Poly2.from_dict({(i - 1, j): i * v for (i, j), v in self.coeffs if i > 0})

    def diff_y(self) -> "Poly2":
        return Poly2.from_dict({(i, j - 1): j * v for (i, j), v in self.coeffs if j > 0})

    def eval(self, x: float, y: float) -> float:
        return sum(v * x ** i * y ** j for (i, j), v in self.coeffs)

    def degree(self) -> int:
        return max((i + j for (i, j), _ in self.coeffs), default=-1)


@dataclass(frozen=True)
class PolyVecField:
    """Vector field (px, py) with polynomial components."""

    px: Poly2
    py: Poly2

    def is_zero(self) -> bool:
        return self.px.is_zero() and self.py.is_zero()

    def eval(self, x: float, y: float):
        return self.px.eval(x, y), self.py.eval(x, y)

    def apply_to(self, f: Poly2) -> Poly2:
        """Directional derivative of a polynomial along the field."""
        return self.px * f.diff_x() + self.py * f.diff_y()

    def __neg__(self) -> "PolyVecField":
        return PolyVecField(-self.px, -self.py)

    def __sub__(self, other: "PolyVecField") -> "PolyVecField":
        return PolyVecField(self.px - other.px, self.py - other.py)


def lie_bracket(V: PolyVecField, W: PolyVecField) -> PolyVecField:
    """[V, W] = DW.V - DV.W, computed exactly on the coefficients."""
    bx = V.apply_to(W.px) - W.apply_to(V.px)
    by = V.apply_to(W.py) - W.apply_to(V.py)
    return PolyVecField(bx, by)


def drift_field(p: ModelParams) -> PolyVecField:
    """The drift of the SDE as a polynomial field."""
    px = Poly2.from_dict({(1, 0): p.a1, (2, 0): -p.alpha1, (0, 2): 1.0})
    py = Poly2.from_dict({(0, 1): p.a2, (1, 1): -p.alpha2})
    return PolyVecField(px, py)


def noise_fields(p: ModelParams):
    """Constant fields (sqrt(kappa1), 0) and (0, sqrt(kappa2))."""
    X1 = PolyVecField(Poly2.const(math.sqrt(p.kappa1)), Poly2.zero())
    X2 = PolyVecField(Poly2.zero(), Poly2.const(math.sqrt(p.kappa2)))
    return X1, X2

def control_fields(p: ModelParams):
    """Drift Z plus control directions W1 = (kappa1, 0), W2 = (0, kappa2)."""
    Z = drift_field(p)
    W1 = PolyVecField(Poly2.const(p.kappa1), Poly2.zero())
    W2 = PolyVecField(Poly2.zero(), Poly2.const(p.kappa2))
    return Z, W1, W2


def bracket_generations(p: ModelParams, max_depth: int):
    """Left-nested bracket generations for the rank condition.

    Generation 1 holds the (nonzero) noise fields; generation k >= 2
    holds [G, B] for every generator G in {drift, noise fields} and every
    B from generation k-1.  Signs are immaterial for span computations,
    so left-nesting loses nothing at the depth this system needs.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    X0 = drift_field(p)
    X1, X2 = noise_fields(p)
    generators = [X0, X1, X2]
    level = [f for f in (X1, X2) if not f.is_zero()]
    gens = [list(level)]
    for _ in range(1, max_depth):
        nxt = []
        for g in generators:
            for b in level:
                br = lie_bracket(g, b)
                if not br.is_zero():
                    nxt.append(br)
        gens.append(nxt)
        level = nxt
    return gens


def _rank2(vectors, tol_rel=1e-12) -> int:
    """Rank of a set of 2-vectors by Gaussian elimination.

    Pivot tolerance is tol_rel times the largest entry magnitude.
    """
    rows = [list(v) for v in vectors]
    if not rows:
        return 0
    big = max(max(abs(a), abs(b)) for a, b in rows)
    if big == 0.0:
        return 0
    tol = tol_rel * big
    rank = 0
    for col in range(2):
        pivot_i = None
        pivot = tol
        for i, r in enumerate(rows):
            if abs(r[col]) > pivot:
                pivot = abs(r[col])
                pivot_i = i
        if pivot_i is None:
            continue
        prow = rows.pop(pivot_i)
        rank += 1
        if rank == 2:
            return 2
        for r in rows:
            f = r[col] / prow[col]
            r[0] -= f * prow[0]
            r[1] -= f * prow[1]
    return rank


def hormander_rank(p: ModelParams, z: State, max_depth: int) -> int:
    """Dimension spanned at z by the noise fields and brackets up to max_depth."""
    vecs = []
    for gen in bracket_generations(p, max_depth):
        for f in gen:
            vecs.append(f.eval(z.x, z.y))
    return _rank2(vecs)
