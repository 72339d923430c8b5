"""Model coefficients and states for the planar quadratic SDE

    dX = (a1*X - alpha1*X^2 + Y^2) dt + sqrt(2*kappa1) dB1
    dY = (a2*Y - alpha2*X*Y)       dt + sqrt(2*kappa2) dB2

with alpha1, alpha2 > 0, kappa1 >= 0, kappa2 > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ModelParams", "State", "complex_system_params", "turbulent_params"]


@dataclass(frozen=True)
class ModelParams:
    a1: float
    a2: float
    alpha1: float
    alpha2: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        vals = (self.a1, self.a2, self.alpha1, self.alpha2, self.kappa1, self.kappa2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if self.alpha1 <= 0.0 or self.alpha2 <= 0.0:
            raise ValueError("alpha1 and alpha2 must be positive")
        if self.kappa1 < 0.0:
            raise ValueError("kappa1 must be non-negative")
        if self.kappa2 <= 0.0:
            raise ValueError("kappa2 must be positive")

    def with_kappa(self, kappa1=None, kappa2=None) -> "ModelParams":
        return ModelParams(self.a1, self.a2, self.alpha1, self.alpha2,
                           self.kappa1 if kappa1 is None else kappa1,
                           self.kappa2 if kappa2 is None else kappa2)


@dataclass(frozen=True)
class State:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("state coordinates must be finite")

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def complex_system_params(kappa1: float, kappa2: float) -> ModelParams:
    """The complex-variable special case dZ = (-Z - Z^2) dt + noise.

    Corresponds to a = (-1, -1), alpha = (1, 2); here alpha2 > alpha1,
    so the system is ergodic.
    """
    return ModelParams(-1.0, -1.0, 1.0, 2.0, kappa1, kappa2)


def turbulent_params(R: float, h: float, kappa1: float, kappa2: float) -> ModelParams:
    """Velocity-difference model in a rough flow with Hoelder exponent h.

    R (held constant) sets the separation scale.  After rescaling the
    second coordinate by sqrt(R) the system takes the standard quadratic
    form with a = (-1, -1), alpha = (h/R, (1+h)/R) and y-noise kappa2/R.
    alpha2 > alpha1 always holds, so this family is ergodic.
    """
    if not (0.0 < h < 1.0):
        raise ValueError("h must lie in (0, 1)")
    if R <= 0.0:
        raise ValueError("R must be positive")
    return ModelParams(-1.0, -1.0, h / R, (1.0 + h) / R, kappa1, kappa2 / R)
