"""Lyapunov drift certificates, explosion certificates and Monte Carlo
simulation for the planar quadratic SDE

    dX = (a1 X - alpha1 X^2 + Y^2) dt + sqrt(2 kappa1) dB1
    dY = (a2 Y - alpha2 X Y)       dt + sqrt(2 kappa2) dB2.

The sign of alpha2 - alpha1 separates an ergodic regime (covered by a
five-piece Lyapunov construction, certified numerically) from an
explosive one (an invariant wedge with finite-time blow-up, certified by
a bump-function inequality), and the simulator reproduces the transition.
"""

from .params import ModelParams, State, complex_system_params, turbulent_params
from .fields import drift, drift_xy, generator_apply, Region, ScalarField
from .jets import Jet2
from .polyvec import Poly2, PolyVecField, lie_bracket, hormander_rank
from .lyapunov import (CoverParams, LyapunovPiece, cover_params, make_piece,
                       strong_subcover, patch, global_phi)
from .certify import (DriftCertificate, CertificationError,
                      fit_drift_constants, verify_drift,
                      scaling_identity_check)
from .explosion import (WedgeSpec, InstabilityCertificate, choose_wedge,
                        deterministic_flow, blowup_bound_check, g_field,
                        verify_instability)
from .sim import (Trajectory, EnsembleStats, Histogram2D, sde_step, integrate,
                  ensemble, invariant_histogram, tv_distance, phase_diagram)

__version__ = "0.1.0"
