import numpy as np
import pytest

from driftcert.params import ModelParams
from driftcert.lyapunov import cover_params


@pytest.fixture(scope="session")
def ref_params():
    """Ergodic reference configuration: a = (-1,-1), alpha = (1,2)."""
    return ModelParams(-1.0, -1.0, 1.0, 2.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def ref_cover(ref_params):
    return cover_params(ref_params)


@pytest.fixture(scope="session")
def exp_params():
    """Explosive reference configuration: alpha = (2,1), kappa = (0.1,0.1)."""
    return ModelParams(-1.0, -1.0, 2.0, 1.0, 0.1, 0.1)


def assert_jets_match_fd(field, points, rtol=1e-4):
    """Cross-check analytic jets against central finite differences.

    Step is 1e-5*(1+|z|); second-derivative comparisons get an absolute
    floor scaled by the roundoff amplification |v| eps / h^2.
    """
    for x, y in points:
        h = 1e-5 * (1.0 + float(np.hypot(x, y)))

        def v(xx, yy):
            return float(field.jet_fn(np.asarray(xx, float), np.asarray(yy, float)).v)

        j = field.jet_fn(np.asarray(x, float), np.asarray(y, float))
        v0 = float(j.v)
        floor1 = 1e-10 * (1.0 + abs(v0)) / h
        floor2 = 2e-8 * (1.0 + abs(v0)) / h ** 2 * 1e-8
        floor2 = max(floor2, 1e-9 * (1.0 + abs(v0)) / h)
        fd = {
            "dx": (v(x + h, y) - v(x - h, y)) / (2 * h),
            "dy": (v(x, y + h) - v(x, y - h)) / (2 * h),
            "dxx": (v(x + h, y) - 2 * v0 + v(x - h, y)) / h ** 2,
            "dyy": (v(x, y + h) - 2 * v0 + v(x, y - h)) / h ** 2,
            "dxy": (v(x + h, y + h) - v(x + h, y - h)
                    - v(x - h, y + h) + v(x - h, y - h)) / (4 * h * h),
        }
        for name in ("dx", "dy"):
            a = float(getattr(j, name))
            assert abs(fd[name] - a) <= rtol * abs(a) + floor1, \
                f"{field.label} {name} at ({x},{y}): fd={fd[name]} analytic={a}"
        for name in ("dxx", "dxy", "dyy"):
            a = float(getattr(j, name))
            assert abs(fd[name] - a) <= rtol * abs(a) + floor2, \
                f"{field.label} {name} at ({x},{y}): fd={fd[name]} analytic={a}"
