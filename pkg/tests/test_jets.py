import math

import numpy as np

from driftcert.jets import (Jet2, abs_pow, expj, jet_xy, pos_pow, smoothstep)


def _fd_jet(f, x, y, h=1e-6):
    v = f(x, y)
    return {
        "v": v,
        "dx": (f(x + h, y) - f(x - h, y)) / (2 * h),
        "dy": (f(x, y + h) - f(x, y - h)) / (2 * h),
        "dxx": (f(x + h, y) - 2 * v + f(x - h, y)) / h ** 2,
        "dyy": (f(x, y + h) - 2 * v + f(x, y - h)) / h ** 2,
        "dxy": (f(x + h, y + h) - f(x + h, y - h)
                - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h),
    }


def _check(jet, fd, rtol=1e-5, atol=1e-4):
    for name in ("v", "dx", "dy", "dxx", "dxy", "dyy"):
        a = float(getattr(jet, name))
        b = fd[name]
        assert abs(a - b) <= rtol * abs(b) + atol, f"{name}: {a} vs {b}"


def test_product_and_power_jets_match_fd():
    def f(x, y):
        return (x * x + 3 * y) * abs(x) ** 1.7 - y ** 3 / (1 + x * x)

    def jf(x, y):
        X, Y = jet_xy(x, y)
        return (X * X + 3 * Y) * abs_pow(X, 1.7) - Y * Y * Y / (1 + X * X)

    for x, y in [(1.3, -0.7), (-2.1, 0.4), (0.8, 2.2)]:
        _check(jf(np.float64(x), np.float64(y)), _fd_jet(f, x, y))


def test_exp_and_division_jets():
    def f(x, y):
        return math.exp(-x * y / 4.0) / (x ** 2 + y ** 2)

    def jf(x, y):
        X, Y = jet_xy(x, y)
        return expj(X * Y * (-0.25)) / (X * X + Y * Y)

    for x, y in [(1.0, 1.0), (-1.5, 2.0), (0.3, -0.9)]:
        _check(jf(np.float64(x), np.float64(y)), _fd_jet(f, x, y))


def test_pos_pow_matches_fractional_powers():
    def f(x, y):
        return (2 * x * x + y * y) ** 0.31

    def jf(x, y):
        X, Y = jet_xy(x, y)
        return pos_pow(2 * X * X + Y * Y, 0.31)

    _check(jf(np.float64(0.7), np.float64(-1.2)), _fd_jet(f, 0.7, -1.2))


def test_jets_vectorize_over_arrays():
    x = np.array([1.0, -2.0, 0.5])
    y = np.array([0.5, 1.5, -1.0])
    X, Y = jet_xy(x, y)
    j = X * X + Y
    assert np.allclose(j.v, x * x + y)
    assert np.allclose(j.dx, 2 * x)
    assert np.allclose(j.dxx, 2.0)
    assert np.allclose(j.dyy, 0.0)


def test_smoothstep_boundary_and_symmetry():
    assert smoothstep.val(-3.0) == 0.0
    assert smoothstep.val(0.0) == 0.0
    assert smoothstep.val(1.0) == 1.0
    assert smoothstep.val(7.0) == 1.0
    # bump is symmetric about 1/2, so the cumulative hits 1/2 there
    assert abs(smoothstep.val(0.5) - 0.5) < 1e-12
    t = np.linspace(0.05, 0.95, 19)
    vals = smoothstep.val(t)
    assert np.all(np.diff(vals) > 0)
    assert np.allclose(vals + smoothstep.val(1.0 - t)[::-1][::-1] * 0 + smoothstep.val(1.0 - t) - 1.0,
                       0.0, atol=1e-12)


def test_smoothstep_derivatives_match_fd():
    t = np.linspace(0.02, 0.98, 25)
    h = 1e-6
    d1_fd = (smoothstep.val(t + h) - smoothstep.val(t - h)) / (2 * h)
    d2_fd = (smoothstep.d1(t + h) - smoothstep.d1(t - h)) / (2 * h)
    assert np.max(np.abs(d1_fd - smoothstep.d1(t))) < 1e-7
    assert np.max(np.abs(d2_fd - smoothstep.d2(t))) < 1e-6


def test_smoothstep_flat_outside_transition():
    for t in (-0.5, 0.0, 1.0, 2.0):
        assert smoothstep.d1(t) == 0.0
        assert smoothstep.d2(t) == 0.0


def test_jet_linearity():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b = rng.normal(size=2)
        j1 = Jet2(*rng.normal(size=6))
        j2 = Jet2(*rng.normal(size=6))
        lhs = a * j1 + b * j2
        for name in ("v", "dx", "dy", "dxx", "dxy", "dyy"):
            assert math.isclose(getattr(lhs, name),
                                a * getattr(j1, name) + b * getattr(j2, name),
                                rel_tol=1e-12, abs_tol=1e-15)
