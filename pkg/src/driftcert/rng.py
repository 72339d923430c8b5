"""Counter-based noise streams for reproducible parallel Monte Carlo.

Normal increments are produced by Philox4x32-10 keyed by the 64-bit
master seed, with the 128-bit counter holding (step index, path index).
Every draw is therefore a pure function of (seed, path, step): ensembles
are splittable, order-independent and bit-reproducible for any worker
count, and no noise arrays ever need to be materialized.

The Box-Muller transform turns the four 32-bit words of one Philox block
into the two standard normals a single SDE step consumes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["normals_at", "path_normals"]

_W32 = np.uint64(0xFFFFFFFF)
_TWO_PI = 2.0 * np.pi
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, nogil=True, inline="always")
def _philox4x32(c0, c1, c2, c3, k0, k1):
    """10 rounds of Philox4x32 on uint64-held 32-bit lanes."""
    M0 = np.uint64(0xD2511F53)
    M1 = np.uint64(0xCD9E8D57)
    B0 = np.uint64(0x9E3779B9)
    B1 = np.uint64(0xBB67AE85)
    W = np.uint64(0xFFFFFFFF)
    for _ in range(10):
        p0 = M0 * c0
        p1 = M1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & W
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & W
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + B0) & W
        k1 = (k1 + B1) & W
    return c0, c1, c2, c3


@njit(cache=True, nogil=True, inline="always")
def normals_at(seed, path, step):
    """The pair of standard normals assigned to (seed, path, step)."""
    W = np.uint64(0xFFFFFFFF)
    s = np.uint64(seed)
    p = np.uint64(path)
    i = np.uint64(step)
    x0, x1, x2, x3 = _philox4x32(
        i & W, (i >> np.uint64(32)) & W,
        p & W, (p >> np.uint64(32)) & W,
        s & W, (s >> np.uint64(32)) & W,
    )
    v = (x0 | (x1 << np.uint64(32))) >> np.uint64(11)
    w = (x2 | (x3 << np.uint64(32))) >> np.uint64(11)
    u1 = (np.float64(v) + 1.0) * _INV53   # in (0, 1], log-safe
    u2 = (np.float64(w) + 0.5) * _INV53
    r = np.sqrt(-2.0 * np.log(u1))
    a = _TWO_PI * u2
    return r * np.cos(a), r * np.sin(a)


@njit(cache=True, nogil=True)
def _fill_path_normals(seed, path, start, out):
    for i in range(out.shape[0]):
        z1, z2 = normals_at(seed, path, start + i)
        out[i, 0] = z1
        out[i, 1] = z2


def path_normals(seed: int, path: int, n: int, start: int = 0) -> np.ndarray:
    """Materialize the (n, 2) noise block of one path; used by tests."""
    out = np.empty((int(n), 2), dtype=np.float64)
    _fill_path_normals(np.uint64(seed), np.uint64(path), np.uint64(start), out)
    return out
