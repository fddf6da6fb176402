"""Hot loops for transfer-matrix orbit averaging, jitted with numba.

The inner recursion multiplies S_W = [[W,-1],[1,0]] into a running 2x2
product and rescales by the operator norm (closed form for 2x2) every step,
accumulating the log of the factors.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True, nogil=True)
def logscale_real(wvals):
    """log of operator norm growth of the product over precomputed W values."""
    a = 1.0
    b = 0.0
    c = 0.0
    d = 1.0
    ls = 0.0
    for k in range(wvals.shape[0]):
        w = wvals[k]
        na = w * a - c
        nb = w * b - d
        c = a
        d = b
        a = na
        b = nb
        f = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = f * f - 4.0 * det * det
        if disc < 0.0:
            disc = 0.0
        s1 = np.sqrt(0.5 * (f + np.sqrt(disc)))
        a /= s1
        b /= s1
        c /= s1
        d /= s1
        ls += np.log(s1)
    return ls


@njit(cache=True, fastmath=True, nogil=True)
def logscale_scan(vorbit, energies):
    """logscale_real for every E over a shared potential orbit."""
    out = np.empty(energies.shape[0])
    for i in range(energies.shape[0]):
        a = 1.0
        b = 0.0
        c = 0.0
        d = 1.0
        ls = 0.0
        E = energies[i]
        for k in range(vorbit.shape[0]):
            w = E - vorbit[k]
            na = w * a - c
            nb = w * b - d
            c = a
            d = b
            a = na
            b = nb
            f = a * a + b * b + c * c + d * d
            det = a * d - b * c
            disc = f * f - 4.0 * det * det
            if disc < 0.0:
                disc = 0.0
            s1 = np.sqrt(0.5 * (f + np.sqrt(disc)))
            a /= s1
            b /= s1
            c /= s1
            d /= s1
            ls += np.log(s1)
        out[i] = ls
    return out


@njit(cache=True, nogil=True)
def logscale_complex(wvals):
    """Complex-entry variant for complexified phases."""
    a = 1.0 + 0.0j
    b = 0.0j
    c = 0.0j
    d = 1.0 + 0.0j
    ls = 0.0
    for k in range(wvals.shape[0]):
        w = wvals[k]
        na = w * a - c
        nb = w * b - d
        c = a
        d = b
        a = na
        b = nb
        f = (a.real * a.real + a.imag * a.imag + b.real * b.real
             + b.imag * b.imag + c.real * c.real + c.imag * c.imag
             + d.real * d.real + d.imag * d.imag)
        det = a * d - b * c
        det2 = det.real * det.real + det.imag * det.imag
        disc = f * f - 4.0 * det2
        if disc < 0.0:
            disc = 0.0
        s1 = np.sqrt(0.5 * (f + np.sqrt(disc)))
        a /= s1
        b /= s1
        c /= s1
        d /= s1
        ls += np.log(s1)
    return ls


@njit(cache=True, fastmath=True, nogil=True)
def rotation_increments(wvals, y0, out):
    """Per-step angle increments (radians) of the projective orbit.

    A raw Schrodinger step can rotate a direction by more than a half turn
    (large |W| sends directions just below the x-axis almost all the way
    around), so naive per-step unwrapping into (-pi, pi] slips by 2 pi.  The
    factorization S_W = R_{pi/2} [[1,0],[-W,1]] removes the ambiguity: the
    shear fixes the vertical direction, hence rotates every vector by
    strictly less than a half turn, so its nearest-branch increment is exact
    and the step increment is that plus the exact pi/2 of the rotation
    factor.
    """
    cy = np.cos(y0)
    sy = np.sin(y0)
    ang = np.arctan2(sy, cy)
    half_pi = 0.5 * np.pi
    for k in range(wvals.shape[0]):
        w = wvals[k]
        lx = cy
        ly = sy - w * cy
        d = np.arctan2(ly, lx) - ang
        if d <= -np.pi:
            d += 2.0 * np.pi
        elif d > np.pi:
            d -= 2.0 * np.pi
        out[k] = d + half_pi
        nx = w * cy - sy
        ny = cy
        ang = np.arctan2(ny, nx)
        r = np.sqrt(nx * nx + ny * ny)
        cy = nx / r
        sy = ny / r


@njit(cache=True, fastmath=True, nogil=True)
def rotation_lift_real(wvals, y0):
    """Total angle increment (radians) of the projective orbit of a vector.

    Same shear-factorized lift as `rotation_increments`: increment of the
    vertical-fixing shear (always in (-pi, pi)) plus the exact pi/2 of the
    rotation factor of S_W.
    """
    cy = np.cos(y0)
    sy = np.sin(y0)
    total = 0.0
    ang = np.arctan2(sy, cy)
    half_pi = 0.5 * np.pi
    for k in range(wvals.shape[0]):
        w = wvals[k]
        lx = cy
        ly = sy - w * cy
        d = np.arctan2(ly, lx) - ang
        if d <= -np.pi:
            d += 2.0 * np.pi
        elif d > np.pi:
            d -= 2.0 * np.pi
        total += d + half_pi
        nx = w * cy - sy
        ny = cy
        ang = np.arctan2(ny, nx)
        r = np.sqrt(nx * nx + ny * ny)
        cy = nx / r
        sy = ny / r
    return total
