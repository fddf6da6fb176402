"""Fibered rotation numbers and the density-of-states relation.

The lift tracks the direction angle of a vector orbit.  A raw Schrodinger
step can rotate a direction by more than a half turn, so per-step
increments use the factorization S_W = R_{pi/2} * shear: the shear fixes
the vertical direction and therefore rotates by strictly less than a half
turn, making its nearest-branch increment exact; the rotation factor
contributes an exact pi/2.  Rational frequencies average the rotation
number of the q-step circle maps over a phase grid and divide by q, with
the branch of each constant-matrix rotation anchored at its closed-form
value (signed elliptic angle, or 0 / pi for hyperbolic trace signs).
Weighted Birkhoff averaging (exponential bump weights) accelerates
convergence well beyond the O(1/n) of plain averages whenever the
projective dynamics is smoothly conjugate to a rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .arithmetic import Frequency
from .cocycle import PreconditionError, q_step_grid
from .potentials import Potential

PHASE_GRID = 1024
TWO_PI = 2.0 * math.pi


def _mod_one(r: float) -> float:
    """r mod 1 with a guard against tiny-negative inputs wrapping to 1."""
    f = r % 1.0
    if f > 1.0 - 1e-9:
        f = 0.0
    return f


class ConsistencyError(ValueError):
    pass


@dataclass
class RotationEstimate:
    rho: float  # in [0, 1)
    rho_bar: float  # chosen lift
    n_steps: int
    convergence_gap: float
    method: str  # 'orbit-lift' | 'rational-average' | 'elliptic-integral'


def _birkhoff_weights(n: int) -> np.ndarray:
    t = (np.arange(1, n + 1) - 0.5) / n
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return w / w.sum()


def _weighted_mean(incr: np.ndarray) -> float:
    return float(np.sum(_birkhoff_weights(len(incr)) * incr))


def rotation_number(V: Potential, E: float, alpha: Frequency | float,
                    n: int = 10**5, x0: float = 0.0, y0: float = 0.0,
                    ) -> RotationEstimate:
    """Fibered rotation number of (alpha, S_{E-V})."""
    if n < 10**3:
        raise PreconditionError("n must be >= 1000")
    if isinstance(alpha, Frequency) and alpha.kind == "rational":
        return _rotation_rational(V, E, alpha, n)
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    xs = np.mod(x0 + a * np.arange(n), 1.0)
    wv = np.asarray(E - V.eval(xs), dtype=np.float64)
    incr = np.empty(n)
    kernels.rotation_increments(wv, y0, incr)
    rho_bar = _weighted_mean(incr) / TWO_PI
    plain = float(incr.mean()) / TWO_PI
    gap = abs(rho_bar - plain)
    return RotationEstimate(rho=_mod_one(rho_bar), rho_bar=rho_bar, n_steps=n,
                            convergence_gap=gap, method="orbit-lift")


def constant_rotation_angle(M: np.ndarray) -> np.ndarray:
    """Signed per-step rotation angle (radians) of constant SL(2,R) matrices.

    Elliptic matrices rotate by sigma*arccos(tr/2) where the orientation
    sigma = sign(M10 - M01) (conjugation-invariant: M10 - M01 vanishes only
    on symmetric, hence non-elliptic, matrices and equals 2 sin(a) > 0 for
    R_a with a in (0, pi)).  Hyperbolic matrices rotate by 0 (positive
    eigenvalues) or pi (negative eigenvalues) per step on average.
    """
    tr = M[..., 0, 0] + M[..., 1, 1]
    sigma = np.where(M[..., 1, 0] - M[..., 0, 1] >= 0.0, 1.0, -1.0)
    half = np.clip(tr / 2.0, -1.0, 1.0)
    ell = sigma * np.arccos(half)
    hyp = np.where(tr >= 0.0, 0.0, math.pi)
    return np.where(np.abs(tr) < 2.0, ell, hyp)


def matrix_rotation_increments(M: np.ndarray, n: int, y0: float = 0.1,
                               center: np.ndarray | None = None,
                               ) -> np.ndarray:
    """Angle increments of the circle maps of a stack of constant matrices.

    M has shape (G, 2, 2); returns (n, G) increments in radians.  Each
    increment is unwrapped into (center - pi, center + pi]; `center`
    defaults to the closed-form per-step rotation angle of each matrix,
    which keeps the branch correct even for elliptic matrices whose
    rotation angle is close to +-pi (nearest-to-zero unwrapping would slip
    by 2 pi there).
    """
    G = M.shape[0]
    if center is None:
        center = constant_rotation_angle(M)
    cy = np.full(G, math.cos(y0))
    sy = np.full(G, math.sin(y0))
    ang = np.arctan2(sy, cy)
    out = np.empty((n, G))
    for k in range(n):
        nx = M[:, 0, 0] * cy + M[:, 0, 1] * sy
        ny = M[:, 1, 0] * cy + M[:, 1, 1] * sy
        nang = np.arctan2(ny, nx)
        d = nang - ang - center
        d -= TWO_PI * np.round(d / TWO_PI)
        out[k] = d + center
        ang = nang
        r = np.hypot(nx, ny)
        cy = nx / r
        sy = ny / r
    return out


def _rotation_rational(V: Potential, E: float, pq: Frequency, n: int,
                       grid: int = PHASE_GRID) -> RotationEstimate:
    """rho_bar(p/q, A) = (1/q) * integral over x of rot((f^q)_x)."""
    n = min(n, 20000)  # circle-map iterations per phase
    xs = np.arange(grid) / grid
    M = q_step_grid(V, E, pq, xs)
    tr = M[:, 0, 0] + M[:, 1, 1]
    # parabolic phases converge too slowly; excluded from the average
    # (isolated |tr| = 2 points carry zero measure)
    keep = np.abs(np.abs(tr) - 2.0) > 1e-10
    incr = matrix_rotation_increments(M[keep], n)
    w = _birkhoff_weights(n)
    rot_x = (w[:, None] * incr).sum(axis=0) / TWO_PI
    plain = incr.mean(axis=0) / TWO_PI
    # average the signed per-q-step rotations, reduce mod 1 at the q-step
    # level (the branch within a period is what the average determines),
    # then divide by q
    rbar = float(rot_x.mean())
    rho_bar = rbar / pq.q
    gap = abs(rho_bar - float(plain.mean()) / pq.q)
    return RotationEstimate(rho=_mod_one(rbar) / pq.q, rho_bar=rho_bar,
                            n_steps=n, convergence_gap=gap,
                            method="rational-average")


def loop_rotation_number(loop, alpha: float, n: int = 10**4, x0: float = 0.0,
                         y0: float = 0.0) -> RotationEstimate:
    """Rotation number of a general loop A: T -> SL(2,R), irrational alpha.

    `loop` maps a phase array (m,) to matrices (m, 2, 2) and must be
    homotopic to the identity.
    """
    if loop_degree(loop) != 0:
        raise PreconditionError("loop is not homotopic to the identity")
    xs = np.mod(x0 + alpha * np.arange(n), 1.0)
    A = loop(xs)
    # branch anchor per step: the closed-form rotation angle of each matrix
    # (guards against 2 pi slips when steps rotate by nearly a half turn)
    centers = constant_rotation_angle(A)
    cy, sy = math.cos(y0), math.sin(y0)
    ang = math.atan2(sy, cy)
    incr = np.empty(n)
    for k in range(n):
        nx = A[k, 0, 0] * cy + A[k, 0, 1] * sy
        ny = A[k, 1, 0] * cy + A[k, 1, 1] * sy
        nang = math.atan2(ny, nx)
        d = nang - ang - centers[k]
        d -= TWO_PI * round(d / TWO_PI)
        incr[k] = d + centers[k]
        ang = nang
        r = math.hypot(nx, ny)
        cy, sy = nx / r, ny / r
    rho_bar = _weighted_mean(incr) / TWO_PI
    gap = abs(rho_bar - float(incr.mean()) / TWO_PI)
    return RotationEstimate(rho=_mod_one(rho_bar), rho_bar=rho_bar, n_steps=n,
                            convergence_gap=gap, method="orbit-lift")


def loop_degree(loop, grid: int = 512) -> int:
    """Winding of x -> A(x) e_0 around the circle; 0 iff homotopic to id."""
    xs = np.arange(grid + 1) / grid
    A = loop(np.mod(xs, 1.0))
    ang = np.arctan2(A[:, 1, 0], A[:, 0, 0])
    d = np.diff(ang)
    d = np.where(d <= -np.pi, d + TWO_PI, np.where(d > np.pi, d - TWO_PI, d))
    return int(round(d.sum() / TWO_PI))


def elliptic_rotation_integral(V: Potential, E: float, pq: Frequency,
                               npts: int = 4096) -> RotationEstimate:
    """rho(p/q, S_{E-V}) = (1/(2 pi q)) * integral of arccos(tau_E(x)/2) dx.

    Requires the q-step product to be totally elliptic on the grid.  The
    arccos integrand is signed by the loop orientation so that the result
    agrees with the rational-average route (and with the irrational-orbit
    limit) for either rotation direction of the elliptic family.
    """
    xs = np.arange(npts) / npts
    M = q_step_grid(V, E, pq, xs)
    tr = M[:, 0, 0] + M[:, 1, 1]
    bad = np.abs(tr) >= 2.0
    if bad.any():
        i = int(np.argmax(bad))
        raise PreconditionError(
            f"q-step not totally elliptic: |tr| = {abs(tr[i]):.6f} at x = {xs[i]}")
    # orientation of the elliptic family: sign(M10 - M01) is continuous and
    # nonvanishing on elliptic matrices, hence constant over the loop
    sigma = float(np.sign(np.mean(M[:, 1, 0] - M[:, 0, 1])))
    r = sigma * float(np.mean(np.arccos(tr / 2.0))) / TWO_PI
    r_half = sigma * float(np.mean(np.arccos(tr[::2] / 2.0))) / TWO_PI
    return RotationEstimate(rho=_mod_one(r) / pq.q, rho_bar=r / pq.q,
                            n_steps=npts,
                            convergence_gap=abs(r - r_half) / pq.q,
                            method="elliptic-integral")


def density_of_states(rho: RotationEstimate, tol: float = 1e-6) -> float:
    """N(E) = 1 - 2 rho for Schrodinger cocycles; rho must be in [0, 1/2]."""
    r = rho.rho
    if r > 0.5 + tol:
        raise ConsistencyError(f"rho = {r} > 1/2; not a Schrodinger rotation number")
    return 1.0 - 2.0 * min(r, 0.5)
