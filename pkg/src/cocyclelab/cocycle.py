"""Transfer-matrix products for Schrodinger cocycles.

The fiber map is S_W = [[W, -1], [1, 0]] with W = E - V(x).  Products over
the orbit x, x+alpha, ... are accumulated with per-step operator-norm
rescaling so that n up to 1e7 never overflows; the accumulated log of the
norm factors is the quantity the Lyapunov module averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arithmetic import Frequency
from .potentials import Potential

DET_TOL = 1e-9


class PreconditionError(ValueError):
    pass


def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def op_norm_2x2(M: np.ndarray) -> float:
    """Largest singular value, closed form."""
    f = float(np.sum(np.abs(M) ** 2))
    det = abs(complex(M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]))
    disc = max(f * f - 4.0 * det * det, 0.0)
    return math.sqrt(0.5 * (f + math.sqrt(disc)))


def renormalize_det(M: np.ndarray) -> np.ndarray:
    """Divide by sqrt(det) when unimodularity has drifted beyond tolerance."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    nrm2 = float(np.sum(np.abs(M) ** 2))
    if abs(det - 1.0) > DET_TOL * (1.0 + nrm2):
        return M / np.sqrt(det)
    return M


@dataclass
class ScaledProduct:
    """Normalized product matrix plus the accumulated log norm factor."""

    matrix: np.ndarray  # unit operator norm
    log_scale: float
    steps: int

    def reconstruct(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.matrix


def schrodinger_step(V: Potential, E, x) -> np.ndarray:
    """S_{E-V}(x); determinant 1 by construction."""
    w = E - V.eval(x)
    dtype = complex if (np.iscomplexobj(np.asarray(x)) or isinstance(E, complex)) \
        else float
    return np.array([[w, -1.0], [1.0, 0.0]], dtype=dtype)


def step_matrices(wvals: np.ndarray) -> np.ndarray:
    """Stack of S_W matrices, shape (n, 2, 2), from precomputed W values."""
    n = len(wvals)
    out = np.zeros((n, 2, 2), dtype=wvals.dtype)
    out[:, 0, 0] = wvals
    out[:, 0, 1] = -1.0
    out[:, 1, 0] = 1.0
    return out


def scaled_transfer(V: Potential, E, alpha: Frequency | float, x0, n: int,
                    ) -> ScaledProduct:
    """Product S(x0+(n-1)a)...S(x0) with per-step operator-norm rescaling."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    xs = (np.asarray(x0) + a * np.arange(n))
    if not np.iscomplexobj(xs):
        xs = np.mod(xs, 1.0)
    wvals = np.asarray(E - V.eval(xs))
    M = np.eye(2, dtype=wvals.dtype)
    log_scale = 0.0
    for k in range(n):
        w = wvals[k]
        r0 = w * M[0] - M[1]
        M = np.array([r0, M[0]])
        s = op_norm_2x2(M)
        M /= s
        log_scale += math.log(s)
    return ScaledProduct(matrix=M, log_scale=log_scale, steps=n)


def transfer_product(V: Potential, E, alpha, x0, n: int) -> np.ndarray:
    """Naive unscaled product, for small n and cross-validation."""
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    xs = np.asarray(x0) + a * np.arange(n)
    if not np.iscomplexobj(xs):
        xs = np.mod(xs, 1.0)
    wvals = np.asarray(E - V.eval(xs))
    M = np.eye(2, dtype=wvals.dtype)
    for k in range(n):
        r0 = wvals[k] * M[0] - M[1]
        M = np.array([r0, M[0]])
    return M


def q_step(V: Potential, E, pq: Frequency, x) -> np.ndarray:
    """A_E^{(q)}(x) = S(x+(q-1)p/q)...S(x) for rational p/q."""
    if pq.kind != "rational":
        raise PreconditionError("q_step needs a rational frequency")
    return transfer_product(V, E, pq.p / pq.q, x, pq.q)


def q_step_grid(V: Potential, E, pq: Frequency, xs: np.ndarray) -> np.ndarray:
    """Vectorized q-step products over a phase grid, shape (len(xs), 2, 2)."""
    q, p = pq.q, pq.p
    xs = np.asarray(xs)
    step = p / q
    wv = E - V.eval(xs)
    wv = np.asarray(wv)
    M = np.broadcast_to(np.eye(2, dtype=wv.dtype), (len(xs), 2, 2)).copy()
    for k in range(q):
        pts = xs + k * step
        if not np.iscomplexobj(pts):
            pts = np.mod(pts, 1.0)
        w = np.asarray(E - V.eval(pts))
        top = w[:, None] * M[:, 0, :] - M[:, 1, :]
        M = np.stack([top, M[:, 0, :]], axis=1)
    return M


def _cheb_pair(half_e: float, q: int) -> tuple[float, float]:
    """(U_{q-1}, T_q) at half_e = E/2 via the elliptic/hyperbolic branches."""
    if abs(half_e) < 1.0:
        th = math.acos(half_e)
        return math.sin(q * th) / math.sin(th), math.cos(q * th)
    if abs(half_e) == 1.0:
        s = 1.0 if half_e > 0 else -1.0
        return s ** (q - 1) * q, s ** q
    s = 1.0 if half_e > 0 else -1.0
    t = math.acosh(abs(half_e))
    return s ** (q - 1) * math.sinh(q * t) / math.sinh(t), s ** q * math.cosh(q * t)


def orbit_representative(x: float, q: int) -> float:
    """The point of the p/q-orbit of x lying in I0 = [0, 1/q)."""
    return float(np.mod(x, 1.0 / q))


def trace_closed_form(V: Potential, E: float, q: int, x: float) -> float:
    """tr A_E^{(q)}(x) = -V(x~) * sin(q th)/sin(th) + 2 cos(q th) for E=2cos th,
    with the sinh/cosh branch for |E|>2 and the q-multiplicity limit at |E|=2.

    Requires supp V inside (0, 1/q) so that at most one orbit point sees the
    potential.
    """
    if V.L_V >= 1.0 / q:
        raise PreconditionError(
            f"support length {V.L_V} >= 1/q = {1.0 / q}; closed form invalid")
    u, t2 = _cheb_pair(E / 2.0, q)
    xt = orbit_representative(x, q)
    return -float(V.eval(xt)) * u + 2.0 * t2
