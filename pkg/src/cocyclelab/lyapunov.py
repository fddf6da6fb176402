"""Finite-scale Lyapunov exponents, complexified profiles, Herman's lower
bound and a cone-field uniform-hyperbolicity certificate.

Irrational frequencies use Birkhoff averaging of the norm growth over one
long orbit per starting phase (the a.e. orbit form of the limit); rational
frequencies use the exact identity LE = (1/q) * average over x of
log r_spec(A^{(q)}(x + i nu)), evaluated by periodic trapezoid quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .arithmetic import Frequency
from .cocycle import PreconditionError, q_step_grid
from .potentials import Potential, pole_data

QUADRATURE_POINTS = 2048
CHUNK = 1 << 20


@dataclass
class LEEstimate:
    value: float  # raw; may be tiny-negative at finite n
    n_steps: int
    n_phases: int
    stderr: float
    convergence_gap: float
    method: str = "orbit"

    @property
    def clamped(self) -> float:
        return max(self.value, 0.0)


@dataclass
class LyapunovProfile:
    nu_grid: np.ndarray
    values: np.ndarray
    second_differences: np.ndarray
    slope: float
    intercept: float
    quantization_residual: float
    stderr: float = 0.0
    estimates: list = field(default_factory=list)


def _orbit_logscale(V: Potential, E: float, alpha: float, x0: float,
                    n: int, nu: float) -> tuple[float, float]:
    """(log-scale over n steps, log-scale over first n//2 steps)."""
    half = n // 2
    ls = 0.0
    ls_half = 0.0
    done = 0
    # chunk boundaries aligned with n//2 so the half-length partial is exact
    bounds = sorted({min(b, n) for b in
                     list(range(CHUNK, n + CHUNK, CHUNK)) + [half, n]})
    for b in bounds:
        m = b - done
        if m <= 0:
            continue
        ks = np.arange(done, b)
        xs = np.mod(x0 + alpha * ks, 1.0)
        if nu != 0.0:
            wv = np.asarray(E - V.eval(xs + 1j * nu), dtype=np.complex128)
            ls += kernels.logscale_complex(wv)
        else:
            wv = np.asarray(E - V.eval(xs), dtype=np.float64)
            ls += kernels.logscale_real(wv)
        done = b
        if done == half:
            ls_half = ls
    return ls, ls_half


def le_estimate(V: Potential, E, alpha: Frequency | float, n: int = 10**5,
                phases: int = 4, seed: int = 0, nu: float = 0.0) -> LEEstimate:
    """Lyapunov exponent estimate at energy E and strip offset nu."""
    if n < 10**3:
        raise PreconditionError("n must be >= 1000")
    if phases < 1:
        raise PreconditionError("phases must be >= 1")
    if isinstance(alpha, Frequency) and alpha.kind == "rational":
        return _le_rational(V, E, alpha, nu)
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    rng = np.random.default_rng(seed)
    x0s = rng.random(phases)
    vals = np.empty(phases)
    halves = np.empty(phases)
    for i, x0 in enumerate(x0s):
        ls, ls_half = _orbit_logscale(V, E, a, float(x0), n, nu)
        vals[i] = ls / n
        halves[i] = ls_half / (n // 2)
    value = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(phases)) if phases > 1 else 0.0
    gap = abs(value - float(halves.mean()))
    return LEEstimate(value=value, n_steps=n, n_phases=phases,
                      stderr=stderr, convergence_gap=gap, method="orbit")


def spectral_radius_grid(M: np.ndarray) -> np.ndarray:
    """max |eigenvalue| for a stack of unimodular 2x2 matrices."""
    tr = M[:, 0, 0] + M[:, 1, 1]
    half = tr.astype(np.complex128) / 2.0
    root = np.sqrt(half * half - 1.0)
    return np.maximum(np.abs(half + root), np.abs(half - root))


def _le_rational(V: Potential, E, pq: Frequency, nu: float,
                 npts: int = QUADRATURE_POINTS) -> LEEstimate:
    """(1/q) * integral of log r_spec(A^{(q)}(x+i nu)) dx, trapezoid rule."""
    def quad(m):
        xs = np.arange(m) / m
        if nu != 0.0:
            xs = xs + 1j * nu
        M = q_step_grid(V, E, pq, xs)
        r = spectral_radius_grid(M)
        return float(np.mean(np.log(np.maximum(r, 1.0)))) / pq.q

    v = quad(npts)
    v_half = quad(npts // 2)
    gap = abs(v - v_half)
    return LEEstimate(value=v, n_steps=npts, n_phases=1, stderr=gap,
                      convergence_gap=gap, method="rational-quadrature")


def le_profile(V: Potential, E, alpha: Frequency | float,
               nu_grid: np.ndarray, n: int = 10**5, phases: int = 4,
               seed: int = 0, fit_window: tuple[float, float] | None = None,
               ) -> LyapunovProfile:
    """Sampled map nu -> LE(alpha, A_nu) with affine-fit diagnostics."""
    nu_grid = np.asarray(nu_grid, dtype=float)
    if np.any(np.diff(nu_grid) <= 0.0):
        raise PreconditionError("nu grid must be strictly increasing")
    ests = [le_estimate(V, E, alpha, n=n, phases=phases, seed=seed, nu=float(nu))
            for nu in nu_grid]
    vals = np.array([e.value for e in ests])
    stderr = float(max(max(e.stderr, e.convergence_gap) for e in ests))
    d2 = np.diff(vals, 2)
    if fit_window is None:
        mask = np.ones(len(nu_grid), dtype=bool)
    else:
        lo, hi = fit_window
        mask = (nu_grid >= lo) & (nu_grid <= hi)
    slope, intercept = np.polyfit(nu_grid[mask], vals[mask], 1)
    s2pi = slope / (2.0 * math.pi)
    qres = abs(s2pi - round(s2pi))
    return LyapunovProfile(nu_grid=nu_grid, values=vals, second_differences=d2,
                           slope=float(slope), intercept=float(intercept),
                           quantization_residual=float(qres), stderr=stderr,
                           estimates=ests)


def herman_lower_bound(K: float, lam: float, E: float) -> float:
    """log z0 + log((|E| + sqrt(E^2-4))/2); subharmonicity lower bound for LE.

    Independent of K and of the frequency.  May be <= 0 near |E| = 2, in
    which case it carries no information (callers should treat non-positive
    values as uninformative).
    """
    if abs(E) <= 2.0:
        raise PreconditionError("Herman bound needs |E| > 2")
    z0 = pole_data(lam, K).z0
    return math.log(z0) + math.log((abs(E) + math.sqrt(E * E - 4.0)) / 2.0)


@dataclass
class UHCertificate:
    uniformly_hyperbolic: bool
    n_steps: int
    cone_tangent: float
    max_contraction: float  # max over grid of sigma2/sigma1 per block
    max_misalignment: float  # max |sin angle(u1(x), v1(x + n alpha))|
    min_growth: float  # min over grid of (1/n) log sigma1


def _block_svd(V: Potential, E: float, alpha: float, xs: np.ndarray, n: int):
    """n-step products from each x in xs: (log sigma1, sigma2/sigma1, u1, v1)."""
    G = len(xs)
    M = np.broadcast_to(np.eye(2), (G, 2, 2)).copy()
    logn = np.zeros(G)
    for k in range(n):
        w = np.asarray(E - V.eval(np.mod(xs + k * alpha, 1.0)))
        top = w[:, None] * M[:, 0, :] - M[:, 1, :]
        M = np.stack([top, M[:, 0, :]], axis=1)
        nrm = np.sqrt(np.sum(M * M, axis=(1, 2)))
        M /= nrm[:, None, None]
        logn += np.log(nrm)
    U, S, Vt = np.linalg.svd(M)
    log_s1 = logn + np.log(S[:, 0])
    kappa = S[:, 1] / S[:, 0]
    return log_s1, kappa, U[:, :, 0], Vt[:, 0, :]


def uh_test(V: Potential, E: float, alpha: Frequency | float, n: int = 100,
            margin: float = 0.05, grid: int = 2048,
            cone_tangent: float = 1.0) -> UHCertificate:
    """Cone-field certificate for uniform hyperbolicity.

    Splits the orbit into n-step blocks; certifies when every block contracts
    the cone of half-tangent `cone_tangent` around its leading input
    direction into the corresponding cone of the next block with relative
    margin, and the leading singular value grows at rate >= margin.
    Failure to certify is a negative verdict, not an error.
    """
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    xs = np.arange(grid) / grid
    log_s1, kappa, u1, _ = _block_svd(V, E, a, xs, n)
    _, kappa2, _, v1_next = _block_svd(V, E, a, np.mod(xs + n * a, 1.0), n)
    cross = np.abs(u1[:, 0] * v1_next[:, 1] - u1[:, 1] * v1_next[:, 0])
    kmax = float(max(kappa.max(), kappa2.max()))
    dmax = float(cross.max())
    growth = float(log_s1.min() / n)
    t = cone_tangent
    ok = (growth >= margin) and (dmax + kmax * t <= t * (1.0 - margin))
    return UHCertificate(uniformly_hyperbolic=bool(ok), n_steps=n,
                         cone_tangent=t, max_contraction=kmax,
                         max_misalignment=dmax, min_growth=growth)
