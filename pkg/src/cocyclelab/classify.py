"""Classification of SL(2,R) loops: total ellipticity, mixed type,
regularity via trace transversality, and the dominant eigenvalue branch on
complexified circles.

Loops are callables mapping a phase array (m,) -- real or complex -- to a
matrix stack (m, 2, 2).  `schrodinger_qstep_loop` builds the q-step loop of
a Schrodinger cocycle at rational frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arithmetic import Frequency
from .cocycle import PreconditionError, q_step_grid
from .potentials import Potential

TWO_PI = 2.0 * math.pi
PARABOLIC_TOL = 1e-8
UNIT_CIRCLE_TOL = 1e-6
HPRIME_BISECT_TOL = 1e-4


class RegularityViolation(ValueError):
    pass


def schrodinger_qstep_loop(V: Potential, E: float, pq: Frequency):
    """The loop x -> A_E^{(q)}(x); supports complex phases on the strip."""
    def loop(xs):
        return q_step_grid(V, E, pq, np.asarray(xs))
    loop.strip_halfwidth = V.strip_halfwidth
    return loop


@dataclass
class EllipticityReport:
    grid: np.ndarray
    traces: np.ndarray
    classes: np.ndarray  # 'e' elliptic, 'h' hyperbolic, 'p' parabolic-within-tol
    margin: float  # 2 - max|tr|, may be negative
    crossing_intervals: list  # maximal [x_lo, x_hi] runs with |tr| <= 2
    transversal: bool
    min_crossing_derivative: float
    verdict: str  # 'totally-elliptic' | 'totally-hyperbolic' | 'mixed'


def _spectral_derivative(vals: np.ndarray) -> np.ndarray:
    """d/dx of a smooth 1-periodic sampled function via FFT."""
    n = len(vals)
    k = np.fft.fftfreq(n, d=1.0 / n)
    return np.real(np.fft.ifft(2j * np.pi * k * np.fft.fft(vals)))


def _runs(mask: np.ndarray, xs: np.ndarray) -> list:
    """Maximal circular runs of True, as [x_lo, x_hi] closed intervals."""
    if mask.all():
        return [[float(xs[0]), float(xs[-1])]]
    if not mask.any():
        return []
    n = len(mask)
    shift = int(np.argmin(mask))  # rotate so a False comes first
    m = np.roll(mask, -shift)
    x = np.roll(xs, -shift)
    out = []
    i = 0
    while i < n:
        if m[i]:
            j = i
            while j + 1 < n and m[j + 1]:
                j += 1
            out.append([float(x[i]), float(x[j])])
            i = j + 1
        else:
            i += 1
    return out


def ellipticity_report(loop, grid_size: int = 1024) -> EllipticityReport:
    """Pointwise elliptic/hyperbolic/parabolic classification of a loop."""
    if grid_size < 256:
        raise PreconditionError("grid_size must be >= 256")
    xs = np.arange(grid_size) / grid_size
    M = loop(xs)
    tr = np.real(M[:, 0, 0] + M[:, 1, 1])
    abs_tr = np.abs(tr)
    classes = np.where(abs_tr < 2.0 - PARABOLIC_TOL, "e",
                       np.where(abs_tr > 2.0 + PARABOLIC_TOL, "h", "p"))
    margin = float(2.0 - abs_tr.max())
    lip = float(np.max(np.abs(np.diff(tr))) * grid_size) + 1e-30
    tol = 10.0 * lip / grid_size
    crossing = abs_tr <= 2.0 + PARABOLIC_TOL
    intervals = _runs(crossing, xs)
    dtr = _spectral_derivative(tr)
    if crossing.any():
        min_d = float(np.min(np.abs(dtr[crossing])))
    else:
        min_d = float("inf")
    transversal = (not crossing.any()) or min_d > tol
    if margin >= tol:
        verdict = "totally-elliptic"
    elif not crossing.any():
        verdict = "totally-hyperbolic"
    else:
        verdict = "mixed"
    return EllipticityReport(grid=xs, traces=tr, classes=classes,
                             margin=margin, crossing_intervals=intervals,
                             transversal=transversal,
                             min_crossing_derivative=min_d, verdict=verdict)


def _eigvals_off_circle(loop, nu: float, grid_size: int) -> bool:
    xs = np.arange(grid_size) / grid_size + 1j * nu
    M = loop(xs)
    tr = M[:, 0, 0] + M[:, 1, 1]
    half = tr / 2.0
    root = np.sqrt(half * half - 1.0)
    lam = np.where(np.abs(half + root) >= np.abs(half - root),
                   half + root, half - root)
    return bool(np.min(np.abs(np.abs(lam) - 1.0)) > UNIT_CIRCLE_TOL)


@dataclass
class RegularityResult:
    regular: bool
    h_prime: float
    min_transversal_derivative: float
    witness: object  # failing x (criterion) or None


def regularity_check(loop, grid_size: int = 1024,
                     h: float | None = None) -> RegularityResult:
    """Trace-transversality regularity criterion plus h' estimation.

    Regular when |d/dx tr| > 0 on the crossing set {|tr| <= 2} (vacuously
    when there is no crossing).  h' is the largest nu <= h such that no
    eigenvalue of A(x + i nu) sits within 1e-6 of the unit circle on the
    phase grid, located by bisection.
    """
    if h is None:
        h = getattr(loop, "strip_halfwidth", 0.0)
    if h <= 0.0:
        raise PreconditionError("loop has no analytic strip")
    rep = ellipticity_report(loop, grid_size)
    if not rep.transversal:
        cross = np.abs(rep.traces) <= 2.0 + PARABOLIC_TOL
        dtr = _spectral_derivative(rep.traces)
        bad = np.where(cross & (np.abs(dtr) <= rep.min_crossing_derivative
                                + 1e-30))[0]
        wit = float(rep.grid[bad[0]]) if len(bad) else None
        return RegularityResult(False, 0.0, rep.min_crossing_derivative, wit)
    # find the largest nu in (0, h] with all eigenvalues off the unit circle
    lo = None
    for nu in np.geomspace(h, h * 1e-4, 16):
        if _eigvals_off_circle(loop, nu, grid_size):
            lo = nu
            break
    if lo is None:
        return RegularityResult(False, 0.0, rep.min_crossing_derivative, None)
    hi = h
    if _eigvals_off_circle(loop, hi, grid_size):
        return RegularityResult(True, float(hi), rep.min_crossing_derivative,
                                None)
    while hi - lo > HPRIME_BISECT_TOL * h:
        mid = 0.5 * (lo + hi)
        if _eigvals_off_circle(loop, mid, grid_size):
            lo = mid
        else:
            hi = mid
    return RegularityResult(True, float(lo), rep.min_crossing_derivative, None)


@dataclass
class EigenBranch:
    nu: float
    values: np.ndarray  # lambda_A on the phase grid
    winding: int  # r_A
    mean_log: complex  # theta_bar_A
    spectral_radius_min: float
    log_integral: float  # integral of log|lambda_A(x+i nu)| dx

    @property
    def winding_nonneg(self) -> bool:
        return self.winding >= 0

    @property
    def mean_log_re_nonneg(self) -> bool:
        return self.mean_log.real >= -1e-6


def eigen_branch(loop, nu: float, grid_size: int = 1024) -> EigenBranch:
    """Dominant eigenvalue branch lambda_A on the circle Im z = nu.

    Selects |mu| > 1 pointwise; on a regular circle the two roots stay off
    the unit circle, never meet, and the pointwise dominant choice is
    therefore already the continuous branch (a nearest-neighbor continuity
    heuristic would misfire where lambda moves fast across the peak).  The
    winding r_A is minus the unwrapped-argument winding of the branch (so
    the complexified Lyapunov slope is +2 pi r_A) and theta_bar_A comes
    from quadrature of the de-wound log lambda_A.
    """
    xs = np.arange(grid_size) / grid_size
    zs = xs + 1j * nu
    M = loop(zs)
    # complex dtype even if the loop returns real matrices (elliptic traces
    # would otherwise NaN the square root instead of raising below)
    tr = (M[:, 0, 0] + M[:, 1, 1]).astype(complex)
    half = tr / 2.0
    root = np.sqrt(half * half - 1.0)
    lam = np.where(np.abs(half + root) >= np.abs(half - root),
                   half + root, half - root)
    rmin = float(np.min(np.abs(lam)))
    if rmin <= 1.0 + UNIT_CIRCLE_TOL:
        i = int(np.argmin(np.abs(lam)))
        raise RegularityViolation(
            f"|lambda| = {rmin:.8f} at x = {xs[i]}: branch touches unit circle")
    ang = np.unwrap(np.angle(lam))
    closing = np.angle(lam[0]) - ang[-1]
    closing = (closing + np.pi) % TWO_PI - np.pi
    total = ang[-1] + closing - ang[0]
    winding_f = total / TWO_PI
    arg_winding = int(round(winding_f))
    if abs(winding_f - arg_winding) > 0.01:
        raise RegularityViolation(
            f"non-integral winding {winding_f:.4f}; branch not continuous")
    logs = np.log(np.abs(lam)) + 1j * ang
    mean_log = complex(np.mean(logs - TWO_PI * 1j * arg_winding * zs))
    log_int = float(np.mean(np.log(np.abs(lam))))
    # lambda(z) = e^{2 pi i w z} g(z) with g non-vanishing, so the slope of
    # nu -> integral of log|lambda(x + i nu)| is -2 pi w; the acceleration
    # index r_A is therefore minus the argument winding
    return EigenBranch(nu=nu, values=lam, winding=-arg_winding,
                       mean_log=mean_log, spectral_radius_min=rmin,
                       log_integral=log_int)
