"""Conjugation machinery for quasi-periodic SL(2,R) cocycles.

Pointwise diagonalization of totally elliptic loops to rotation-valued
loops (with winding correction), the periodic normal form at a nearby
rational frequency, the Fourier cohomological solver with small-divisor
guards, and the finite-order "borrow the rational reducibility" iteration
that shrinks the off-rotation part by a factor ~ |alpha - p/q| per step.

Function-valued data lives in dual representations: uniform grids for
pointwise conjugation and (centered) Fourier coefficient arrays for the
cohomological division and for smoothness-weighted norms.  Grid shifts by
irrational offsets are exact trigonometric-interpolation shifts via FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import Frequency, UnsupportedClassError
from .cocycle import PreconditionError, rotation, step_matrices
from .potentials import Potential

GRID_SIZE = 2048
FOURIER_CUTOFF = 256
DIVISOR_FLOOR = 1e-8
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
MARGIN_FLOOR = 1e-3

SYM1 = np.array([[1.0, 0.0], [0.0, -1.0]])
SYM2 = np.array([[0.0, 1.0], [1.0, 0.0]])


class ResonanceError(ValueError):
    pass


class NumericalFailureError(RuntimeError):
    pass


class MarginError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid / Fourier plumbing

def grid_points(n: int) -> np.ndarray:
    return np.arange(n) / n


def to_fourier(vals: np.ndarray, cutoff: int) -> np.ndarray:
    """Centered coefficient array c[-cutoff..cutoff] from a uniform grid."""
    n = len(vals)
    if cutoff > n // 2 - 1:
        raise PreconditionError(f"cutoff {cutoff} too large for grid {n}")
    c = np.fft.fft(vals) / n
    ks = np.arange(-cutoff, cutoff + 1)
    return c[ks % n]


def from_fourier(coeffs: np.ndarray, xs: np.ndarray) -> np.ndarray:
    cutoff = (len(coeffs) - 1) // 2
    ks = np.arange(-cutoff, cutoff + 1)
    return np.real(coeffs @ np.exp(2j * np.pi * np.outer(ks, xs)))


def fourier_to_grid(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Synthesize centered coefficients on the standard n-grid via inverse
    FFT (O(n log n), unlike the dense evaluation in `from_fourier`)."""
    cutoff = (len(coeffs) - 1) // 2
    if 2 * cutoff + 1 > n:
        raise PreconditionError("grid too small for the coefficient range")
    bins = np.zeros(n, dtype=complex)
    ks = np.arange(-cutoff, cutoff + 1)
    bins[ks % n] = coeffs
    return np.real(np.fft.ifft(bins)) * n


def shift_grid(vals: np.ndarray, delta: float) -> np.ndarray:
    """Evaluate the trig interpolant of grid samples at x + delta."""
    n = vals.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    phase = np.exp(2j * np.pi * k * delta)
    if vals.ndim > 1:
        phase = phase.reshape((n,) + (1,) * (vals.ndim - 1))
    return np.real(np.fft.ifft(np.fft.fft(vals, axis=0) * phase, axis=0))


def refine_grid(vals: np.ndarray, factor: int) -> np.ndarray:
    """Trig-interpolate grid samples onto a grid `factor` times finer."""
    n = vals.shape[0]
    c = np.fft.fft(vals, axis=0)
    m = n * factor
    out = np.zeros((m,) + vals.shape[1:], dtype=complex)
    h = n // 2
    out[:h] = c[:h]
    out[m - (n - h):] = c[h:]
    return np.real(np.fft.ifft(out, axis=0)) * factor


def weighted_norm(vals: np.ndarray, r: float,
                  cutoff: int = FOURIER_CUTOFF) -> float:
    """Smoothness-weighted Fourier norm sum over k of (1+|k|)^r |f_hat(k)|."""
    cutoff = min(cutoff, len(vals) // 2 - 1)
    c = to_fourier(vals, cutoff)
    ks = np.arange(-cutoff, cutoff + 1)
    return float(np.sum((1.0 + np.abs(ks)) ** r * np.abs(c)))


# ---------------------------------------------------------------------------
# sl(2) closed forms (Cayley-Hamilton: F^2 = -det(F) I for traceless F)

def rot_stack(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi)
    c, s = np.cos(phi), np.sin(phi)
    out = np.empty(phi.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def sl2_exp(F: np.ndarray) -> np.ndarray:
    """exp of a stack of traceless real 2x2 matrices, closed form."""
    d = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    w = np.sqrt(np.abs(d))
    small = w < 1e-8
    ws = np.where(small, 1.0, w)
    cos_part = np.where(d > 0, np.cos(ws), np.cosh(ws))
    sinc = np.where(d > 0, np.sin(ws) / ws, np.sinh(ws) / ws)
    cos_part = np.where(small, 1.0 - d / 2.0, cos_part)
    sinc = np.where(small, 1.0 - d / 6.0, sinc)
    eye = np.eye(2)
    return cos_part[..., None, None] * eye + sinc[..., None, None] * F


def sl2_log(M: np.ndarray) -> np.ndarray:
    """Principal log of a stack of SL(2,R) matrices with trace > -2."""
    tr = M[..., 0, 0] + M[..., 1, 1]
    t = tr / 2.0
    if np.any(t <= -1.0 + 1e-12):
        raise PreconditionError(
            f"matrix log undefined: half-trace {float(np.min(t)):.6f} <= -1")
    tc = np.clip(t, -1.0, 1.0)
    a = np.where(t < 1.0, np.arccos(tc), np.arccosh(np.maximum(t, 1.0)))
    small = np.abs(a) < 1e-8
    as_ = np.where(small, 1.0, a)
    fac = np.where(t < 1.0, as_ / np.sin(as_), as_ / np.sinh(as_))
    fac = np.where(small, 1.0, fac)
    eye = np.eye(2)
    F = fac[..., None, None] * (M - t[..., None, None] * eye)
    # enforce tracelessness against rounding
    half_tr = (F[..., 0, 0] + F[..., 1, 1]) / 2.0
    F = F - half_tr[..., None, None] * eye
    return F


def inv_stack(M: np.ndarray) -> np.ndarray:
    """Inverse of a stack of det-1 2x2 matrices (adjugate)."""
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1]
    out[..., 0, 1] = -M[..., 0, 1]
    out[..., 1, 0] = -M[..., 1, 0]
    out[..., 1, 1] = M[..., 0, 0]
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    return out / det[..., None, None]


def schrodinger_one_step_loop(V: Potential, E: float):
    """The one-step loop x -> S_{E-V}(x) as a grid callable."""
    def loop(xs):
        return step_matrices(np.asarray(E - V.eval(np.mod(xs, 1.0))))
    return loop


# ---------------------------------------------------------------------------
# diagonalization of totally elliptic loops

@dataclass
class EllipticLoopForm:
    grid: np.ndarray
    B: np.ndarray  # (n, 2, 2) conjugators, det 1, 1-periodic
    angles: np.ndarray  # a(x), orientation * arccos(tr/2), smooth
    correction: np.ndarray  # winding-correction angle c(x) applied to B
    residual: float  # max over grid of ||B^-1 A B - R_a||
    orientation: int  # +1 / -1: which rotation component the loop lives on
    defect: float  # periodicity defect angle absorbed by the correction


def _diagonalize_matrices(M: np.ndarray, xs: np.ndarray) -> EllipticLoopForm:
    n = len(xs)
    tr = M[:, 0, 0] + M[:, 1, 1]
    if np.any(np.abs(tr) >= 2.0):
        i = int(np.argmax(np.abs(tr) >= 2.0))
        raise PreconditionError(
            f"loop not totally elliptic: |tr| = {abs(tr[i]):.6f} at x = {xs[i]}")
    ca = tr / 2.0
    sa = np.sqrt(1.0 - ca * ca)
    lam = ca - 1j * sa  # eigenvalue e^{-i a0}, a0 in (0, pi)
    # eigenvector, choosing the better-conditioned closed form per point
    use01 = np.abs(M[:, 0, 1]) >= np.abs(M[:, 1, 0])
    w0 = np.where(use01, M[:, 0, 1], lam - M[:, 1, 1])
    w1 = np.where(use01, lam - M[:, 0, 0], M[:, 1, 0])
    nrm = np.sqrt(np.abs(w0) ** 2 + np.abs(w1) ** 2)
    w0, w1 = w0 / nrm, w1 / nrm
    # orientation: sign of det [Re w | Im w], constant on an elliptic loop
    d = np.imag(np.conj(w0) * w1)
    sgn = np.sign(d)
    if np.any(sgn == 0.0) or (sgn.max() != sgn.min()):
        raise PreconditionError("eigenvector orientation degenerates on grid")
    orient = int(sgn[0])
    if orient < 0:
        w0, w1 = np.conj(w0), np.conj(w1)  # switch to the e^{+i a0} branch
    angles = orient * np.arccos(np.clip(ca, -1.0, 1.0))
    # parallel transport: rotate each frame's phase to align with its neighbor
    inner = np.conj(w0[:-1]) * w0[1:] + np.conj(w1[:-1]) * w1[1:]
    cum = np.concatenate([[0.0], np.cumsum(np.angle(inner))])
    gauge = np.exp(-1j * cum)
    w0, w1 = w0 * gauge, w1 * gauge
    # spread the closure defect linearly so B becomes 1-periodic
    close = np.conj(w0[-1]) * w0[0] + np.conj(w1[-1]) * w1[0]
    defect = float(np.angle(close))
    correction = -defect * np.arange(n) / n
    gauge = np.exp(-1j * correction)  # w -> e^{-i c} w  ==  B -> B R_c
    w0, w1 = w0 * gauge, w1 * gauge
    B = np.empty((n, 2, 2))
    B[:, 0, 0], B[:, 0, 1] = np.real(w0), np.imag(w0)
    B[:, 1, 0], B[:, 1, 1] = np.real(w1), np.imag(w1)
    detB = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    B /= np.sqrt(detB)[:, None, None]
    conj = inv_stack(B) @ M @ B
    residual = float(np.max(np.abs(conj - rot_stack(angles))))
    return EllipticLoopForm(grid=xs, B=B, angles=angles, correction=correction,
                            residual=residual, orientation=orient,
                            defect=defect)


def elliptic_loop_diagonalize(loop, grid_size: int = GRID_SIZE,
                              ) -> EllipticLoopForm:
    """Smooth B with B(x)^-1 A(x) B(x) = R_{a(x)} for totally elliptic A.

    Pointwise eigendecomposition, phase parallel transport for continuity,
    and a linear winding correction c(x) absorbing the periodicity defect
    (which can be a half turn: conjugators live on a double cover).
    """
    xs = grid_points(grid_size)
    return _diagonalize_matrices(np.asarray(loop(xs)), xs)


# ---------------------------------------------------------------------------
# periodic normal form at rational frequency

@dataclass
class PeriodicNormalForm:
    grid: np.ndarray
    B: np.ndarray
    phi: np.ndarray  # unwrapped rotation angle of B(x+p/q)^-1 A(x) B(x)
    residual: float
    winding: int
    qstep_form: EllipticLoopForm


def _qstep_from_grid(A: np.ndarray, shift: int, q: int) -> np.ndarray:
    M = A.copy()
    for k in range(1, q):
        M = np.roll(A, -k * shift, axis=0) @ M
    return M


def periodic_normal_form(loop, pq: Frequency, grid_size: int = GRID_SIZE,
                         ) -> PeriodicNormalForm:
    """B(x+p/q)^-1 A(x) B(x) = R_{phi(x)} from diagonalizing the q-step.

    Any diagonalizer of the q-step works: rotation-valuedness of the
    conjugated one-step map is gauge-invariant, since pointwise stabilizers
    of nontrivial rotations inside SL(2,R) are rotations.
    """
    if pq.kind != "rational":
        raise PreconditionError("periodic_normal_form needs a rational frequency")
    if grid_size % pq.q != 0:
        raise PreconditionError(
            f"grid size {grid_size} not divisible by q = {pq.q}")
    xs = grid_points(grid_size)
    A = np.asarray(loop(xs))
    shift = (pq.p * grid_size // pq.q) % grid_size
    form = _diagonalize_matrices(_qstep_from_grid(A, shift, pq.q), xs)
    B = form.B
    conj = inv_stack(np.roll(B, -shift, axis=0)) @ A @ B
    phi_raw = np.arctan2(conj[:, 1, 0], conj[:, 0, 0])
    residual = float(np.max(np.abs(conj - rot_stack(phi_raw))))
    if residual > 1e-6:
        raise NumericalFailureError(
            f"conjugated one-step map not rotation-valued: residual {residual:.3e}")
    phi = np.unwrap(phi_raw)
    closing = phi_raw[0] - phi[-1]
    closing = (closing + np.pi) % (2.0 * np.pi) - np.pi
    winding = int(round((phi[-1] + closing - phi[0]) / (2.0 * np.pi)))
    return PeriodicNormalForm(grid=xs, B=B, phi=phi, residual=residual,
                              winding=winding, qstep_form=form)


# ---------------------------------------------------------------------------
# cohomological equation

@dataclass
class CohomologicalSolution:
    theta_hat: np.ndarray  # centered coefficients, zero mean
    mean: float
    min_divisor: float
    min_divisor_k: int


def cohomological_solve(phi_hat: np.ndarray, alpha: Frequency | float,
                        cutoff: int | None = None,
                        divisor_floor: float = DIVISOR_FLOOR,
                        ) -> CohomologicalSolution:
    """Solve theta(x+alpha) - theta(x) = phi(x) - mean(phi) mode by mode.

    theta_hat(k) = phi_hat(k) / (e^{2 pi i k alpha} - 1); refuses when any
    needed divisor falls below `divisor_floor` (resonance guard).
    """
    if isinstance(alpha, Frequency):
        if alpha.kind == "rational":
            raise UnsupportedClassError(
                "cohomological divisors vanish at rational frequency")
        a = alpha.value
    else:
        a = float(alpha)
    phi_hat = np.asarray(phi_hat, dtype=complex)
    n_in = (len(phi_hat) - 1) // 2
    if cutoff is None:
        cutoff = n_in
    if cutoff < 1 or cutoff > n_in:
        raise PreconditionError("cutoff must be in [1, available modes]")
    ks = np.arange(-cutoff, cutoff + 1)
    phi_hat = phi_hat[n_in - cutoff:n_in + cutoff + 1]
    div = np.exp(2j * np.pi * ks * a) - 1.0
    div[cutoff] = 1.0  # k = 0 handled separately
    mags = np.abs(div)
    mags[cutoff] = np.inf
    i = int(np.argmin(mags))
    if mags[i] < divisor_floor:
        raise ResonanceError(
            f"divisor |e^(2 pi i k a)-1| = {mags[i]:.3e} < floor at k = {ks[i]}")
    theta_hat = phi_hat / div
    theta_hat[cutoff] = 0.0
    return CohomologicalSolution(theta_hat=theta_hat,
                                 mean=float(np.real(phi_hat[cutoff])),
                                 min_divisor=float(mags[i]),
                                 min_divisor_k=int(ks[i]))


# ---------------------------------------------------------------------------
# finite-order reduction at Diophantine alpha near p/q

@dataclass
class LedgerEntry:
    step: int
    norm_phi_drift: float
    norm_Z: float
    norm_F: float
    residual: float

    def csv_row(self) -> str:
        return (f"{self.step},{self.norm_phi_drift:.6e},{self.norm_Z:.6e},"
                f"{self.norm_F:.6e},{self.residual:.6e}")


LEDGER_HEADER = "step,norm_phi_drift,norm_Z,norm_F,residual"


@dataclass
class ReductionState:
    grid: np.ndarray
    alpha: float
    pq: Frequency
    phi: np.ndarray  # rotation angle function, unwrapped grid samples
    F: np.ndarray  # residual generator, (n, 2, 2) traceless
    phi_initial: np.ndarray
    r: float
    ledger: list = field(default_factory=list)
    last_Y: np.ndarray | None = None
    margin: float = float("inf")  # measured distance of psi from pi Z

    @property
    def theta0(self) -> float:
        return float(np.mean(self.phi))

    @property
    def norm_F(self) -> float:
        return float(np.max(np.sqrt(np.sum(self.F * self.F, axis=(1, 2)))))

    def ledger_csv(self) -> str:
        return "\n".join([LEDGER_HEADER] + [e.csv_row() for e in self.ledger])


def _sup_matrix_norm(F: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(F * F, axis=(1, 2)))))


def cheap_trick_step(state: ReductionState, alpha: float | None = None,
                     pq: Frequency | None = None, r: float | None = None,
                     margin_floor: float = MARGIN_FLOOR) -> ReductionState:
    """One conjugation step: shrink F by a factor ~ |alpha - p/q|.

    Writes the q-step of (p/q, e^F R_phi) as e^G R_psi with
    psi = sum of phi over the rational orbit, solves the splitting
    e^G R_psi = e^Y R_psi~ e^{-Y} with Y symmetric traceless by pointwise
    Newton iteration, and conjugates the true-alpha cocycle by e^Y.  The
    conjugated map factors as [e^{-Y(x+alpha)} e^{Y(x+p/q)}] R_phi~, so the
    new generator F~ inherits a factor |alpha - p/q| from the shift
    mismatch.
    """
    alpha = state.alpha if alpha is None else float(alpha)
    pq = state.pq if pq is None else pq
    r = state.r if r is None else r
    xs, q, n = state.grid, pq.q, len(state.grid)
    shift = (pq.p * n // q) % n
    phi, F = state.phi, state.F
    psi = sum(np.roll(phi, -k * shift) for k in range(q))
    margin = float(np.min(np.abs(((psi / np.pi) + 0.5) % 1.0 - 0.5))) * np.pi
    if margin < margin_floor:
        raise MarginError(
            f"q-step angle within {margin:.2e} of pi Z; ellipticity margin lost")
    Ahat = sl2_exp(F) @ rot_stack(phi)
    P = _qstep_from_grid(Ahat, shift, q)
    # Newton solve, pointwise: e^Y R_{psi+s} e^{-Y} = P, Y in span{S1, S2}
    u = np.zeros((n, 3))
    tr_half = np.clip((P[:, 0, 0] + P[:, 1, 1]) / 2.0, -1.0, 1.0)
    targ = np.arccos(tr_half)
    # init s at the lift of +-arccos(tr P / 2) nearest psi (trace matching)
    plus = targ + 2.0 * np.pi * np.round((psi - targ) / (2.0 * np.pi))
    minus = -targ + 2.0 * np.pi * np.round((psi + targ) / (2.0 * np.pi))
    u[:, 2] = np.where(np.abs(plus - psi) <= np.abs(minus - psi),
                       plus, minus) - psi

    def residual_vec(u):
        Y = u[:, 0, None, None] * SYM1 + u[:, 1, None, None] * SYM2
        eY = sl2_exp(Y)
        L = eY @ rot_stack(psi + u[:, 2]) @ sl2_exp(-Y)
        D = L - P
        return np.stack([D[:, 0, 0], D[:, 0, 1], D[:, 1, 0]], axis=1)

    eps = 1e-7
    converged = False
    for _ in range(NEWTON_MAX_ITER):
        rv = residual_vec(u)
        if np.max(np.abs(rv)) < NEWTON_TOL:
            converged = True
            break
        Jac = np.empty((n, 3, 3))
        for j in range(3):
            du = np.zeros_like(u)
            du[:, j] = eps
            Jac[:, :, j] = (residual_vec(u + du) - rv) / eps
        try:
            u = u + np.linalg.solve(Jac, -rv[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(f"singular Newton system: {exc}")
    if not converged:
        raise NumericalFailureError(
            f"Newton splitting did not reach {NEWTON_TOL} in "
            f"{NEWTON_MAX_ITER} iterations (residual "
            f"{float(np.max(np.abs(residual_vec(u)))):.3e})")
    Y = u[:, 0, None, None] * SYM1 + u[:, 1, None, None] * SYM2
    # conjugated map at the rational step is exactly rotation-valued
    Aprime = sl2_exp(-np.roll(Y, -shift, axis=0)) @ Ahat @ sl2_exp(Y)
    phi_raw = np.arctan2(Aprime[:, 1, 0], Aprime[:, 0, 0])
    proj_res = float(np.max(np.abs(Aprime - rot_stack(phi_raw))))
    phi_new = np.unwrap(phi_raw)
    phi_new += 2.0 * np.pi * np.round((phi[0] - phi_new[0]) / (2.0 * np.pi))
    # conjugate the true-alpha cocycle and split off the new generator
    Y_alpha = shift_grid(Y, alpha)
    Anew = sl2_exp(-Y_alpha) @ Ahat @ sl2_exp(Y)
    F_new = sl2_log(Anew @ rot_stack(-phi_new))
    entry = LedgerEntry(step=len(state.ledger),
                        norm_phi_drift=weighted_norm(phi_new - state.phi_initial, r),
                        norm_Z=weighted_norm(u[:, 0], r) + weighted_norm(u[:, 1], r),
                        norm_F=_sup_matrix_norm(F_new),
                        residual=proj_res)
    return ReductionState(grid=xs, alpha=alpha, pq=pq, phi=phi_new, F=F_new,
                          phi_initial=state.phi_initial, r=r,
                          ledger=state.ledger + [entry], last_Y=Y,
                          margin=margin)


@dataclass
class ReductionResult:
    grid: np.ndarray
    B_total: np.ndarray  # composed conjugator on the grid
    theta0: float
    A0: np.ndarray  # constant rotation R_{theta0}
    final_residual: float
    ledger: list
    state: ReductionState
    homotopy_winding: int

    def ledger_csv(self) -> str:
        return "\n".join([LEDGER_HEADER] + [e.csv_row() for e in self.ledger])

    def dump_conjugator(self, path: str) -> None:
        """Row-major 2x2 blocks, 64-bit little-endian reals."""
        np.ascontiguousarray(self.B_total, dtype="<f8").tofile(path)


def cheap_trick_reduce(loop, alpha: Frequency | float, pq: Frequency,
                       j_max: int = 3, target_tolerance: float = 1e-6,
                       grid_size: int = GRID_SIZE, r: float = 2.0,
                       divisor_floor: float = DIVISOR_FLOOR,
                       ) -> ReductionResult:
    """Finite-order reduction of (alpha, A) to a constant rotation.

    Pipeline: periodic normal form at p/q, `j_max` conjugation steps each
    shrinking the off-rotation generator by ~|alpha - p/q|, then one
    cohomological solve rotating the remaining angle function to its mean.
    The final residual is verified on a grid twice as fine as the
    construction grid.
    """
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    xs = grid_points(grid_size)
    try:
        pnf = periodic_normal_form(loop, pq, grid_size)
    except (PreconditionError, NumericalFailureError) as exc:
        raise type(exc)(f"normal-form stage: {exc}")
    A = np.asarray(loop(xs))
    B_alpha = shift_grid(pnf.B, a)
    C = inv_stack(B_alpha) @ A @ pnf.B
    F0 = sl2_log(C @ rot_stack(-pnf.phi))
    state = ReductionState(grid=xs, alpha=a, pq=pq, phi=pnf.phi, F=F0,
                           phi_initial=pnf.phi.copy(), r=r,
                           ledger=[LedgerEntry(0, 0.0,
                                               0.0, _sup_matrix_norm(F0),
                                               pnf.residual)])
    B_total = pnf.B.copy()
    for _ in range(j_max):
        try:
            state = cheap_trick_step(state)
        except (MarginError, NumericalFailureError) as exc:
            raise type(exc)(f"conjugation stage: {exc}")
        B_total = B_total @ sl2_exp(state.last_Y)
    theta0 = state.theta0
    try:
        sol = cohomological_solve(to_fourier(state.phi, grid_size // 2 - 1),
                                  a, divisor_floor=divisor_floor)
    except (ResonanceError, UnsupportedClassError) as exc:
        raise type(exc)(f"cohomological stage: {exc}")
    theta = fourier_to_grid(sol.theta_hat, grid_size)
    B_total = B_total @ rot_stack(theta)
    A0 = rotation(theta0)
    # verification on a finer grid than the construction grid
    fine = refine_grid(B_total, 2)
    xsf = grid_points(2 * grid_size)
    Af = np.asarray(loop(xsf))
    conj = inv_stack(shift_grid(fine, a)) @ Af @ fine
    final_residual = float(np.max(np.abs(conj - A0)))
    return ReductionResult(grid=xs, B_total=B_total, theta0=theta0, A0=A0,
                           final_residual=final_residual, ledger=state.ledger,
                           state=state, homotopy_winding=pnf.winding)


def rotation_defect(rho_a: float, rho_b: float, alpha: float,
                    k_max: int = 8) -> float:
    """Distance of rho_a - rho_b to the lattice {k alpha / 2 + m} mod 1.

    Conjugation changes a fibered rotation number by half-integer multiples
    of the frequency; the defect should vanish for a correct reduction.
    """
    d = rho_a - rho_b
    ks = np.arange(-k_max, k_max + 1)
    offs = d - ks * alpha / 2.0
    return float(np.min(np.abs(offs - np.round(offs))))
