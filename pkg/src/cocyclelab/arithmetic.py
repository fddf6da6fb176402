"""Continued fractions and Diophantine membership certificates.

Membership in the classical classes is always certified "up to cap": a
member verdict means no violation was found for denominators (or harmonics)
up to the recorded cap, a non-member verdict carries an explicit witness
that violates the defining inequality.  Only continued-fraction convergent
denominators are tested beyond a small brute-force range, by the best
rational approximation property.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ParameterError(ValueError):
    pass


class UnsupportedClassError(ValueError):
    """Requested class is undefined for this frequency kind."""


@dataclass(frozen=True)
class Frequency:
    """A frequency in [0,1): rational p/q or irrational with convergents."""

    value: float
    kind: str  # 'rational' | 'irrational'
    p: int = 0
    q: int = 1
    convergent_list: tuple = ()

    @staticmethod
    def rational(p: int, q: int) -> "Frequency":
        fr = Fraction(p, q)
        p, q = fr.numerator % fr.denominator, fr.denominator
        return Frequency(value=p / q, kind="rational", p=p, q=q)

    @staticmethod
    def irrational(alpha: float, cap: int = 10**6) -> "Frequency":
        alpha = alpha % 1.0
        conv = convergents(alpha, cap)
        return Frequency(value=alpha, kind="irrational",
                         convergent_list=tuple(conv))


@dataclass(frozen=True)
class DiophantineCert:
    """Finite-resolution membership certificate.

    verdict is 'member' or 'non-member'; a non-member verdict carries the
    violating pair (witness_k, witness_l) for the class inequality.
    """

    klass: str  # 'DC1' | 'DS_alpha' | 'D_pq'
    eta: float
    sigma: float
    checked_up_to: int
    verdict: str
    witness_k: int | None = None
    witness_l: int | None = None

    @property
    def member(self) -> bool:
        return self.verdict == "member"


def convergents(alpha: float, cap: int) -> list[tuple[int, int]]:
    """Continued-fraction convergents (p_n, q_n) of alpha with q_n <= cap.

    Terminates early when alpha is (floating-point) rational.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must be in (0,1), got {alpha}")
    if cap < 1:
        raise ParameterError("cap must be >= 1")
    # exact expansion of the binary float avoids drift in the tail
    fr = Fraction(alpha).limit_denominator(10**15)
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0  # (h_{-2},k_{-2}), (h_{-1},k_{-1})
    a, b = fr.numerator, fr.denominator
    while b:
        d, r = divmod(a, b)
        p0, q0, p1, q1 = p1, q1, d * p1 + p0, d * q1 + q0
        if q1 > cap:
            break
        if q1 >= 1 and not (p1 == 0 and q1 == 1):
            out.append((p1, q1))
        a, b = b, r
    return out


def _dc1_violation(alpha: float, p: int, q: int, eta: float, sigma: float) -> bool:
    return abs(alpha - p / q) < eta / q**sigma


def dc1_membership(alpha: Frequency | float, eta: float, sigma: float,
                   cap: int, brute: int = 200) -> DiophantineCert:
    """DC1(eta, sigma) certificate: |alpha - k/l| >= eta/l^sigma for l <= cap."""
    if eta <= 0.0 or sigma < 2.0:
        raise ParameterError("need eta > 0 and sigma >= 2")
    if isinstance(alpha, Frequency):
        if alpha.kind == "rational":
            return DiophantineCert("DC1", eta, sigma, cap, "non-member",
                                   witness_k=alpha.p, witness_l=alpha.q)
        a = alpha.value
        conv = alpha.convergent_list
    else:
        a = float(alpha) % 1.0
        conv = None
    # small denominators by brute force, nearest numerator only
    for l in range(1, min(brute, cap) + 1):
        k = round(a * l)
        if _dc1_violation(a, k, l, eta, sigma):
            return DiophantineCert("DC1", eta, sigma, cap, "non-member",
                                   witness_k=k, witness_l=l)
    # beyond: best approximations are the convergents
    if conv is None:
        conv = convergents(a, cap)
    for p, q in conv:
        if q > cap:
            break
        if _dc1_violation(a, p, q, eta, sigma):
            return DiophantineCert("DC1", eta, sigma, cap, "non-member",
                                   witness_k=p, witness_l=q)
    return DiophantineCert("DC1", eta, sigma, cap, "member")


def dpq_membership(alpha: Frequency | float, pq: Frequency, eta: float,
                   cap: int) -> DiophantineCert:
    """D_{p/q}(eta) = ]p/q-eta, p/q+eta[ intersect DC1(eta^2, 3)."""
    if not (0.0 < eta < 0.5):
        raise ParameterError("need eta in (0, 1/2)")
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha) % 1.0
    target = pq.p / pq.q
    if abs(a - target) >= eta:
        return DiophantineCert("D_pq", eta, 3.0, cap, "non-member",
                               witness_k=pq.p, witness_l=pq.q)
    sub = dc1_membership(alpha, eta * eta, 3.0, cap)
    return DiophantineCert("D_pq", eta, 3.0, cap, sub.verdict,
                           witness_k=sub.witness_k, witness_l=sub.witness_l)


def ds_membership(rho: float, alpha: Frequency, kappa: float, cap: int,
                  exponent: float = 2.0) -> DiophantineCert:
    """DS_alpha(kappa): |2*rho - k*alpha - l| >= kappa/|k|^exponent, 0<|k|<=cap.

    The exponent defaults to 2 (the one-frequency form); the d+2 = 3 variant
    is available through the parameter.
    """
    if kappa <= 0.0:
        raise ParameterError("kappa must be positive")
    if alpha.kind != "irrational":
        raise UnsupportedClassError("DS_alpha requires irrational alpha")
    a = alpha.value
    two_rho = 2.0 * rho
    ks = np.arange(1, cap + 1)
    frac = two_rho - ks * a
    dist = np.abs(frac - np.round(frac))
    bad = dist < kappa / ks.astype(float)**exponent
    if bad.any():
        k = int(ks[bad][0])
        l = int(round(two_rho - k * a))
        return DiophantineCert("DS_alpha", kappa, exponent, cap,
                               "non-member", witness_k=k, witness_l=l)
    return DiophantineCert("DS_alpha", kappa, exponent, cap, "member")


def _float_convergents(a: float, cap: int) -> list[tuple[int, int]]:
    """Convergents by float continued fractions; adequate for q <= ~1e6."""
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    x = a
    for _ in range(64):
        d = int(x)
        p0, q0, p1, q1 = p1, q1, d * p1 + p0, d * q1 + q0
        if q1 > cap:
            break
        if q1 >= 1 and not (p1 == 0 and q1 == 1):
            out.append((p1, q1))
        fr = x - d
        if fr < 1e-12:
            break
        x = 1.0 / fr
    return out


def _dc1_member_fast(a: float, eta: float, sigma: float, cap: int,
                     brute: int = 64) -> bool:
    for l in range(1, min(brute, cap) + 1):
        if _dc1_violation(a, round(a * l), l, eta, sigma):
            return False
    for p, q in _float_convergents(a, cap):
        if _dc1_violation(a, p, q, eta, sigma):
            return False
    return True


def dpq_measure_estimate(pq: Frequency, eta: float, n_samples: int, cap: int,
                         seed: int = 0) -> dict:
    """Monte-Carlo density of D_{p/q}(eta) inside ]p/q-eta, p/q+eta[.

    The interval test is satisfied by construction, so this estimates the
    DC1(eta^2, 3) density.  Returns the fraction, binomial std-dev and the
    theoretical floor 1 - 2*eta from the covering bound.
    """
    rng = np.random.default_rng(seed)
    target = pq.p / pq.q
    samples = target + eta * (2.0 * rng.random(n_samples) - 1.0)
    hits = sum(_dc1_member_fast(float(a) % 1.0, eta * eta, 3.0, cap)
               for a in samples)
    frac = hits / n_samples
    sd = np.sqrt(max(frac * (1.0 - frac), 1.0 / n_samples) / n_samples)
    return {"density": frac, "stddev": float(sd),
            "floor": 1.0 - 2.0 * eta, "n_samples": n_samples, "cap": cap}
