"""Peaky potentials on the torus: smooth bumps and the rational peak family.

Two families are supported.  The smooth family is a compactly supported
exponential-flat bump with a single nondegenerate maximum; it is C-infinity
but not analytic, so it only evaluates on the real torus.  The analytic
family is

    V(x) = K / (1 + 4*lam*sin(pi*x)**2),

which extends holomorphically to a strip around the real circle.  Writing
z = exp(2*pi*i*x) the extension is the rational function

    f(z) = C*z / ((z - z0)*(z - z1)),   C = -K/lam,

whose pole moduli z0 < 1 < z1 are the roots of lam*z^2 - (2*lam+1)*z + lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VALIDATION_GRID = 4096


class ParameterError(ValueError):
    """Invalid potential parameters."""


class StripViolationError(ValueError):
    """Complex evaluation point outside the pole-free strip."""


@dataclass(frozen=True)
class PoleData:
    """Poles of the rational extension f(z) of the analytic peak."""

    z0: float
    z1: float
    C: float

    def f(self, z):
        """Factored form C*z/((z-z0)*(z-z1))."""
        return self.C * z / ((z - self.z0) * (z - self.z1))


@dataclass(frozen=True)
class Potential:
    """Evaluable torus potential with peaky-class metadata.

    kind is one of 'peaky-bump', 'poisson-peak' or 'tabulated'.
    strip_halfwidth is 0 for non-analytic kinds.  K_V = max V and L_V is
    the support length (1.0 for the analytic peak, whose support is the
    whole torus in the strict sense; the effective peak width is
    ~1/sqrt(lam)).
    """

    kind: str
    K_V: float
    L_V: float
    strip_halfwidth: float = 0.0
    params: dict = field(default_factory=dict)
    poles: PoleData | None = None

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Evaluate at a real torus point or a strip point x + i*nu.

        Accepts scalars or numpy arrays.  Real input gives real output.
        """
        z = np.asarray(z)
        if self.kind == "zero":
            out = np.zeros(z.shape)
            return float(out) if out.ndim == 0 else out
        if np.iscomplexobj(z):
            if self.kind != "poisson-peak":
                raise StripViolationError(
                    f"{self.kind} potential is not analytic; real arguments only")
            if np.max(np.abs(z.imag)) > self.strip_halfwidth + 1e-15:
                raise StripViolationError(
                    f"|Im z| exceeds strip halfwidth {self.strip_halfwidth:.3e}")
            return self._eval_poisson(z)
        if self.kind == "poisson-peak":
            return self._eval_poisson(z)
        if self.kind == "peaky-bump":
            return self._eval_bump(z)
        raise ParameterError(f"unknown potential kind {self.kind!r}")

    def _eval_poisson(self, z):
        K = self.params["K"]
        lam = self.params["lam"]
        s = np.sin(np.pi * z)
        out = K / (1.0 + 4.0 * lam * s * s)
        if np.isscalar(z) or z.ndim == 0:
            return complex(out) if np.iscomplexobj(np.asarray(out)) else float(out)
        return out

    def _eval_bump(self, x):
        a, b = self.params["support"]
        K = self.params["K"]
        sharp = self.params["sharpness"]
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        t = (x - a) / (b - a)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros_like(t)
        tt = np.where(inside, t, 0.5)
        # profile exp(-sharp/(t(1-t))) rescaled so the midpoint value is K
        prof = np.exp(-sharp / (tt * (1.0 - tt)) + 4.0 * sharp)
        out = np.where(inside, K * prof, 0.0)
        if out.ndim == 0:
            return float(out)
        return out

    def serialize(self) -> dict:
        """Flat key=value descriptor for the config format."""
        d = {"kind": self.kind}
        if self.kind == "poisson-peak":
            d["K"] = repr(self.params["K"])
            d["lambda"] = repr(self.params["lam"])
        elif self.kind == "peaky-bump":
            a, b = self.params["support"]
            d["support"] = f"{a!r},{b!r}"
            d["K"] = repr(self.params["K"])
            d["sharpness"] = repr(self.params["sharpness"])
        return d


def pole_data(lam: float, K: float) -> PoleData:
    """Poles of f(z) = K/(1 + lam*(2 - z - 1/z)) from the quadratic
    lam*z^2 - (2*lam+1)*z + lam."""
    disc = math.sqrt(4.0 * lam + 1.0)
    z0 = (2.0 * lam + 1.0 - disc) / (2.0 * lam)
    z1 = (2.0 * lam + 1.0 + disc) / (2.0 * lam)
    return PoleData(z0=z0, z1=z1, C=-K / lam)


STRIP_SAFETY = 0.9  # pole-free buffer for quadrature stability


def make_poisson_peak(K: float, lam: float) -> Potential:
    """Analytic peak V(x) = K/(1 + 4*lam*sin^2(pi*x)) with pole data."""
    if not (K > 0.0) or not (lam > 0.0):
        raise ParameterError(f"K and lambda must be positive, got K={K}, lambda={lam}")
    poles = pole_data(lam, K)
    h = STRIP_SAFETY * math.log(poles.z1) / (2.0 * math.pi)
    return Potential(
        kind="poisson-peak",
        K_V=K,
        L_V=1.0,
        strip_halfwidth=h,
        params={"K": float(K), "lam": float(lam)},
        poles=poles,
    )


def make_zero() -> Potential:
    """The free potential V = 0 (entire, so any strip offset is allowed)."""
    return Potential(kind="zero", K_V=0.0, L_V=0.0,
                     strip_halfwidth=float("inf"), params={})


def make_peaky_bump(support: tuple[float, float], K: float,
                    sharpness: float = 1.0) -> Potential:
    """Smooth compactly supported bump, maximum K at the support midpoint."""
    a, b = support
    if not (0.0 < a < b < 1.0):
        raise ParameterError(f"support must lie strictly inside (0,1), got {support}")
    if not (K > 0.0) or not (sharpness > 0.0):
        raise ParameterError("K and sharpness must be positive")
    return Potential(
        kind="peaky-bump",
        K_V=float(K),
        L_V=b - a,
        strip_halfwidth=0.0,
        params={"support": (float(a), float(b)), "K": float(K),
                "sharpness": float(sharpness)},
    )


def validate(V: Potential, grid: int = VALIDATION_GRID) -> dict:
    """Grid checks of the peaky-class invariants; returns diagnostics."""
    x = np.arange(grid) / grid
    vals = V.eval(x)
    out = {
        "min": float(vals.min()),
        "max": float(vals.max()),
        "max_rel_err": abs(vals.max() - V.K_V) / V.K_V,
    }
    if V.kind == "peaky-bump":
        a, b = V.params["support"]
        interior = (x > a) & (x < b)
        dv = np.diff(vals[interior])
        out["flank_sign_changes"] = int(np.sum(np.diff(np.sign(dv[dv != 0])) != 0))
    return out
