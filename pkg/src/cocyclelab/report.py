"""Rendering of scan results: figures to PNG files next to the CSV output.

Plotting is an optional convenience on the report path; the CSV datasets
remain the canonical output and contain everything the figures show.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .lyapunov import LyapunovProfile  # noqa: E402
from .scan import ScanResult  # noqa: E402


def render_scan_figures(res: ScanResult, out_prefix: str) -> list[str]:
    """LE-vs-E and rotation-number/DOS-vs-E panels; returns written paths."""
    paths = []
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(res.energies, res.le, lw=0.8, color="C0")
    ax.fill_between(res.energies, res.le - res.le_stderr,
                    res.le + res.le_stderr, alpha=0.3, color="C0")
    ax.set_xlabel("E")
    ax.set_ylabel("Lyapunov exponent")
    ax.axhline(0.0, color="k", lw=0.5)
    fig.tight_layout()
    p = f"{out_prefix}_le.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(res.energies, res.rho, lw=0.8, color="C1", label="rho")
    ax.plot(res.energies, res.dos, lw=0.8, color="C2", label="DOS")
    ax.set_xlabel("E")
    ax.legend(frameon=False)
    fig.tight_layout()
    p = f"{out_prefix}_rho.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths


def render_profile_figure(profile: LyapunovProfile, path: str) -> str:
    """L(nu) samples with the fitted affine law overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(profile.nu_grid, profile.values, "o", ms=3, color="C0",
            label="L(nu)")
    ax.plot(profile.nu_grid,
            profile.intercept + profile.slope * profile.nu_grid,
            lw=0.8, color="C3",
            label=f"fit: slope/2pi = {profile.slope / 6.283185307179586:.3f}")
    ax.set_xlabel("nu")
    ax.set_ylabel("L(nu)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
