"""Energy scans, spectral-window finders and spectrum location.

`run_scan` is the driver behind the figure-reproduction CSV output: one row
per energy with Lyapunov exponent, rotation number, density of states, a
uniform-hyperbolicity flag and (where defined) the subharmonicity lower
bound.  Scans are deterministic for a fixed seed; the energy grid is split
into contiguous chunks that worker threads fill into preallocated arrays,
so the row order and values do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .arithmetic import Frequency
from .classify import ellipticity_report, regularity_check, schrodinger_qstep_loop
from .cocycle import PreconditionError
from .lyapunov import herman_lower_bound, uh_test
from .potentials import Potential

CSV_HEADER = "# cocycle-lab v1"
SCAN_COLUMNS = "E,le,le_stderr,rho,dos,uh,herman"


@dataclass
class ScanResult:
    energies: np.ndarray
    le: np.ndarray
    le_stderr: np.ndarray
    rho: np.ndarray
    dos: np.ndarray
    uh: np.ndarray  # bool
    herman: np.ndarray  # nan where |E| <= 2 or potential has no pole data
    meta: dict = field(default_factory=dict)


def run_scan(V: Potential, alpha: Frequency | float, energies: np.ndarray,
             n_steps: int = 10**5, phases: int = 4, seed: int = 0,
             rho_steps: int | None = None, threads: int = 1,
             with_uh: bool = True, uh_block: int = 100,
             uh_grid: int = 512) -> ScanResult:
    """One row per energy: LE (+stderr), rho, DOS, UH flag, Herman bound."""
    energies = np.asarray(energies, dtype=float)
    if len(energies) < 2:
        raise PreconditionError("energy grid must have at least 2 points")
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    nE = len(energies)
    rho_steps = n_steps if rho_steps is None else rho_steps
    rng = np.random.default_rng(seed)
    x0s = rng.random(phases)

    le_acc = np.zeros((phases, nE))
    for i, x0 in enumerate(x0s):
        xs = np.mod(x0 + a * np.arange(n_steps), 1.0)
        vorbit = np.asarray(V.eval(xs), dtype=np.float64)
        if threads > 1:
            chunks = np.array_split(np.arange(nE), threads * 4)
            with ThreadPoolExecutor(max_workers=threads) as ex:
                futs = {ex.submit(kernels.logscale_scan, vorbit,
                                  energies[c]): c for c in chunks if len(c)}
                for fut, c in futs.items():
                    le_acc[i, c] = fut.result() / n_steps
        else:
            le_acc[i] = kernels.logscale_scan(vorbit, energies) / n_steps
    le = le_acc.mean(axis=0)
    if phases > 1:
        le_stderr = le_acc.std(axis=0, ddof=1) / math.sqrt(phases)
    else:
        le_stderr = np.zeros(nE)

    rho = np.empty(nE)
    xs = np.mod(a * np.arange(rho_steps), 1.0)
    vorbit = np.asarray(V.eval(xs), dtype=np.float64)
    w = np.exp(-1.0 / (((np.arange(1, rho_steps + 1) - 0.5) / rho_steps)
                       * (1.0 - (np.arange(1, rho_steps + 1) - 0.5) / rho_steps)))
    w /= w.sum()

    def rho_at(idx):
        incr = np.empty(rho_steps)
        for j in idx:
            kernels.rotation_increments(energies[j] - vorbit, 0.0, incr)
            rho[j] = float(np.sum(w * incr)) / (2.0 * math.pi) % 1.0

    if threads > 1:
        chunks = [c for c in np.array_split(np.arange(nE), threads * 4)
                  if len(c)]
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(rho_at, chunks))
    else:
        rho_at(np.arange(nE))
    dos = 1.0 - 2.0 * np.minimum(rho, 0.5)

    uh = np.zeros(nE, dtype=bool)
    if with_uh:
        for j in range(nE):
            cert = uh_test(V, float(energies[j]), a, n=uh_block, grid=uh_grid)
            uh[j] = cert.uniformly_hyperbolic

    herman = np.full(nE, np.nan)
    if V.kind == "poisson-peak":
        K, lam = V.params["K"], V.params["lam"]
        for j in range(nE):
            if abs(energies[j]) > 2.0:
                herman[j] = herman_lower_bound(K, lam, float(energies[j]))

    meta = {"n_steps": n_steps, "phases": phases, "seed": seed,
            "rho_steps": rho_steps, "alpha": a,
            "potential": V.serialize()}
    return ScanResult(energies=energies, le=le, le_stderr=le_stderr, rho=rho,
                      dos=dos, uh=uh, herman=herman, meta=meta)


def scan_csv(res: ScanResult) -> str:
    """Deterministic CSV rendering (versioned header + meta comments)."""
    lines = [CSV_HEADER]
    for k in sorted(res.meta):
        lines.append(f"# {k}={res.meta[k]}")
    lines.append(SCAN_COLUMNS)
    for j in range(len(res.energies)):
        h = "" if np.isnan(res.herman[j]) else f"{res.herman[j]:.10e}"
        lines.append(f"{res.energies[j]:.10e},{res.le[j]:.10e},"
                     f"{res.le_stderr[j]:.10e},{res.rho[j]:.10e},"
                     f"{res.dos[j]:.10e},{int(res.uh[j])},{h}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# spectral windows

@dataclass
class WindowReport:
    ac_candidates: list  # dicts: k, theta interval, E interval, delta_k, margins
    pp_window: dict | None  # E interval + per-sample regularity/mixed flags
    spectrum_hits: list = field(default_factory=list)


def _chebyshev_ratio(theta: np.ndarray, q: int) -> np.ndarray:
    """sin(q theta)/sin(theta) with the limit value at multiples of pi."""
    s = np.sin(theta)
    safe = np.abs(s) > 1e-12
    out = np.where(safe, np.sin(q * theta) / np.where(safe, s, 1.0),
                   q * np.sign(np.cos(theta)) ** (q - 1))
    return out


def find_windows(V: Potential, pq: Frequency, theta_points: int = 20001,
                 pp_samples: int = 5) -> WindowReport:
    """Candidate spectral windows from the q-step trace closed form.

    For each theta_k = pi k / q the elliptic candidates are the maximal
    theta-intervals near theta_k where (i) sin(q theta)/sin(theta) and
    cos(q theta) share a sign, (ii) (max V) |sin(q theta)/sin(theta)| < 1/2
    and (iii) 3/2 < |2 cos(q theta)| < 2; together these trap every q-step
    trace strictly inside (-2, 2).  The point-spectrum window is
    E in [10, K-10] (energies 2 cosh(theta) where the one-step map is
    regular and of mixed type), nonempty once K >= 20.
    """
    if pq.kind != "rational":
        raise PreconditionError("find_windows needs a rational frequency")
    q = pq.q
    K = V.K_V
    if V.L_V >= 1.0 / q:
        raise PreconditionError(
            f"support length {V.L_V} >= 1/q; closed-form windows unavailable")
    ac = []
    for k in range(1, 2 * q):
        th_k = math.pi * k / q
        th = th_k + (np.arange(theta_points) / (theta_points - 1) - 0.5) \
            * (math.pi / q)
        th = th[(th > 1e-9) & (th < 2.0 * math.pi - 1e-9)]
        u = _chebyshev_ratio(th, q)
        c = np.cos(q * th)
        ok = (np.sign(u) == np.sign(c)) & (K * np.abs(u) < 0.5) \
            & (np.abs(2.0 * c) > 1.5) & (np.abs(2.0 * c) < 2.0)
        if not ok.any():
            continue
        # maximal runs of admissible theta
        idx = np.flatnonzero(ok)
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks, [len(idx) - 1]])
        for s, e in zip(starts, ends):
            if e <= s:
                continue
            lo, hi = float(th[idx[s]]), float(th[idx[e]])
            sel = slice(idx[s], idx[e] + 1)
            delta_k = float(np.min(2.0 - 2.0 * np.abs(c[sel])))
            margins = (float(np.min(np.sign(u[sel]) * c[sel])),
                       float(0.5 - K * np.max(np.abs(u[sel]))),
                       delta_k)
            e_pair = sorted((2.0 * math.cos(lo), 2.0 * math.cos(hi)))
            mid_E = 0.5 * (e_pair[0] + e_pair[1])
            # peaky traces need a fine grid before the Lipschitz-scaled
            # tolerance lets the totally-elliptic verdict fire
            rep = ellipticity_report(schrodinger_qstep_loop(V, mid_E, pq),
                                     grid_size=1 << 19)
            ac.append({"k": k, "theta": (lo, hi),
                       "E": (e_pair[0], e_pair[1]), "delta_k": delta_k,
                       "margins": margins, "verdict": rep.verdict,
                       "margin": rep.margin})
    pp = None
    if K >= 20.0:
        lo, hi = 10.0, K - 10.0
        samples = []
        es = np.linspace(lo, hi, pp_samples) if hi > lo else np.array([lo])
        for E in es:
            loop = schrodinger_qstep_loop(V, float(E),
                                          Frequency.rational(0, 1))
            rep = ellipticity_report(loop, grid_size=1024)
            entry = {"E": float(E), "mixed": rep.verdict == "mixed",
                     "crossings": len(rep.crossing_intervals)}
            if V.strip_halfwidth > 0.0:
                entry["regular"] = regularity_check(loop,
                                                    grid_size=1024).regular
            else:
                entry["regular"] = rep.transversal and rep.verdict == "mixed"
            samples.append(entry)
        pp = {"E": (lo, hi), "samples": samples}
    return WindowReport(ac_candidates=ac, pp_window=pp)


def locate_spectrum(V: Potential, alpha: Frequency | float,
                    e_window: tuple[float, float], resolution: int = 64,
                    block: int = 100, grid: int = 512) -> list[float]:
    """Energies in the window where the UH certificate fails.

    Outside the spectrum the cocycle is uniformly hyperbolic, so failures
    flag (a superset of) spectrum candidates at the given resolution.
    """
    if isinstance(alpha, Frequency) and alpha.kind == "rational":
        raise PreconditionError("locate_spectrum needs an irrational frequency")
    a = alpha.value if isinstance(alpha, Frequency) else float(alpha)
    es = np.linspace(e_window[0], e_window[1], resolution)
    hits = []
    for E in es:
        cert = uh_test(V, float(E), a, n=block, grid=grid)
        if not cert.uniformly_hyperbolic:
            hits.append(float(E))
    return hits
