"""Command-line driver.

Subcommands: `scan` (energy scan CSV, optionally with figures), `windows`
(spectral window candidates), `spectrum` (UH-failure energies), `profile`
(complexified Lyapunov profile), `reduce` (finite-order reduction to a
constant rotation), `dc-sample` (Diophantine density sampling).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import arithmetic, config, lyapunov, reduction, rotation, scan
from .arithmetic import Frequency, UnsupportedClassError
from .classify import (RegularityViolation, eigen_branch, regularity_check,
                       schrodinger_qstep_loop)
from .cocycle import PreconditionError
from .config import ConfigError
from .potentials import ParameterError, StripViolationError
from .reduction import MarginError, NumericalFailureError, ResonanceError
from .rotation import ConsistencyError
from .scan import CSV_HEADER

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONFIG_ERRORS = (ConfigError, ParameterError, PreconditionError,
                 UnsupportedClassError, FileNotFoundError)
NUMERICAL_ERRORS = (NumericalFailureError, ResonanceError, MarginError,
                    StripViolationError, ConsistencyError,
                    RegularityViolation, np.linalg.LinAlgError)


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _sec_int(cfg, name, key, default=None):
    return config.get_int(config.section(cfg, name), name, key, default)


def _sec_float(cfg, name, key, default=None):
    return config.get_float(config.section(cfg, name), name, key, default)


def cmd_scan(args) -> int:
    cfg = config.parse_config(args.config)
    V = config.build_potential(cfg)
    alpha = config.build_frequency(cfg)
    sec = config.section(cfg, "scan")
    e_min = config.get_float(sec, "scan", "e_min")
    e_max = config.get_float(sec, "scan", "e_max")
    e_count = config.get_int(sec, "scan", "e_count")
    if e_count < 2:
        raise ConfigError("[scan] e_count must be >= 2")
    n_steps = config.get_int(sec, "scan", "n_steps", 10**5)
    phases = config.get_int(sec, "scan", "phases", 4)
    seed = args.seed if args.seed is not None \
        else config.get_int(sec, "scan", "seed", 0)
    rho_steps = config.get_int(sec, "scan", "rho_steps", min(n_steps, 10**5))
    with_uh = config.get_str(sec, "scan", "uh", "true").lower() != "false"
    res = scan.run_scan(V, alpha, np.linspace(e_min, e_max, e_count),
                        n_steps=n_steps, phases=phases, seed=seed,
                        rho_steps=rho_steps, threads=args.threads,
                        with_uh=with_uh,
                        uh_block=config.get_int(sec, "scan", "uh_block", 100),
                        uh_grid=config.get_int(sec, "scan", "uh_grid", 512))
    _write(args.out, scan.scan_csv(res))
    if args.plot:
        if args.out is None or args.out == "-":
            raise ConfigError("--plot needs --out to name the figure files")
        from . import report
        prefix = args.out[:-4] if args.out.endswith(".csv") else args.out
        for p in report.render_scan_figures(res, prefix):
            sys.stderr.write(f"wrote {p}\n")
    return EXIT_OK


def cmd_windows(args) -> int:
    cfg = config.parse_config(args.config)
    V = config.build_potential(cfg)
    sec = config.section(cfg, "windows")
    pq = Frequency.rational(config.get_int(sec, "windows", "p"),
                            config.get_int(sec, "windows", "q"))
    rep = scan.find_windows(V, pq)
    lines = [CSV_HEADER, "type,k,E_lo,E_hi,delta,flag"]
    for c in rep.ac_candidates:
        lines.append(f"ac,{c['k']},{c['E'][0]:.10e},{c['E'][1]:.10e},"
                     f"{c['delta_k']:.10e},{c['verdict']}")
    if rep.pp_window is not None:
        lo, hi = rep.pp_window["E"]
        for s in rep.pp_window["samples"]:
            flag = ("regular+mixed" if s["regular"] and s["mixed"]
                    else "irregular")
            lines.append(f"pp,0,{lo:.10e},{hi:.10e},{s['E']:.10e},{flag}")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = config.parse_config(args.config)
    V = config.build_potential(cfg)
    alpha = config.build_frequency(cfg)
    sec = config.section(cfg, "spectrum")
    e_min = config.get_float(sec, "spectrum", "e_min")
    e_max = config.get_float(sec, "spectrum", "e_max")
    res = config.get_int(sec, "spectrum", "e_count", 64)
    hits = scan.locate_spectrum(
        V, alpha, (e_min, e_max), resolution=res,
        block=config.get_int(sec, "spectrum", "block", 100),
        grid=config.get_int(sec, "spectrum", "grid", 512))
    lines = [CSV_HEADER, f"# window=[{e_min},{e_max}] resolution={res}",
             "E_non_uh"]
    lines += [f"{E:.10e}" for E in hits]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_profile(args) -> int:
    cfg = config.parse_config(args.config)
    V = config.build_potential(cfg)
    alpha = config.build_frequency(cfg)
    sec = config.section(cfg, "profile")
    E = config.get_float(sec, "profile", "E")
    nu_count = config.get_int(sec, "profile", "nu_count", 16)
    if alpha.kind != "rational":
        raise ConfigError("[frequency] profile subcommand needs p=/q=")
    loop = schrodinger_qstep_loop(V, E, alpha)
    reg = regularity_check(loop, grid_size=config.get_int(
        sec, "profile", "grid", 1024))
    if not reg.regular:
        raise NumericalFailureError(
            "map fails the regularity criterion; no affine profile expected")
    nu_max = config.get_float(sec, "profile", "nu_max", reg.h_prime)
    nus = nu_max * np.arange(1, nu_count + 1) / nu_count
    prof = lyapunov.le_profile(V, E, alpha, nus)
    branch = eigen_branch(loop, float(nus[len(nus) // 2]))
    lines = [CSV_HEADER,
             f"# E={E} h_prime={reg.h_prime:.6e}",
             f"# slope={prof.slope:.10e} slope_over_2pi="
             f"{prof.slope / (2.0 * math.pi):.10e}",
             f"# winding={branch.winding} "
             f"quantization_residual={prof.quantization_residual:.3e}",
             "nu,L,stderr"]
    for nu, v, est in zip(prof.nu_grid, prof.values, prof.estimates):
        lines.append(f"{nu:.10e},{v:.10e},{est.convergence_gap:.10e}")
    _write(args.out, "\n".join(lines) + "\n")
    if args.plot:
        if args.out is None or args.out == "-":
            raise ConfigError("--plot needs --out to name the figure file")
        from . import report
        base = args.out[:-4] if args.out.endswith(".csv") else args.out
        sys.stderr.write(
            f"wrote {report.render_profile_figure(prof, base + '.png')}\n")
    return EXIT_OK


def cmd_reduce(args) -> int:
    cfg = config.parse_config(args.config)
    V = config.build_potential(cfg)
    alpha = config.build_frequency(cfg)
    sec = config.section(cfg, "reduce")
    E = config.get_float(sec, "reduce", "E")
    pq = Frequency.rational(config.get_int(sec, "reduce", "p"),
                            config.get_int(sec, "reduce", "q"))
    eta = config.get_float(sec, "reduce", "eta", 1e-3)
    cap = config.get_int(sec, "reduce", "cap", 10**4)
    cert = arithmetic.dpq_membership(alpha, pq, eta, cap)
    if not cert.member:
        raise ConfigError(
            f"frequency fails D_{pq.p}/{pq.q}({eta}) membership "
            f"(witness {cert.witness_k}/{cert.witness_l})")
    loop = reduction.schrodinger_one_step_loop(V, E)
    result = reduction.cheap_trick_reduce(
        loop, alpha, pq,
        j_max=config.get_int(sec, "reduce", "j_max", 3),
        target_tolerance=config.get_float(sec, "reduce", "tolerance", 1e-6),
        grid_size=config.get_int(sec, "reduce", "grid", 4096))
    rho_full = rotation.rotation_number(V, E, alpha, n=10**5)
    defect = reduction.rotation_defect(rho_full.rho,
                                       (result.theta0 / (2.0 * math.pi)) % 1.0,
                                       alpha.value)
    lines = [CSV_HEADER,
             f"# E={E} alpha={alpha.value!r} p/q={pq.p}/{pq.q}",
             f"# theta0={result.theta0:.10e} "
             f"final_residual={result.final_residual:.3e} "
             f"rotation_defect={defect:.3e}",
             result.ledger_csv()]
    _write(args.out, "\n".join(lines) + "\n")
    dump = config.get_str(sec, "reduce", "dump", "")
    if dump:
        result.dump_conjugator(dump)
    if result.final_residual > config.get_float(sec, "reduce", "tolerance",
                                                1e-6):
        raise NumericalFailureError(
            f"final residual {result.final_residual:.3e} above tolerance")
    return EXIT_OK


def cmd_dc_sample(args) -> int:
    cfg = config.parse_config(args.config)
    sec = config.section(cfg, "dc-sample")
    pq = Frequency.rational(config.get_int(sec, "dc-sample", "p"),
                            config.get_int(sec, "dc-sample", "q"))
    eta = config.get_float(sec, "dc-sample", "eta")
    n = config.get_int(sec, "dc-sample", "samples", 10**5)
    cap = config.get_int(sec, "dc-sample", "cap", 10**4)
    seed = args.seed if args.seed is not None \
        else config.get_int(sec, "dc-sample", "seed", 0)
    est = arithmetic.dpq_measure_estimate(pq, eta, n, cap, seed=seed)
    lines = [CSV_HEADER, "density,stddev,floor,samples,cap",
             f"{est['density']:.10e},{est['stddev']:.10e},"
             f"{est['floor']:.10e},{est['n_samples']},{est['cap']}"]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cocycle-lab",
        description="Quasi-periodic SL(2,R) cocycle dynamics toolbox")
    sub = ap.add_subparsers(dest="command", required=True)
    handlers = {"scan": cmd_scan, "windows": cmd_windows,
                "spectrum": cmd_spectrum, "profile": cmd_profile,
                "reduce": cmd_reduce, "dc-sample": cmd_dc_sample}
    for name, fn in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None,
                       help="output path ('-' or omitted: stdout)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1)
        if name in ("scan", "profile"):
            p.add_argument("--plot", action="store_true",
                           help="render PNG figures next to the CSV")
        p.set_defaults(handler=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CONFIG_ERRORS as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
