import math

import numpy as np
import pytest

from cocyclelab.arithmetic import Frequency
from cocyclelab.cli import main
from cocyclelab.cocycle import PreconditionError, trace_closed_form
from cocyclelab.potentials import make_peaky_bump
from cocyclelab.scan import (CSV_HEADER, find_windows, locate_spectrum,
                             run_scan, scan_csv)
from conftest import GOLDEN


class TestRunScan:
    def test_free_cocycle(self, zero):
        es = np.linspace(-3.0, 3.0, 25)
        res = run_scan(zero, GOLDEN, es, n_steps=2 * 10**4, phases=2,
                       with_uh=True, uh_block=50, uh_grid=256)
        inside = np.abs(es) < 1.9
        outside = np.abs(es) > 2.1
        assert np.all(np.abs(res.le[inside]) < 0.01)
        assert np.all(res.le[outside] > 0.05)
        # rho decreasing from 1/2 to 0
        assert res.rho[0] == pytest.approx(0.5, abs=1e-3)
        assert res.rho[-1] == pytest.approx(0.0, abs=1e-3)
        assert np.all(np.diff(res.rho) <= 1e-4)
        assert np.all(res.uh[outside])
        assert not np.any(res.uh[inside])

    def test_herman_column(self, peak):
        es = np.array([0.0, 3.0])
        res = run_scan(peak, GOLDEN, es, n_steps=2000, phases=1,
                       with_uh=False)
        assert np.isnan(res.herman[0])
        assert np.isfinite(res.herman[1])

    def test_threads_equivalent(self, peak):
        es = np.linspace(-1.0, 8.0, 17)
        a = run_scan(peak, GOLDEN, es, n_steps=10**4, phases=2, seed=3,
                     with_uh=False)
        b = run_scan(peak, GOLDEN, es, n_steps=10**4, phases=2, seed=3,
                     threads=4, with_uh=False)
        assert np.array_equal(a.le, b.le)
        assert np.array_equal(a.rho, b.rho)

    def test_csv_deterministic(self, zero):
        es = np.linspace(-1.0, 1.0, 5)
        a = scan_csv(run_scan(zero, GOLDEN, es, n_steps=2000, phases=2,
                              seed=1, with_uh=False))
        b = scan_csv(run_scan(zero, GOLDEN, es, n_steps=2000, phases=2,
                              seed=1, with_uh=False))
        assert a == b
        assert a.startswith(CSV_HEADER + "\n")

    def test_grid_validation(self, zero):
        with pytest.raises(PreconditionError):
            run_scan(zero, GOLDEN, np.array([1.0]))


class TestFindWindows:
    def test_q2_K10_candidates_near_zero_energy(self):
        V = make_peaky_bump((0.05, 0.30), 10.0, 1.0)
        rep = find_windows(V, Frequency.rational(1, 2))
        assert rep.ac_candidates
        for c in rep.ac_candidates:
            lo, hi = c["E"]
            # |2 cos(q theta)| > 3/2 and K|u| < 1/2 force E near 0 for q=2:
            # tr = -V u + 2 cos(2 theta) stays in (-2, 2)
            assert -0.05 < lo < hi < 0.05
            assert c["delta_k"] > 0.0
            # oracle: dense closed-form trace check on the candidate
            for E in np.linspace(lo, hi, 5):
                ts = [trace_closed_form(V, float(E), 2, float(x))
                      for x in np.linspace(0.0, 1.0, 200, endpoint=False)]
                assert max(abs(t) for t in ts) < 2.0

    def test_pp_window_bump_regular_mixed(self):
        V = make_peaky_bump((0.1, 0.4), 20.0, 1.0)
        rep = find_windows(V, Frequency.rational(0, 1))
        assert rep.pp_window is not None
        assert rep.pp_window["E"] == (10.0, 10.0)
        for s in rep.pp_window["samples"]:
            assert s["mixed"] and s["regular"]

    def test_support_precondition(self, peak, half):
        with pytest.raises(PreconditionError):
            find_windows(peak, half)  # L_V = 1 >= 1/2


class TestLocateSpectrum:
    def test_free_band(self, zero):
        hits = locate_spectrum(zero, GOLDEN, (-3.0, 3.0), resolution=25,
                               block=50, grid=256)
        assert hits
        assert all(-2.1 <= E <= 2.1 for E in hits)
        lo = min(h for h in hits)
        hi = max(h for h in hits)
        assert lo < -1.5 and hi > 1.5

    def test_far_above_norm_bound_all_uh(self, peak):
        hits = locate_spectrum(peak, GOLDEN, (19.5, 20.5), resolution=5,
                               block=50, grid=256)
        assert hits == []

    def test_rational_rejected(self, zero, half):
        with pytest.raises(PreconditionError):
            locate_spectrum(zero, half, (0.0, 1.0))


# ---------------------------------------------------------------------------
# CLI


def write_config(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SCAN_CFG = """
# free-cocycle scan           # full-line comment
[potential]
kind = zero

[frequency]
value = 0.6180339887498949    # golden mean

[scan]
e_min = -3.0
e_max = 3.0
e_count = 9
n_steps = 2000
phases = 2
uh = false
"""


class TestCLI:
    def test_scan_exit_zero_and_header(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SCAN_CFG)
        out = str(tmp_path / "scan.csv")
        assert main(["scan", "--config", cfg, "--out", out]) == 0
        text = open(out).read()
        assert text.startswith(CSV_HEADER + "\n")
        assert "E,le,le_stderr,rho,dos,uh,herman" in text

    def test_scan_byte_identical_given_seed(self, tmp_path):
        cfg = write_config(tmp_path, SCAN_CFG)
        o1, o2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["scan", "--config", cfg, "--out", o1, "--seed", "5"]) == 0
        assert main(["scan", "--config", cfg, "--out", o2, "--seed", "5"]) == 0
        assert open(o1, "rb").read() == open(o2, "rb").read()

    def test_scan_threads_flag_same_output(self, tmp_path):
        cfg = write_config(tmp_path, SCAN_CFG)
        o1, o2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["scan", "--config", cfg, "--out", o1]) == 0
        assert main(["scan", "--config", cfg, "--out", o2,
                     "--threads", "4"]) == 0
        assert open(o1, "rb").read() == open(o2, "rb").read()

    def test_scan_plot_renders_figures(self, tmp_path):
        cfg = write_config(tmp_path, SCAN_CFG)
        out = str(tmp_path / "scan.csv")
        assert main(["scan", "--config", cfg, "--out", out, "--plot"]) == 0
        pngs = list(tmp_path.glob("scan*.png"))
        assert pngs
        for p in pngs:
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_missing_config_exit_2(self, tmp_path, capsys):
        assert main(["scan", "--config", str(tmp_path / "nope.ini")]) == 2

    def test_bad_key_exit_2(self, tmp_path):
        cfg = write_config(tmp_path, SCAN_CFG.replace("e_count = 9",
                                                      "e_count = many"))
        assert main(["scan", "--config", cfg]) == 2

    def test_missing_section_exit_2(self, tmp_path):
        cfg = write_config(tmp_path, "[potential]\nkind = zero\n")
        assert main(["scan", "--config", cfg]) == 2

    def test_numerical_failure_exit_3(self, tmp_path):
        cfg = write_config(tmp_path, """
[potential]
kind = zero

[frequency]
p = 0
q = 1

[profile]
E = 2.0
""")
        # tr = 2 constant: transversality fails, no affine profile
        assert main(["profile", "--config", cfg]) == 3

    def test_windows_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, """
[potential]
kind = peaky-bump
support = 0.1,0.4
K = 20.0

[windows]
p = 0
q = 1
""")
        out = str(tmp_path / "win.csv")
        assert main(["windows", "--config", cfg, "--out", out]) == 0
        text = open(out).read()
        assert text.startswith(CSV_HEADER + "\n")
        assert "regular+mixed" in text

    def test_spectrum_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, """
[potential]
kind = zero

[frequency]
value = 0.6180339887498949

[spectrum]
e_min = -3.0
e_max = 3.0
e_count = 13
block = 50
grid = 256
""")
        out = str(tmp_path / "spec.csv")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        rows = [l for l in open(out).read().splitlines()
                if l and not l.startswith(("#", "E_non_uh"))]
        assert rows  # free band produces non-UH energies

    def test_profile_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, """
[potential]
kind = poisson-peak
K = 10.0
lambda = 1e4

[frequency]
p = 0
q = 1

[profile]
E = 5.0
nu_count = 6
grid = 2048
""")
        out = str(tmp_path / "prof.csv")
        assert main(["profile", "--config", cfg, "--out", out,
                     "--plot"]) == 0
        text = open(out).read()
        assert "slope_over_2pi" in text
        assert (tmp_path / "prof.png").exists()

    def test_reduce_subcommand(self, tmp_path):
        alpha = 0.5 + GOLDEN * 3e-5
        cfg = write_config(tmp_path, f"""
[potential]
kind = poisson-peak
K = 10.0
lambda = 1e4

[frequency]
value = {alpha!r}

[reduce]
E = -0.12
p = 1
q = 2
grid = 16384
j_max = 3
""")
        out = str(tmp_path / "red.csv")
        assert main(["reduce", "--config", cfg, "--out", out]) == 0
        text = open(out).read()
        assert "step,norm_phi_drift,norm_Z,norm_F,residual" in text
        assert "rotation_defect" in text

    def test_reduce_rejects_non_diophantine_alpha(self, tmp_path):
        cfg = write_config(tmp_path, """
[potential]
kind = poisson-peak
K = 10.0
lambda = 1e4

[frequency]
value = 0.6180339887498949

[reduce]
E = -0.12
p = 1
q = 2
""")
        # golden mean is far from 1/2: fails the near-1/2 membership gate
        assert main(["reduce", "--config", cfg]) == 2

    def test_dc_sample_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, """
[dc-sample]
p = 1
q = 2
eta = 0.1
samples = 2000
cap = 10000
""")
        out = str(tmp_path / "dc.csv")
        assert main(["dc-sample", "--config", cfg, "--out", out]) == 0
        lines = open(out).read().splitlines()
        density = float(lines[2].split(",")[0])
        assert 0.5 < density <= 1.0
