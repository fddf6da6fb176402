import math

import numpy as np
import pytest

from cocyclelab.arithmetic import Frequency
from cocyclelab.cocycle import PreconditionError, rotation
from cocyclelab.rotation import (ConsistencyError, density_of_states,
                                 elliptic_rotation_integral,
                                 loop_rotation_number, rotation_number)
from conftest import GOLDEN


class TestRotationNumber:
    def test_free_eighth_turn(self, zero):
        # E = sqrt(2) = 2 cos(pi/4) -> rho = 1/8
        est = rotation_number(zero, math.sqrt(2.0), GOLDEN, n=10**5)
        assert est.rho == pytest.approx(0.125, abs=1e-4)

    def test_constant_rotation_loop_exact(self):
        phi = 0.77
        loop = lambda xs: np.broadcast_to(rotation(phi),
                                          (len(xs), 2, 2)).copy()
        est = loop_rotation_number(loop, GOLDEN, n=2000)
        assert est.rho == pytest.approx(phi / (2.0 * math.pi), abs=1e-12)

    def test_rational_free_sixth(self, zero, half):
        # E = 1 = 2 cos(pi/3): rho = theta/(2 pi) = 1/6
        est = rotation_number(zero, 1.0, half, n=10**4)
        assert est.rho == pytest.approx(1.0 / 6.0, abs=1e-6)
        assert est.method == "rational-average"

    def test_above_band_zero(self, zero):
        est = rotation_number(zero, 3.0, GOLDEN, n=10**4)
        assert min(est.rho, 1.0 - est.rho) < 1e-6

    def test_monotone_in_energy(self, peak):
        es = np.linspace(-1.0, 11.0, 25)
        rhos = [rotation_number(peak, float(e), GOLDEN, n=2 * 10**4).rho
                for e in es]
        assert all(b <= a + 1e-4 for a, b in zip(rhos, rhos[1:]))

    def test_continuity_in_alpha(self, peak):
        rng = np.random.default_rng(12)
        for _ in range(10):
            E = float(rng.uniform(-1, 8))
            a = float(rng.uniform(0.2, 0.8))
            r1 = rotation_number(peak, E, a, n=10**5).rho
            r2 = rotation_number(peak, E, a + 1e-4, n=10**5).rho
            assert abs(r1 - r2) < 0.01

    def test_n_validation(self, zero):
        with pytest.raises(PreconditionError):
            rotation_number(zero, 1.0, GOLDEN, n=10)

    def test_degree_check_rejects_nonidentity_loop(self):
        def winding_loop(xs):
            return np.stack([rotation(2.0 * math.pi * x) for x in xs])
        with pytest.raises(PreconditionError):
            loop_rotation_number(winding_loop, GOLDEN, n=2000)


class TestEllipticIntegral:
    def test_constant_trace_loop(self, zero, half):
        # V=0: tau constant = 2cos(2 psi0) for the 2-step; rho = psi0/(2 pi)
        E = 2.0 * math.cos(0.9)
        est = elliptic_rotation_integral(zero, E, half)
        assert est.rho == pytest.approx(0.9 / (2.0 * math.pi), abs=1e-10)

    def test_agrees_with_rational_average(self, peak, half):
        for E in (-0.14, -0.12, -0.10):
            a = elliptic_rotation_integral(peak, E, half).rho
            b = rotation_number(peak, E, half, n=10**4).rho
            assert abs(a - b) < 1e-6

    def test_peaky_window_defined_and_nonconstant(self, peak, half):
        vals = [elliptic_rotation_integral(peak, E, half).rho
                for E in np.linspace(-0.15, -0.10, 6)]
        assert all(np.isfinite(vals))
        assert max(vals) - min(vals) > 1e-4

    def test_precondition_names_offender(self, peak, half):
        with pytest.raises(PreconditionError, match="x ="):
            elliptic_rotation_integral(peak, 5.0, half)


class TestDensityOfStates:
    def test_free_half_filled(self, zero):
        est = rotation_number(zero, 0.0, GOLDEN, n=10**4)
        assert est.rho == pytest.approx(0.25, abs=1e-4)
        assert density_of_states(est) == pytest.approx(0.5, abs=2e-4)

    def test_above_band_full(self, zero):
        est = rotation_number(zero, 2.5, GOLDEN, n=10**4)
        assert density_of_states(est) == pytest.approx(1.0, abs=1e-4)

    def test_consistency_error(self):
        from cocyclelab.rotation import RotationEstimate
        bad = RotationEstimate(rho=0.7, rho_bar=0.7, n_steps=1,
                               convergence_gap=0.0, method="orbit-lift")
        with pytest.raises(ConsistencyError):
            density_of_states(bad)


class TestQCompatibility:
    def test_qstep_rotation_compat(self, peak):
        # q * rho(alpha, A) = rho_bar((alpha, A)^q) mod 1, elliptic samples
        from cocyclelab.cocycle import step_matrices
        alpha = GOLDEN
        rng = np.random.default_rng(13)
        checked = 0
        for E in rng.uniform(-0.15, -0.10, 10):
            E = float(E)
            rho = rotation_number(peak, E, alpha, n=2 * 10**5).rho

            def two_step(xs, E=E):
                A1 = step_matrices(np.asarray(
                    E - peak.eval(np.mod(xs + alpha, 1.0)), dtype=float))
                A0 = step_matrices(np.asarray(E - peak.eval(xs), dtype=float))
                return np.einsum("kij,kjl->kil", A1, A0)

            r2 = loop_rotation_number(two_step, 2.0 * alpha % 1.0,
                                      n=2 * 10**5).rho
            defect = (2.0 * rho - r2) % 1.0
            assert min(defect, 1.0 - defect) < 1e-4
            checked += 1
        assert checked == 10
