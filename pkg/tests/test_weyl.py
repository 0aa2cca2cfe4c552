import math

import numpy as np
import pytest

import deltaspec as ds

Q0 = ds.parse_potential("0")
QH = ds.parse_potential("x^2")

# Closed forms for q = 0, lambda < 0: chi = exp(-kappa x) with
# kappa = sqrt(-lambda), so m = -kappa and int(chi^2) = 1/(2 kappa).


class TestMTruncated:
    def test_free_m_minus_one(self):
        m = ds.m_truncated(Q0, -1.0, 20.0, 1e-3)
        assert abs(m + 1.0) <= 1e-8

    def test_free_m_minus_two(self):
        m = ds.m_truncated(Q0, -4.0, 20.0, 1e-3)
        assert abs(m + 2.0) <= 1e-8

    def test_pole_at_eigenvalue(self):
        with pytest.raises(ds.PoleAtLambda) as exc:
            ds.m_truncated(QH, 3.0, 8.0, 1e-3)
        assert exc.value.kind == "eigenvalue"

    def test_monotone_below_first_eigenvalue(self):
        grid = np.linspace(0.0, 2.95, 20)
        ms = [ds.m_truncated(QH, float(l), 8.0, 1e-3) for l in grid]
        assert all(b > a for a, b in zip(ms, ms[1:]))


class TestPsiWeyl:
    def test_free_integrals(self):
        ev = ds.psi_weyl(Q0, -1.0, 20.0, 1e-3)
        assert ev.m == pytest.approx(-1.0, abs=1e-10)
        assert ev.m_prime_integral == pytest.approx(0.5, abs=1e-6)
        assert ev.u_value == pytest.approx(-0.5, abs=1e-6)

    def test_normalizations(self):
        ev = ds.psi_weyl(QH, 2.0, 8.0, 1e-3)
        assert ev.chi.ys[0] == pytest.approx(1.0, abs=1e-14)
        assert ev.psi_weyl.ys[0] == pytest.approx(1.0 / ev.m, rel=1e-14)
        np.testing.assert_allclose(ev.psi_weyl.ys, ev.chi.ys / ev.m, rtol=1e-14)

    def test_m_prime_identity(self):
        # central difference of m matches the squared-chi integral
        dl = 1e-5
        ev = ds.psi_weyl(QH, 2.0, 8.0, 1e-3)
        fd = (ds.m_truncated(QH, 2.0 + dl, 8.0, 1e-3)
              - ds.m_truncated(QH, 2.0 - dl, 8.0, 1e-3)) / (2 * dl)
        assert abs(fd - ev.m_prime_integral) / abs(fd) <= 1e-4

    def test_pole_propagates(self):
        with pytest.raises(ds.PoleAtLambda):
            ds.psi_weyl(QH, 3.0, 8.0, 1e-3)


class TestUOfLambda:
    def test_free_values(self):
        # d/dlambda (1/m) for m = -sqrt(-lambda)
        assert ds.u_of_lambda(Q0, -1.0, 20.0, 1e-3) == pytest.approx(-0.5, abs=1e-8)
        assert ds.u_of_lambda(Q0, -4.0, 20.0, 1e-3) == pytest.approx(-0.0625, abs=1e-8)

    def test_consistency_with_integral(self):
        ev = ds.psi_weyl(QH, 2.0, 8.0, 1e-3)
        u = ds.u_of_lambda(QH, 2.0, 8.0, 1e-3)
        assert abs(u - ev.u_value) <= 1e-4
        assert abs(u - ev.u_value) / abs(u) <= 1e-4

    def test_smooth_across_m_pole(self):
        # 1/m has a simple zero at the truncated eigenvalue, so the stencil
        # may straddle it
        lam1 = ds.eigen_truncated(QH, 8.0, 1, 1e-3)
        u = ds.u_of_lambda(QH, lam1, 8.0, 1e-3, dl=1e-5)
        assert math.isfinite(u) and u < 0


class TestWeylInvariants:
    def test_wronskian_with_phi_is_one(self):
        ev = ds.psi_weyl(QH, 2.0, 8.0, 1e-3)
        phi = ds.propagate(QH, 2.0, 0.0, 8.0, 0.0, 1.0, 1e-3)
        value, drift = ds.wronskian(ev.chi, phi)
        assert value == pytest.approx(1.0, abs=1e-6)
        assert drift <= 1e-6

    def test_u_negative_below_pole(self):
        for lam in (-1.0, 0.5, 2.0):
            assert ds.u_of_lambda(QH, lam, 8.0, 1e-3) < 0
