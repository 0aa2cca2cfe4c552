import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import deltaspec as ds

Q0 = ds.parse_potential("0")
QH = ds.parse_potential("x^2")


class TestPropagate:
    def test_sine_solution(self):
        tr = ds.propagate(Q0, 1.0, 0.0, math.pi, 0.0, 1.0, 1e-3)
        y_half, dy_half = tr.value_at(math.pi / 2)
        assert y_half == pytest.approx(1.0, abs=1e-8)
        assert tr.ys[-1] == pytest.approx(0.0, abs=1e-8)

    def test_sinh_solution(self):
        tr = ds.propagate(Q0, -1.0, 0.0, 1.0, 0.0, 1.0, 1e-3)
        assert tr.ys[-1] == pytest.approx(math.sinh(1.0), abs=1e-10)

    def test_harmonic_ground_state_ratio(self):
        # y proportional to x*exp(-x^2/2) solves the IVP at lambda = 3
        tr = ds.propagate(QH, 3.0, 0.0, 4.0, 0.0, 1.0, 1e-3)
        y4 = tr.value_at(4.0)[0]
        y1 = tr.value_at(1.0)[0]
        expected = (4.0 * math.exp(-8.0)) / (1.0 * math.exp(-0.5))
        assert y4 / y1 == pytest.approx(expected, rel=1e-6)

    def test_backward_direction(self):
        tr = ds.propagate(Q0, 1.0, math.pi, 0.0, 0.0, -1.0, 1e-3)
        assert tr.direction == "backward"
        assert np.all(np.diff(tr.xs) > 0)  # stored increasing regardless
        # y = sin(pi - x): value at 0 is sin(pi) = 0, at pi/2 is 1
        assert tr.value_at(math.pi / 2)[0] == pytest.approx(1.0, abs=1e-8)
        # init reproduced at its own x0
        assert tr.value_at(math.pi) == (0.0, -1.0)

    def test_initial_data_exact(self):
        tr = ds.propagate(QH, 2.0, 0.0, 1.0, 0.25, -0.5, 1e-3)
        assert tr.ys[0] == 0.25
        assert tr.dys[0] == -0.5

    def test_fourth_order_convergence(self):
        errs = []
        for h in (4e-3, 2e-3):
            tr = ds.propagate(Q0, 1.0, 0.0, math.pi, 0.0, 1.0, h)
            errs.append(abs(tr.ys[-1]))
        assert errs[0] / errs[1] >= 8.0

    def test_overflow_raises_with_location(self):
        with pytest.raises(ds.OverflowInForbiddenRegion) as exc:
            ds.propagate(Q0, -9.0, 0.0, 130.0, 0.0, 1.0, 1e-2)
        assert exc.value.last_finite_x is not None
        assert 0.0 < exc.value.last_finite_x < 130.0

    def test_empty_interval_rejected(self):
        with pytest.raises(ds.ConfigError):
            ds.propagate(Q0, 1.0, 1.0, 1.0, 0.0, 1.0, 1e-3)

    def test_nonfinite_potential_rejected(self):
        # exp(x) overflows to inf on the sample grid well before x = 800
        with pytest.raises(ds.ConfigError):
            ds.propagate(ds.parse_potential("exp(x)"), 0.0, 0.0, 800.0, 0.0, 1.0, 1.0)

    def test_csv_roundtrip(self, tmp_path):
        tr = ds.propagate(QH, 2.0, 0.0, 1.0, 0.0, 1.0, 1e-2)
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        back = ds.SolutionTrace.from_csv(path)
        assert back.lam == tr.lam
        assert back.init == tr.init
        np.testing.assert_array_equal(back.xs, tr.xs)
        np.testing.assert_array_equal(back.ys, tr.ys)


class TestPrufer:
    def test_free_particle(self):
        s = ds.prufer_count(Q0, 1.0, math.pi, 1e-3)
        assert s.theta_end == pytest.approx(math.pi, abs=1e-8)
        assert s.zero_count == 0  # the first zero of sin sits AT pi

    def test_harmonic_ground_state_no_zeros(self):
        assert ds.prufer_count(QH, 3.0, 8.0, 1e-3).zero_count == 0

    def test_harmonic_second_state_one_zero(self):
        assert ds.prufer_count(QH, 7.0, 8.0, 1e-3).zero_count == 1

    @settings(max_examples=15, deadline=None)
    @given(st.floats(min_value=-2.0, max_value=8.0),
           st.floats(min_value=0.05, max_value=3.0))
    def test_theta_increasing_in_lambda(self, lam, dlam):
        a = ds.prufer_count(QH, lam, 4.0, 2e-3)
        b = ds.prufer_count(QH, lam + dlam, 4.0, 2e-3)
        assert b.theta_end > a.theta_end
        assert b.zero_count >= a.zero_count


class TestWronskian:
    def test_fundamental_pair_harmonic(self):
        phi = ds.propagate(QH, 2.0, 0.0, 4.0, 0.0, 1.0, 1e-3)
        psi = ds.propagate(QH, 2.0, 0.0, 4.0, 1.0, 0.0, 1e-3)
        value, drift = ds.wronskian(phi, psi)
        assert value == pytest.approx(-1.0, abs=1e-12)
        assert drift <= 1e-8

    def test_identical_traces(self):
        phi = ds.propagate(QH, 2.0, 0.0, 4.0, 0.0, 1.0, 1e-3)
        value, drift = ds.wronskian(phi, phi)
        assert value == 0.0
        assert drift == 0.0

    def test_weyl_solution_pair(self):
        # W[chi, phi] = chi(0)*phi'(0) - phi(0)*chi'(0) = 1
        qa = ds.parse_potential("x")
        ev = ds.psi_weyl(qa, 0.0, 10.0, 1e-3)
        phi = ds.propagate(qa, 0.0, 0.0, 10.0, 0.0, 1.0, 1e-3)
        value, drift = ds.wronskian(ev.chi, phi)
        assert value == pytest.approx(1.0, abs=1e-7)
        assert drift <= 1e-7

    def test_drift_shrinks_with_step(self):
        # coarse steps so truncation error dominates roundoff accumulation
        drifts = []
        for h in (8e-2, 4e-2):
            phi = ds.propagate(QH, 2.0, 0.0, 4.0, 0.0, 1.0, h)
            psi = ds.propagate(QH, 2.0, 0.0, 4.0, 1.0, 0.0, h)
            drifts.append(ds.wronskian(phi, psi)[1])
        assert drifts[0] / drifts[1] >= 8.0

    def test_mismatched_lambda_rejected(self):
        a = ds.propagate(QH, 2.0, 0.0, 4.0, 0.0, 1.0, 1e-2)
        b = ds.propagate(QH, 2.5, 0.0, 4.0, 0.0, 1.0, 1e-2)
        with pytest.raises(ds.ConfigError):
            ds.wronskian(a, b)

    def test_disjoint_grids_rejected(self):
        a = ds.propagate(QH, 2.0, 0.0, 1.0, 0.0, 1.0, 1e-2)
        b = ds.propagate(QH, 2.0, 3.0, 4.0, 0.0, 1.0, 1e-2)
        with pytest.raises(ds.ConfigError):
            ds.wronskian(a, b)
