import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import deltaspec as ds
from deltaspec.model import probe_potential


class TestParsePotential:
    def test_power_expression(self):
        q = ds.parse_potential("x^2")
        assert q(1.5) == pytest.approx(2.25, abs=0)

    def test_linear_table(self):
        q = ds.parse_potential("x,q\n0,0\n1,1\n2,4", interpolation="linear")
        assert q(0.5) == pytest.approx(0.5, abs=0)
        assert q(2.0) == 4.0

    def test_malformed_expression(self):
        with pytest.raises(ds.PotentialParseError):
            ds.parse_potential("x^")

    def test_unknown_symbol(self):
        with pytest.raises(ds.PotentialParseError):
            ds.parse_potential("y + 1")

    def test_nonreal_expression(self):
        with pytest.raises(ds.PotentialParseError):
            ds.parse_potential("sqrt(0-1-x)")

    def test_non_increasing_knots(self):
        with pytest.raises(ds.PotentialParseError):
            ds.parse_potential("x,q\n0,0\n0,1\n2,4")

    def test_indicator(self):
        q = ds.parse_potential("-5*[x<1]")
        assert q(0.5) == -5.0
        assert q(1.5) == 0.0
        # unicode minus and middle dot are accepted too
        q2 = ds.parse_potential("−5·[x<1]")
        assert q2(0.5) == -5.0

    def test_functions(self):
        q = ds.parse_potential("exp(-x) + sin(x)*cos(x) + sqrt(abs(x))")
        x = 1.7
        assert q(x) == pytest.approx(
            math.exp(-x) + math.sin(x) * math.cos(x) + math.sqrt(x), rel=1e-14
        )

    def test_pchip_table_interpolates_knots(self):
        q = ds.parse_potential("x,q\n0,0\n1,1\n2,4\n3,9")
        for xv, qv in [(0, 0), (1, 1), (2, 4), (3, 9)]:
            assert q(float(xv)) == pytest.approx(qv, abs=1e-14)
        # clamp extension beyond the last knot
        assert q(5.0) == pytest.approx(9.0)

    def test_vectorized_eval(self):
        q = ds.parse_potential("x^2")
        xs = np.array([0.0, 1.0, 3.0])
        assert np.allclose(q(xs), xs ** 2)

    def test_constant_expression_broadcasts(self):
        q = ds.parse_potential("2")
        assert np.allclose(q(np.zeros(4)), 2.0)

    def test_potential_is_picklable_and_hashable(self):
        import pickle

        q = ds.parse_potential("x^2")
        q2 = pickle.loads(pickle.dumps(q))
        assert q2(1.5) == 2.25
        assert hash(q) == hash(q2)


class TestSolverConfig:
    def test_defaults_valid(self):
        cfg = ds.SolverConfig()
        assert cfg.dl_eff == pytest.approx(1e-5)

    @pytest.mark.parametrize("kw", [
        dict(b=-1.0),
        dict(h=0.0),
        dict(eig_tol=0.0),
        dict(b_growth=1.0),
        dict(b_max=4.0),
        dict(t_grid=(1.0, 0.5)),
        dict(t_grid=(7.0, 9.0)),
        dict(r_ladder=(0.01, 0.02)),
        dict(r_ladder=(0.0, -0.1)),
        dict(r_ladder=(0.5,), r_cap=0.1),
        dict(workers=0),
    ])
    def test_invalid_configs(self, kw):
        with pytest.raises(ds.ConfigError):
            ds.SolverConfig(**kw)


class TestClassify:
    def setup_method(self):
        self.cfg = ds.SolverConfig()

    def test_confining(self):
        hyp = ds.classify(ds.parse_potential("x^2"), self.cfg)
        assert hyp.variant == "H1_Confining"
        assert hyp.floor_q0 == pytest.approx(0.0, abs=1e-12)

    def test_bounded_below_well(self):
        hyp = ds.classify(ds.parse_potential("-5*[x<1]"), self.cfg)
        assert hyp.variant == "H1_BoundedBelow"
        assert hyp.floor_q0 == pytest.approx(-5.0)

    def test_unsupported_diverging_down(self):
        hyp = ds.classify(ds.parse_potential("0 - x^4"), self.cfg)
        assert hyp.variant == "Unsupported"

    def test_free_potential_bounded_below(self):
        hyp = ds.classify(ds.parse_potential("0"), self.cfg)
        assert hyp.variant == "H1_BoundedBelow"

    def test_h2_with_g(self):
        g = ds.parse_potential("exp(0-x/2)")
        hyp = ds.classify(ds.parse_potential("x^2"), self.cfg, g=g)
        assert hyp.variant == "H2_LimitCircle"

    def test_nonpositive_g_rejected(self):
        g = ds.parse_potential("x-1")
        with pytest.raises(ds.ConfigError):
            ds.classify(ds.parse_potential("x^2"), self.cfg, g=g)

    def test_deterministic(self):
        q = ds.parse_potential("x^2 + sin(x)")
        a = ds.classify(q, self.cfg)
        b = ds.classify(q, self.cfg)
        assert a == b

    @pytest.mark.parametrize("expr", ["x", "x^2", "2 + x^3"])
    def test_refinement_keeps_confining_verdict(self, expr):
        # monotone potentials: halving the probe step must not change the
        # verdict away from H1_Confining
        q = ds.parse_potential(expr)
        coarse = ds.classify(q, ds.SolverConfig(h=2e-3))
        fine = ds.classify(q, ds.SolverConfig(h=1e-3))
        assert coarse.variant == "H1_Confining"
        assert fine.variant == coarse.variant

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=0.0, max_value=30.0))
    def test_floor_below_every_probe_point(self, x):
        q = ds.parse_potential("2 + sin(x) + x")
        hyp = ds.classify(q, self.cfg)
        if x <= 4.0 * self.cfg.b:
            assert hyp.floor_q0 <= q(x) + 1e-9


class TestEssentialFloor:
    def test_examples(self):
        cfg = ds.SolverConfig()
        assert ds.essential_floor(ds.parse_potential("x^2"), cfg) == pytest.approx(0.0, abs=1e-12)
        assert ds.essential_floor(ds.parse_potential("-5*[x<1]"), cfg) == pytest.approx(-5.0)
        assert ds.essential_floor(ds.parse_potential("1 + exp(0-x)"), cfg) == pytest.approx(1.0, abs=1e-6)

    def test_tail_floor_tracks_tail(self):
        cfg = ds.SolverConfig()
        probe = probe_potential(ds.parse_potential("-5*[x<1]"), cfg)
        assert probe.tail_floor == pytest.approx(0.0, abs=1e-12)
        assert probe.floor == pytest.approx(-5.0)
