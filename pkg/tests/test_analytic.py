"""
Tests for the closed-form dephasing curve and the matched-r oracle.
"""

import numpy as np
import pytest

from app.cqregion.constants import TAG_ANALYTIC
from app.cqregion.modules.channel import factories
from app.cqregion.modules.infoquant.service import breakdown
from app.cqregion.modules.qcore.service import binary_entropy
from app.cqregion.modules.region.analytic import (
    analytic_R,
    analytic_dephasing_curve,
    default_mu_grid,
    match_analytic_dephasing,
    mu_ensemble,
    mu_for_rate,
)
from app.cqregion.modules.region.models import OptimizerConfig, RatePoint, RegionError
from app.cqregion.modules.region.service import bounds, sweep_curve


class TestClosedForm:
    """Tests for analytic_R() and analytic_dephasing_curve()"""

    def test_classical_end(self):
        """μ = 0 gives the (1, 0) endpoint"""
        curve = analytic_dephasing_curve(0.1, [0.0])
        p = curve.points[0]
        assert (p.r, p.R) == (pytest.approx(1.0), pytest.approx(0.0, abs=1e-12))

    def test_quantum_end(self):
        """μ = 1/2 gives 1 − h(q)"""
        assert analytic_R(0.1, 0.5) == pytest.approx(1.0 - binary_entropy(0.1), abs=1e-12)
        assert analytic_R(0.1, 0.5) == pytest.approx(0.5310, abs=1e-4)

    def test_beats_time_sharing(self):
        """Interior points sit above the time-sharing segment"""
        mu = 0.2
        r = 1.0 - binary_entropy(mu)
        ts = bounds(1.0, analytic_R(0.1, 0.5)).time_sharing(r)
        assert analytic_R(0.1, mu) - ts > 1e-3

    def test_noiseless_limit(self):
        """q = 0 gives R = h(μ)"""
        for mu in (0.0, 0.1, 0.3, 0.5):
            assert analytic_R(0.0, mu) == pytest.approx(binary_entropy(mu), abs=1e-12)

    def test_curve_shape(self):
        """Default μ grid, tags and descriptor"""
        curve = analytic_dephasing_curve(0.2)
        assert len(curve.points) == 51
        assert all(p.tag == TAG_ANALYTIC and p.objective is None for p in curve.points)
        Rs = [p.R for p in curve.points]
        assert Rs == sorted(Rs, reverse=True)
        assert curve.channel == {"kind": "dephasing", "param": 0.2}

    def test_ensemble_realizes_rates(self):
        """The two-member ensemble achieves the closed-form rates"""
        ch = factories.dephasing_qubit(0.1)
        for mu in (0.05, 0.2, 0.4):
            b = breakdown(mu_ensemble(mu), ch)
            assert b.holevo == pytest.approx(1.0 - binary_entropy(mu), abs=1e-9)
            assert b.avg_coherent == pytest.approx(analytic_R(0.1, mu), abs=1e-9)

    @pytest.mark.parametrize("q", [-0.1, 0.6])
    def test_q_out_of_range(self, q):
        """q outside [0, 1/2] is refused"""
        with pytest.raises(RegionError):
            analytic_dephasing_curve(q)

    def test_mu_out_of_range(self):
        """μ outside [0, 1/2] and empty grids are refused"""
        with pytest.raises(RegionError):
            analytic_dephasing_curve(0.1, [0.2, 0.7])
        with pytest.raises(RegionError):
            analytic_dephasing_curve(0.1, [])


class TestMuForRate:
    """Tests for mu_for_rate()"""

    def test_inverse(self):
        """Inverts r = 1 − h(μ)"""
        for mu in default_mu_grid(11)[1:-1]:
            assert mu_for_rate(1.0 - binary_entropy(mu)) == pytest.approx(mu, abs=1e-10)

    def test_clamped_ends(self):
        """Rates beyond [0, 1] clamp to the ends"""
        assert mu_for_rate(1.5) == 0.0
        assert mu_for_rate(-0.2) == 0.5


class TestOracleMatch:
    """Tests for match_analytic_dephasing()"""

    def test_self_match(self):
        """The closed-form curve matches itself"""
        match = match_analytic_dephasing(analytic_dephasing_curve(0.1), 0.1)
        assert match.max_deviation < 1e-9

    def test_off_curve_point(self):
        """An off-curve point reports its R gap"""
        match = match_analytic_dephasing([RatePoint(lam=1.0, r=0.0, R=0.5, objective=0.5)], 0.1)
        assert match.max_deviation == pytest.approx(0.031, abs=1e-3)

    def test_empty(self):
        """No points means zero deviation"""
        assert match_analytic_dephasing([], 0.1).max_deviation == 0.0

    def test_numerical_sweep_agrees(self):
        """An optimized sweep lands on the closed form"""
        config = OptimizerConfig(restarts=4, seed=2, max_iters=400, threads=1)
        curve = sweep_curve(factories.dephasing_qubit(0.1), (1.5, 3.0), config)
        assert match_analytic_dephasing(curve, 0.1).max_deviation <= 2e-3
        assert np.isclose(curve.points[0].R, analytic_R(0.1, 0.5), atol=2e-3)
