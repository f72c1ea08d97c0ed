"""
Tests for the multistart optimizer: stencil gradients, batched and scalar
restarts, seeding and aggregation.
"""

import numpy as np
import pytest

from app.cqregion.ascent import RestartOutcome, best_outcome, restart_rng, run_restarts, stencil_value_and_grad

CENTER = np.array([0.3, -1.2, 2.0])


def _bowl_batched(xs):
    return np.sum((np.asarray(xs) - CENTER) ** 2, axis=-1)


def _bowl(x):
    return float(np.sum((np.asarray(x) - CENTER) ** 2))


def _outcome(index, value):
    return RestartOutcome(index=index, x=np.zeros(1), value=value, iterations=1, converged=True, message="")


class TestStencil:
    """Tests for stencil_value_and_grad()"""

    def test_quadratic_gradient(self):
        """Forward differences match 2(x − c) to O(h)"""
        x = np.array([1.0, 0.0, -1.0])
        value, grad = stencil_value_and_grad(_bowl_batched, x, 1e-7)
        assert value == pytest.approx(_bowl(x))
        assert np.allclose(grad, 2.0 * (x - CENTER), atol=1e-5)

    def test_single_call(self):
        """The whole stencil is one call of n + 1 rows"""
        shapes = []

        def fun(xs):
            shapes.append(np.shape(xs))
            return _bowl_batched(xs)

        stencil_value_and_grad(fun, np.zeros(3), 1e-6)
        assert shapes == [(4, 3)]

    def test_non_finite_center(self):
        """A non-finite value at x gives the penalty and a zero gradient"""
        value, grad = stencil_value_and_grad(lambda xs: np.full(len(xs), np.nan), np.zeros(2), 1e-6)
        assert value == 1e6
        assert np.array_equal(grad, np.zeros(2))

    def test_non_finite_neighbour(self):
        """A non-finite neighbour zeroes only its own component"""

        def fun(xs):
            out = _bowl_batched(xs)
            out[2] = np.inf
            return out

        _, grad = stencil_value_and_grad(fun, np.zeros(3), 1e-7)
        assert grad[1] == 0.0
        assert grad[0] == pytest.approx(-2.0 * CENTER[0], abs=1e-5)


class TestRunRestarts:
    """Tests for run_restarts()"""

    @pytest.mark.parametrize("batched", [False, True])
    def test_finds_minimum(self, batched):
        """Both modes reach the bowl's minimum"""
        fun = _bowl_batched if batched else _bowl
        starts = [restart_rng(1, i).standard_normal(3) for i in range(3)]
        outcomes = run_restarts(fun, starts, tol=1e-12, max_iters=200, fd_step=1e-8, stall_window=20, threads=1, batched=batched)
        best = best_outcome(outcomes)
        assert [o.index for o in outcomes] == [0, 1, 2]
        assert best.value == pytest.approx(0.0, abs=1e-8)
        assert np.allclose(best.x, CENTER, atol=1e-4)

    def test_threads_do_not_change_results(self):
        """Outcomes are identical for one and several workers"""
        starts = [restart_rng(2, i).standard_normal(3) for i in range(4)]
        kwargs = dict(tol=1e-10, max_iters=100, fd_step=1e-7, stall_window=10, batched=True)
        one = run_restarts(_bowl_batched, starts, threads=1, **kwargs)
        many = run_restarts(_bowl_batched, starts, threads=3, **kwargs)
        assert [o.value for o in one] == [o.value for o in many]


class TestSeeding:
    """Tests for restart_rng()"""

    def test_streams_are_independent(self):
        """Different streams give different draws; equal streams repeat"""
        a = restart_rng(5, 1, 0).standard_normal(4)
        b = restart_rng(5, 1, 1).standard_normal(4)
        assert not np.allclose(a, b)
        assert np.array_equal(a, restart_rng(5, 1, 0).standard_normal(4))


class TestBestOutcome:
    """Tests for best_outcome()"""

    def test_lowest_value(self):
        """The lowest value wins"""
        assert best_outcome([_outcome(0, 2.0), _outcome(1, -1.0)]).index == 1

    def test_tie_goes_to_lowest_index(self):
        """Equal values go to the first restart"""
        assert best_outcome([_outcome(3, 1.0), _outcome(1, 1.0), _outcome(2, 1.0)]).index == 1

    def test_empty(self):
        """No outcomes is an error"""
        with pytest.raises(ValueError):
            best_outcome([])
