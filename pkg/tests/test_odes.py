import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fplearn.distributions import InitialDistribution
from fplearn.game import Game
from fplearn.meanfield import Ensemble, init_ensemble, mean_br, transport_step
from fplearn.odes import (Box, box_lambda, box_mean_br_2x2, brd_rhs, first_time_above,
                          integrate_box_center, integrate_brd, integrate_generic,
                          integrate_meanbr_2x2, lambda_rhs_ensemble, meanbr_ode_rhs_2x2,
                          overlap_length, overlap_series)


def mc_first_fraction(box, pstar, n, seed=0):
    u = np.random.default_rng(seed).random((n, 2)) * box.side + box.lo
    return np.mean(u[:, 0] / u.sum(axis=1) < pstar)


class TestBoxMeanBR:
    def test_examples(self, mis):
        np.testing.assert_array_equal(box_mean_br_2x2(Box((0.5, 3.5)), mis), [1, 0])
        np.testing.assert_allclose(box_mean_br_2x2(Box((3.5, 3.5)), mis), [0.5, 0.5])
        np.testing.assert_allclose(box_mean_br_2x2(Box((3.6, 3.5)), mis), [0.405, 0.595])
        np.testing.assert_array_equal(box_mean_br_2x2(Box((8.0, 3.5)), mis), [0, 1])

    def test_mc_oracle_generic_game(self, generic):
        box, n = Box((1.7, 2.9), 1.3), 400_000
        p = box_mean_br_2x2(box, generic)[0]
        mc = mc_first_fraction(box, 1 / 3, n)
        assert abs(p - mc) < 3 * math.sqrt(mc * (1 - mc) / n)

    def test_origin_rejected(self, mis):
        with pytest.raises(ValueError):
            box_mean_br_2x2(Box((0.5, 0.5)), mis)

    @given(st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.05, 1.0))
    def test_simplex(self, c1, c2, side):
        br = box_mean_br_2x2(Box((c1, c2), side), Game([[0, 1], [1, 0]]))
        assert abs(br.sum() - 1) < 1e-12 and np.all(br >= 0)


class TestBoxModel:
    def test_diagonal_start_stays_on_diagonal(self, mis):
        sol = integrate_box_center(Box((3.5, 3.5)), mis, 0.01, 4.0)
        np.testing.assert_allclose(sol.states[:, 0], sol.states[:, 1], atol=1e-12)
        np.testing.assert_allclose(sol.final, [5.5, 5.5], atol=1e-9)

    def test_euler_first_order(self, mis):
        # successive differences under dt halving shrink by about 2 for a first-order scheme
        y = [integrate_box_center(Box((0.5, 3.5)), mis, dt, 6.0).final for dt in (0.04, 0.02, 0.01)]
        ratio = np.abs(y[0] - y[1]).max() / np.abs(y[1] - y[2]).max()
        assert 1.4 < ratio < 2.8

    def test_leaving_quadrant_raises(self):
        with pytest.raises(ValueError):
            integrate_box_center(Box((0.5, 3.5)), Game([[-1, 0], [0, 0]]), 0.1, 1.0)

    def test_quadrature_lambda(self):
        box = Box((0.5, 3.5))
        u = np.random.default_rng(1).random((10 ** 6, 2)) + box.lo
        p = u[:, 0] / u.sum(axis=1)
        lam = box_lambda(box)
        assert abs(lam[0] - p.mean()) < 3 * p.std() / 1000
        assert lam.sum() == pytest.approx(1)

    def test_overlap_series(self, mis):
        sol = integrate_box_center(Box((0.5, 3.5)), mis, 0.01, 8.0)
        ov = overlap_series(sol, 1.0)
        assert ov[0] == 0 and ov[-1] > 1.3
        t = first_time_above(sol.times, ov, 1.0)
        assert t is not None and ov[np.searchsorted(sol.times, t)] > 1.0


class TestBRD:
    def test_examples(self, mis):
        np.testing.assert_allclose(brd_rhs([0.3, 0.7], 10.0, mis), [0.07, -0.07])
        np.testing.assert_allclose(brd_rhs([1.0, 0.0], 3.0, Game([[1, 1], [0, 0]])), [0, 0])

    @given(st.floats(0.01, 0.99), st.floats(0.1, 50), st.floats(0.1, 10))
    def test_homogeneous_in_total(self, p, s, k):
        g = Game([[0, 1], [1, 0]])
        np.testing.assert_allclose(brd_rhs([p, 1 - p], s, g), k * brd_rhs([p, 1 - p], k * s, g),
                                   rtol=1e-12, atol=1e-15)

    def test_simplex_conserved(self, generic):
        sol = integrate_brd([0.9, 0.1], 2.0, generic, 0.3, 0.01, 20.0, method="rk4")
        np.testing.assert_allclose(sol.states[:, :2].sum(axis=1), 1, atol=1e-12)
        assert sol.final[2] == pytest.approx(1 / 0.3 + (2 - 1 / 0.3) * math.exp(-6), rel=1e-6)

    def test_tiny_box_tracks_point_mass(self, mis):
        side = 1e-3
        box = integrate_box_center(Box((0.5, 3.5), side), mis, 1e-3, 20.0)
        lam_box = np.array([box_lambda(Box(tuple(c), side)) for c in box.states[::100]])
        c0 = np.array([0.5, 3.5])
        pt = integrate_brd(c0 / c0.sum(), c0.sum(), mis, 0.0, 1e-3, 20.0)
        assert np.abs(lam_box - pt.states[::100, :2]).max() < 1e-2


class TestLambdaRHS:
    def test_examples(self):
        one = Ensemble(np.array([[1.0, 0.0]]), np.ones(1))
        np.testing.assert_allclose(lambda_rhs_ensemble(one, [1, 0]), [0, 0])
        two = Ensemble(np.array([[1.0, 3.0]]), np.ones(1))
        np.testing.assert_allclose(lambda_rhs_ensemble(two, [1, 0]), [0.1875, -0.1875])

    @given(st.floats(0, 1), st.integers(0, 1000))
    def test_components_sum_to_zero(self, b, seed):
        ens = init_ensemble(InitialDistribution.uniform_box([0.1, 0.1, 0.1], [4, 4, 4]), 30, seed)
        assert abs(lambda_rhs_ensemble(ens, [b, 1 - b, 0]).sum()) < 1e-12

    def test_matches_finite_difference(self, mis):
        ens = init_ensemble(InitialDistribution.uniform_box([0, 3], [1, 4]), 2500, mode="lattice")
        dt = 1e-3
        for _ in range(5):
            ens = transport_step(ens, [0.2, 0.8], 0.0, 0.7)
            br = mean_br(ens, mis)
            lam0 = ens.weights @ ens.beliefs()
            nxt = transport_step(ens, br, 0.0, dt)
            fd = (nxt.weights @ nxt.beliefs() - lam0) / dt
            assert np.abs(fd - lambda_rhs_ensemble(ens, br)).max() <= 5 * dt


class TestOverlap:
    def test_examples(self):
        assert overlap_length(Box((3.5, 3.5))) == pytest.approx(math.sqrt(2))
        assert overlap_length(Box((3.8, 3.5))) == pytest.approx(math.sqrt(2) * 0.7)
        assert overlap_length(Box((0.5, 3.5))) == 0

    def test_slab_oracle(self):
        # mass within w of the diagonal is overlap * 2w for a unit box when no corner is that close
        box, w, n = Box((3.8, 3.5)), 0.005, 4 * 10 ** 6
        u = np.random.default_rng(2).random((n, 2)) + box.lo
        frac = np.mean(np.abs(u[:, 0] - u[:, 1]) / math.sqrt(2) < w)
        est = frac / (2 * w) * box.side ** 2
        se = math.sqrt(frac * (1 - frac) / n) / (2 * w)
        assert abs(est - overlap_length(box)) < 3 * se


class TestMeanBR2x2:
    def test_rhs_examples(self):
        np.testing.assert_array_equal(meanbr_ode_rhs_2x2([1, 0], 1.0), [-1, 1])
        np.testing.assert_array_equal(meanbr_ode_rhs_2x2([0.5, 0.5], 2.0), [0, 0])
        with pytest.raises(ValueError):
            meanbr_ode_rhs_2x2([1, 0], -1.0)

    def test_closed_form(self):
        dt = math.log(2) / 2 / 1000
        sol = integrate_meanbr_2x2([1, 0], 1.0, dt, math.log(2) / 2)
        np.testing.assert_allclose(sol.final, [0.75, 0.25], atol=1e-10)

    def test_decay_rate(self):
        sol = integrate_meanbr_2x2([1, 0], 1.0, 1e-3, 5.0)
        sel = (sol.times >= 0.5) & (sol.times <= 4)
        slope = np.polyfit(sol.times[sel], np.log(np.abs(sol.states[sel, 0] - 0.5)), 1)[0]
        assert slope == pytest.approx(-2, abs=1e-6)
        np.testing.assert_allclose(sol.states.sum(axis=1), 1, atol=1e-12)

    def test_schedule(self):
        sol = integrate_meanbr_2x2([1, 0], lambda t: 0.0 if t < 1 else 1.0, 1e-3, 2.0)
        i = np.searchsorted(sol.times, 0.9)
        np.testing.assert_array_equal(sol.states[i], [1, 0])
        assert sol.final[0] < 1


class TestGeneric:
    def test_exponential(self):
        rk = integrate_generic(lambda t, y: -y, [1.0], 0.01, 1.0, "rk4")
        eu = integrate_generic(lambda t, y: -y, [1.0], 0.01, 1.0, "euler")
        assert abs(rk.final[0] - math.exp(-1)) < 1e-8
        assert abs(eu.final[0] - math.exp(-1)) < 1e-2
        assert len(rk.times) == 101 and rk.times[-1] == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            integrate_generic(lambda t, y: y, [1.0], 0.0, 1.0)
        with pytest.raises(ValueError):
            integrate_generic(lambda t, y: y, [1.0], 0.1, 1.0, "midpoint")
        with pytest.raises(FloatingPointError):
            with np.errstate(over="ignore"):
                integrate_generic(lambda t, y: y * 1e300, [1.0], 0.1, 1.0)

    def test_csv(self, tmp_path):
        sol = integrate_generic(lambda t, y: -y, [1.0, 2.0], 0.1, 1.0)
        sol.to_csv(tmp_path / "s.csv", ["a", "b"])
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t,a,b"


def test_first_time_above():
    t = np.arange(6.0)
    assert first_time_above(t, [0, 2, 0, 2, 2, 2], 1) == 3.0
    assert first_time_above(t, [2] * 6, 1) == 0.0
    assert first_time_above(t, [2, 2, 2, 2, 2, 0], 1) is None
