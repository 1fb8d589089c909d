import warnings

import numpy as np
import pytest
from conftest import cobb_douglas_economy, random_ces_economy

from econpotential import economy as econ
from econpotential.economy import CES, Economy, LinearAggregate
from econpotential.errors import (
    ConstructionError,
    InfeasibleError,
    TieAmbiguityWarning,
    UnsupportedEconomyError,
)
from econpotential.oracle import fd_gradient, grid_welfare_max
from econpotential.potential import (
    WelfareWeights,
    dual_gradient,
    dual_value,
    equilibrium_from_weights,
    maximize_welfare,
    minimize_dual,
    potential,
    weighted_utility,
    welfare_gradient,
)


def cobb_douglas_closed_form(a):
    p = np.array([(1 + a) / 3, (2 - a) / 3])
    x1 = np.array([6 * a / (1 + a), 3 * a / (2 - a)])
    return p, x1


def random_feasible(rng, w, n):
    shares = rng.dirichlet(np.ones(n), size=w.size).T
    return shares * w * rng.uniform(0.2, 1.0)


class TestWeights:
    def test_normalized(self):
        np.testing.assert_allclose(WelfareWeights([1, 3]).values, [0.25, 0.75])
        assert np.asarray(WelfareWeights([2, 2])).sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha", [[1, 0], [1, -1], [1, np.nan], [1, 1e-14]])
    def test_rejects_degenerate(self, alpha):
        with pytest.raises(ConstructionError):
            WelfareWeights(alpha)


class TestPrimalDual:
    def test_weighted_utility_example(self, cd2):
        assert weighted_utility(cd2, [0.5, 0.5], [[2, 1], [1, 2]]) == pytest.approx(
            2 * np.log(2), abs=1e-14
        )

    def test_dual_gradient_matches_differences(self, rng, cd2):
        for _ in range(20):
            a = rng.dirichlet([1, 1])
            p = np.exp(rng.uniform(-1, 1, 2))
            fd = fd_gradient(lambda z: dual_value(cd2, a, z), p, 1e-5)
            np.testing.assert_allclose(dual_gradient(cd2, a, p), fd, rtol=1e-7, atol=1e-9)

    def test_dual_convex_along_segments(self, rng):
        for _ in range(50):
            e = random_ces_economy(rng)
            a = rng.dirichlet(np.ones(e.n_consumers))
            p, q = np.exp(rng.uniform(-1, 1, (2, e.n_goods)))
            mid = dual_value(e, a, (p + q) / 2)
            assert mid <= 0.5 * (dual_value(e, a, p) + dual_value(e, a, q)) + 1e-12

    def test_potential_rejects_infeasible(self, cd2):
        with pytest.raises(InfeasibleError):
            potential(cd2, [0.5, 0.5], [[2, 1], [2, 2]], [1, 1])

    def test_potential_nonpositive(self, rng, cd2, multi4):
        for e in (cd2, multi4, random_ces_economy(rng, n=3, k=3)):
            for _ in range(200):
                a = rng.dirichlet(np.ones(e.n_consumers))
                x = random_feasible(rng, e.total, e.n_consumers)
                p = np.exp(rng.uniform(-2, 2, e.n_goods))
                assert potential(e, a, x, p) <= 1e-12

    def test_potential_vanishes_at_closed_form_equilibrium(self, cd2):
        for a in (0.1, 0.5, 0.9):
            p, x1 = cobb_douglas_closed_form(a)
            x = np.vstack([x1, cd2.total - x1])
            assert potential(cd2, [a, 1 - a], x, p) == pytest.approx(0.0, abs=1e-13)

    def test_scale_identity(self, rng, cd2):
        for _ in range(100):
            a = rng.dirichlet([1, 1])
            x = random_feasible(rng, cd2.total, 2)
            p = np.exp(rng.uniform(-1, 1, 2))
            kappa = float(rng.uniform(0.1, 10))
            lhs = potential(cd2, kappa * a, x, kappa * p)
            assert lhs == pytest.approx(kappa * potential(cd2, a, x, p), abs=1e-10)


class TestMinimizeDual:
    def test_cobb_douglas_prices(self, cd2):
        for a in np.linspace(0.05, 0.95, 19):
            sol = minimize_dual(cd2, [a, 1 - a])
            np.testing.assert_allclose(sol.prices, cobb_douglas_closed_form(a)[0], rtol=1e-10)
            assert sol.grad_norm <= 1e-12 * 3

    def test_isoelastic_half(self, multi4):
        sol = minimize_dual(multi4, [0.5, 0.5])
        np.testing.assert_allclose(sol.prices, [0.5, 0.5], atol=1e-12)
        p1 = sol.prices[0]
        assert (0.5 / p1) ** 3 + (0.5 / p1) ** (1 / 3) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("a, ratio", [(0.5, 1.0), (0.2, 0.5), (0.8, 2.0), (0.45, 0.45 / 0.55)])
    def test_linear_price_ratio(self, linear2, a, ratio):
        p = minimize_dual(linear2, [a, 1 - a]).prices
        assert p[0] / p[1] == pytest.approx(ratio, rel=1e-9)

    def test_unique_from_random_starts(self, rng):
        for _ in range(5):
            e = random_ces_economy(rng)
            a = rng.dirichlet(np.ones(e.n_consumers))
            ref = minimize_dual(e, a).prices
            for _ in range(10):
                p0 = np.exp(rng.uniform(-3, 3, e.n_goods))
                np.testing.assert_allclose(minimize_dual(e, a, p0=p0).prices, ref, rtol=1e-6)
                x0 = maximize_welfare(e, a)[0]
                np.testing.assert_allclose(
                    maximize_welfare(e, a, dual=minimize_dual(e, a, p0=p0))[0], x0, rtol=1e-6, atol=1e-12
                )


class TestMaximizeWelfare:
    def test_cobb_douglas_allocations(self, cd2):
        for a in np.linspace(0.05, 0.95, 19):
            x, _ = maximize_welfare(cd2, [a, 1 - a])
            np.testing.assert_allclose(x[0], cobb_douglas_closed_form(a)[1], rtol=1e-10)

    @pytest.mark.parametrize("a, x1", [(0.2, (0.6, 0.0)), (0.5, (1.0, 0.0)), (0.8, (1.0, 0.4))])
    def test_linear_allocations(self, linear2, a, x1):
        x, _ = maximize_welfare(linear2, [a, 1 - a])
        np.testing.assert_allclose(x[0], x1, atol=1e-10)
        np.testing.assert_allclose(x.sum(axis=0), [1, 1], atol=1e-14)

    def test_grid_oracle_agrees(self, rng, cd2, multi4, linear2):
        for e in (cd2, multi4, linear2):
            for a in (0.3, 0.5, 0.85):
                _, w_grid = grid_welfare_max(e, [a, 1 - a])
                assert maximize_welfare(e, [a, 1 - a])[1] == pytest.approx(w_grid, abs=1e-4)
                assert maximize_welfare(e, [a, 1 - a])[1] >= w_grid - 1e-12

    def test_flat_maximum_warns(self):
        e = Economy([LinearAggregate([1, 1]), LinearAggregate([1, 1])], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.warns(TieAmbiguityWarning):
            maximize_welfare(e, [0.5, 0.5])

    def test_unique_maximum_is_silent(self, linear2):
        with warnings.catch_warnings():
            warnings.simplefilter("error", TieAmbiguityWarning)
            maximize_welfare(linear2, [0.8, 0.2])

    def test_linear_shape_restriction(self):
        e = Economy([LinearAggregate([1, 2, 3]), LinearAggregate([3, 2, 1])], [[1, 1, 1], [1, 1, 1]])
        with pytest.raises(UnsupportedEconomyError):
            maximize_welfare(e, [0.5, 0.5])


class TestEquilibriumFromWeights:
    def test_cobb_douglas_half(self, cd2):
        pt = equilibrium_from_weights(cd2, [0.5, 0.5])
        np.testing.assert_allclose(pt.normalized_prices(), [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(pt.x, [[2, 1], [1, 2]], atol=1e-10)
        np.testing.assert_allclose(pt.m, [1.5, 1.5], atol=1e-10)
        assert abs(pt.y_residual) <= 1e-8

    def test_isoelastic_half(self, multi4):
        pt = equilibrium_from_weights(multi4, [0.5, 0.5])
        np.testing.assert_allclose(pt.p, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(pt.m, [1, 1], atol=1e-12)

    def test_root_properties_on_random_economies(self, rng):
        for _ in range(20):
            e = random_ces_economy(rng)
            a = rng.dirichlet(np.ones(e.n_consumers))
            pt = equilibrium_from_weights(e, a)
            assert abs(pt.welfare - pt.dual_value) <= 1e-8
            np.testing.assert_allclose(pt.x.sum(axis=0), e.total, rtol=1e-8)
            assert pt.m.sum() == pytest.approx(pt.p @ e.total, rel=1e-10)
            for i, u in enumerate(e.utilities):
                assert econ.utility(u, pt.x[i]) == pytest.approx(econ.indirect_utility(u, pt.p, pt.m[i]), abs=1e-8)

    def test_homogeneous_ces_prices(self, rng):
        # identical CES consumers with unit weights: prices follow w**(rho - 1)
        for _ in range(20):
            e = random_ces_economy(rng, homogeneous=True)
            rho = e.utilities[0].rho
            a = rng.dirichlet(np.ones(e.n_consumers))
            pt = equilibrium_from_weights(e, a)
            w = e.total
            expected = pt.m.sum() / np.sum(w**rho) * w ** (rho - 1)
            np.testing.assert_allclose(pt.p, expected, rtol=1e-9)
            np.testing.assert_allclose(pt.x, np.outer(a, w), rtol=1e-9)

    def test_scale_of_weights_scales_prices(self, cd2):
        a = np.array([0.3, 0.7])
        p = minimize_dual(cd2, a).prices
        np.testing.assert_allclose(minimize_dual(cd2, 4 * a).prices, 4 * p, rtol=1e-10)


class TestWelfareGradient:
    def test_cobb_douglas_half(self, cd2):
        np.testing.assert_allclose(welfare_gradient(cd2, [0.5, 0.5]), [0.5, 0.5], rtol=1e-6)

    def test_homogeneous_ces_formula(self, rng):
        for _ in range(5):
            e = random_ces_economy(rng, homogeneous=True)
            rho = e.utilities[0].rho
            a = rng.dirichlet(np.ones(e.n_consumers))
            w = e.total
            expected = 1.0 / np.sum(w**rho) * w ** (rho - 1)
            assert np.max(np.abs(welfare_gradient(e, a) / expected - 1)) < 1e-4

    def test_mrs_balance(self, rng, multi4):
        for e in (cobb_douglas_economy(), multi4, random_ces_economy(rng, n=3, k=3)):
            a = rng.dirichlet(np.ones(e.n_consumers))
            pt = equilibrium_from_weights(e, a)
            g = welfare_gradient(e, a)
            np.testing.assert_allclose(g, pt.p, rtol=1e-4)
            for i, u in enumerate(e.utilities):
                gu = econ.grad_utility(u, pt.x[i])
                np.testing.assert_allclose(g / g[0], gu / gu[0], rtol=1e-5)

    def test_ces_mrs_uses_rho_minus_one(self):
        # two identical goods-weight CES consumers: MRS at x = t w is (w_k / w_l)**(rho - 1)
        spec = CES(-0.5, [1, 1])
        w = np.array([3.0, 1.0])
        g = econ.grad_utility(spec, 0.4 * w)
        assert g[0] / g[1] == pytest.approx(3.0 ** (-1.5), rel=1e-13)
