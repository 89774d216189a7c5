import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import fractalab as fl
from fractalab.errors import BudgetError, ValidationError, ValidityCapError

ALPHA_MT = math.log(2.0) / math.log(3.0)


def two_point_product(second_coordinate: bool):
    """Product with atoms (0,0) and (0,1/2) [or (1/2,0)], equal masses."""
    two = fl.GridMeasure(base=2, level=1, indices=np.array([0, 1]), weights=np.array([0.5, 0.5]))
    pm = fl.point_mass()
    if second_coordinate:
        return fl.build_product([pm, two], [0.0, 0.5])
    return fl.build_product([two, pm], [0.5, 0.0])


class TestDistanceMeasure:
    def test_point_mass_product(self):
        pm = fl.point_mass()
        mu = fl.build_product([pm, pm], [0.0, 0.0])
        dm = fl.distance_measure(mu, 0.05)
        assert dm.bins == {0: 1.0}
        assert dm.diagonal_mass == 1.0
        assert fl.distance_measure(mu, 0.05, weighted=True).total_mass == 0.0

    def test_horizontal_pair_hand_enumeration(self):
        # atoms (0,0) and (1/2,0): 4 ordered pairs, distances {0, 0, 1/2, 1/2}
        mu = two_point_product(second_coordinate=False)
        dm = fl.distance_measure(mu, 0.05)
        assert dm.bins == {0: 0.5, 10: 0.5}
        assert dm.diagonal_mass == pytest.approx(0.5)
        assert dm.total_mass == pytest.approx(1.0, abs=1e-10)
        dw = fl.distance_measure(mu, 0.05, weighted=True)
        assert dw.total_mass == 0.0  # x2 identical

    def test_vertical_pair_weighted_mass_half(self):
        mu = two_point_product(second_coordinate=True)
        dw = fl.distance_measure(mu, 0.05, weighted=True)
        assert dw.total_mass == pytest.approx(0.5)  # off-diagonal pairs carry weight 1
        assert fl.weighted_mass(mu) == pytest.approx(0.5)

    def test_unweighted_mass_is_one(self):
        nu = fl.build_cantor(fl.middle_thirds(4))
        mu = fl.build_product([nu, nu], [ALPHA_MT, ALPHA_MT])
        dm = fl.distance_measure(mu, 0.01)
        assert abs(dm.total_mass - 1.0) <= 1e-10

    def test_weighted_mass_in_unit_interval(self):
        nu = fl.build_cantor(fl.middle_thirds(4))
        mu = fl.build_product([nu, nu], [ALPHA_MT, ALPHA_MT])
        dw = fl.distance_measure(mu, 0.01, weighted=True)
        assert 0.0 < dw.total_mass <= 1.0

    def test_scaling_covariance(self):
        # scaling positions by 1/base (same indices, one level deeper) scales
        # populated bins by the same factor: identical indices at bin width h/base
        a = fl.build_cantor(fl.middle_thirds(4))
        mu = fl.build_product([a, a], [ALPHA_MT, ALPHA_MT])
        a3 = fl.GridMeasure(base=3, level=5, indices=a.indices, weights=a.weights)
        mu3 = fl.build_product([a3, a3], [ALPHA_MT, ALPHA_MT])
        h = 0.0173
        dm = fl.distance_measure(mu, h)
        dm3 = fl.distance_measure(mu3, h / 3.0)
        assert set(dm.bins) == set(dm3.bins)
        for k, mass in dm.bins.items():
            assert dm3.bins[k] == pytest.approx(mass, abs=1e-14)
        assert dm3.total_mass == pytest.approx(dm.total_mass, abs=1e-12)

    def test_pair_budget(self):
        nu = fl.build_cantor(fl.middle_thirds(5))
        mu = fl.build_product([nu, nu], [ALPHA_MT, ALPHA_MT])
        with pytest.raises(BudgetError, match="coarsen"):
            fl.distance_measure(mu, 0.01, pair_budget=1000)

    def test_degenerate_second_coordinate_has_zero_weighted_mass(self):
        nu = fl.build_cantor(fl.middle_thirds(3))
        mu = fl.build_product([nu, fl.point_mass()], [ALPHA_MT, 0.0])
        assert fl.weighted_mass(mu) == 0.0

    def test_rejects_nonpositive_bin_width(self):
        mu = two_point_product(True)
        with pytest.raises(ValidationError, match="bin width"):
            fl.distance_measure(mu, 0.0)


class TestEnergyIntegral:
    def test_two_atoms_at_half(self):
        nu = fl.GridMeasure(base=2, level=1, indices=np.array([0, 1]), weights=np.array([0.5, 0.5]))
        # 2 ordered off-diagonal pairs, each (1/4) * (1/2)^(-s)
        assert fl.energy_integral(nu, 0.5) == pytest.approx(0.5 * math.sqrt(2.0))
        assert fl.energy_integral(nu, 1.0) == pytest.approx(1.0)

    def test_pythagorean_product_pair(self):
        # factors {0, 3/5} x {0, 4/5}: the long diagonal has length exactly 1
        a = fl.GridMeasure(base=5, level=1, indices=np.array([0, 3]), weights=np.array([0.5, 0.5]))
        b = fl.GridMeasure(base=5, level=1, indices=np.array([0, 4]), weights=np.array([0.5, 0.5]))
        mu = fl.build_product([a, b], [0.5, 0.5])
        expected = 2.0 * 0.0625 * (0.6**-0.5 + 0.8**-0.5 + 1.0 + 1.0 + 0.8**-0.5 + 0.6**-0.5)
        assert fl.energy_integral(mu, 0.5) == pytest.approx(expected, rel=1e-12)

    def test_single_atom_is_zero(self):
        assert fl.energy_integral(fl.point_mass(), 2.0) == 0.0

    def test_s_zero_gives_off_diagonal_mass(self):
        rng = np.random.default_rng(3)
        from conftest import random_grid_measure

        for _ in range(10):
            nu = random_grid_measure(rng, max_atoms=20)
            expected = 1.0 - float(np.sum(nu.weights**2))
            assert fl.energy_integral(nu, 0.0) == pytest.approx(expected, rel=1e-10)

    def test_monotone_in_s_for_small_diameter(self):
        nu = fl.build_cantor(fl.middle_thirds(5))
        values = [fl.energy_integral(nu, s) for s in (0.0, 0.3, 0.6, 0.9, 1.2)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_rejects_negative_s(self):
        with pytest.raises(ValidationError):
            fl.energy_integral(fl.point_mass(), -1.0)


class TestMattila:
    def test_point_mass_closed_forms_small_t(self):
        pm = fl.point_mass()
        mu = fl.build_product([pm, pm], [0.0, 0.0])
        est = fl.mattila_truncated(mu, 10.0, weighted=False)
        assert est.value == pytest.approx(2.0 * np.pi**2 * 99.0, rel=1e-6)
        est_w = fl.mattila_truncated(mu, 10.0, weighted=True)
        assert est_w.value == pytest.approx(8.0 * 99.0, rel=1e-6)

    def test_value_nondecreasing_in_truncation(self):
        pm = fl.point_mass()
        mu = fl.build_product([pm, pm], [0.0, 0.0])
        quad = fl.MattilaQuadrature(
            t_rel_tol=1e-4, max_t_nodes=300,
            angular=fl.QuadratureSpec(node_count=64, rel_tol=1e-5),
        )
        v = [
            fl.mattila_truncated(mu, T, weighted=True, quadrature=quad).value
            for T in (4.0, 8.0, 16.0)
        ]
        assert v[0] < v[1] < v[2]

    def test_middle_thirds_diagnostics(self):
        nu = fl.build_cantor(fl.middle_thirds(6))
        mu = fl.build_product([nu, nu], [ALPHA_MT, ALPHA_MT])
        quad = fl.MattilaQuadrature(
            initial_t_nodes=33, max_t_nodes=300,
            angular=fl.QuadratureSpec(node_count=64, rel_tol=1e-5),
        )
        est = fl.mattila_truncated(mu, 3.0**3, weighted=True, quadrature=quad)
        # s = 2 alpha < 4/3: no convergence asserted, diagnostics only
        assert est.value > 0.0
        assert len(est.doubling_ratios) >= 2
        assert est.integrand_slope == pytest.approx(
            fl.loglog_fit(est.t_values[est.integrand > 0], est.integrand[est.integrand > 0]).slope
        )
        assert np.all(np.diff(est.partial_values) >= -1e-15)

    def test_truncation_beyond_cap_rejected(self):
        nu = fl.build_cantor(fl.middle_thirds(4))
        mu = fl.build_product([nu, nu], [ALPHA_MT, ALPHA_MT])
        with pytest.raises(ValidityCapError):
            fl.mattila_truncated(mu, 50.0, weighted=True)

    def test_d3_point_mass_unweighted(self):
        # sigma = (4 pi)^2 constant, integrand t^2: value = 16 pi^2 (T^3 - 1)/3
        pm = fl.point_mass()
        mu = fl.build_product([pm, pm, pm], [0.0] * 3)
        quad = fl.MattilaQuadrature(
            t_rel_tol=1e-6, max_t_nodes=2000,
            angular=fl.QuadratureSpec(kind="monte_carlo_sphere", node_count=2000, seed=3),
        )
        est = fl.mattila_truncated(mu, 5.0, weighted=False, quadrature=quad)
        assert est.value == pytest.approx(16.0 * np.pi**2 * (125.0 - 1.0) / 3.0, rel=1e-4)


class TestCoverage:
    def test_point_mass_single_bin(self):
        pm = fl.point_mass()
        mu = fl.build_product([pm, pm], [0.0, 0.0])
        dm = fl.distance_measure(mu, 0.01)
        cov = fl.coverage_report(dm, [0.02, 0.1])
        assert cov.covered_lengths == (0.02, 0.1)

    def test_two_point_set_covers_two_bins(self):
        mu = two_point_product(second_coordinate=True)
        dm = fl.distance_measure(mu, 0.01)
        cov = fl.coverage_report(dm, [0.02])
        assert cov.covered_lengths == (0.04,)

    def test_full_square_stabilizes_near_diameter(self):
        u6 = fl.build_cantor(fl.CantorSpec(2, (0, 1), 6))
        mu = fl.build_product([u6, u6], [1.0, 1.0])
        dm = fl.distance_measure(mu, 0.01)
        cov = fl.coverage_report(dm, [0.02, 0.05, 0.1])
        for length in cov.covered_lengths:
            assert abs(length - math.sqrt(2.0)) < 0.12

    def test_width_below_native_rejected(self):
        mu = two_point_product(True)
        dm = fl.distance_measure(mu, 0.01)
        with pytest.raises(ValidationError, match="native"):
            fl.coverage_report(dm, [0.005])


class TestThresholds:
    def test_d2_threshold_is_four_thirds(self):
        assert fl.product_sum_threshold(2) == Fraction(4, 3)

    def test_d3_threshold_is_nine_fifths(self):
        assert fl.product_sum_threshold(3) == Fraction(9, 5)

    def test_mixed_margin_exact_rational(self):
        report = fl.threshold_report([Fraction(9, 10), Fraction(1, 2)])
        assert report.mixed_margin == Fraction(3, 10)
        assert report.mixed_margin > 0
        assert "two_factor_mixed" in report.applicable

    def test_string_fractions_stay_exact(self):
        report = fl.threshold_report(["2/3", "2/3"])
        assert report.product_sum_margin == 0
        assert report.mixed_margin == 0
        assert report.applicable == ()

    def test_three_factor_margin(self):
        report = fl.threshold_report([Fraction(7, 10)] * 3)
        assert report.product_sum_margin == Fraction(21, 10) - Fraction(9, 5)
        assert "product_sum" in report.applicable

    def test_regular_route_fields(self):
        report = fl.threshold_report([0.7, 0.7], alpha=0.7, c_nu=2.0, k=1.0)
        beta = fl.dz_beta(0.7, 2.0, 1.0).beta
        g0, delta = fl.derive_delta(0.7, beta)
        assert report.dz_beta == pytest.approx(beta)
        assert report.regular_delta == pytest.approx(delta)
        assert report.regular_threshold == pytest.approx(2.0 / 3.0 - delta)
        assert "regular_equal_dim" in report.applicable

    def test_out_of_range_dims_rejected(self):
        with pytest.raises(ValidationError, match="dims"):
            fl.threshold_report([0.5, 1.2])


class TestDeriveDelta:
    def test_example_and_grid_agreement(self):
        g0, delta = fl.derive_delta(0.5, 0.02)
        assert g0 == pytest.approx(0.01, abs=1e-15)
        assert delta == pytest.approx(0.005, abs=1e-15)
        gg, dd = fl.derive_delta_grid(0.5, 0.02)
        assert abs(g0 - gg) < 1e-6
        assert abs(delta - dd) < 1e-6

    def test_delta_vanishes_with_beta(self):
        deltas = [fl.derive_delta(0.5, b)[1] for b in (1e-2, 1e-4, 1e-6)]
        assert deltas[0] > deltas[1] > deltas[2]
        assert deltas[-1] < 1e-6

    @given(alpha=st.floats(0.05, 0.95), beta=st.floats(1e-6, 0.5))
    def test_delta_below_half_beta(self, alpha, beta):
        g0, delta = fl.derive_delta(alpha, beta)
        assert 0.0 < g0
        assert 0.0 < delta < beta / 2.0

    @settings(max_examples=10, deadline=None)
    @given(alpha=st.floats(0.1, 0.9), beta=st.floats(1e-4, 0.2))
    def test_grid_search_confirms_closed_form(self, alpha, beta):
        g0, delta = fl.derive_delta(alpha, beta)
        gg, dd = fl.derive_delta_grid(alpha, beta, points=400_001)
        assert abs(g0 - gg) <= max(1e-6, 2.0 * beta / 400_000)
        assert abs(delta - dd) <= 1e-6

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            fl.derive_delta(1.0, 0.1)
        with pytest.raises(ValidationError):
            fl.derive_delta(0.5, 0.0)
