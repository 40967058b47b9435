import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bacc.diagnostics import (
    StragglerPattern,
    derivative_norms,
    error_bound,
    lebesgue_constant,
    lebesgue_function,
    lebesgue_grid,
    mesh_params,
    survivor_nodes,
    theoretical_lebesgue_bound,
    well_spaced_constants,
    worst_case_pattern,
)
from bacc.exceptions import InvalidInputError, InvalidParameterError, OutOfRegimeError
from bacc.interpolants import alternating_signs
from bacc.pointsets import NodeSet, chebyshev_second, equidistant


def brute_lebesgue(nodes, n=200_001):
    """Berrut Lebesgue constant by dense sampling, written out directly."""
    x = np.linspace(nodes[0], nodes[-1], n)
    x = x[np.min(np.abs(x[:, None] - nodes[None, :]), axis=1) > 0] if nodes.size < 50 else x
    w = alternating_signs(nodes.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = w / (x[:, None] - nodes[None, :])
        vals = np.abs(terms).sum(1) / np.abs(terms.sum(1))
    return np.nanmax(vals[np.isfinite(vals)])


class TestStragglerPattern:
    def test_survivors(self):
        p = StragglerPattern(5, (3, 1))
        assert p.stragglers == (1, 3)
        assert p.s == 2
        assert p.survivors.tolist() == [0, 2, 4, 5]

    @pytest.mark.parametrize("bad", [(1, 1), (6,), (-1,)])
    def test_invalid(self, bad):
        with pytest.raises(InvalidParameterError):
            StragglerPattern(5, bad)


class TestLebesgue:
    def test_three_point_example(self):
        assert lebesgue_function("berrut", NodeSet([-1.0, 0.0, 1.0]), 0.5) == pytest.approx(1.4, abs=1e-14)

    def test_one_at_nodes(self):
        nodes = chebyshev_second(8)
        np.testing.assert_allclose(lebesgue_function("berrut", nodes, nodes.points), 1.0)

    def test_grid_layout(self):
        nodes = NodeSet([-1.0, 0.0, 1.0])
        g = lebesgue_grid(nodes, 10)
        assert g.size == 2 * 11
        assert np.all((g > -1) & (g < 1))
        with pytest.raises(InvalidParameterError):
            lebesgue_grid(nodes, 5)

    @pytest.mark.parametrize("nodes", [chebyshev_second(12).points, equidistant(9).points,
                                       np.array([-1, -0.9, -0.2, 0.1, 0.15, 0.8, 1.0])])
    def test_constant_matches_dense_sampling(self, nodes):
        est = lebesgue_constant("berrut", NodeSet(nodes)).constant_estimate
        ref = brute_lebesgue(nodes)
        assert est >= ref * (1 - 1e-9)
        assert est == pytest.approx(ref, rel=1e-6)

    def test_lagrange_equidistant_grows(self):
        small = lebesgue_constant("lagrange", equidistant(6)).constant_estimate
        large = lebesgue_constant("lagrange", equidistant(14)).constant_estimate
        assert large > 10 * small

    def test_single_node(self):
        assert lebesgue_constant("berrut", NodeSet([0.3])).constant_estimate == 1.0

    def test_report_carries_bound(self):
        r = lebesgue_constant("berrut", chebyshev_second(20), theoretical_bound=5.0)
        assert r.theoretical_bound == 5.0 and r.grid_size > 0

    def test_extrapolation_gap_counted(self):
        pat = worst_case_pattern(20, 3, 0)
        nodes = survivor_nodes(pat)
        inside = lebesgue_constant("berrut", nodes).constant_estimate
        whole = lebesgue_constant("berrut", nodes, interval=(-1.0, 1.0)).constant_estimate
        assert whole >= inside


class TestBounds:
    def test_theoretical_value(self):
        ref = (3 * np.pi**2 / 4 + 1) * (1 + np.pi**2 * np.log(100))
        assert theoretical_lebesgue_bound(100, 0) == pytest.approx(ref, rel=1e-14)
        assert theoretical_lebesgue_bound(100, 0) == pytest.approx(390.3, abs=0.05)

    @pytest.mark.parametrize("N, s", [(5, 3), (5, 4), (3, 1)])
    def test_out_of_regime(self, N, s):
        with pytest.raises(OutOfRegimeError):
            theoretical_lebesgue_bound(N, s)
        with pytest.raises(OutOfRegimeError):
            error_bound(N, s, 1.0, 1.0)

    def test_error_bound_parity(self):
        R = 2 * 4 * np.pi**2 / 4
        lead = 2 * (1 + R) * np.sin(2 * np.pi / (2 * 11))
        assert error_bound(11, 1, 3.0, 2.0) == pytest.approx(lead * (2.0 + 3.0))
        lead = 2 * (1 + R) * np.sin(2 * np.pi / (2 * 12))
        assert error_bound(12, 1, 3.0, 2.0) == pytest.approx(lead * 2.0)

    def test_error_bound_negative_norm(self):
        with pytest.raises(InvalidParameterError):
            error_bound(20, 1, -1.0, 1.0)

    @given(st.integers(10, 300), st.integers(0, 6))
    def test_bound_increases_with_s(self, N, s):
        if s + 1 >= N - 2:
            return
        assert theoretical_lebesgue_bound(N, s + 1) > theoretical_lebesgue_bound(N, s)

    @pytest.mark.parametrize("N, s", [(30, 0), (40, 2), (60, 5)])
    def test_lebesgue_bound_on_worst_patterns(self, N, s):
        bound = theoretical_lebesgue_bound(N, s)
        for kbar in range(max(1, N - s)):
            nodes = survivor_nodes(worst_case_pattern(N, s, kbar))
            assert lebesgue_constant("berrut", nodes, interval=(-1, 1)).constant_estimate <= bound


class TestPatterns:
    def test_examples(self):
        assert worst_case_pattern(5, 2, 1).survivors.tolist() == [0, 1, 4, 5]
        assert worst_case_pattern(9, 3, 0).survivors.tolist() == [0, 4, 5, 6, 7, 8, 9]

    def test_zero_stragglers(self):
        assert worst_case_pattern(5, 0, 0).s == 0

    @pytest.mark.parametrize("args", [(5, 2, 3), (5, 2, -1), (5, 7, 0)])
    def test_invalid(self, args):
        with pytest.raises(InvalidParameterError):
            worst_case_pattern(*args)

    def test_survivor_nodes(self):
        pat = StragglerPattern(6, (0, 2))
        expected = np.sort(np.cos(np.array([1, 3, 4, 5, 6]) * np.pi / 6))
        np.testing.assert_allclose(survivor_nodes(pat).points, expected, atol=1e-15)

    @staticmethod
    def _span_constant(pattern):
        nodes = survivor_nodes(pattern)
        return lebesgue_constant("berrut", nodes, interval=(nodes.points[0], nodes.points[-1])).constant_estimate

    @pytest.mark.parametrize("N, s", [(8, 2), (9, 1), (11, 3)])
    def test_consecutive_gap_is_worst_small_case(self, N, s):
        best_all = max(self._span_constant(StragglerPattern(N, c)) for c in itertools.combinations(range(N + 1), s))
        best_consec = max(self._span_constant(worst_case_pattern(N, s, k)) for k in range(N - s))
        assert best_consec == pytest.approx(best_all, rel=1e-9)

    @given(st.integers(20, 300), st.integers(0, 10), st.floats(0, 1))
    def test_random_worst_patterns_under_bound(self, N, s, frac):
        kbar = int(frac * (N - s - 1))
        nodes = survivor_nodes(worst_case_pattern(N, s, kbar))
        measured = lebesgue_constant("berrut", nodes, 16, interval=(-1, 1)).constant_estimate
        assert measured <= theoretical_lebesgue_bound(N, s)


class TestMesh:
    def test_example(self):
        m = mesh_params(NodeSet([0.0, 1.0, 3.0]))
        assert (m.h, m.lam) == (2.0, 2.0)

    def test_equidistant(self):
        m = mesh_params(equidistant(8))
        assert m.h == pytest.approx(0.25) and m.lam == pytest.approx(1.0)

    def test_two_nodes(self):
        assert mesh_params(NodeSet([0.0, 1.0])).lam == 0.0

    def test_too_few(self):
        with pytest.raises(InvalidInputError):
            mesh_params(NodeSet([0.0]))

    def test_well_spaced_chebyshev(self):
        for N in (10, 50, 200):
            rep = well_spaced_constants(chebyshev_second(N))
            assert rep.dominated
            assert rep.C_min > 0 and rep.R_min >= 1

    def test_well_spaced_subsets(self):
        for s in (1, 3):
            nodes = survivor_nodes(worst_case_pattern(40, s, 10))
            assert well_spaced_constants(nodes, s).dominated

    def test_well_spaced_equidistant_ratio_one(self):
        assert well_spaced_constants(equidistant(10)).R_min == pytest.approx(1.0)


class TestDerivativeNorms:
    def test_finite_differences_match_analytic(self):
        fd = derivative_norms(np.sin, n_grid=4001)
        exact = derivative_norms(np.sin, dg=np.cos, d2g=lambda x: -np.sin(x))
        np.testing.assert_allclose(fd, exact, rtol=1e-5)
        assert exact[0] == pytest.approx(1.0) and exact[1] == pytest.approx(np.sin(1.0))

    def test_quadratic_exact(self):
        n1, n2 = derivative_norms(lambda x: 3 * x**2, n_grid=101)
        assert n1 == pytest.approx(6.0, rel=1e-12) and n2 == pytest.approx(6.0, rel=1e-9)
