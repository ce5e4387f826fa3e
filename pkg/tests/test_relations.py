from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointmeas.core import (
    KET_PLUS_Z,
    SIGMA_X,
    SIGMA_Y,
    StateStatistics,
    bloch_vector,
    pauli_dot,
    random_hermitian,
    random_ket,
    random_unitary,
    state_statistics,
)
from jointmeas.joint import ErrorPair, with_optimal_outputs
from jointmeas.relations import (
    RELATION_IDS,
    UNIVERSAL,
    RegimeError,
    RelationReport,
    b_only_lhs,
    boundary_curve,
    branciard_dimless_lhs,
    eval_b_only,
    eval_branciard,
    eval_hak,
    eval_ozawa,
    eval_robertson,
    eval_same_spectrum,
    evaluate,
    ozawa_chain,
    ozawa_implied_check,
    same_spectrum_lhs,
    squeezed,
)

seeds = st.integers(0, 2**32 - 1)


def unit_stats(c_ab: float) -> StateStatistics:
    """Statistics with zero means and unit spreads, as in the +-1 valued regime."""
    return StateStatistics(mean_a=0.0, mean_b=0.0, delta_a=1.0, delta_b=1.0, c_ab=c_ab, corr_a0b0=complex(0, c_ab))


def pair(eps_a, eps_b):
    return ErrorPair(eps_a, eps_b, eps_a, eps_b)


class TestReports:
    def test_report_invariants(self):
        ok = RelationReport.build("branciard", 1.0, 1.0 + 5e-10)
        assert ok.satisfied and ok.saturated
        bad = RelationReport.build("branciard", 1.0, 1.1)
        assert not bad.satisfied and not bad.saturated
        loose = RelationReport.build("branciard", 2.0, 1.0)
        assert loose.satisfied and not loose.saturated

    def test_every_relation_id_dispatches(self):
        stats = unit_stats(0.5)
        for rid in RELATION_IDS:
            report = evaluate(rid, pair(0.5, 0.5), stats)
            assert report.relation_id == rid
            assert report.universal == (rid in UNIVERSAL)

    def test_unknown_relation(self):
        with pytest.raises(ValueError, match="unknown relation"):
            evaluate("entropic", pair(0, 0), unit_stats(0))


class TestRobertson:
    def test_x_y_on_plus_z_saturates(self):
        report = eval_robertson(state_statistics(SIGMA_X, SIGMA_Y, KET_PLUS_Z))
        assert report.lhs == pytest.approx(1.0) and report.rhs == pytest.approx(1.0)
        assert report.saturated

    def test_commuting_pair(self, rng):
        a, psi = random_hermitian(3, rng), random_ket(3, rng)
        report = eval_robertson(state_statistics(a, a, psi))
        assert report.rhs == pytest.approx(0.0, abs=1e-12) and report.satisfied

    def test_qubit_formulas(self):
        ta, tb, pa, pb = 0.4, 1.3, -0.2, 0.8
        stats = state_statistics(pauli_dot(bloch_vector(ta, pa)), pauli_dot(bloch_vector(tb, pb)), KET_PLUS_Z)
        report = eval_robertson(stats)
        assert report.lhs == pytest.approx(math.sin(ta) * math.sin(tb))
        assert report.rhs == pytest.approx(math.sin(ta) * math.sin(tb) * abs(math.sin(pb - pa)))


class TestHakAndOzawa:
    def test_hak_violated_at_zero_error(self):
        report = eval_hak(pair(0.0, 0.7), unit_stats(1.0))
        assert not report.satisfied and not report.universal
        assert report.notes["not_universal"]

    def test_hak_saturated(self):
        assert eval_hak(pair(1.0, 1.0), unit_stats(1.0)).saturated

    @pytest.mark.parametrize("eps_b,expected", [(1.0, True), (1.2, True), (0.9, False)])
    def test_ozawa_with_exact_a(self, eps_b, expected):
        assert eval_ozawa(pair(0.0, eps_b), unit_stats(1.0)).satisfied is expected

    def test_ozawa_modes(self):
        ed = eval_ozawa(pair(0.3, 0.4), unit_stats(0.5), mode="error_disturbance")
        assert ed.relation_id == "ozawa_ed"
        with pytest.raises(ValueError):
            eval_ozawa(pair(0.3, 0.4), unit_stats(0.5), mode="other")

    def test_ozawa_not_saturated_by_tight_interior_points(self):
        # on the tight boundary with both errors nonzero, Ozawa keeps positive slack
        phi = math.pi / 2
        for u in np.linspace(0.1, phi - 0.1, 7):
            report = eval_ozawa(pair(math.sin(u), math.sin(phi - u)), unit_stats(1.0))
            assert report.slack > 1e-3
        assert eval_ozawa(pair(0.0, 1.0), unit_stats(1.0)).saturated

    def test_chain_on_zero_everything(self):
        assert ozawa_implied_check(pair(0.0, 0.0), unit_stats(0.0))

    def test_chain_values_ordered(self):
        links = ozawa_chain(pair(0.3, 0.9), unit_stats(0.8))
        assert all(x >= y - 1e-12 for x, y in zip(links, links[1:]))


class TestTightBound:
    @pytest.mark.parametrize("phi", [math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2])
    def test_sine_pairs_saturate(self, phi):
        stats = unit_stats(math.sin(phi))
        for u in np.linspace(0, phi, 25):
            report = eval_branciard(pair(math.sin(u), math.sin(phi - u)), stats, dimensionless=True)
            assert abs(report.slack) <= 1e-12

    def test_trivial_origin(self):
        assert eval_branciard(pair(0.0, 0.0), unit_stats(0.0), dimensionless=True).saturated

    def test_dimensionless_needs_spreads(self):
        stats = state_statistics(np.diag([1.0, -1.0]), SIGMA_X, KET_PLUS_Z)
        with pytest.raises(ValueError):
            eval_branciard(pair(0.1, 0.1), stats, dimensionless=True)

    def test_curve_identity_dense_grid(self):
        for phi in np.linspace(0, math.pi / 2, 41):
            u = np.linspace(0, phi, 401)
            lhs = np.sin(u) ** 2 + np.sin(phi - u) ** 2 + 2 * math.cos(phi) * np.sin(u) * np.sin(phi - u)
            np.testing.assert_allclose(lhs, math.sin(phi) ** 2, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, dim=st.integers(2, 5), k=st.integers(1, 2))
    def test_universal_on_random_strategies(self, seed, dim, k):
        rng = np.random.default_rng(seed)
        a, b, psi = random_hermitian(dim, rng), random_hermitian(dim, rng), random_ket(dim, rng)
        xi = None if k == 1 else random_ket(k, rng)
        m = with_optimal_outputs(random_unitary(dim * k, rng), a, b, psi, ancilla=xi)
        errors = m.errors(a, b, psi)
        stats = state_statistics(a, b, psi)
        for rid in ("robertson", "ozawa_joint", "branciard", "branciard_dimless"):
            assert evaluate(rid, errors, stats).satisfied
        assert ozawa_implied_check(errors, stats)
        assert eval_ozawa(errors, stats, drop_product=True).satisfied


class TestSameSpectrum:
    def test_erhart_endpoint(self):
        report = eval_same_spectrum(pair(0.0, math.sqrt(2)), unit_stats(1.0))
        assert report.saturated

    @pytest.mark.parametrize("phi", [math.pi / 6, math.pi / 3, math.pi / 2])
    def test_chord_pairs_saturate(self, phi):
        stats = unit_stats(math.sin(phi))
        for u in np.linspace(0, phi, 25):
            report = eval_same_spectrum(pair(2 * math.sin(u / 2), 2 * math.sin((phi - u) / 2)), stats)
            assert abs(report.slack) <= 1e-12

    def test_midpoint(self):
        report = eval_same_spectrum(pair(math.sqrt(2), math.sqrt(2)), unit_stats(1.0))
        assert report.lhs == pytest.approx(2.0)
        assert report.satisfied and not report.saturated

    def test_out_of_range(self):
        with pytest.raises(RegimeError):
            eval_same_spectrum(pair(2.5, 0.1), unit_stats(1.0))

    def test_regime_notes(self):
        report = eval_same_spectrum(pair(1.0, 1.0), unit_stats(1.0), regime_verified=True)
        assert report.notes == {"zero_means": True, "unit_spreads": True, "regime_verified": True}

    def test_reduction_to_dimensionless_form(self):
        grid = np.linspace(0, 2, 81)
        ea, eb = np.meshgrid(grid, grid)
        for c in (0.0, 0.3, 0.9, 1.0):
            np.testing.assert_allclose(
                same_spectrum_lhs(ea, eb, c), branciard_dimless_lhs(squeezed(ea), squeezed(eb), c), atol=1e-15
            )
        x = np.linspace(0, math.pi, 101)
        np.testing.assert_allclose(squeezed(2 * np.sin(x / 2)), np.sin(x), atol=1e-14)

    @pytest.mark.parametrize("c", [0.2, 0.5, 0.8, 0.99])
    def test_forbidden_region_strictly_larger(self, rng, c):
        pts = rng.uniform(0, 2, (200000, 2))
        joint_forbidden = branciard_dimless_lhs(pts[:, 0], pts[:, 1], c) < c**2
        ss_forbidden = same_spectrum_lhs(pts[:, 0], pts[:, 1], c) < c**2
        assert not np.any(joint_forbidden & ~ss_forbidden)
        assert np.any(ss_forbidden & ~joint_forbidden)


class TestBOnly:
    def test_exact_b(self):
        c = 0.6
        stats = unit_stats(c)
        assert eval_b_only(pair(c, 0.0), stats).saturated
        assert not eval_b_only(pair(c - 0.01, 0.0), stats).satisfied

    def test_fig_inset_value(self):
        c = math.sin(7 * math.pi / 16)
        curve = boundary_curve("b_only_spectrum", c, 33)
        for _, ea, eb in curve.points:
            assert abs(b_only_lhs(ea, eb, c) - c**2) <= 1e-12
        upper = boundary_curve("b_only_spectrum", c, 33, branch="upper")
        assert np.all(np.abs(upper.slacks()) <= 1e-12)

    def test_range_check(self):
        with pytest.raises(RegimeError):
            eval_b_only(pair(0.1, 2.1), unit_stats(0.5))


class TestCurves:
    def test_branciard_endpoints(self):
        curve = boundary_curve("branciard", 1.0, 101)
        assert curve.points[0][1:] == pytest.approx((0.0, 1.0))
        assert curve.points[-1][1:] == pytest.approx((1.0, 0.0))
        assert len(curve) == 101

    def test_same_spectrum_lower_endpoints(self):
        curve = boundary_curve("same_spectrum", 1.0, 51, branch="lower")
        assert curve.points[0][1:] == pytest.approx((0.0, math.sqrt(2)))
        assert curve.points[-1][1:] == pytest.approx((math.sqrt(2), 0.0))

    def test_contour_is_closed_and_passes_all_corners(self):
        curve = boundary_curve("same_spectrum", math.sin(1.0), 41)
        assert curve.branch == "contour"
        assert curve.points[0][1:] == curve.points[-1][1:]
        ea, eb = curve.eps_a, curve.eps_b
        # touches all four sides of [0, 2]^2
        assert ea.min() == pytest.approx(0) and eb.min() == pytest.approx(0)
        assert ea.max() == pytest.approx(2) and eb.max() == pytest.approx(2)

    @pytest.mark.parametrize("rid,branch", [("branciard", "lower"), ("same_spectrum", "lower"), ("same_spectrum", "upper"), ("same_spectrum", "contour"), ("b_only_spectrum", "lower")])
    @pytest.mark.parametrize("c", [1.0, 0.7, -0.4, 0.05])
    def test_points_recheck_through_evaluators(self, rid, branch, c):
        curve = boundary_curve(rid, c, 31, branch)
        stats = unit_stats(c)
        evaluator = {
            "branciard": lambda e: eval_branciard(e, stats, dimensionless=True),
            "same_spectrum": lambda e: eval_same_spectrum(e, stats),
            "b_only_spectrum": lambda e: eval_b_only(e, stats),
        }[rid]
        for _, ea, eb in curve.points:
            assert abs(evaluator(pair(ea, eb)).slack) <= 1e-9

    def test_zero_commutator_collapses(self):
        for rid in ("branciard", "same_spectrum"):
            curve = boundary_curve(rid, 0.0, 11, branch="lower")
            assert {p[1:] for p in curve.points} == {(0.0, 0.0)}

    def test_zero_commutator_contour_is_the_saturating_corners(self):
        # eps sqrt(1 - eps^2/4) vanishes at 0 and 2, so all four corners saturate
        curve = boundary_curve("same_spectrum", 0.0, 11)
        assert {p[1:] for p in curve.points} == {(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)}
        assert np.all(np.abs(curve.slacks()) <= 1e-15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"relation_id": "branciard", "c_tilde": 1.2, "n_points": 5},
            {"relation_id": "branciard", "c_tilde": 0.5, "n_points": 1},
            {"relation_id": "branciard", "c_tilde": 0.5, "n_points": 5, "branch": "upper"},
            {"relation_id": "hak", "c_tilde": 0.5, "n_points": 5},
        ],
    )
    def test_invalid_requests(self, kwargs):
        with pytest.raises(ValueError):
            boundary_curve(**kwargs)

    def test_deterministic(self):
        assert boundary_curve("same_spectrum", 0.3, 17) == boundary_curve("same_spectrum", 0.3, 17)
