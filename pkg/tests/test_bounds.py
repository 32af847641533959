"""Tests for bound evaluators and the bound registry."""

import math

import numpy as np
import pytest

from src.bounds import (
    LEMMA_COLUMNS,
    TABLE_COLUMNS,
    BoundKind,
    Normalization,
    bound_amenta_dey,
    bound_bsw,
    bound_nsw,
    bound_registry,
    bound_thm1i,
    bound_thm1ii,
    bounds_table,
    chain_radius,
    eq4_improved_probe_distance,
    eq4_probe_distance,
    f_of_t,
    improved_tangent_to_manifold,
    lemma1_point_to_tangent,
    lemma2_tangent_to_manifold,
    segment_angle_bound,
    sphere_exact_variation,
)
from src.errors import DomainError, UnknownBound


class TestEvaluators:
    """Test cases for the closed-form bounds."""

    def test_f_anchors(self):
        """f(0) = 9/2 and the tabulated values."""
        assert f_of_t(0.0) == 4.5
        assert f_of_t(0.1) == pytest.approx(5.99022, abs=1e-12)
        assert f_of_t(0.25) == pytest.approx(9.5104166666666667, abs=1e-12)

    def test_f_below_six_up_to_one_tenth(self):
        """f(t) < 6 on a fine grid of (0, 0.1]."""
        grid = np.linspace(1e-5, 0.1, 10000)

        assert max(f_of_t(t) for t in grid) < 6.0

    def test_thm1i_value(self):
        """thm1i(0.1) = 0.1 f(0.1)."""
        assert bound_thm1i(0.1) == pytest.approx(0.599022, abs=1e-12)

    @pytest.mark.parametrize(
        "bound, slope",
        [
            (bound_thm1i, 4.5),
            (bound_thm1ii, 3.0),
            (bound_bsw, 2.0),
            (bound_amenta_dey, 1.0),
        ],
    )
    def test_slopes_at_zero(self, bound, slope):
        """Leading constants of the bounds."""
        t = 1e-6

        assert bound(t) / t == pytest.approx(slope, abs=1e-4)

    def test_thm1ii_between_linear_term_and_thm1i(self):
        """The improved bound sits between 3t and thm1i on its domain."""
        for t in (0.01, 0.05, 0.095):
            assert 3.0 * t < bound_thm1ii(t) < bound_thm1i(t)
        assert bound_thm1ii(0.05) == pytest.approx(0.1674, abs=1e-3)

    def test_zero_is_accepted(self):
        """Evaluators take t = 0 so tables may start there."""
        for bound in (bound_thm1i, bound_thm1ii, bound_amenta_dey, bound_nsw, bound_bsw):
            assert bound(0.0) == 0.0

    @pytest.mark.parametrize(
        "bound, outside",
        [
            (bound_thm1i, 0.2500001),
            (bound_thm1ii, 0.096),
            (bound_amenta_dey, 0.34),
            (bound_nsw, 0.51),
            (lemma1_point_to_tangent, 1.0),
            (lemma2_tangent_to_manifold, 0.3),
            (bound_thm1i, -0.01),
            (bound_thm1i, float("nan")),
        ],
    )
    def test_domain_errors(self, bound, outside):
        """Outside their hypotheses the bounds refuse to evaluate."""
        with pytest.raises(DomainError):
            bound(outside)

    def test_domain_edges_are_closed(self):
        """The closed ends of the domains evaluate."""
        assert bound_thm1i(0.25) == pytest.approx(0.25 * 9.5104166666666667)
        assert bound_thm1ii(19 / 200) > 0.0
        assert bound_amenta_dey(1 / 3) == pytest.approx(0.5)

    def test_lemmas(self):
        """Distance lemmas in units of lfs(p)."""
        assert lemma1_point_to_tangent(0.5) == pytest.approx(0.125)
        assert lemma2_tangent_to_manifold(0.25) == pytest.approx(0.125)
        t = 0.09
        assert improved_tangent_to_manifold(t) == pytest.approx(1.0 - math.sqrt(1.0 - t * t), rel=1e-12)

    def test_improved_height_has_no_cancellation(self):
        """The improved height keeps full precision for tiny t."""
        assert improved_tangent_to_manifold(1e-9) == pytest.approx(0.5e-18, rel=1e-12)

    def test_sphere_variation(self):
        """Exact sphere law t sqrt(1 - t^2 / 4)."""
        assert sphere_exact_variation(1.0) == pytest.approx(math.sqrt(3.0) / 2.0)
        assert sphere_exact_variation(2.0) == 0.0
        assert sphere_exact_variation(math.sqrt(2.0)) == pytest.approx(1.0)

    def test_intermediate_inequalities(self):
        """Probe-point chain constants."""
        assert chain_radius(0.1) == pytest.approx(0.232)
        assert eq4_probe_distance(0.1) == pytest.approx(0.005 * (2.32**2 + 4.4))
        assert eq4_improved_probe_distance(0.05) < eq4_probe_distance(0.05)
        assert segment_angle_bound(0.1) == pytest.approx(0.1 / 0.9 + 0.6)

    def test_segment_angle_domain(self):
        """The segment bound needs a ball of at most a tenth of lfs."""
        with pytest.raises(DomainError):
            segment_angle_bound(0.2)


class TestBoundRegistry:
    """Test cases for BoundRegistry."""

    def test_builtin_ids(self):
        """Every table and lemma column is registered."""
        ids = bound_registry.ids()

        for bound_id in TABLE_COLUMNS + LEMMA_COLUMNS:
            assert bound_id in ids

    def test_unknown_bound(self):
        """Unknown ids raise UnknownBound."""
        with pytest.raises(UnknownBound):
            bound_registry.get("nonexistent")

    def test_duplicate_registration(self):
        """Ids are unique."""
        with pytest.raises(ValueError):
            bound_registry.register(bound_registry.get("thm1i"))

    def test_metadata(self):
        """Domains, normalizations and hypotheses."""
        assert bound_registry.get("thm1ii").reconstructed
        assert bound_registry.get("nsw").normalization == Normalization.REACH_GLOBAL
        assert str(bound_registry.get("lem1").t_domain) == "(0, 1)"
        assert bound_registry.get("ad").applies_to(2, 3)
        assert not bound_registry.get("ad").applies_to(1, 2)
        assert not bound_registry.get("sphere_lower").applies_to(2, 3, is_sphere=False)
        assert bound_registry.get("sphere_lower").kind == BoundKind.LOWER_BOUND

    def test_list_bounds(self):
        """Listing carries descriptive fields."""
        listed = bound_registry.list_bounds()

        assert all({"id", "kind", "t_domain", "source"} <= set(entry) for entry in listed)

    def test_resolve_keeps_order(self):
        """resolve returns specs in the requested order."""
        specs = bound_registry.resolve(["lem1", "thm1i"])

        assert [spec.id for spec in specs] == ["lem1", "thm1i"]


class TestBoundsTable:
    """Test cases for bounds_table."""

    def test_zero_row(self):
        """Row t = 0 is all zeros."""
        row = bounds_table([0.0])[0]

        assert all(row[column] == 0.0 for column in TABLE_COLUMNS)

    def test_out_of_domain_cells_are_empty(self):
        """thm1i is undefined past 1/4, thm1ii past 19/200."""
        row = bounds_table([0.3])[0]

        assert row["thm1i"] is None
        assert row["thm1ii"] is None
        assert row["ad"] == pytest.approx(0.3 / 0.7)

    def test_thm1i_cell(self):
        """The t = 0.1 cell."""
        assert bounds_table([0.1])[0]["thm1i"] == pytest.approx(0.599022, abs=1e-12)

    def test_bad_grid(self):
        """Grid values must lie in [0, 1)."""
        with pytest.raises(DomainError):
            bounds_table([0.1, 1.0])

    def test_lemma_columns(self):
        """Lemma columns on request."""
        row = bounds_table([0.2], LEMMA_COLUMNS)[0]

        assert row["lem1"] == pytest.approx(0.02)
        assert row["lem2imp"] is None


class TestBoundRelations:
    """Test cases for relations between the bounds."""

    def test_improved_height_forms_agree(self):
        """1 - sqrt(1 - t^2) = t^2 / (1 + sqrt(1 - t^2))."""
        for t in np.linspace(0.0, 0.095, 200):
            assert improved_tangent_to_manifold(t) == pytest.approx(1.0 - math.sqrt(1.0 - t * t), abs=1e-14)

    def test_f_is_increasing(self):
        """f increases on [0, 1/4]."""
        values = [f_of_t(t) for t in np.arange(0.0, 0.25, 1e-4)]

        assert all(b > a for a, b in zip(values, values[1:]))

    def test_sphere_law_is_dominated(self):
        """The exact sphere variation stays below the upper bounds."""
        for t in np.linspace(1e-4, 0.25, 500):
            assert sphere_exact_variation(t) <= bound_thm1i(t)
        for t in np.linspace(1e-4, 0.5, 500):
            assert sphere_exact_variation(t) <= bound_bsw(t)

    def test_original_height_dominates_improved(self):
        """2 t^2 >= 1 - sqrt(1 - t^2) on the shared domain."""
        for t in np.linspace(0.0, 0.095, 100):
            assert lemma2_tangent_to_manifold(t) >= improved_tangent_to_manifold(t)
