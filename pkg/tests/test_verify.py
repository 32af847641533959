"""Tests for the Monte-Carlo verification harness."""

from unittest.mock import patch

import numpy as np
import pytest

from src.config import settings
from src.errors import DomainError, PreimageNotFound
from src.manifolds import Circle, Ellipsoid, Sphere, Torus, sample_point
from src.verify import (
    eq4_intermediate_check,
    find_preimage,
    resolve_tolerance,
    verify_lipschitz_sandwich,
    verify_projection_lemma,
    verify_tangent_bounds,
)


class TestVerifyTangentBounds:
    """Test cases for verify_tangent_bounds."""

    def test_sphere_zero_violations(self):
        """Every bound holds on the round sphere."""
        report = verify_tangent_bounds(Sphere(n=3), 500, t_range=(0.0, 0.25), seed=1)

        assert report.total_violations == 0
        assert report.n_completed == 500
        assert {"thm1i", "thm1ii", "ad", "lem1", "lem2", "sphere_lower"} <= set(report.per_bound)
        assert report.statistics["max_sphere_deviation"] < 1e-9
        assert report.passed

    def test_sphere_tightness_law_in_high_dimension(self):
        """The measured variation matches the sphere law in R^16."""
        report = verify_tangent_bounds(Sphere(n=16), 200, t_range=(0.0, 0.5), seed=3, bound_ids=["thm1i"])

        assert report.statistics["max_sphere_deviation"] < 1e-9
        assert report.per_bound["thm1i"].in_domain <= 200

    def test_torus_zero_violations(self):
        """Closed-form lfs on the torus."""
        report = verify_tangent_bounds(Torus(), 300, seed=2)

        assert report.total_violations == 0
        assert "sphere_lower" not in report.per_bound
        assert "ad" in report.per_bound

    def test_amenta_dey_needs_a_surface(self):
        """The two-dimensional baseline is skipped on the circle."""
        report = verify_tangent_bounds(Circle(), 50, seed=0)

        assert "ad" not in report.per_bound
        assert "thm1i" in report.per_bound

    def test_lemma1_equality_on_circle(self):
        """dist(q, T_p) = t^2 / 2 exactly on the unit circle."""
        report = verify_tangent_bounds(Circle(), 300, t_range=(0.01, 0.5), seed=4, bound_ids=["lem1"])
        summary = report.per_bound["lem1"]

        assert summary.violations == 0
        assert summary.max_tightness == pytest.approx(1.0, abs=1e-9)

    def test_lower_bound_certificate(self):
        """sin angle / t stays above 0.96 on S^2 for t <= 1/4."""
        report = verify_tangent_bounds(Sphere(n=3), 300, t_range=(0.01, 0.25), seed=5, bound_ids=["sphere_lower"])

        assert report.statistics["min_sin_over_t"] >= 0.96

    def test_negative_control(self):
        """Halving an equality bound makes the harness fail."""
        report = verify_tangent_bounds(
            Circle(), 100, t_range=(0.01, 0.5), seed=6, bound_ids=["lem1"], bound_scale=0.5
        )

        assert report.per_bound["lem1"].violations == report.per_bound["lem1"].in_domain > 0
        assert not report.passed
        assert any("scaled" in note for note in report.notes)

    def test_reconstructed_note(self):
        """Using thm1ii flags the reconstructed closed form."""
        report = verify_tangent_bounds(Sphere(), 50, t_range=(0.0, 0.095), seed=0, bound_ids=["thm1ii"])

        assert report.per_bound["thm1ii"].reconstructed
        assert any("reconstructed" in note for note in report.notes)

    def test_observations_are_collected(self):
        """Per-pair observations on request."""
        observations = []
        verify_tangent_bounds(Sphere(), 20, seed=0, bound_ids=["lem1", "thm1i"], observations=observations)

        assert len(observations) == 20
        assert all(set(obs.per_bound) <= {"lem1", "thm1i"} for obs in observations)

    def test_same_seed_same_report(self):
        """Reports depend only on the inputs."""
        first = verify_tangent_bounds(Torus(), 100, seed=9)
        second = verify_tangent_bounds(Torus(), 100, seed=9)

        assert first.to_json(omit_timing=True) == second.to_json(omit_timing=True)
        assert "wall_time_s" not in first.to_json(omit_timing=True)

    def test_thread_count_does_not_change_results(self):
        """Chunked seeding makes the report independent of the worker count."""
        with patch.object(settings, "chunk_size", 32):
            single = verify_tangent_bounds(Sphere(), 150, seed=12, threads=1)
            parallel = verify_tangent_bounds(Sphere(), 150, seed=12, threads=4)

        assert single.to_json(omit_timing=True) == parallel.to_json(omit_timing=True)

    def test_histogram_counts_in_domain_observations(self):
        """Histogram buckets sum to the in-domain count."""
        report = verify_tangent_bounds(Sphere(), 100, seed=0, bound_ids=["thm1i"])
        summary = report.per_bound["thm1i"]

        assert len(summary.histogram) == settings.histogram_buckets
        assert sum(summary.histogram) == summary.in_domain

    def test_every_bound_checked_on_every_pair(self):
        """Short-domain bounds draw t inside their own domain instead of losing pairs."""
        report = verify_tangent_bounds(
            Sphere(), 400, t_range=(0.0, 0.25), seed=13, bound_ids=["thm1i", "thm1ii", "lem2", "lem2imp"]
        )

        assert report.n_completed == 400
        assert {bound_id: summary.in_domain for bound_id, summary in report.per_bound.items()} == {
            "thm1i": 400,
            "thm1ii": 400,
            "lem2": 400,
            "lem2imp": 400,
        }
        assert report.total_violations == 0

    def test_all_sphere_bounds_fully_covered(self):
        """Every applicable bound, reach baselines included, sees every pair on S^2."""
        report = verify_tangent_bounds(Sphere(n=3), 200, t_range=(0.0, 0.25), seed=14)

        assert all(summary.in_domain == 200 for summary in report.per_bound.values())

    def test_short_domain_pairs_stay_in_domain(self):
        """Observations carrying thm1ii have t inside (0, 19/200]."""
        observations = []
        verify_tangent_bounds(
            Torus(), 100, t_range=(0.0, 0.25), seed=15, bound_ids=["thm1i", "thm1ii"], observations=observations
        )
        short = [obs for obs in observations if "thm1ii" in obs.per_bound]

        assert len(short) == 100
        assert max(obs.t for obs in short) <= 0.095
        assert max(obs.t for obs in observations) > 0.095

    def test_satisfied_matches_the_tolerance_rule(self):
        """satisfied == (measured <= bound (1 + rtol) + floor) on every observation."""
        observations = []
        report = verify_tangent_bounds(Torus(), 100, seed=16, observations=observations)

        outcomes = [outcome for obs in observations for outcome in obs.per_bound.values()]
        assert outcomes
        for outcome in outcomes:
            limit = outcome.bound_value * (1.0 + report.tolerance) + settings.absolute_floor
            assert outcome.satisfied == (outcome.measured <= limit)

    def test_invalid_arguments(self):
        """Empty runs and bad ranges are rejected."""
        with pytest.raises(DomainError):
            verify_tangent_bounds(Sphere(), 0)
        with pytest.raises(DomainError):
            verify_tangent_bounds(Sphere(), 10, t_range=(0.2, 0.1))

    @pytest.mark.slow
    def test_ellipsoid_oracle_run(self):
        """Oracle lfs with the relaxed tolerance."""
        report = verify_tangent_bounds(Ellipsoid(), 200, seed=8, bound_ids=["thm1i", "lem1", "lem2"])

        assert report.tolerance == settings.oracle_tolerance
        assert report.total_violations == 0


class TestTolerance:
    """Test cases for tolerance selection."""

    def test_defaults(self):
        """Analytic shapes use 1e-9, oracle shapes 1e-3."""
        assert resolve_tolerance(Sphere()) == 1e-9
        assert resolve_tolerance(Ellipsoid()) == 1e-3
        assert resolve_tolerance(Torus(), 1e-6) == 1e-6


class TestSandwich:
    """Test cases for verify_lipschitz_sandwich."""

    @pytest.mark.parametrize("manifold", [Sphere(), Torus(), Circle()], ids=["sphere", "torus", "circle"])
    def test_zero_violations(self, manifold):
        """(1 - t) lfs(p) <= lfs(q) <= (1 + t) lfs(p)."""
        report = verify_lipschitz_sandwich(manifold, 300, seed=1)

        assert list(report.per_bound) == ["eq3_lower", "eq3_upper", "lipschitz"]
        assert report.total_violations == 0

    @pytest.mark.slow
    def test_ellipsoid_oracle(self):
        """The sandwich holds with oracle lfs on the ellipsoid."""
        report = verify_lipschitz_sandwich(Ellipsoid(), 200, seed=17)

        assert report.tolerance == settings.oracle_tolerance
        assert report.total_violations == 0

    def test_constant_lfs_has_zero_lipschitz_tightness(self):
        """lfs is constant on the sphere."""
        report = verify_lipschitz_sandwich(Sphere(), 100, seed=2)

        assert report.per_bound["lipschitz"].max_tightness == 0.0
        assert report.statistics["min_slack_lower"] > 0.0

    def test_t_must_stay_below_one(self):
        """The sandwich needs t < 1."""
        with pytest.raises(DomainError):
            verify_lipschitz_sandwich(Sphere(), 10, t_range=(0.0, 1.0))


class TestEq4:
    """Test cases for eq4_intermediate_check."""

    @pytest.mark.parametrize("manifold", [Sphere(), Torus()], ids=["sphere", "torus"])
    def test_zero_violations(self, manifold):
        """Probe-point inequalities hold."""
        report = eq4_intermediate_check(manifold, 300, seed=3)

        assert report.total_violations == 0
        assert report.per_bound["eq4"].in_domain == report.n_completed
        assert report.per_bound["eq4imp"].in_domain < report.n_completed

    @pytest.mark.slow
    def test_ellipsoid_oracle(self):
        """The intermediate chain holds with oracle lfs on the ellipsoid."""
        report = eq4_intermediate_check(Ellipsoid(), 200, seed=18)

        assert report.total_violations == 0
        assert report.per_bound["eq4"].in_domain == report.n_completed

    def test_range_capped_at_one_quarter(self):
        """t beyond 1/4 is outside the chain's hypotheses."""
        with pytest.raises(DomainError):
            eq4_intermediate_check(Sphere(), 10, t_range=(0.0, 0.3))


class TestProjection:
    """Test cases for verify_projection_lemma."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(21)

    def test_sphere_flags_and_equality(self):
        """All three properties hold; the height bound is attained on the sphere."""
        sphere = Sphere()
        p = sample_point(sphere, self.rng)
        report = verify_projection_lemma(sphere, p, 300, seed=4)

        assert report.flags == {
            "no_collapse_observed": True,
            "coverage_complete": True,
            "height_bound_holds": True,
        }
        assert report.statistics["max_height_tightness"] == pytest.approx(1.0, abs=1e-9)
        assert report.statistics["max_preimage_residual"] <= 1e-12
        assert report.statistics["min_projection_ratio"] > 1.0 - 0.71112
        assert report.total_violations == 0

    def test_torus_flags(self):
        """The torus passes at its closed-form lfs."""
        torus = Torus()
        p = sample_point(torus, self.rng)
        report = verify_projection_lemma(torus, p, 300, seed=5)

        assert all(report.flags.values())
        assert report.statistics["coverage_radius"] == pytest.approx(0.095 * p.lfs)

    def test_preimage_outside_ball(self):
        """Points far from p have no preimage inside the small ball."""
        sphere = Sphere()
        p = sample_point(sphere, self.rng)
        far = p.position + 0.5 * p.tangent.vectors[0]

        with pytest.raises(PreimageNotFound):
            find_preimage(sphere, p, far, 0.1)
