"""Tests for the analytic manifold zoo and the lfs oracle."""

import math

import numpy as np
import pytest

from src.errors import DomainError, Unreachable, UnsupportedShape
from src.manifolds import (
    Circle,
    Ellipsoid,
    LfsSource,
    Sphere,
    Torus,
    build_manifold,
    lfs_oracle,
    point_at,
    registered_shapes,
    sample_pair,
    sample_pair_at_t,
    sample_point,
)
from src.subspace import sin_angle_between


class TestBuildManifold:
    """Test cases for the shape registry."""

    def test_registered_shapes(self):
        """The zoo has four shapes."""
        assert registered_shapes() == ["circle", "sphere", "torus", "ellipsoid"]

    def test_parameter_aliases(self):
        """Sphere dimension and torus radii aliases."""
        sphere = build_manifold("sphere", {"dim": 8})
        torus = build_manifold("torus", {"r_major": 3.0, "r_minor": 1.0})

        assert sphere.ambient_dim == 8
        assert sphere.intrinsic_dim == 7
        assert (torus.R, torus.r) == (3.0, 1.0)

    def test_unknown_shape(self):
        """Unregistered names raise UnsupportedShape."""
        with pytest.raises(UnsupportedShape):
            build_manifold("klein_bottle")

    def test_unknown_parameter(self):
        """Unknown parameter keys are rejected."""
        with pytest.raises(DomainError):
            build_manifold("torus", {"radius": 1.0})

    @pytest.mark.parametrize(
        "name, params",
        [
            ("sphere", {"dim": 17}),
            ("sphere", {"radius": -1.0}),
            ("torus", {"R": 0.5, "r": 0.5}),
            ("ellipsoid", {"c": 0.0}),
        ],
    )
    def test_invalid_parameters(self, name, params):
        """Parameters outside their ranges raise DomainError."""
        with pytest.raises(DomainError):
            build_manifold(name, params)

    def test_describe(self):
        """describe names the shape and its parameters."""
        assert build_manifold("circle").describe() == {"name": "circle", "params": {"radius": 1.0}}


class TestShapes:
    """Test cases for tangents, lfs and closest points."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(7)

    @pytest.mark.parametrize(
        "manifold",
        [Circle(), Sphere(n=3), Sphere(n=16, radius=2.0), Torus(), Ellipsoid()],
        ids=["circle", "sphere3", "sphere16", "torus", "ellipsoid"],
    )
    def test_samples_are_on_manifold_with_orthogonal_normal(self, manifold):
        """Sampled points satisfy the implicit equation; the tangent is normal-orthogonal."""
        for _ in range(20):
            x = manifold.sample_position(self.rng)
            tangent = manifold.tangent_basis(x)

            assert abs(manifold.implicit(x)) < 1e-12
            assert tangent.dim == manifold.intrinsic_dim
            np.testing.assert_allclose(tangent.vectors @ manifold.unit_normal(x), 0.0, atol=1e-12)

    def test_sphere_lfs_is_radius(self):
        """Every point of a sphere has lfs = radius."""
        point = sample_point(Sphere(n=5, radius=3.0), self.rng)

        assert point.lfs == 3.0
        assert point.lfs_source == LfsSource.ANALYTIC

    def test_torus_lfs(self):
        """lfs = min(r, distance to the axis)."""
        torus = Torus(R=2.0, r=0.5)
        fat = Torus(R=1.0, r=0.6)

        assert torus.analytic_lfs(np.array([2.5, 0.0, 0.0])) == 0.5
        assert torus.analytic_lfs(np.array([1.5, 0.0, 0.0])) == 0.5
        assert fat.analytic_lfs(np.array([0.4, 0.0, 0.0])) == pytest.approx(0.4)
        assert fat.reach == pytest.approx(0.4)

    def test_torus_oracle_matches_closed_form(self):
        """The sampled medial axis reproduces the closed form."""
        torus = Torus()
        x = torus.sample_position(self.rng)

        assert lfs_oracle(torus, x) == pytest.approx(torus.analytic_lfs(x), abs=1e-6)

    def test_ellipsoid_oracle_at_vertices(self):
        """lfs at the axis ends equals the radius of curvature there."""
        ellipsoid = Ellipsoid(a=1.0, b=0.8, c=0.6)

        assert ellipsoid.reach == pytest.approx(0.36)
        assert lfs_oracle(ellipsoid, np.array([1.0, 0.0, 0.0])) == pytest.approx(0.36, rel=1e-3)
        assert lfs_oracle(ellipsoid, np.array([0.0, 0.0, 0.6])) == pytest.approx(0.6, rel=1e-9)
        assert point_at(ellipsoid, np.array([0.0, 0.0, -0.6])).lfs_source == LfsSource.ORACLE

    def test_oracle_rejects_points_off_manifold(self):
        """The oracle is defined on M only."""
        with pytest.raises(DomainError):
            lfs_oracle(Sphere(), np.array([2.0, 0.0, 0.0]))

    def test_ellipsoid_closest_point(self):
        """Closest points land on M with the offset along the normal, over the medial disk too."""
        ellipsoid = Ellipsoid()
        points = [[2.0, 1.0, 0.5], [0.1, 0.05, 0.01], [0.3, 0.0, 0.2], [0.3, 0.0, 0.0]]
        for x in map(np.array, points):
            y = ellipsoid.closest_point(x)
            offset = x - y
            normal = ellipsoid.unit_normal(y)

            assert abs(ellipsoid.implicit(y)) < 1e-10
            np.testing.assert_allclose(offset - (offset @ normal) * normal, 0.0, atol=1e-9)

    def test_torus_distance(self):
        """Distance to the torus is |distance to the spine circle - r|."""
        torus = Torus()

        assert torus.distance(np.array([3.0, 0.0, 0.0])) == pytest.approx(0.5)
        assert torus.distance(np.array([2.0, 0.0, 0.25])) == pytest.approx(0.25)


class TestPairs:
    """Test cases for pair construction at prescribed t."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(11)

    @pytest.mark.parametrize("manifold", [Sphere(n=3), Torus(), Ellipsoid()], ids=["sphere", "torus", "ellipsoid"])
    def test_chord_matches_target(self, manifold):
        """||p - q|| = t lfs(p) up to the chord tolerance."""
        p = sample_point(manifold, self.rng)
        for t in (0.01, 0.1, 0.25):
            pair = sample_pair(manifold, p, t, self.rng)

            assert pair.t == pytest.approx(t, rel=1e-7)
            assert abs(manifold.implicit(pair.q.position)) < 1e-10

    def test_sphere_variation_is_exact(self):
        """On S^{N-1} the tangent variation follows t sqrt(1 - t^2 / 4)."""
        for n in (2, 3, 8):
            sphere = Sphere(n=n)
            p = sample_point(sphere, self.rng)
            pair = sample_pair(sphere, p, 0.2, self.rng)
            expected = pair.t * math.sqrt(1.0 - pair.t**2 / 4.0)

            assert sin_angle_between(p.tangent, pair.q.tangent) == pytest.approx(expected, abs=1e-12)

    def test_offset_is_free_of_cancellation(self):
        """The path offset keeps precision at tiny chords."""
        sphere = Sphere()
        p = sample_point(sphere, self.rng)
        pair = sample_pair(sphere, p, 1e-7, self.rng)
        normal_component = abs(pair.offset @ sphere.unit_normal(p.position))

        assert normal_component == pytest.approx(0.5e-14, rel=1e-6)

    def test_unreachable_chord(self):
        """Chords longer than the diameter cannot be built."""
        sphere = Sphere()
        p = sample_point(sphere, self.rng)

        with pytest.raises(Unreachable):
            sample_pair_at_t(sphere, p, 2.5, self.rng)

    def test_nonpositive_t(self):
        """t must be positive."""
        sphere = Sphere()

        with pytest.raises(DomainError):
            sample_pair(sphere, sample_point(sphere, self.rng), 0.0, self.rng)
