"""Basic smoke tests to verify the system is working."""

import pytest


def test_imports():
    """Test that all main modules can be imported."""
    try:
        from src import bounds, cli, manifolds, pointcloud, reporting, subspace, verify  # noqa: F401
        from src.config import settings  # noqa: F401

        assert True
    except ImportError as e:
        pytest.fail(f"Failed to import modules: {e}")


def test_config_loading():
    """Test basic configuration loading."""
    from src.config import settings

    assert settings is not None
    assert hasattr(settings, "threads")
    assert hasattr(settings, "seed")
    assert hasattr(settings, "analytic_tolerance")


def test_bound_registry_list_bounds():
    """Test the bound registry can list bounds."""
    from src.bounds import bound_registry

    listed = bound_registry.list_bounds()

    assert isinstance(listed, list)
    assert len(listed) >= 9

    bound = listed[0]
    assert "id" in bound
    assert "kind" in bound
    assert "source" in bound


def test_manifold_zoo():
    """Test every registered shape can be built with defaults."""
    from src.manifolds import build_manifold, registered_shapes

    for name in registered_shapes():
        manifold = build_manifold(name)
        assert manifold.ambient_dim >= 2
        assert manifold.reach > 0.0


def test_basic_functionality():
    """Test a small end-to-end verification run."""
    from src.manifolds import Sphere
    from src.verify import verify_tangent_bounds

    report = verify_tangent_bounds(Sphere(), 20, seed=0)

    assert report.n_completed == 20
    assert report.passed


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
