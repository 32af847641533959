"""Exception hierarchy shared by the lfsgeo modules."""

from typing import Any, Dict


class LfsGeoError(Exception):
    """Base class for every error raised by lfsgeo."""

    code = "lfsgeo_error"

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form used by the CLI on stderr."""
        return {"error": self.code, "message": str(self)}


class DomainError(LfsGeoError, ValueError):
    """An argument lies outside the validity domain of a formula."""

    code = "domain_error"


class DimensionMismatch(LfsGeoError, ValueError):
    """Vectors or subspaces live in different ambient spaces."""

    code = "dimension_mismatch"


class InvalidOrder(LfsGeoError, ValueError):
    """angle_between called with dim(U) > dim(V)."""

    code = "invalid_order"


class ZeroSpan(LfsGeoError, ValueError):
    """Every spanning vector is numerically zero."""

    code = "zero_span"


class UnsupportedShape(LfsGeoError, ValueError):
    """The manifold name is not in the registry."""

    code = "unsupported_shape"


class Unreachable(LfsGeoError):
    """No manifold point at the requested chordal distance was found."""

    code = "unreachable"


class OracleUnavailable(LfsGeoError):
    """No medial-axis description is registered for the shape."""

    code = "oracle_unavailable"


class PreimageNotFound(LfsGeoError):
    """A tangent-space point has no preimage under the projection within the ball."""

    code = "preimage_not_found"


class DegenerateNeighborhood(LfsGeoError):
    """Local covariance has rank below the requested tangent dimension."""

    code = "degenerate_neighborhood"


class NoConvergence(LfsGeoError):
    """An iterative estimator hit its iteration cap."""

    code = "no_convergence"


class CodimensionUnsupported(LfsGeoError):
    """The estimator only handles hypersurfaces."""

    code = "codimension_unsupported"


class UnknownBound(LfsGeoError, KeyError):
    """Bound id not present in the registry."""

    code = "unknown_bound"

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ConfigError(LfsGeoError, ValueError):
    """Invalid run configuration."""

    code = "config_error"
