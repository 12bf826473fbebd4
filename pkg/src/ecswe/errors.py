"""Exception types shared across the solver."""


class EcsweError(Exception):
    """Base class for all solver errors."""


class InvalidMeshError(EcsweError):
    """Mesh construction parameters or topology are invalid."""


class UnsupportedElementError(EcsweError):
    """Requested reference element kind is not implemented."""


class QuadratureDegreeError(EcsweError):
    """Requested quadrature degree is outside the implemented range."""


class PositivityError(EcsweError):
    """Depth field is non-positive at a quadrature point."""

    def __init__(self, min_value, where=""):
        self.min_value = min_value
        self.where = where
        msg = f"depth must stay positive, min value {min_value:.6e}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class SolverError(EcsweError):
    """A linear solve failed or did not reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message += f" (achieved residual {residual:.3e})"
        super().__init__(message)


class ConfigError(EcsweError):
    """Run configuration is invalid."""
