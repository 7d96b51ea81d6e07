"""Exception hierarchy shared by all modules."""


class VemTopoError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(VemTopoError):
    """Degenerate or invalid polygon."""


class MeshGenerationError(VemTopoError):
    """A mesh generator could not produce a valid tessellation."""


class SolverError(VemTopoError):
    """The global linear system could not be factorized or solved."""


class OptimizerError(VemTopoError):
    """MMA or OC update failed."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class ConfigError(VemTopoError):
    """Invalid or missing run configuration."""
