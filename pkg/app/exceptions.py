"""
Domain exceptions for the trajectory dataset toolkit.
All errors derive from ValueError so services and routers can treat them uniformly.
"""


class TerrainQueryError(ValueError):
    """Height query outside the footprint of a height field."""


class SplineEvaluationError(ValueError):
    """Spline evaluated outside of its time domain."""


class KinematicsError(ValueError):
    """Foot target unreachable or joint solution outside the joint limits."""


class NlpEvaluationError(ValueError):
    """Non-finite residual or Jacobian in a constraint block."""

    def __init__(self, block_name: str, message: str):
        super().__init__(f"{message} (block '{block_name}')")
        self.block_name = block_name


class ProblemBuildError(ValueError):
    """Planning problem cannot be assembled for the given terrain and config."""


class ClipRejectedError(ValueError):
    """A solution could not be discretized into a clip."""


class ClipFormatError(ValueError):
    """Corrupt, truncated or inconsistent clip directory."""

    def __init__(self, message: str, channel: str | None = None):
        super().__init__(message)
        self.channel = channel


class ConfigError(ValueError):
    """Invalid pipeline or component configuration."""
