"""Exceptions shared across the simulator."""


class Infeasible(ArithmeticError):
    """A round cannot be scheduled with the available energy and channel."""


class EpsilonUnreachable(Infeasible):
    """The quantization-error tolerance cannot be met below the bit cap."""


class TrainingDiverged(FloatingPointError):
    """Local training produced a non-finite loss or gradient."""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""
