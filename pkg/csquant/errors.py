__all__ = [
    'InvalidDimensionError', 'InvalidSpinError', 'DimensionMismatchError',
    'GridMismatchError', 'PreconditionError', 'ConfigError',
    'TrajectoryLeftDomainError', 'SamplingInefficiencyError',
    'IllConditionedError', 'NumericalDegradation'
]
__doc__ = """
Exceptions raised by csquant.

Input problems subclass ValueError; numerical degradation subclasses
RuntimeError through NumericalDegradation so the command line can map the
whole family to exit code 3.
"""


class InvalidDimensionError(ValueError):
    pass


class InvalidSpinError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericalDegradation(RuntimeError):
    pass


class TrajectoryLeftDomainError(NumericalDegradation):
    pass


class SamplingInefficiencyError(NumericalDegradation):
    pass


class IllConditionedError(NumericalDegradation):
    pass
