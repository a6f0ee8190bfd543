from typing import Dict, Optional

__all__ = [
    'GarnetError',
    'InvalidSystemError',
    'SingularModelError',
    'EigenSolverError',
    'NoResonanceError',
    'DegenerateParameterError',
    'SpectrumFormatError',
    'ConfigError',
]


class GarnetError(ValueError):
    """Base class for every error raised by garnet."""


class InvalidSystemError(GarnetError):
    """A HybridSystem failed validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('invalid system: ' + '; '.join(self.violations))


class SingularModelError(GarnetError):
    pass


class EigenSolverError(GarnetError):

    def __init__(self, field: float, msg: str = 'eigen-decomposition did not converge'):
        self.field = field
        super().__init__(f'{msg} at field={field!r} T')


class NoResonanceError(GarnetError):
    pass


class DegenerateParameterError(GarnetError):
    """The fit Jacobian is singular.

    `null_direction` maps parameter names to the components of the right
    singular vector with the smallest singular value.
    """

    def __init__(self, null_direction: Dict[str, float]):
        self.null_direction = dict(null_direction)
        terms = ', '.join(f'{k}: {v:+.3f}' for k, v in self.null_direction.items()
                          if abs(v) > 1e-3)
        super().__init__(f'degenerate parameters, null direction ({terms})')


class SpectrumFormatError(GarnetError):

    def __init__(self, msg: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            msg = f'row {row}: {msg}'
        super().__init__(msg)


class ConfigError(GarnetError):

    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f'{path}: {msg}')
