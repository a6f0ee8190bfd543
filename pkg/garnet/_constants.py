from dataclasses import dataclass, fields

import numpy as np
from scipy import constants as _si


@dataclass(frozen=True)
class PhysicalConstants:
    """\
    Physical constants used across garnet, SI units.

    `gamma_e` is the ordinary-frequency gyromagnetic ratio (Hz/T), so that
    the angular value is `2 * pi * gamma_e`.
    """
    h_bar: float = _si.hbar
    k_B: float = _si.k
    mu_0: float = _si.mu_0
    mu_B: float = _si.physical_constants['Bohr magneton'][0]
    gamma_e: float = 28.0e9
    spin_per_ion: float = 2.5
    lambda_ex: float = 3e-16

    @property
    def h(self) -> float:
        return 2 * np.pi * self.h_bar

    def violations(self):
        return [f'constants.{f.name} must be > 0 (got {getattr(self, f.name)!r})'
                for f in fields(self) if not getattr(self, f.name) > 0]

    def replace(self, **overrides) -> 'PhysicalConstants':
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f'Unknown constants {sorted(unknown)}')
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(overrides)
        return PhysicalConstants(**values)


DEFAULT_CONSTANTS = PhysicalConstants()

# vacuum permittivity is not a model parameter, it only enters k0
EPSILON_0 = _si.epsilon_0


def to_angular(freq):
    """Ordinary frequency (Hz) to angular frequency (rad/s).

    This is the only place where the factor 2π is applied.
    """
    return 2 * np.pi * np.asarray(freq, dtype=float) if np.ndim(freq) else 2 * np.pi * float(freq)


def from_angular(omega):
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return np.asarray(omega, dtype=float) / (2 * np.pi) if np.ndim(omega) else float(omega) / (2 * np.pi)
