from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, List, Dict

import numpy as np
from anndata import AnnData

from ._constants import DEFAULT_CONSTANTS
from ._errors import InvalidSystemError

# A spectrum map is an AnnData: X holds |S21| in dB (rows are fields),
# obs['field_T'] and var['freq_Hz'] the axes, layers['s21_re'/'s21_im']
# the complex value when known.
SpectrumMap = AnnData


@dataclass(frozen=True)
class CavityMode:
    """\
    A single cavity resonance.

    All rates and frequencies are ordinary frequencies (the X/2π value), Hz.
    """
    label: str
    omega_c: float
    kappa_in: float
    kappa_out: float
    kappa_int: float

    @property
    def kappa_tot(self) -> float:
        return self.kappa_in + self.kappa_out + self.kappa_int

    @property
    def kappa_ext(self) -> float:
        """Geometric mean of the port rates, the only combination S21 sees."""
        return float(np.sqrt(self.kappa_in * self.kappa_out))


@dataclass(frozen=True)
class MagnonMode:
    """\
    A collective spin mode with affine field dispersion

        omega_m(B) = dispersion_slope * (B - dispersion_offset)

    `g_tilde` and `gamma_m` in Hz, slope in Hz/T, offset in T.
    """
    label: str
    g_tilde: float
    gamma_m: float
    dispersion_slope: float = DEFAULT_CONSTANTS.gamma_e
    dispersion_offset: float = 0.0
    total_spin: Optional[float] = None

    def frequency(self, field):
        return self.dispersion_slope * (np.asarray(field, dtype=float) - self.dispersion_offset)

    def resonant_field(self, freq: float) -> float:
        """Field at which this mode sits at `freq`."""
        return self.dispersion_offset + freq / self.dispersion_slope


@dataclass(frozen=True)
class HybridSystem:
    """One cavity mode and the magnon modes coupled to it."""
    cavity: CavityMode
    magnons: Tuple[MagnonMode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        # accept any sequence, store a tuple
        object.__setattr__(self, 'magnons', tuple(self.magnons))

    @property
    def labels(self) -> List[str]:
        return [m.label for m in self.magnons]

    @property
    def dim(self) -> int:
        return 1 + len(self.magnons)

    def magnon(self, label: str) -> MagnonMode:
        for m in self.magnons:
            if m.label == label:
                return m
        raise KeyError(f'No magnon labelled {label!r}, available: {self.labels}')

    def replace_magnon(self, label: str, /, **changes) -> 'HybridSystem':
        self.magnon(label)
        magnons = [replace(m, **changes) if m.label == label else m for m in self.magnons]
        return replace(self, magnons=tuple(magnons))

    def without(self, label: str) -> 'HybridSystem':
        self.magnon(label)
        return replace(self, magnons=tuple(m for m in self.magnons if m.label != label))

    def parameters(self) -> Dict[str, float]:
        """Flat parameter dictionary, magnon entries prefixed by their label."""
        params = dict(
            omega_c=self.cavity.omega_c,
            kappa_in=self.cavity.kappa_in,
            kappa_out=self.cavity.kappa_out,
            kappa_int=self.cavity.kappa_int,
        )
        for m in self.magnons:
            params[f'{m.label}.g_tilde'] = m.g_tilde
            params[f'{m.label}.gamma_m'] = m.gamma_m
            params[f'{m.label}.dispersion_slope'] = m.dispersion_slope
            params[f'{m.label}.dispersion_offset'] = m.dispersion_offset
        return params

    def with_parameters(self, params: Dict[str, float]) -> 'HybridSystem':
        """Return a copy with entries of a `parameters()`-style dictionary applied."""
        cavity_changes = {}
        magnon_changes: Dict[str, Dict[str, float]] = {}
        for name, value in params.items():
            if '.' in name:
                label, attr = name.split('.', 1)
                magnon_changes.setdefault(label, {})[attr] = float(value)
            else:
                cavity_changes[name] = float(value)
        system = replace(self, cavity=replace(self.cavity, **cavity_changes))
        for label, changes in magnon_changes.items():
            system = system.replace_magnon(label, **changes)
        return system


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Field (T) and probe-frequency (Hz) axes of a spectrum map."""
    field_values: np.ndarray
    freq_values: np.ndarray

    def __post_init__(self):
        fv = np.array(self.field_values, dtype=float, ndmin=1)
        qv = np.array(self.freq_values, dtype=float, ndmin=1)
        fv.setflags(write=False)
        qv.setflags(write=False)
        object.__setattr__(self, 'field_values', fv)
        object.__setattr__(self, 'freq_values', qv)

    @classmethod
    def linspace(cls, field_min, field_max, field_points, freq_min, freq_max, freq_points):
        return cls(np.linspace(field_min, field_max, int(field_points)),
                   np.linspace(freq_min, freq_max, int(freq_points)))

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.field_values), len(self.freq_values))

    def violations(self) -> List[str]:
        out = []
        for name in ('field_values', 'freq_values'):
            values = getattr(self, name)
            if values.size == 0:
                out.append(f'grid.{name} must be non-empty')
            elif not np.all(np.isfinite(values)):
                out.append(f'grid.{name} must contain finite values only')
            elif np.any(np.diff(values) <= 0):
                out.append(f'grid.{name} must be strictly increasing')
        return out

    def validate(self) -> 'SweepGrid':
        problems = self.violations()
        if problems:
            raise ValueError('invalid grid: ' + '; '.join(problems))
        return self


def validate_system(
    system: HybridSystem,
    fields: Optional[Sequence[float]] = None,
) -> List[str]:
    """\
    Check every HybridSystem invariant.

    Parameters
    ----------
    system
        The system to check.
    fields
        Optional field values the system will be evaluated on. When given,
        every magnon frequency must be non-negative over them.

    Returns
    -------
    A list of violation descriptions, empty when the system is valid.
    """
    violations = []
    cav = system.cavity

    if not (np.isfinite(cav.omega_c) and cav.omega_c > 0):
        violations.append(f'cavity.omega_c must be > 0 (got {cav.omega_c!r})')
    for name in ('kappa_in', 'kappa_out', 'kappa_int'):
        value = getattr(cav, name)
        if not (np.isfinite(value) and value >= 0):
            violations.append(f'cavity.{name} must be >= 0 (got {value!r})')

    seen = set()
    for k, m in enumerate(system.magnons):
        where = f'magnons[{k}] ({m.label})'
        if m.label in seen:
            violations.append(f'{where}.label must be unique, {m.label!r} is repeated')
        seen.add(m.label)
        if not (np.isfinite(m.g_tilde) and m.g_tilde >= 0):
            violations.append(f'{where}.g_tilde must be >= 0 (got {m.g_tilde!r})')
        if not (np.isfinite(m.gamma_m) and m.gamma_m > 0):
            violations.append(f'{where}.gamma_m must be > 0 (got {m.gamma_m!r})')
        if not (np.isfinite(m.dispersion_slope) and m.dispersion_slope > 0):
            violations.append(f'{where}.dispersion_slope must be > 0 (got {m.dispersion_slope!r})')
        if not np.isfinite(m.dispersion_offset):
            violations.append(f'{where}.dispersion_offset must be finite')
        if m.total_spin is not None and not m.total_spin > 0:
            violations.append(f'{where}.total_spin must be > 0 when given (got {m.total_spin!r})')
        if fields is not None and len(fields) and np.isfinite(m.dispersion_slope):
            lowest = float(np.min(fields))
            if m.frequency(lowest) < 0:
                violations.append(
                    f'{where}.dispersion gives a negative frequency at field={lowest!r} T'
                )
    return violations


def check_system(system: HybridSystem, fields: Optional[Sequence[float]] = None) -> HybridSystem:
    """Raise InvalidSystemError unless `system` is valid."""
    violations = validate_system(system, fields)
    if violations:
        raise InvalidSystemError(violations)
    return system
