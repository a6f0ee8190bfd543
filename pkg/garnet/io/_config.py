from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union, IO

import numpy as np
import yaml

from .._constants import PhysicalConstants, DEFAULT_CONSTANTS
from .._errors import ConfigError
from .._types import CavityMode, MagnonMode, HybridSystem, SweepGrid, validate_system
from ..inference import FitConfig

GHZ = 1e9
MHZ = 1e6
_REQUIRED = object()


class _Section:
    """Keys of one mapping, consumed one by one; leftovers are reported."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path or '<root>', f'expected a mapping, got {type(data).__name__}')
        self.data = dict(data)
        self.path = path

    def where(self, key) -> str:
        return f'{self.path}.{key}' if self.path else str(key)

    def raw(self, key, default=_REQUIRED):
        if key not in self.data:
            if default is _REQUIRED:
                raise ConfigError(self.where(key), 'missing required key')
            return default
        return self.data.pop(key)

    def number(self, key, default=_REQUIRED, scale: float = 1.0) -> Optional[float]:
        """Float at `key` times `scale`; a missing key returns `default` as is."""
        if key not in self.data and default is not _REQUIRED:
            return default
        value = self.raw(key)
        if value is None and default is None:
            return None
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(self.where(key), f'expected a number, got {value!r}') from None
        if not np.isfinite(value):
            raise ConfigError(self.where(key), f'expected a finite number, got {value!r}')
        return value * scale

    def integer(self, key, default=_REQUIRED) -> int:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ConfigError(self.where(key), f'expected an integer, got {value!r}')
        return int(value)

    def section(self, key, required=False) -> '_Section':
        return _Section(self.raw(key, _REQUIRED if required else None), self.where(key))

    def finish(self):
        if self.data:
            raise ConfigError(self.path or '<root>', f'unknown keys {sorted(self.data)}')


@dataclass(frozen=True)
class MaterialSettings:
    """Sample and measurement inputs of the derived quantities."""
    relative_permittivity: Optional[float] = None
    k_ms_rad_per_m: Optional[float] = None
    regime_threshold: float = 100.0
    low_excitation_threshold: float = 1e-3
    eta: float = 0.684
    mode_volume_m3: float = 2.7e-6
    temperature_k: float = 300.0
    input_power_dbm: Tuple[float, ...] = ()
    line_gain_db: float = 0.0
    mean_magnon_number: Optional[float] = None


@dataclass(frozen=True)
class FitSettings:
    free_parameters: Optional[Tuple[str, ...]] = None
    bounds_si: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    labels: Tuple[str, ...] = ('FMR', 'MS')
    max_iterations: int = 200
    tolerance: float = 1e-8
    restarts: int = 0
    port_ratio: Optional[float] = None
    prominence_db: float = 3.0


@dataclass(frozen=True)
class SweepSettings:
    magnon: str = 'MS'
    multipliers: Tuple[float, ...] = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class RunConfig:
    """\
    Everything a CLI run needs, read from one YAML file.

    Every key carries its unit in its name (`omega_c_ghz`, `kappa_in_mhz`,
    `field_min_t`, ...); values are converted to Hz, T and W on parsing.
    """
    name: str
    system: HybridSystem
    grid: Optional[SweepGrid] = None
    constants: PhysicalConstants = DEFAULT_CONSTANTS
    fit: FitSettings = FitSettings()
    material: MaterialSettings = MaterialSettings()
    sweep: SweepSettings = SweepSettings()
    seed: int = 0
    noise_db: float = 0.0
    n_jobs: int = 1
    output_dir: Optional[str] = None
    write_complex: bool = True

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> 'RunConfig':
        try:
            with open(path) as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigError(str(path), e.strerror or str(e)) from e
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            where = f'{path}:{mark.line + 1}:{mark.column + 1}' if mark else str(path)
            raise ConfigError(where, getattr(e, 'problem', None) or str(e)) from e
        return cls.from_dict(data, name=Path(path).stem)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = 'run') -> 'RunConfig':
        root = _Section(data, '')
        name = str(root.raw('name', name))

        consts = root.section('constants')
        overrides = {}
        gamma_e = consts.number('gamma_e_ghz_per_t', None, GHZ)
        if gamma_e is not None:
            overrides['gamma_e'] = gamma_e
        for key, attr in (('spin_per_ion', 'spin_per_ion'), ('lambda_ex_m2', 'lambda_ex')):
            value = consts.number(key, None)
            if value is not None:
                overrides[attr] = value
        consts.finish()
        constants = DEFAULT_CONSTANTS.replace(**overrides)
        if constants.violations():
            raise ConfigError('constants', '; '.join(constants.violations()))

        cav = root.section('cavity', required=True)
        cavity = CavityMode(
            label=str(cav.raw('label', 'cavity')),
            omega_c=cav.number('omega_c_ghz', scale=GHZ),
            kappa_in=cav.number('kappa_in_mhz', scale=MHZ),
            kappa_out=cav.number('kappa_out_mhz', scale=MHZ),
            kappa_int=cav.number('kappa_int_mhz', scale=MHZ),
        )
        cav.finish()

        magnons = []
        entries = root.raw('magnons', [])
        if not isinstance(entries, list):
            raise ConfigError('magnons', 'expected a list')
        for k, entry in enumerate(entries):
            sec = _Section(entry, f'magnons[{k}]')
            magnons.append(MagnonMode(
                label=str(sec.raw('label')),
                g_tilde=sec.number('g_tilde_mhz', scale=MHZ),
                gamma_m=sec.number('gamma_mhz', scale=MHZ),
                dispersion_slope=sec.number('dispersion_slope_ghz_per_t', constants.gamma_e, GHZ),
                dispersion_offset=sec.number('dispersion_offset_t', 0.0),
                total_spin=sec.number('total_spin', None),
            ))
            sec.finish()
        system = HybridSystem(cavity=cavity, magnons=tuple(magnons))

        grid = None
        if 'grid' in root.data:
            g = root.section('grid')
            grid = SweepGrid.linspace(
                g.number('field_min_t'), g.number('field_max_t'), g.integer('field_points'),
                g.number('freq_min_ghz', scale=GHZ), g.number('freq_max_ghz', scale=GHZ),
                g.integer('freq_points'),
            )
            g.finish()
            if grid.violations():
                raise ConfigError('grid', '; '.join(grid.violations()))
        problems = validate_system(system, None if grid is None else grid.field_values)
        if problems:
            raise ConfigError('system', '; '.join(problems))

        fs = root.section('fit')
        free = fs.raw('free_parameters', None)
        bounds = fs.raw('bounds_si', {}) or {}
        if not isinstance(bounds, dict) or any(
                not isinstance(v, (list, tuple)) or len(v) != 2 for v in bounds.values()):
            raise ConfigError('fit.bounds_si', 'expected a mapping of name: [lower, upper]')
        fit = FitSettings(
            free_parameters=None if free is None else tuple(str(x) for x in free),
            bounds_si={str(k): (float(v[0]), float(v[1])) for k, v in bounds.items()},
            labels=tuple(str(x) for x in fs.raw('labels', ['FMR', 'MS'])),
            max_iterations=fs.integer('max_iterations', 200),
            tolerance=fs.number('tolerance', 1e-8),
            restarts=fs.integer('restarts', 0),
            port_ratio=fs.number('port_ratio', None),
            prominence_db=fs.number('prominence_db', 3.0),
        )
        fs.finish()

        ms = root.section('material')
        power = ms.raw('input_power_dbm', [])
        power = power if isinstance(power, list) else [power]
        try:
            power = tuple(float(p) for p in power)
        except (TypeError, ValueError):
            raise ConfigError('material.input_power_dbm', f'expected numbers, got {power!r}') from None
        material = MaterialSettings(
            relative_permittivity=ms.number('relative_permittivity', None),
            k_ms_rad_per_m=ms.number('k_ms_rad_per_m', None),
            regime_threshold=ms.number('regime_threshold', 100.0),
            low_excitation_threshold=ms.number('low_excitation_threshold', 1e-3),
            eta=ms.number('eta', 0.684),
            mode_volume_m3=ms.number('mode_volume_m3', 2.7e-6),
            temperature_k=ms.number('temperature_k', 300.0),
            input_power_dbm=power,
            line_gain_db=ms.number('line_gain_db', 0.0),
            mean_magnon_number=ms.number('mean_magnon_number', None),
        )
        ms.finish()

        sw = root.section('sweep')
        multipliers = sw.raw('multipliers', [1.0, 10.0, 100.0])
        sweep = SweepSettings(
            magnon=str(sw.raw('magnon', 'MS')),
            multipliers=tuple(float(x) for x in multipliers),
        )
        sw.finish()

        out = root.section('output')
        output_dir = out.raw('directory', None)
        write_complex = bool(out.raw('write_complex', True))
        n_jobs = out.integer('n_jobs', 1)
        out.finish()

        seed = root.integer('seed', 0)
        noise_db = root.number('noise_db', 0.0)
        root.finish()
        return cls(
            name=name, system=system, grid=grid, constants=constants, fit=fit,
            material=material, sweep=sweep, seed=seed, noise_db=noise_db, n_jobs=n_jobs,
            output_dir=None if output_dir is None else str(output_dir),
            write_complex=write_complex,
        )

    def fit_config(self, system: Optional[HybridSystem] = None) -> FitConfig:
        """FitConfig with bounds placed around `system` (default: the configured one)."""
        return FitConfig.default_for(
            system or self.system,
            self.fit.free_parameters,
            bounds=dict(self.fit.bounds_si),
            max_iterations=self.fit.max_iterations,
            tolerance=self.fit.tolerance,
            seed=self.seed,
            restarts=self.fit.restarts,
            port_ratio=self.fit.port_ratio,
        )

    def with_seed(self, seed: Optional[int]) -> 'RunConfig':
        return self if seed is None else replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        cav = self.system.cavity
        out: Dict[str, Any] = {'name': self.name, 'seed': self.seed, 'noise_db': self.noise_db}
        defaults = DEFAULT_CONSTANTS
        consts = {}
        if self.constants.gamma_e != defaults.gamma_e:
            consts['gamma_e_ghz_per_t'] = self.constants.gamma_e / GHZ
        if self.constants.spin_per_ion != defaults.spin_per_ion:
            consts['spin_per_ion'] = self.constants.spin_per_ion
        if self.constants.lambda_ex != defaults.lambda_ex:
            consts['lambda_ex_m2'] = self.constants.lambda_ex
        if consts:
            out['constants'] = consts
        out['cavity'] = dict(
            label=cav.label,
            omega_c_ghz=cav.omega_c / GHZ,
            kappa_in_mhz=cav.kappa_in / MHZ,
            kappa_out_mhz=cav.kappa_out / MHZ,
            kappa_int_mhz=cav.kappa_int / MHZ,
        )
        out['magnons'] = []
        for m in self.system.magnons:
            entry = dict(
                label=m.label,
                g_tilde_mhz=m.g_tilde / MHZ,
                gamma_mhz=m.gamma_m / MHZ,
                dispersion_slope_ghz_per_t=m.dispersion_slope / GHZ,
                dispersion_offset_t=m.dispersion_offset,
            )
            if m.total_spin is not None:
                entry['total_spin'] = m.total_spin
            out['magnons'].append(entry)
        if self.grid is not None:
            fv, qv = self.grid.field_values, self.grid.freq_values
            out['grid'] = dict(
                field_min_t=float(fv[0]), field_max_t=float(fv[-1]), field_points=int(fv.size),
                freq_min_ghz=float(qv[0]) / GHZ, freq_max_ghz=float(qv[-1]) / GHZ,
                freq_points=int(qv.size),
            )
        fit = dict(
            labels=list(self.fit.labels),
            max_iterations=self.fit.max_iterations,
            tolerance=self.fit.tolerance,
            restarts=self.fit.restarts,
            prominence_db=self.fit.prominence_db,
        )
        if self.fit.free_parameters is not None:
            fit['free_parameters'] = list(self.fit.free_parameters)
        if self.fit.bounds_si:
            fit['bounds_si'] = {k: list(v) for k, v in self.fit.bounds_si.items()}
        if self.fit.port_ratio is not None:
            fit['port_ratio'] = self.fit.port_ratio
        out['fit'] = fit
        material = {k: v for k, v in vars(self.material).items() if v is not None}
        material['input_power_dbm'] = list(self.material.input_power_dbm)
        out['material'] = material
        out['sweep'] = dict(magnon=self.sweep.magnon, multipliers=list(self.sweep.multipliers))
        output = dict(write_complex=self.write_complex, n_jobs=self.n_jobs)
        if self.output_dir is not None:
            output['directory'] = self.output_dir
        out['output'] = output
        return out

    def dump(self, stream: Optional[IO] = None) -> Optional[str]:
        return yaml.safe_dump(self.to_dict(), stream, sort_keys=False)
