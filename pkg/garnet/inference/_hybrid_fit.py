import threading
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence, Tuple, Dict, Mapping, Union, List

import numpy as np
from anndata import AnnData
from joblib import delayed, Parallel, parallel_config
from scipy.optimize import least_squares
from scanpy import logging as logg

from .._errors import DegenerateParameterError
from .._types import HybridSystem, check_system
from .._utils import spectrum_db, spectrum_grid, spectrum_metadata, to_db, resolve_backend
from ..tools._physics import cooperativity
from ..tools._transmission import _s21
from ._initial_guess import InitialGuess

_RELATIVE_STEP = 1e-6
_SINGULAR_RATIO = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """\
    Settings of a hybrid-system fit.

    Parameters are named as in `HybridSystem.parameters()` (magnon entries
    prefixed by the label, e.g. `'FMR.g_tilde'`) plus `'db_offset'`.

    Parameters
    ----------
    free_parameters
        Names of the parameters varied by the fit; all others stay at the guess.
    bounds
        `(lower, upper)` for every free parameter, in the parameter's unit.
    max_iterations
        Cap on the number of model evaluations of the optimizer.
    tolerance
        Relative tolerance on the cost, the step and the gradient.
    seed
        Seed of the jittered restarts.
    restarts
        Number of extra starts drawn uniformly within `bounds` around the
        guess; the best converged result is kept.
    port_ratio
        κ_out / κ_in held fixed when one port rate is free; taken from the
        guess when not given.
    """
    free_parameters: Tuple[str, ...]
    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    max_iterations: int = 200
    tolerance: float = 1e-8
    seed: int = 0
    restarts: int = 0
    port_ratio: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'free_parameters', tuple(self.free_parameters))
        object.__setattr__(self, 'bounds', {k: (float(lo), float(hi))
                                            for k, (lo, hi) in dict(self.bounds).items()})

    @classmethod
    def default_for(
        cls,
        system: HybridSystem,
        free_parameters: Optional[Sequence[str]] = None,
        **kwargs,
    ) -> 'FitConfig':
        """\
        Config with bounds placed around `system`.

        By default ω_c, κ_int, db_offset and, for every magnon, g̃, γ and the
        dispersion offset are free; port rates and slopes are held.
        """
        if free_parameters is None:
            free_parameters = ['omega_c', 'kappa_int']
            for m in system.magnons:
                free_parameters += [f'{m.label}.g_tilde', f'{m.label}.gamma_m',
                                    f'{m.label}.dispersion_offset']
            free_parameters.append('db_offset')
        kappa = system.cavity.kappa_tot
        params = system.parameters()
        bounds = {}
        for name in free_parameters:
            if name == 'db_offset':
                bounds[name] = (-40.0, 40.0)
                continue
            if name not in params:
                raise ValueError(f'Unknown parameter {name!r}, available: {sorted(params)}')
            value = params[name]
            attr = name.split('.', 1)[-1]
            if attr == 'omega_c':
                bounds[name] = (value - 10 * kappa, value + 10 * kappa)
            elif attr in ('kappa_in', 'kappa_out', 'gamma_m'):
                bounds[name] = (1e-3 * kappa, max(10 * kappa, 3 * value))
            elif attr in ('kappa_int', 'g_tilde'):
                bounds[name] = (0.0, max(10 * kappa, 3 * value))
            elif attr == 'dispersion_slope':
                bounds[name] = (0.5 * value, 2 * value)
            else:
                slope = params[name.replace('dispersion_offset', 'dispersion_slope')]
                bounds[name] = (value - 10 * kappa / slope, value + 10 * kappa / slope)
        bounds.update(kwargs.pop('bounds', {}))
        return cls(free_parameters=tuple(free_parameters), bounds=bounds, **kwargs)

    def violations(self, system: Optional[HybridSystem] = None) -> List[str]:
        out = []
        if not self.free_parameters:
            out.append('free_parameters must not be empty')
        if len(set(self.free_parameters)) != len(self.free_parameters):
            out.append('free_parameters must not repeat')
        if 'kappa_in' in self.free_parameters and 'kappa_out' in self.free_parameters:
            out.append('kappa_in and kappa_out cannot both be free, only their product is identifiable')
        known = None if system is None else set(system.parameters()) | {'db_offset'}
        for name in self.free_parameters:
            if known is not None and name not in known:
                out.append(f'{name!r} is not a parameter of the system')
            if name not in self.bounds:
                out.append(f'{name!r} has no bounds')
                continue
            lo, hi = self.bounds[name]
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                out.append(f'bounds of {name!r} must be finite with lower < upper (got {(lo, hi)})')
        if not self.tolerance > 0:
            out.append(f'tolerance must be > 0 (got {self.tolerance!r})')
        if not self.max_iterations >= 1:
            out.append(f'max_iterations must be >= 1 (got {self.max_iterations!r})')
        if not self.restarts >= 0:
            out.append(f'restarts must be >= 0 (got {self.restarts!r})')
        if self.port_ratio is not None and not self.port_ratio > 0:
            out.append(f'port_ratio must be > 0 (got {self.port_ratio!r})')
        return out

    def validate(self, system: Optional[HybridSystem] = None) -> 'FitConfig':
        problems = self.violations(system)
        if problems:
            raise ValueError('invalid fit config: ' + '; '.join(problems))
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out['free_parameters'] = list(self.free_parameters)
        out['bounds'] = {k: list(v) for k, v in self.bounds.items()}
        return out


@dataclass(frozen=True)
class FitReport:
    fitted: HybridSystem
    db_offset: float
    residual_rms: float
    iterations: int
    converged: bool
    uncertainties: Optional[Dict[str, float]] = None
    provenance: Dict = field(default_factory=dict)

    def parameters(self) -> Dict[str, float]:
        params = self.fitted.parameters()
        params['db_offset'] = self.db_offset
        return params

    def cooperativities(self) -> Dict[str, float]:
        kappa = self.fitted.cavity.kappa_tot
        return {m.label: cooperativity(m.g_tilde, kappa, m.gamma_m) for m in self.fitted.magnons}

    def to_dict(self) -> dict:
        return dict(
            parameters=self.parameters(),
            cooperativity=self.cooperativities(),
            residual_rms=self.residual_rms,
            iterations=self.iterations,
            converged=self.converged,
            uncertainties=self.uncertainties,
            provenance=self.provenance,
        )


def _model_db(system: HybridSystem, fields: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    return to_db(_s21(system, freqs[None, :], fields[:, None]))


def residual_norm(adata: AnnData, system: HybridSystem, db_offset: float = 0.0) -> float:
    """\
    Root-mean-square dB difference between `system` and a spectrum map.

    Parameters
    ----------
    adata
        A spectrum map.
    system
        The model.
    db_offset
        Constant gain added to the model, dB.

    Returns
    -------
    The RMS over the whole grid, dB.
    """
    grid = spectrum_grid(adata)
    model = _model_db(system, np.array(grid.field_values), np.array(grid.freq_values))
    return float(np.sqrt(np.mean((model + db_offset - spectrum_db(adata)) ** 2)))


class _Objective:
    """Residual vector over scaled free parameters u = 1 + (p - p0) / scale."""

    def __init__(self, adata, guess, db_offset, config):
        grid = spectrum_grid(adata)
        self.fields = np.array(grid.field_values)
        self.freqs = np.array(grid.freq_values)
        self.data = spectrum_db(adata).ravel()
        self.guess = guess
        self.names = list(config.free_parameters)
        params = guess.parameters()
        params['db_offset'] = db_offset
        self.p0 = np.array([params[n] for n in self.names])
        self.db_offset = db_offset
        cav = guess.cavity
        self.port_ratio = config.port_ratio if config.port_ratio is not None \
            else cav.kappa_out / cav.kappa_in
        self.scale = np.array([self._scale(n, params) for n in self.names])
        lo = np.array([config.bounds[n][0] for n in self.names])
        hi = np.array([config.bounds[n][1] for n in self.names])
        self.lower = 1 + (lo - self.p0) / self.scale
        self.upper = 1 + (hi - self.p0) / self.scale
        self.n_evaluations = 0
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state['_lock']
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def _scale(self, name, params):
        kappa = self.guess.cavity.kappa_tot
        attr = name.split('.', 1)[-1]
        if name == 'db_offset':
            return 1.0
        if attr == 'dispersion_offset':
            return kappa / params[name.replace('dispersion_offset', 'dispersion_slope')]
        if attr == 'dispersion_slope':
            return params[name] * kappa / self.guess.cavity.omega_c
        return kappa

    def values(self, u) -> Dict[str, float]:
        return dict(zip(self.names, self.p0 + (np.asarray(u) - 1) * self.scale))

    def system(self, u) -> Tuple[HybridSystem, float]:
        values = self.values(u)
        db_offset = values.pop('db_offset', self.db_offset)
        if 'kappa_in' in values:
            values['kappa_out'] = self.port_ratio * values['kappa_in']
        elif 'kappa_out' in values:
            values['kappa_in'] = values['kappa_out'] / self.port_ratio
        return self.guess.with_parameters(values), db_offset

    def __call__(self, u):
        system, db_offset = self.system(u)
        r = _model_db(system, self.fields, self.freqs).ravel() + db_offset - self.data
        with self._lock:
            self.n_evaluations += 1
            n = self.n_evaluations
        logg.debug(f'evaluation {n}: rms={np.sqrt(np.mean(r ** 2)):.6g} dB')
        return r

    def jacobian(self, u, n_jobs=1, dispatch_backend='threads'):
        # forward differences in the scaled variables, stepping inwards at an upper bound
        u = np.asarray(u, dtype=float)
        steps = _RELATIVE_STEP * np.maximum(1.0, np.abs(u))
        steps = np.where(u + steps > self.upper, -steps, steps)
        points = [u + h * e for h, e in zip(steps, np.eye(u.size))]
        f0 = self(u)
        if n_jobs == 1:
            columns = [self(p) for p in points]
        else:
            with parallel_config(backend=resolve_backend(dispatch_backend), n_jobs=n_jobs):
                columns = Parallel()(delayed(self)(p) for p in points)
        return np.column_stack([(f - f0) / h for f, h in zip(columns, steps)])

    def check_rank(self, J):
        _, s, vt = np.linalg.svd(J, full_matrices=False)
        if s[0] == 0 or s[-1] / s[0] < _SINGULAR_RATIO:
            raise DegenerateParameterError(dict(zip(self.names, vt[-1])))
        return s, vt


def _solve(objective, u0, config, n_jobs, dispatch_backend):
    return least_squares(
        objective,
        x0=u0,
        jac=lambda u: objective.jacobian(u, n_jobs, dispatch_backend),
        bounds=(objective.lower, objective.upper),
        method='trf',
        ftol=config.tolerance,
        xtol=config.tolerance,
        gtol=config.tolerance,
        max_nfev=config.max_iterations,
    )


def fit_hybrid(
    adata: AnnData,
    config: FitConfig,
    guess: Union[HybridSystem, InitialGuess],
    n_jobs: int = 1,
    dispatch_backend: Optional[str] = 'threads',
) -> FitReport:
    """\
    Least-squares fit of the transmission model to a dB spectrum map.

    Minimizes the sum over the grid of (model_dB + db_offset - data_dB)²
    with a trust-region reflective optimizer. Free parameters are scaled by
    κ_tot (rates), κ_tot/slope (dispersion offsets) or 1 (dB) and the
    Jacobian is taken by forward differences with relative step 1e-6.

    Parameters
    ----------
    adata
        A spectrum map.
    config
        Free parameters, bounds and stopping criteria.
    guess
        Starting point: a HybridSystem or the result of `initial_guess`.
    n_jobs
        Number of parallel evaluations per Jacobian.
    dispatch_backend
        Either 'threads' or 'processes'.

    Returns
    -------
    FitReport. When the iteration cap is reached before the tolerance is
    met, the best parameters found are returned with `converged=False` and
    no uncertainties.

    Raises
    ------
    DegenerateParameterError
        When the Jacobian is singular, at the start or at the optimum.
    """
    db_offset = 0.0
    if isinstance(guess, InitialGuess):
        db_offset = guess.db_offset
        guess = guess.system
    check_system(guess)
    config.validate(guess)
    objective = _Objective(adata, guess, db_offset, config)
    if np.any(objective.lower > 1) or np.any(objective.upper < 1):
        outside = [n for n, lo, hi in zip(objective.names, objective.lower, objective.upper)
                   if lo > 1 or hi < 1]
        raise ValueError(f'guess lies outside the bounds of {outside}')

    start = logg.info(f'fitting {len(objective.names)} parameters to a '
                      f'{objective.fields.size}x{objective.freqs.size} map')
    u0 = np.ones(len(objective.names))
    objective.check_rank(objective.jacobian(u0, n_jobs, dispatch_backend))

    starts = [u0]
    if config.restarts:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.restarts):
            starts.append(rng.uniform(objective.lower, objective.upper))
    best = None
    for u in starts:
        result = _solve(objective, u, config, n_jobs, dispatch_backend)
        if best is None or (result.status > 0, -result.cost) > (best.status > 0, -best.cost):
            best = result

    converged = bool(best.status > 0)
    fitted, fitted_offset = objective.system(best.x)
    m, n = best.fun.size, best.x.size
    rms = float(np.sqrt(np.mean(best.fun ** 2)))

    uncertainties = None
    if converged:
        s, vt = objective.check_rank(best.jac)
        sigma2 = 2 * best.cost / max(m - n, 1)
        cov = (vt.T / s ** 2) @ vt * sigma2
        uncertainties = dict(zip(objective.names, np.sqrt(np.diag(cov)) * objective.scale))
        uncertainties = {k: float(v) for k, v in uncertainties.items()}
    else:
        logg.warning(f'fit did not converge within {config.max_iterations} evaluations: '
                     f'{best.message}')

    report = FitReport(
        fitted=fitted,
        db_offset=float(fitted_offset),
        residual_rms=rms,
        iterations=int(best.njev),
        converged=converged,
        uncertainties=uncertainties,
        provenance=dict(
            config=config.to_dict(),
            metadata=dict(spectrum_metadata(adata)),
            guess={k: float(v) for k, v in guess.parameters().items()},
        ),
    )
    logg.info('    finished', time=start,
              deep=f'residual rms {rms:.4g} dB after {report.iterations} iterations')
    return report


def select_model(reports: Sequence[FitReport], factor: float = 3.0) -> FitReport:
    """\
    Choose between fits with different numbers of magnon modes.

    The smaller model is kept unless the richer one lowers the residual RMS
    by more than `factor` times its own residual RMS, the per-point noise
    estimate.
    """
    if not reports:
        raise ValueError('No fit reports to choose from')
    ordered = sorted(reports, key=lambda r: (len(r.fitted.magnons), r.residual_rms))
    chosen = ordered[0]
    for report in ordered[1:]:
        if len(report.fitted.magnons) == len(chosen.fitted.magnons):
            continue
        if chosen.residual_rms - report.residual_rms > factor * report.residual_rms:
            chosen = report
    return chosen
