from dataclasses import dataclass
from typing import Optional, Sequence, List

import numpy as np
from anndata import AnnData
from joblib import delayed, Parallel, parallel_config
from scanpy import logging as logg

from .._errors import SingularModelError
from .._types import HybridSystem, MagnonMode, SweepGrid, check_system
from .._utils import make_spectrum, to_db, resolve_backend, chunk_rows


@dataclass(frozen=True)
class ComplexResponse:
    value: complex

    @property
    def magnitude_db(self) -> float:
        return float(to_db(self.value))


def self_energy(
    magnons: Sequence[MagnonMode],
    probe_freq,
    field,
):
    """\
    Complex frequency shift imposed by the magnon modes on the cavity.

    Sum over modes of g̃² / (i(ω - ω_m(B)) - γ), all in Hz. `probe_freq` and
    `field` broadcast against each other.
    """
    probe_freq = np.asarray(probe_freq, dtype=float)
    field = np.asarray(field, dtype=float)
    sigma = np.zeros(np.broadcast(probe_freq, field).shape, dtype=complex)
    for m in magnons:
        if not m.gamma_m > 0:
            raise ValueError(f'gamma_m of {m.label!r} must be > 0')
        sigma = sigma + m.g_tilde ** 2 / (1j * (probe_freq - m.frequency(field)) - m.gamma_m)
    return sigma[()] if sigma.ndim == 0 else sigma


def _s21(system: HybridSystem, probe_freq, field):
    cav = system.cavity
    kappa_tot = cav.kappa_tot
    if not kappa_tot > 0:
        raise SingularModelError(
            'kappa_tot is zero, the transmission of a lossless cavity is singular'
        )
    numerator = 2 * np.sqrt(cav.kappa_in * cav.kappa_out)
    denominator = (1j * (np.asarray(probe_freq, dtype=float) - cav.omega_c)
                   - kappa_tot + self_energy(system.magnons, probe_freq, field))
    return numerator / denominator


def s21(system: HybridSystem, probe_freq: float, field: float) -> ComplexResponse:
    """\
    Input-output transmission of the hybrid system at one probe frequency

        S21 = 2 sqrt(κ_in κ_out) / (i(ω - ω_c) - κ_tot + Σ(ω))

    Parameters
    ----------
    system
        The hybrid system.
    probe_freq
        Probe frequency, Hz.
    field
        Static field, T.

    Returns
    -------
    ComplexResponse holding the complex value and its dB magnitude.
    """
    return ComplexResponse(complex(_s21(system, float(probe_freq), float(field))))


def system_metadata(system: HybridSystem) -> dict:
    meta = {'cavity': system.cavity.label}
    meta.update({k: float(v) for k, v in system.parameters().items()})
    return meta


def _evaluate_rows(system, fields, freqs):
    where = (f'at field={float(fields[0])!r}..{float(fields[-1])!r} T, '
             f'freq={float(freqs[0])!r}..{float(freqs[-1])!r} Hz')
    try:
        return _s21(system, freqs[None, :], fields[:, None])
    except SingularModelError as e:
        raise SingularModelError(f'{where}: {e}') from e
    except FloatingPointError as e:
        raise ValueError(f'{where}: {e}') from e


def spectrum_map(
    system: HybridSystem,
    grid: SweepGrid,
    metadata: Optional[dict] = None,
    n_jobs: int = 1,
    dispatch_backend: Optional[str] = 'threads',
) -> AnnData:
    """\
    Transmission over a (field, frequency) grid.

    Parameters
    ----------
    system
        A valid HybridSystem.
    grid
        Field and frequency axes.
    metadata
        Extra entries stored with the system parameters in
        `.uns['garnet']['metadata']`.
    n_jobs
        Number of parallel workers over blocks of field rows.
    dispatch_backend
        Either 'threads' or 'processes'.

    Returns
    -------
    An AnnData with `X` the dB magnitude (rows are fields) and the complex
    value in `layers['s21_re']` and `layers['s21_im']`.
    """
    grid.validate()
    check_system(system, grid.field_values)
    fields = np.array(grid.field_values)
    freqs = np.array(grid.freq_values)

    with np.errstate(over='raise', invalid='raise'):
        if n_jobs == 1:
            values = _evaluate_rows(system, fields, freqs)
        else:
            blocks = chunk_rows(fields.size, 4 * (n_jobs if n_jobs > 0 else 8))
            with parallel_config(backend=resolve_backend(dispatch_backend), n_jobs=n_jobs):
                parts = Parallel()(
                    delayed(_evaluate_rows)(system, fields[b], freqs) for b in blocks
                )
            values = np.vstack(parts)

    meta = system_metadata(system)
    meta.update(metadata or {})
    return make_spectrum(grid, s21=values, metadata=meta)


def damping_sweep(
    system: HybridSystem,
    magnon_label: str,
    multipliers: Sequence[float],
    grid: SweepGrid,
    n_jobs: int = 1,
    dispatch_backend: Optional[str] = 'threads',
) -> List[AnnData]:
    """\
    Spectrum maps with the damping of one magnon mode scaled.

    Parameters
    ----------
    system
        The reference system.
    magnon_label
        Label of the magnon whose `gamma_m` is multiplied.
    multipliers
        Positive scale factors, one map each.
    grid
        Field and frequency axes.
    n_jobs
        Number of maps computed in parallel.
    dispatch_backend
        Either 'threads' or 'processes'.

    Returns
    -------
    One spectrum map per multiplier, in the order given.
    """
    reference = system.magnon(magnon_label)
    multipliers = [float(x) for x in multipliers]
    if any(not x > 0 for x in multipliers):
        raise ValueError(f'multipliers must be positive (got {multipliers})')

    start = logg.info(f'sweeping the damping of {magnon_label!r} over {len(multipliers)} values')
    systems = [
        system.replace_magnon(magnon_label, gamma_m=reference.gamma_m * x)
        for x in multipliers
    ]
    extra = [{'damping_label': magnon_label, 'damping_multiplier': x} for x in multipliers]
    with parallel_config(backend=resolve_backend(dispatch_backend), n_jobs=n_jobs):
        maps = Parallel()(
            delayed(spectrum_map)(s, grid, metadata=e) for s, e in zip(systems, extra)
        )
    logg.info('    finished', time=start)
    return list(maps)
