from typing import NamedTuple, Optional, Union

import numpy as np
from anndata import AnnData
from scipy.optimize import least_squares
from scanpy import logging as logg

from .._errors import NoResonanceError
from .._types import CavityMode
from .._utils import spectrum_db, spectrum_grid
from ..tools._peaks import trace_peaks


class BareCavityFit(NamedTuple):
    cavity: CavityMode
    residual_rms: float
    kappa_product: float
    ports_resolved: bool


def lorentzian_db(freqs, omega_c, kappa_tot, amplitude):
    """|S21| in dB of an empty cavity with numerator `amplitude` = 2 sqrt(κ_in κ_out)."""
    return 20 * np.log10(amplitude) - 10 * np.log10((freqs - omega_c) ** 2 + kappa_tot ** 2)


def _as_trace(trace, freqs, field_index):
    if isinstance(trace, AnnData):
        return (np.array(spectrum_grid(trace).freq_values),
                spectrum_db(trace)[field_index].copy())
    if freqs is None:
        raise ValueError('`freqs` is required when `trace` is an array')
    return np.asarray(freqs, dtype=float), np.asarray(trace, dtype=float)


def fit_bare_cavity(
    trace: Union[AnnData, np.ndarray],
    freqs: Optional[np.ndarray] = None,
    port_ratio: Optional[float] = None,
    field_index: int = 0,
    label: str = 'cavity',
    prominence_db: float = 3.0,
) -> BareCavityFit:
    """\
    Fit a single Lorentzian resonance (transmission with no magnon) to a trace.

    Parameters
    ----------
    trace
        A spectrum map, whose row `field_index` is used, or a dB trace.
    freqs
        Probe frequencies in Hz, required when `trace` is an array.
    port_ratio
        κ_out / κ_in. The transmission only fixes the product κ_in κ_out;
        without the ratio both ports are set to its square root and
        `ports_resolved` is False.
    field_index
        Row of the map to fit.
    label
        Label of the returned CavityMode.
    prominence_db
        Minimum prominence for the resonance to be accepted, dB.

    Returns
    -------
    BareCavityFit with the fitted CavityMode, the dB residual RMS, the
    product κ_in κ_out (Hz²) and whether the ports were resolved.
    """
    freqs, db = _as_trace(trace, freqs, field_index)
    if freqs.size < 7:
        raise ValueError(f'A bare-cavity trace needs at least 7 points (got {freqs.size})')

    peaks = trace_peaks(freqs, db, prominence_db=prominence_db)
    if len(peaks) == 0:
        raise NoResonanceError(
            f'No resonance with prominence above {prominence_db} dB in the trace'
        )
    best = peaks.loc[peaks['prominence_db'].idxmax()]
    f0 = float(best['freq_Hz'])
    kappa0 = max(float(best['width_Hz']) / 2, 2 * float(np.min(np.diff(freqs))))
    amp0_db = float(best['s21_db']) + 20 * np.log10(kappa0)

    # scaled unknowns: detuning and width in units of the guessed width
    def residuals(u):
        return lorentzian_db(freqs, f0 + u[0] * kappa0, u[1] * kappa0,
                             10 ** ((amp0_db + u[2]) / 20)) - db

    result = least_squares(
        residuals,
        x0=np.array([0.0, 1.0, 0.0]),
        bounds=([-np.inf, 1e-6, -np.inf], [np.inf, np.inf, np.inf]),
        method='trf',
        xtol=1e-14, ftol=1e-14, gtol=1e-14,
        max_nfev=500,
    )
    omega_c = f0 + result.x[0] * kappa0
    kappa_tot = result.x[1] * kappa0
    amplitude = 10 ** ((amp0_db + result.x[2]) / 20)
    rms = float(np.sqrt(np.mean(result.fun ** 2)))

    product = (amplitude / 2) ** 2
    if port_ratio is None:
        kappa_in = kappa_out = np.sqrt(product)
    else:
        kappa_in = np.sqrt(product / port_ratio)
        kappa_out = port_ratio * kappa_in
    kappa_int = kappa_tot - kappa_in - kappa_out
    if kappa_int < 0:
        logg.warning(
            f'Port rates exceed the fitted linewidth by {-kappa_int:.3g} Hz; '
            'intrinsic loss set to 0'
        )
        kappa_int = 0.0

    cavity = CavityMode(
        label=label,
        omega_c=float(omega_c),
        kappa_in=float(kappa_in),
        kappa_out=float(kappa_out),
        kappa_int=float(kappa_int),
    )
    logg.debug(f'bare cavity {label}: omega_c={omega_c:.9g} Hz, kappa_tot={kappa_tot:.6g} Hz')
    return BareCavityFit(
        cavity=cavity,
        residual_rms=rms,
        kappa_product=float(product),
        ports_resolved=port_ratio is not None,
    )
