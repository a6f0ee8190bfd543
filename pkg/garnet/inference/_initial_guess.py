from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, List

import numpy as np
from anndata import AnnData
from scipy.optimize import least_squares
from scipy.signal import find_peaks
from scanpy import logging as logg

from .._constants import PhysicalConstants, DEFAULT_CONSTANTS
from .._errors import NoResonanceError
from .._types import CavityMode, MagnonMode, HybridSystem
from .._utils import spectrum_db, spectrum_grid
from ..tools._peaks import trace_peaks
from ._bare_cavity import fit_bare_cavity


@dataclass(frozen=True)
class InitialGuess:
    """\
    Starting point for `fit_hybrid`.

    `absent` lists the requested magnon labels left out of `system`,
    `seeded` those placed without a resolved avoided crossing (from the
    cavity linewidth broadening or from a reference system); `warnings`
    repeats every warning logged while building the guess.
    """
    system: HybridSystem
    db_offset: float = 0.0
    warnings: Tuple[str, ...] = ()
    absent: Tuple[str, ...] = ()
    seeded: Tuple[str, ...] = ()

    @property
    def underdetermined(self) -> bool:
        return len(self.absent) > 0


def _endpoint_cavity(freqs, trace, port_ratio, prominence_db):
    peaks = trace_peaks(freqs, trace, prominence_db=prominence_db)
    if len(peaks) == 0:
        return None
    top = peaks.loc[peaks['s21_db'].idxmax()]
    half = max(3 * float(top['width_Hz']), 10 * float(freqs[1] - freqs[0]))
    window = np.abs(freqs - float(top['freq_Hz'])) <= half
    if window.sum() < 7:
        return None
    try:
        return fit_bare_cavity(trace[window], freqs=freqs[window], port_ratio=port_ratio,
                               prominence_db=prominence_db).cavity
    except NoResonanceError:
        return None


def _mean_cavity(cavities: Sequence[CavityMode]) -> CavityMode:
    return CavityMode(
        label='cavity',
        omega_c=float(np.mean([c.omega_c for c in cavities])),
        kappa_in=float(np.mean([c.kappa_in for c in cavities])),
        kappa_out=float(np.mean([c.kappa_out for c in cavities])),
        kappa_int=float(np.mean([c.kappa_int for c in cavities])),
    )


def _distance_to_cavity(freqs, db, omega_c, prominence_db):
    # per row, distance of the peak nearest the bare cavity frequency;
    # it is largest where a magnon crosses the cavity
    distance = np.zeros(db.shape[0])
    rows = []
    for i in range(db.shape[0]):
        peaks = trace_peaks(freqs, db[i], prominence_db=prominence_db)
        rows.append(peaks)
        if len(peaks):
            distance[i] = np.min(np.abs(peaks['freq_Hz'].values - omega_c))
    return distance, rows


def _straddling_pair(peaks, omega_c):
    below = peaks[peaks['freq_Hz'] < omega_c]
    above = peaks[peaks['freq_Hz'] >= omega_c]
    if len(below) == 0 or len(above) == 0:
        return None
    lo = below.loc[below['freq_Hz'].idxmax()]
    hi = above.loc[above['freq_Hz'].idxmin()]
    return lo, hi


def _regress_slope(rows, fields, omega_c, crossing_field, g_tilde, slope0):
    # magnon-like peaks: far from the cavity, close to the predicted line
    xs, ys = [], []
    for B, peaks in zip(fields, rows):
        if len(peaks) == 0:
            continue
        predicted = omega_c + slope0 * (B - crossing_field)
        f = peaks['freq_Hz'].values
        keep = (np.abs(f - predicted) < 2 * g_tilde) & (np.abs(f - omega_c) > 4 * g_tilde)
        xs.extend([B] * int(keep.sum()))
        ys.extend(f[keep])
    if len(set(xs)) < 3:
        return None
    slope, _ = np.polyfit(np.array(xs), np.array(ys), 1)
    if not 0.5 * slope0 <= slope <= 2 * slope0:
        return None
    return float(slope)


def _linewidth_excess(rows, omega_c, kappa_tot, usable):
    # half-width of the peak nearest the cavity beyond kappa_tot, per row
    excess = np.full(len(rows), np.nan)
    for i, peaks in enumerate(rows):
        if not usable[i] or len(peaks) == 0:
            continue
        j = int(np.argmin(np.abs(peaks['freq_Hz'].values - omega_c)))
        excess[i] = peaks['width_Hz'].values[j] / 2 - kappa_tot
    valid = np.isfinite(excess)
    if valid.sum() >= 5:
        excess[valid] -= np.median(excess[valid])
    return excess


def _lorentzian(fields, height, centre, half_width):
    return height / (1 + ((fields - centre) / half_width) ** 2)


def _broadening_line(fields, excess, kappa_tot):
    """\
    Lorentzian in field fitted to the strongest bump of the excess linewidth.

    Returns `(height, centre, half_width)` or None when no bump stands out
    of the row-to-row scatter.
    """
    valid = np.flatnonzero(np.isfinite(excess))
    if valid.size < 5:
        return None
    B, y = fields[valid], excess[valid]
    k = int(np.argmax(y))
    i = valid[k]
    # the maximum must have usable rows on both sides
    if i == 0 or i == excess.size - 1 or not np.isfinite(excess[[i - 1, i + 1]]).all():
        return None
    scatter = 1.4826 * np.median(np.abs(np.diff(y))) / np.sqrt(2)
    if y[k] <= max(0.25 * kappa_tot, 5 * scatter):
        return None
    above = y > y[k] / 2
    if above.sum() < 3:
        return None
    step = float(np.median(np.diff(B)))
    half_width = max(above.sum() * step / 2, step)
    try:
        res = least_squares(
            lambda p: _lorentzian(B, *p) - y,
            x0=[y[k], B[k], half_width],
            bounds=([0.0, B[0], step / 4], [np.inf, B[-1], B[-1] - B[0]]),
            x_scale=[y[k], half_width, half_width],
        )
    except ValueError:
        return None
    if not res.success:
        return None
    return tuple(float(v) for v in res.x)


def initial_guess(
    adata: AnnData,
    labels: Sequence[str] = ('FMR', 'MS'),
    port_ratio: Optional[float] = None,
    prominence_db: float = 3.0,
    fit_slope: bool = False,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    reference: Optional[HybridSystem] = None,
) -> InitialGuess:
    """\
    Seed a hybrid-system fit from the peak structure of a spectrum map.

    The bare cavity is fitted on the first and last field rows, where the
    magnon modes are furthest from it. Avoided crossings are located as the
    local maxima over field of the distance between the bare cavity
    frequency and the nearest transmission peak. At each crossing, half the
    splitting of the two straddling peaks gives the coupling, their power
    FWHM minus κ_tot the magnon damping, and the crossing field the
    dispersion offset.

    A mode too weakly coupled to split the cavity peak is found from the
    extra linewidth it lends the cavity instead: the excess half-width of
    the cavity peak versus field is a Lorentzian of height g̃²/γ and
    half-width γ/slope centred on the resonant field. Modes found neither
    way are copied from `reference` when it has them.

    Parameters
    ----------
    adata
        A spectrum map spanning at least one avoided crossing.
    labels
        Magnon labels, assigned to the crossings in order of increasing field.
    port_ratio
        κ_out / κ_in passed to the bare-cavity fit; 1 when not given.
    prominence_db
        Minimum peak prominence, dB.
    fit_slope
        Regress the dispersion slope from the magnon-like peaks instead of
        using the gyromagnetic ratio. Slopes outside half to twice the
        gyromagnetic ratio are rejected.
    constants
        Physical constants, for the default dispersion slope.
    reference
        System whose magnon modes stand in for labels the map does not
        resolve, typically the configured system.

    Returns
    -------
    InitialGuess holding the seeded HybridSystem (magnons in the order of
    `labels`, absent ones left out) and the warnings raised on the way.
    """
    start = logg.info('computing initial guess')
    grid = spectrum_grid(adata)
    fields = np.array(grid.field_values)
    freqs = np.array(grid.freq_values)
    db = spectrum_db(adata)
    ratio = 1.0 if port_ratio is None else port_ratio
    notes: List[str] = []

    ends = [_endpoint_cavity(freqs, db[i], ratio, prominence_db) for i in sorted({0, fields.size - 1})]
    ends = [c for c in ends if c is not None]
    if not ends:
        raise NoResonanceError('No cavity resonance found on the first or last field row')
    cavity = _mean_cavity(ends)
    omega_c, kappa_tot = cavity.omega_c, cavity.kappa_tot

    distance, rows = _distance_to_cavity(freqs, db, omega_c, prominence_db)
    step = float(np.min(np.diff(freqs))) if freqs.size > 1 else 0.0
    idx, props = find_peaks(distance, prominence=max(kappa_tot / 2, 2 * step))
    if idx.size > len(labels):
        strongest = np.argsort(props['prominences'])[::-1][:len(labels)]
        idx = np.sort(idx[strongest])
        notes.append(f'{len(props["prominences"])} avoided crossings found, '
                     f'kept the {len(labels)} most prominent')

    magnons = []
    slope0 = constants.gamma_e
    for label, i in zip(labels, idx):
        pair = _straddling_pair(rows[i], omega_c)
        if pair is None:
            notes.append(f'{label}: crossing at {fields[i]:.6g} T is not straddled by two peaks')
            continue
        lo, hi = pair
        g_tilde = (hi['freq_Hz'] - lo['freq_Hz']) / 2
        gamma_m = (lo['width_Hz'] + hi['width_Hz']) / 2 - kappa_tot
        if gamma_m <= 0.05 * kappa_tot:
            notes.append(f'{label}: linewidth at the crossing does not exceed kappa_tot, '
                         'damping set to 5% of kappa_tot')
            gamma_m = 0.05 * kappa_tot
        crossing_field = float(fields[i])
        if 0 < i < fields.size - 1:
            # parabolic vertex of the distance curve
            d0, d1, d2 = distance[i - 1:i + 2]
            denom = d0 - 2 * d1 + d2
            if denom < 0:
                crossing_field += 0.5 * (d0 - d2) / denom * (fields[i + 1] - fields[i])
        slope = slope0
        if fit_slope:
            fitted = _regress_slope(rows, fields, omega_c, crossing_field, g_tilde, slope0)
            if fitted is None:
                notes.append(f'{label}: dispersion slope not resolved, using gamma_e')
            else:
                slope = fitted
        magnons.append(MagnonMode(
            label=label,
            g_tilde=float(g_tilde),
            gamma_m=float(gamma_m),
            dispersion_slope=float(slope),
            dispersion_offset=float(crossing_field - omega_c / slope),
        ))

    found = {m.label for m in magnons}
    absent = [label for label in labels if label not in found]
    seeded: List[str] = []
    if absent:
        usable = np.ones(fields.size, dtype=bool)
        for m in magnons:
            detuning = np.abs(fields - m.resonant_field(omega_c)) * m.dispersion_slope
            usable &= detuning > 4 * (m.g_tilde + m.gamma_m)
        excess = _linewidth_excess(rows, omega_c, kappa_tot, usable)
        for label in list(absent):
            line = _broadening_line(fields, excess, kappa_tot)
            if line is None:
                break
            height, centre, half_width = line
            gamma_m = slope0 * half_width
            magnons.append(MagnonMode(
                label=label,
                g_tilde=float(np.sqrt(height * gamma_m)),
                gamma_m=float(gamma_m),
                dispersion_slope=slope0,
                dispersion_offset=float(centre - omega_c / slope0),
            ))
            notes.append(f'{label}: seeded from the cavity linewidth broadening at {centre:.6g} T')
            absent.remove(label)
            seeded.append(label)
            excess[np.abs(fields - centre) < 4 * half_width] = np.nan
    if absent and reference is not None:
        for label in list(absent):
            if label in reference.labels:
                magnons.append(reference.magnon(label))
                notes.append(f'{label}: not resolved in the map, seeded from the reference system')
                absent.remove(label)
                seeded.append(label)
    if absent:
        if not magnons:
            notes.append('no avoided crossing found, zero-coupling guess (bare cavity)')
        notes.append(f'under-determined guess, absent modes: {absent}')
    for note in notes:
        logg.warning(note)

    order = list(labels)
    magnons.sort(key=lambda m: order.index(m.label))
    system = HybridSystem(cavity=cavity, magnons=tuple(magnons))
    logg.info('    finished', time=start, deep=f'found {len(magnons)} of {len(labels)} magnon modes')
    return InitialGuess(system=system, warnings=tuple(notes), absent=tuple(absent), seeded=tuple(seeded))
