from typing import Optional

import numpy as np
import pandas as pd
from anndata import AnnData
from scipy.signal import find_peaks, peak_widths

from .._utils import spectrum_db, spectrum_grid

_PEAK_COLUMNS = ['field_index', 'field_T', 'freq_Hz', 's21_db', 'width_Hz', 'prominence_db']


def _refine_vertex(freqs, trace, j):
    # parabolic vertex through the peak sample and its neighbours
    if j == 0 or j == trace.size - 1:
        return freqs[j], trace[j]
    y0, y1, y2 = trace[j - 1:j + 2]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return freqs[j], trace[j]
    delta = 0.5 * (y0 - y2) / denom
    step = freqs[j + 1] - freqs[j] if delta > 0 else freqs[j] - freqs[j - 1]
    return freqs[j] + delta * step, y1 - 0.25 * (y0 - y2) * delta


def trace_peaks(freqs: np.ndarray, trace_db: np.ndarray, prominence_db: float = 3.0) -> pd.DataFrame:
    """\
    Local maxima of one dB trace.

    Widths are full widths at half maximum of the linear power |S21|²,
    i.e. twice the half-width of a Lorentzian line.
    """
    idx, props = find_peaks(trace_db, prominence=prominence_db)
    if idx.size == 0:
        return pd.DataFrame(columns=_PEAK_COLUMNS[2:])
    power = 10 ** (trace_db / 10)
    # half of the absolute peak power, searched over the whole trace
    bases = (power[idx], np.zeros(idx.size, dtype=np.intp), np.full(idx.size, power.size - 1, dtype=np.intp))
    _, _, left, right = peak_widths(power, idx, rel_height=0.5, prominence_data=bases)
    sample = np.arange(freqs.size)
    width_hz = np.interp(right, sample, freqs) - np.interp(left, sample, freqs)
    refined = [_refine_vertex(freqs, trace_db, j) for j in idx]
    return pd.DataFrame({
        'freq_Hz': [f for f, _ in refined],
        's21_db': [d for _, d in refined],
        'width_Hz': width_hz,
        'prominence_db': props['prominences'],
    })


def extract_peaks(
    adata: AnnData,
    prominence_db: float = 3.0,
    key_added: str = 'peaks',
    copy: bool = False,
) -> pd.DataFrame:
    """\
    Locate the transmission maxima of every field row of a spectrum map.

    Parameters
    ----------
    adata
        A spectrum map.
    prominence_db
        Minimum peak prominence, dB.
    key_added
        Key under `adata.uns['garnet']` where the table is stored.
    copy
        If True, leave `adata` untouched and only return the table.

    Returns
    -------
    A DataFrame with one row per peak: `field_index`, `field_T`, `freq_Hz`
    (refined by parabolic interpolation), `s21_db`, `width_Hz` and
    `prominence_db`, sorted by field then frequency.
    """
    grid = spectrum_grid(adata)
    db = spectrum_db(adata)
    freqs = np.array(grid.freq_values)
    frames = []
    for i, B in enumerate(grid.field_values):
        peaks = trace_peaks(freqs, db[i], prominence_db=prominence_db)
        if len(peaks):
            peaks.insert(0, 'field_T', float(B))
            peaks.insert(0, 'field_index', i)
            frames.append(peaks)
    if frames:
        table = pd.concat(frames, ignore_index=True)
    else:
        table = pd.DataFrame(columns=_PEAK_COLUMNS)
    table = table.astype({'field_index': int}).reset_index(drop=True)

    if not copy:
        adata.uns.setdefault('garnet', {})[key_added] = table
    return table


def dip_splitting(
    adata: AnnData,
    field: float,
    centre: float,
    window: Optional[float] = None,
    prominence_db: float = 3.0,
) -> float:
    """\
    Splitting of the transmission peaks around `centre` at the row nearest `field`.

    The two most prominent peaks within `centre ± window` are taken; if
    fewer than two are resolved the splitting is 0 (no avoided crossing).

    Returns
    -------
    The splitting in Hz.
    """
    grid = spectrum_grid(adata)
    i = int(np.argmin(np.abs(np.array(grid.field_values) - field)))
    peaks = trace_peaks(np.array(grid.freq_values), spectrum_db(adata)[i], prominence_db)
    if window is not None:
        peaks = peaks[np.abs(peaks['freq_Hz'] - centre) <= window]
    if len(peaks) < 2:
        return 0.0
    top = peaks.nlargest(2, 'prominence_db')['freq_Hz'].values
    return float(abs(top[1] - top[0]))
