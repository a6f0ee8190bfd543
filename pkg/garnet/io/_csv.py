from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from anndata import AnnData
from scanpy import logging as logg

from .._errors import SpectrumFormatError
from .._types import SweepGrid
from .._utils import make_spectrum, spectrum_db, spectrum_grid, spectrum_complex

MAGNITUDE_COLUMNS = ['field_T', 'freq_Hz', 's21_db']
COMPLEX_COLUMNS = MAGNITUDE_COLUMNS + ['s21_re', 's21_im']
# missing cells listed in a non-rectangular error
_MAX_LISTED = 10


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _read_table(path):
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise SpectrumFormatError(f'{path} is empty') from e
    except pd.errors.ParserError as e:
        raise SpectrumFormatError(f'{path}: {e}') from e


def load_spectrum_csv(path: Union[str, Path]) -> AnnData:
    """\
    Read a long-format transmission file into a spectrum map.

    The header must be `field_T,freq_Hz,s21_db` optionally followed by
    `s21_re,s21_im`; every (field, frequency) cell of the rectangular grid
    must appear exactly once, in any order.

    Parameters
    ----------
    path
        CSV file.

    Returns
    -------
    A spectrum map with increasing axes. dB values are taken from the
    `s21_db` column as written, the complex layers from `s21_re`/`s21_im`.

    Raises
    ------
    SpectrumFormatError
        On a bad header, a malformed or duplicated row (`row` is the file
        line number) or missing grid cells.
    """
    table = _read_table(path)
    columns = [c.strip() for c in table.columns]
    if columns not in (MAGNITUDE_COLUMNS, COMPLEX_COLUMNS):
        raise SpectrumFormatError(
            f'{path}: header must be {",".join(MAGNITUDE_COLUMNS)}[,s21_re,s21_im], got {",".join(columns)}',
            row=1,
        )
    table.columns = columns
    if len(table) == 0:
        raise SpectrumFormatError(f'{path} holds no data rows')

    # exact per-cell parse: 17-digit text reads back to the same double
    values = table.apply(lambda col: col.map(_to_float))
    bad = ~np.isfinite(values.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise SpectrumFormatError(
            f'{path}: malformed values {list(table.iloc[k])}', row=k + 2,
        )

    dup = values.duplicated(['field_T', 'freq_Hz'])
    if dup.any():
        k = int(np.flatnonzero(dup.to_numpy())[0])
        raise SpectrumFormatError(
            f'{path}: duplicate cell field={float(values.field_T.iloc[k])!r} T, '
            f'freq={float(values.freq_Hz.iloc[k])!r} Hz', row=k + 2,
        )

    fields = np.unique(values['field_T'].to_numpy())
    freqs = np.unique(values['freq_Hz'].to_numpy())
    if len(values) != fields.size * freqs.size:
        present = set(zip(values['field_T'], values['freq_Hz']))
        missing = [(B, f) for B in fields for f in freqs if (B, f) not in present]
        listed = ', '.join(f'({float(B)!r} T, {float(f)!r} Hz)' for B, f in missing[:_MAX_LISTED])
        more = f' and {len(missing) - _MAX_LISTED} more' if len(missing) > _MAX_LISTED else ''
        raise SpectrumFormatError(
            f'{path}: grid is not rectangular, {len(missing)} missing cells: {listed}{more}'
        )

    i = np.searchsorted(fields, values['field_T'].to_numpy())
    j = np.searchsorted(freqs, values['freq_Hz'].to_numpy())
    shape = (fields.size, freqs.size)
    db = np.empty(shape)
    db[i, j] = values['s21_db'].to_numpy()
    adata = make_spectrum(SweepGrid(fields, freqs), db=db, metadata={'source': str(path)})
    if columns == COMPLEX_COLUMNS:
        for key in ('s21_re', 's21_im'):
            layer = np.empty(shape)
            layer[i, j] = values[key].to_numpy()
            adata.layers[key] = layer
    logg.debug(f'read {shape[0]}x{shape[1]} map from {path}')
    return adata


def save_spectrum_csv(adata: AnnData, path: Union[str, Path]) -> None:
    """\
    Write a spectrum map in long format, one row per grid cell.

    Rows are sorted by field then frequency. Axes and complex parts are
    written with 17 significant digits, dB values with 9.
    """
    grid = spectrum_grid(adata)
    fields, freqs = np.meshgrid(grid.field_values, grid.freq_values, indexing='ij')
    out = pd.DataFrame({
        'field_T': [f'{x:.17g}' for x in fields.ravel()],
        'freq_Hz': [f'{x:.17g}' for x in freqs.ravel()],
        's21_db': [f'{x:.9g}' for x in spectrum_db(adata).ravel()],
    })
    s21 = spectrum_complex(adata)
    if s21 is not None:
        out['s21_re'] = [f'{x:.17g}' for x in s21.real.ravel()]
        out['s21_im'] = [f'{x:.17g}' for x in s21.imag.ravel()]
    try:
        out.to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise OSError(f'cannot write {path}: {e.strerror or e}') from e


def branches_frame(diagram) -> pd.DataFrame:
    """\
    Polariton branches as a table: `field_T`, then `branch_k_Hz` and
    `branch_k_cavity_weight` for every branch in ascending order.
    """
    data = {'field_T': np.asarray(diagram.field_values)}
    for k in range(diagram.branches.shape[1]):
        data[f'branch_{k}_Hz'] = diagram.branches[:, k]
        data[f'branch_{k}_cavity_weight'] = diagram.cavity_weight[:, k]
    return pd.DataFrame(data)


def save_branches_csv(diagram, path: Union[str, Path]) -> None:
    try:
        branches_frame(diagram).to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    except OSError as e:
        raise OSError(f'cannot write {path}: {e.strerror or e}') from e
