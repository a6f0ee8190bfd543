from typing import Optional, Dict, Any

import numpy as np
import pandas as pd
from anndata import AnnData

from .._types import SweepGrid
from ._units import to_db

__all__ = [
    'make_spectrum',
    'spectrum_grid',
    'spectrum_db',
    'spectrum_complex',
    'spectrum_metadata',
    'is_complex_spectrum',
]


def make_spectrum(
    grid: SweepGrid,
    s21: Optional[np.ndarray] = None,
    db: Optional[np.ndarray] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> AnnData:
    """\
    Wrap transmission values on a grid into an AnnData spectrum map.

    Exactly one of `s21` (complex) or `db` (magnitude only) is required.
    """
    grid.validate()
    if (s21 is None) == (db is None):
        raise ValueError('Provide either `s21` or `db`')
    if s21 is not None:
        s21 = np.asarray(s21, dtype=complex)
        db = to_db(s21)
    db = np.array(db, dtype=float)
    if db.shape != grid.shape:
        raise ValueError(
            f'Values have shape {db.shape}, the grid expects {grid.shape}'
        )
    if not np.all(np.isfinite(db)):
        raise ValueError('Spectrum magnitudes must be finite')

    obs = pd.DataFrame(
        {'field_T': np.array(grid.field_values)},
        index=[f'B{i}' for i in range(grid.shape[0])],
    )
    var = pd.DataFrame(
        {'freq_Hz': np.array(grid.freq_values)},
        index=[f'f{j}' for j in range(grid.shape[1])],
    )
    adata = AnnData(X=db, obs=obs, var=var)
    if s21 is not None:
        adata.layers['s21_re'] = s21.real.copy()
        adata.layers['s21_im'] = s21.imag.copy()
    adata.uns['garnet'] = {'metadata': dict(metadata or {})}
    return adata


def spectrum_grid(adata: AnnData) -> SweepGrid:
    return SweepGrid(adata.obs['field_T'].values, adata.var['freq_Hz'].values)


def spectrum_db(adata: AnnData) -> np.ndarray:
    return np.asarray(adata.X, dtype=float)


def is_complex_spectrum(adata: AnnData) -> bool:
    return 's21_re' in adata.layers and 's21_im' in adata.layers


def spectrum_complex(adata: AnnData) -> Optional[np.ndarray]:
    if not is_complex_spectrum(adata):
        return None
    return np.asarray(adata.layers['s21_re']) + 1j * np.asarray(adata.layers['s21_im'])


def spectrum_metadata(adata: AnnData) -> Dict[str, Any]:
    return adata.uns.get('garnet', {}).get('metadata', {})
