import numpy as np

__all__ = ['to_db', 'from_db', 'dbm_to_watt', 'watt_to_dbm']


def to_db(s21):
    """Power-style magnitude 20·log10|S21|, in dB."""
    with np.errstate(divide='ignore'):
        return 20 * np.log10(np.abs(s21))


def from_db(db):
    return 10 ** (np.asarray(db, dtype=float) / 20)


def dbm_to_watt(p_dbm):
    return 1e-3 * 10 ** (np.asarray(p_dbm, dtype=float) / 10)


def watt_to_dbm(p_watt):
    return 10 * np.log10(np.asarray(p_watt, dtype=float) / 1e-3)
