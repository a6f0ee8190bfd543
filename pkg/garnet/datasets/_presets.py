from typing import Dict, Optional

import numpy as np

from .._types import CavityMode, MagnonMode, HybridSystem, SweepGrid

__all__ = [
    'CAVITY_VOLUME_M3',
    'ETA_TE101',
    'MS_OFFSET_T',
    'bare_cavity',
    'measured_system',
    'measured_systems',
    'damping_sweep_system',
    'crossing_grid',
]

# 50 x 18 x 3 mm³ copper cavity, 0.32 mm YIG sphere
CAVITY_VOLUME_M3 = 50e-3 * 18e-3 * 3e-3
# overlap that gives a 15.8 mHz single-spin coupling for TE101
ETA_TE101 = 0.684
# the MS mode sits about 70 MHz below the FMR line
MS_OFFSET_T = 2.5e-3


_MHZ = 1e6
_GHZ = 1e9

# omega_c in GHz, port and intrinsic rates in MHz
_CAVITIES = {
    ('cryo', 'TE101'): (8.855, 0.19, 0.20, 0.71),
    ('cryo', 'TE102'): (10.306, 0.85, 0.99, 0.56),
    ('room', 'TE101'): (8.822, 0.19, 0.20, 2.11),
    ('room', 'TE102'): (10.265, 0.85, 0.99, 4.06),
}

# label: (g_tilde, gamma) in MHz
_MAGNONS = {
    ('cryo', 'TE101'): {'FMR': (5.4, 1.2), 'MS': (1.4, 2.7)},
    ('cryo', 'TE102'): {'FMR': (7.5, 1.3), 'MS': (8.3, 3.3)},
    ('room', 'TE101'): {'FMR': (5.2, 1.3)},
    ('room', 'TE102'): {'FMR': (9.6, 1.5)},
}

_OFFSETS = {'FMR': 0.0, 'MS': MS_OFFSET_T}


def _key(temperature: str, mode: str):
    key = (temperature.lower(), mode.upper())
    if key not in _CAVITIES:
        raise ValueError(
            f'No preset for {temperature!r}/{mode!r}, '
            f'available: {sorted(t + "/" + m for t, m in _CAVITIES)}'
        )
    return key


def bare_cavity(temperature: str = 'cryo', mode: str = 'TE101') -> CavityMode:
    """\
    Measured empty-cavity resonance.

    Parameters
    ----------
    temperature
        `'cryo'` (22 mK) or `'room'` (300 K).
    mode
        `'TE101'` or `'TE102'`.
    """
    key = _key(temperature, mode)
    f, k_in, k_out, k_int = _CAVITIES[key]
    return CavityMode(label=key[1], omega_c=f * _GHZ, kappa_in=k_in * _MHZ,
                      kappa_out=k_out * _MHZ, kappa_int=k_int * _MHZ)


def measured_system(temperature: str = 'cryo', mode: str = 'TE101') -> HybridSystem:
    """\
    Cavity plus magnon modes with the published couplings and damping rates.

    At room temperature only the FMR mode couples visibly.
    """
    key = _key(temperature, mode)
    magnons = tuple(
        MagnonMode(label=label, g_tilde=g * _MHZ, gamma_m=gamma * _MHZ,
                   dispersion_offset=_OFFSETS[label])
        for label, (g, gamma) in _MAGNONS[key].items()
    )
    return HybridSystem(cavity=bare_cavity(*key), magnons=magnons)


def measured_systems() -> Dict[str, HybridSystem]:
    return {f'{t} {m}': measured_system(t, m) for t, m in _CAVITIES}


def damping_sweep_system() -> HybridSystem:
    """\
    Room-temperature TE102 cavity and FMR with the MS mode of the cryogenic
    TE102 measurement, the reference for the damping sweep.
    """
    room = measured_system('room', 'TE102')
    ms = measured_system('cryo', 'TE102').magnon('MS')
    return HybridSystem(cavity=room.cavity, magnons=room.magnons + (ms,))


def crossing_grid(
    system: HybridSystem,
    field_points: int = 201,
    freq_points: int = 201,
    freq_half_span: Optional[float] = None,
) -> SweepGrid:
    """\
    Grid around the cavity that spans every avoided crossing of `system`.

    The frequency window is `omega_c ± freq_half_span` (default
    4 max(g̃) + 10 κ_tot); the field window runs from the first to the last
    resonant field, widened on both sides by the field over which a magnon
    line sweeps through half the frequency window.
    """
    cav = system.cavity
    if freq_half_span is None:
        g_max = max([m.g_tilde for m in system.magnons], default=0.0)
        freq_half_span = 4 * g_max + 10 * cav.kappa_tot
    if system.magnons:
        resonant = [m.resonant_field(cav.omega_c) for m in system.magnons]
        margin = max(freq_half_span / m.dispersion_slope for m in system.magnons)
        lo, hi = min(resonant) - margin, max(resonant) + margin
    else:
        lo, hi = 0.0, 1.0
    return SweepGrid(
        np.linspace(lo, hi, field_points),
        np.linspace(cav.omega_c - freq_half_span, cav.omega_c + freq_half_span, freq_points),
    )
