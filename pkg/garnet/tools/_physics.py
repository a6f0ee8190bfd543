from dataclasses import dataclass
from typing import Mapping

import numpy as np
import pandas as pd

from .._constants import PhysicalConstants, DEFAULT_CONSTANTS, EPSILON_0, to_angular, from_angular
from .._types import CavityMode, MagnonMode, HybridSystem

__all__ = [
    'REGIME_THRESHOLD', 'LOW_EXCITATION_THRESHOLD', 'RegimeReport', 'CouplingBudget',
    'magnon_frequency', 'single_spin_coupling', 'spin_count', 'cooperativity',
    'coupling_budget', 'thermal_photon_number', 'effective_temperature',
    'thermal_magnon_number', 'drive_photon_number', 'drive_power_for_photons',
    'magnetostatic_regime_check', 'low_excitation_ratio', 'cooperativity_table',
]

# thresholds standing in for "much less than"
REGIME_THRESHOLD = 100.0
LOW_EXCITATION_THRESHOLD = 1e-3


@dataclass(frozen=True)
class RegimeReport:
    k0: float
    k_ms: float
    exchange_cutoff: float
    lower_ratio: float
    upper_ratio: float
    threshold: float

    @property
    def k_ms_lower_ok(self) -> bool:
        return self.lower_ratio >= self.threshold

    @property
    def k_ms_upper_ok(self) -> bool:
        return self.upper_ratio >= self.threshold

    @property
    def ok(self) -> bool:
        return self.k_ms_lower_ok and self.k_ms_upper_ok


@dataclass(frozen=True)
class CouplingBudget:
    g_single: float
    eta: float
    mode_volume: float
    n_spins: float
    g_collective: float
    cooperativity: float


def magnon_frequency(mode: MagnonMode, field: float) -> float:
    """\
    Frequency of a magnon mode at `field`, Hz.

    Raises
    ------
    ValueError
        When the field is below the dispersion offset, which would give a
        negative frequency.
    """
    freq = float(mode.frequency(field))
    if freq < 0:
        raise ValueError(
            f'{mode.label} frequency is negative at field={field!r} T '
            f'(offset {mode.dispersion_offset!r} T)'
        )
    return freq


def single_spin_coupling(
    eta: float,
    omega_c: float,
    mode_volume: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """\
    Coupling of one spin to the cavity mode, η γ_e sqrt(ħ ω_c μ0 / V_c) / 2.

    Parameters
    ----------
    eta
        Overlap of the cavity field with the sample, in [0, 1].
    omega_c
        Cavity frequency, Hz.
    mode_volume
        Mode volume, m³.
    constants
        Physical constants.

    Returns
    -------
    The single-spin coupling as an ordinary frequency, Hz.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f'eta must be within [0, 1] (got {eta!r})')
    if not mode_volume > 0:
        raise ValueError(f'mode_volume must be > 0 (got {mode_volume!r})')
    gamma = to_angular(constants.gamma_e)
    b_vac = np.sqrt(constants.h_bar * to_angular(omega_c) * constants.mu_0 / mode_volume)
    return from_angular(eta * gamma * b_vac / 2)


def spin_count(
    g_collective: float,
    g_single: float,
    spin_per_ion: float = DEFAULT_CONSTANTS.spin_per_ion,
) -> float:
    """Number of ions N such that g_collective = g_single * sqrt(2 s N)."""
    if not g_single > 0:
        raise ValueError(f'g_single must be > 0 (got {g_single!r})')
    return (g_collective / g_single) ** 2 / (2 * spin_per_ion)


def cooperativity(g_collective: float, kappa_tot: float, gamma_m: float) -> float:
    """C = g̃² / (κ_tot γ); any common frequency unit."""
    if not kappa_tot > 0:
        raise ValueError(f'kappa_tot must be > 0 (got {kappa_tot!r})')
    if not gamma_m > 0:
        raise ValueError(f'gamma_m must be > 0 (got {gamma_m!r})')
    return g_collective ** 2 / (kappa_tot * gamma_m)


def coupling_budget(
    eta: float,
    cavity: CavityMode,
    magnon: MagnonMode,
    mode_volume: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> CouplingBudget:
    g = single_spin_coupling(eta, cavity.omega_c, mode_volume, constants)
    return CouplingBudget(
        g_single=g,
        eta=eta,
        mode_volume=mode_volume,
        n_spins=spin_count(magnon.g_tilde, g, constants.spin_per_ion) if g > 0 else np.nan,
        g_collective=magnon.g_tilde,
        cooperativity=cooperativity(magnon.g_tilde, cavity.kappa_tot, magnon.gamma_m),
    )


def thermal_photon_number(
    freq,
    temperature,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
):
    """\
    Bose-Einstein occupation 1 / (exp(h f / k_B T) - 1) of a mode at `freq` (Hz).

    Evaluated as exp(-x) / (1 - exp(-x)) so that it underflows to 0 instead
    of overflowing when h f ≫ k_B T.
    """
    freq = np.asarray(freq, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0) or np.any(freq <= 0):
        raise ValueError('freq and temperature must be > 0')
    x = constants.h * freq / (constants.k_B * temperature)
    n = np.exp(-x) / -np.expm1(-x)
    return n[()] if n.ndim == 0 else n


def effective_temperature(
    n: float,
    freq: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Temperature at which a mode at `freq` holds `n` thermal quanta, K."""
    if not n > 0:
        raise ValueError(f'n must be > 0 (got {n!r})')
    return constants.h * freq / (constants.k_B * np.log1p(1 / n))


def thermal_magnon_number(
    mode: MagnonMode,
    field: float,
    temperature: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Thermal occupation of a magnon mode at its own frequency."""
    return float(thermal_photon_number(magnon_frequency(mode, field), temperature, constants))


def drive_photon_number(
    input_power,
    probe_freq: float,
    cavity: CavityMode,
    detuning: float = 0.0,
    line_gain_db: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
):
    """\
    Steady-state intracavity photon number under a coherent drive

        n = 2 κ_in P / (ħω (Δ² + κ_tot²))

    with every rate taken as an angular frequency.

    Parameters
    ----------
    input_power
        Drive power, W.
    probe_freq
        Drive frequency, Hz.
    cavity
        Cavity mode supplying κ_in and κ_tot (Hz).
    detuning
        Drive detuning from the cavity, Hz.
    line_gain_db
        Gain (negative: attenuation) between the quoted power and the
        cavity input port, dB.
    constants
        Physical constants.
    """
    power = np.asarray(input_power, dtype=float) * 10 ** (line_gain_db / 10)
    if np.any(power < 0):
        raise ValueError('input_power must be >= 0')
    photon_flux = power / (constants.h_bar * to_angular(probe_freq))
    k_in = to_angular(cavity.kappa_in)
    k_tot = to_angular(cavity.kappa_tot)
    n = 2 * k_in * photon_flux / (to_angular(detuning) ** 2 + k_tot ** 2)
    return n[()] if np.ndim(n) == 0 else n


def drive_power_for_photons(
    n: float,
    probe_freq: float,
    cavity: CavityMode,
    detuning: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Input power (W) that sustains `n` photons, inverse of drive_photon_number."""
    per_watt = drive_photon_number(1.0, probe_freq, cavity, detuning, constants=constants)
    return float(n / per_watt)


def magnetostatic_regime_check(
    probe_freq: float,
    relative_permittivity: float,
    k_ms: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    threshold: float = REGIME_THRESHOLD,
) -> RegimeReport:
    """\
    Check k0 ≪ k_MS ≪ 1/sqrt(Λ_ex) for a magnetostatic mode.

    Parameters
    ----------
    probe_freq
        Microwave frequency, Hz.
    relative_permittivity
        Relative permittivity of the sample, ≥ 1. There is no default, it is
        a material input.
    k_ms
        Wavenumber of the magnetostatic mode, rad/m.
    constants
        Physical constants.
    threshold
        Minimum ratio accepted as "much less than".

    Returns
    -------
    RegimeReport with the free-space wavenumber k0, the exchange cutoff and
    the two ratios k_MS/k0 and cutoff/k_MS.
    """
    if not relative_permittivity >= 1:
        raise ValueError(f'relative_permittivity must be >= 1 (got {relative_permittivity!r})')
    if not k_ms > 0:
        raise ValueError(f'k_ms must be > 0 (got {k_ms!r})')
    k0 = to_angular(probe_freq) * np.sqrt(constants.mu_0 * EPSILON_0 * relative_permittivity)
    cutoff = 1 / np.sqrt(constants.lambda_ex)
    return RegimeReport(
        k0=float(k0),
        k_ms=float(k_ms),
        exchange_cutoff=float(cutoff),
        lower_ratio=float(k_ms / k0),
        upper_ratio=float(cutoff / k_ms),
        threshold=float(threshold),
    )


def low_excitation_ratio(mean_magnon_number: float, total_spin: float) -> float:
    """⟨b†b⟩ / 2S; compare against LOW_EXCITATION_THRESHOLD."""
    if not total_spin > 0:
        raise ValueError(f'total_spin must be > 0 (got {total_spin!r})')
    return mean_magnon_number / (2 * total_spin)


def cooperativity_table(systems: Mapping[str, HybridSystem]) -> pd.DataFrame:
    """\
    One row per (system, magnon) with couplings, rates and cooperativity.

    Rates are reported in MHz. `strong` flags g̃ > κ_tot and g̃ > γ.
    """
    rows = []
    for name, system in systems.items():
        kappa = system.cavity.kappa_tot
        for m in system.magnons:
            rows.append(dict(
                system=name,
                cavity=system.cavity.label,
                magnon=m.label,
                g_tilde_mhz=m.g_tilde / 1e6,
                kappa_tot_mhz=kappa / 1e6,
                gamma_mhz=m.gamma_m / 1e6,
                cooperativity=cooperativity(m.g_tilde, kappa, m.gamma_m),
                strong=bool(m.g_tilde > kappa and m.g_tilde > m.gamma_m),
            ))
    return pd.DataFrame(rows, columns=['system', 'cavity', 'magnon', 'g_tilde_mhz',
                                       'kappa_tot_mhz', 'gamma_mhz', 'cooperativity', 'strong'])
