import numpy as np
import pytest

import garnet as gt
from garnet._utils import make_spectrum, spectrum_db, spectrum_grid


def test_guess_two_crossings(te102_map, cryo_te102):
    guess = gt.inference.initial_guess(te102_map, labels=('FMR', 'MS'))
    assert not guess.underdetermined
    assert guess.system.labels == ['FMR', 'MS']
    truth = cryo_te102
    cav = guess.system.cavity
    assert cav.omega_c == pytest.approx(truth.cavity.omega_c, abs=truth.cavity.kappa_tot)
    assert cav.kappa_tot == pytest.approx(truth.cavity.kappa_tot, rel=0.3)
    for label in ('FMR', 'MS'):
        m, t = guess.system.magnon(label), truth.magnon(label)
        assert m.g_tilde == pytest.approx(t.g_tilde, rel=0.3)
        assert 0.5 * t.gamma_m < m.gamma_m < 2 * t.gamma_m
        assert m.dispersion_slope == gt.DEFAULT_CONSTANTS.gamma_e
        # offset within a few cavity linewidths of field
        assert m.dispersion_offset == pytest.approx(t.dispersion_offset,
                                                    abs=5 * t.gamma_m / m.dispersion_slope + 1e-4)


def test_windowed_map_leaves_ms_absent(cryo_te102):
    fmr = cryo_te102.magnon('FMR')
    centre = fmr.resonant_field(cryo_te102.cavity.omega_c)
    omega_c = cryo_te102.cavity.omega_c
    # MS crossing is 2.5 mT above, outside the window
    grid = gt.SweepGrid.linspace(centre - 1e-3, centre + 1e-3, 101,
                                 omega_c - 30e6, omega_c + 30e6, 301)
    adata = gt.tl.spectrum_map(cryo_te102, grid)
    guess = gt.inference.initial_guess(adata, labels=('FMR', 'MS'))
    assert guess.absent == ('MS',)
    assert guess.underdetermined
    assert guess.system.labels == ['FMR']
    assert any('absent' in w for w in guess.warnings)
    assert guess.system.magnon('FMR').g_tilde == pytest.approx(fmr.g_tilde, rel=0.3)


def test_zero_coupling_gives_bare_guess(cryo_te101):
    system = cryo_te101.replace_magnon('FMR', g_tilde=0.0).replace_magnon('MS', g_tilde=0.0)
    grid = gt.datasets.crossing_grid(cryo_te101, field_points=41, freq_points=201)
    guess = gt.inference.initial_guess(gt.tl.spectrum_map(system, grid))
    assert guess.system.magnons == ()
    assert guess.absent == ('FMR', 'MS')
    assert any('zero-coupling' in w for w in guess.warnings)
    assert guess.system.cavity.omega_c == pytest.approx(cryo_te101.cavity.omega_c, rel=1e-9)


def test_fit_slope(cryo_te102, te102_map):
    guess = gt.inference.initial_guess(te102_map, labels=('FMR', 'MS'), fit_slope=True)
    for m in guess.system.magnons:
        assert 0.5 * 28e9 <= m.dispersion_slope <= 2 * 28e9


def test_no_cavity_on_edges():
    grid = gt.SweepGrid.linspace(0.3, 0.31, 5, 8.8e9, 8.9e9, 51)
    adata = make_spectrum(grid, db=np.full(grid.shape, -50.0))
    with pytest.raises(gt.NoResonanceError):
        gt.inference.initial_guess(adata)


def test_magnitude_only_map(te102_map):
    adata = make_spectrum(spectrum_grid(te102_map), db=spectrum_db(te102_map))
    guess = gt.inference.initial_guess(adata)
    assert len(guess.system.magnons) == 2


def test_weak_mode_seeded_from_linewidth(cryo_te101):
    grid = gt.datasets.crossing_grid(cryo_te101, field_points=201, freq_points=201)
    guess = gt.inference.initial_guess(gt.tl.spectrum_map(cryo_te101, grid))
    assert guess.system.labels == ['FMR', 'MS']
    assert guess.absent == ()
    assert guess.seeded == ('MS',)
    assert any('linewidth' in w for w in guess.warnings)
    ms, truth = guess.system.magnon('MS'), cryo_te101.magnon('MS')
    assert ms.dispersion_offset == pytest.approx(truth.dispersion_offset, abs=3e-4)
    assert 0.5 * truth.g_tilde < ms.g_tilde < 2 * truth.g_tilde
    assert 0.5 * truth.gamma_m < ms.gamma_m < 2 * truth.gamma_m


def test_reference_fills_unresolved_mode(cryo_te102):
    centre = cryo_te102.magnon('FMR').resonant_field(cryo_te102.cavity.omega_c)
    omega_c = cryo_te102.cavity.omega_c
    grid = gt.SweepGrid.linspace(centre - 1e-3, centre + 1e-3, 101,
                                 omega_c - 30e6, omega_c + 30e6, 301)
    adata = gt.tl.spectrum_map(cryo_te102, grid)
    guess = gt.inference.initial_guess(adata, reference=cryo_te102)
    assert guess.system.labels == ['FMR', 'MS']
    assert guess.absent == ()
    assert guess.seeded == ('MS',)
    assert guess.system.magnon('MS') == cryo_te102.magnon('MS')
    assert any('reference' in w for w in guess.warnings)


def test_reference_does_not_override_resolved_modes(te102_map, cryo_te102):
    reference = cryo_te102.replace_magnon('FMR', g_tilde=1e6)
    guess = gt.inference.initial_guess(te102_map, reference=reference)
    assert guess.seeded == ()
    assert guess.system.magnon('FMR').g_tilde == pytest.approx(7.5e6, rel=0.3)


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(3))
@pytest.mark.parametrize('temperature, mode', [
    ('cryo', 'TE101'), ('cryo', 'TE102'), ('room', 'TE101'), ('room', 'TE102'),
])
def test_noisy_round_trip(temperature, mode, seed):
    truth = gt.datasets.measured_system(temperature, mode)
    grid = gt.datasets.crossing_grid(truth, field_points=201, freq_points=201)
    clean = gt.tl.spectrum_map(truth, grid)
    rng = np.random.default_rng(seed)
    noisy = make_spectrum(grid, db=spectrum_db(clean) + rng.normal(0.0, 0.2, size=clean.shape))
    guess = gt.inference.initial_guess(noisy, labels=truth.labels, reference=truth)
    assert guess.system.labels == truth.labels
    report = gt.inference.fit_hybrid(noisy, gt.inference.FitConfig.default_for(guess.system), guess)
    assert report.converged
    for m in truth.magnons:
        fitted = report.fitted.magnon(m.label)
        assert fitted.g_tilde == pytest.approx(m.g_tilde, rel=0.05)
        assert fitted.gamma_m == pytest.approx(m.gamma_m, rel=0.05)
