import numpy as np
import pytest
import yaml

import garnet as gt
from garnet.cli import cli_main, derive_lines
from garnet._utils import spectrum_complex, spectrum_db


def _lines(capsys):
    return dict(line.split('=', 1) for line in capsys.readouterr().out.splitlines()
                if '=' in line and not line.startswith('wrote'))


@pytest.fixture
def small_config(tmp_path, configs_dir):
    data = yaml.safe_load((configs_dir / 'cryo_te101.yaml').read_text())
    data['name'] = 'small'
    data['grid'].update(field_points=31, freq_points=121)
    path = tmp_path / 'small.yaml'
    path.write_text(yaml.safe_dump(data))
    return path


def _write_config(tmp_path, small_config, name, **changes):
    data = yaml.safe_load(small_config.read_text())
    data['name'] = name
    for key, value in changes.items():
        section, _, field = key.partition('__')
        if field:
            data[section].update({field: value})
        else:
            data[section] = value
    path = tmp_path / f'{name}.yaml'
    path.write_text(yaml.safe_dump(data))
    return path


def test_derive(capsys, configs_dir):
    assert cli_main(['derive', '--config', str(configs_dir / 'cryo_te101.yaml')]) == 0
    out = _lines(capsys)
    assert out['C_FMR'] == '22.1'
    assert out['C_MS'] == '0.66'
    assert out['kappa_tot_mhz'] == '1.1'
    assert float(out['g_single_hz']) == pytest.approx(15.8e-3, rel=5e-3)
    assert float(out['N_spins']) == pytest.approx(2.336e16, rel=1e-2)
    assert float(out['n_drive_at_-130dBm']) == pytest.approx(0.85, rel=1e-2)
    assert float(out['n_drive_at_-100dBm']) == pytest.approx(850, rel=1e-2)
    assert float(out['k0_rad_per_m']) == pytest.approx(718.8, rel=1e-3)
    assert out['regime_ok'] == 'true'
    assert out['low_excitation_ok_FMR'] == 'true'


def test_derive_room_temperature(configs_dir):
    cfg = gt.io.RunConfig.from_yaml(configs_dir / 'room_te101.yaml')
    out = dict(line.split('=', 1) for line in derive_lines(cfg))
    assert float(out['n_thermal_cavity']) == pytest.approx(708, rel=2e-3)
    assert float(out['n_drive_at_-20dBm']) == pytest.approx(1.655e10, rel=1e-2)
    assert float(out['low_excitation_ratio_FMR']) < 1e-3


def test_check(capsys, configs_dir):
    assert cli_main(['check', '-c', str(configs_dir / 'cryo_te101.yaml')]) == 0
    out = _lines(capsys)
    assert out['system_valid'] == 'true'
    assert out['all_ok'] == 'true'


def test_check_fails_on_high_occupation(capsys, tmp_path, small_config):
    path = _write_config(tmp_path, small_config, 'hot', material__mean_magnon_number=1e20)
    assert cli_main(['check', '-c', str(path)]) == 1
    out = _lines(capsys)
    assert out['low_excitation_ok_FMR'] == 'false'
    assert out['all_ok'] == 'false'


def test_check_reports_skipped_regime(capsys, tmp_path, small_config):
    path = _write_config(tmp_path, small_config, 'noregime', material__relative_permittivity=None)
    assert cli_main(['check', '-c', str(path)]) == 0
    out = _lines(capsys)
    assert out['regime_check'].startswith('skipped')
    assert 'regime_ok' not in out
    assert out['all_ok'] == 'true'


def test_table(capsys):
    assert cli_main(['table']) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'system,cavity,magnon,g_tilde_mhz,kappa_tot_mhz,gamma_mhz,cooperativity,strong'
    assert len(lines) == 7
    assert lines[1].startswith('cryo TE101,TE101,FMR,')


def test_simulate(tmp_path, small_config):
    out = tmp_path / 'out'
    assert cli_main(['-v', 'simulate', '-c', str(small_config), '--out', str(out)]) == 0
    adata = gt.io.load_spectrum_csv(out / 'small_map.csv')
    cfg = gt.io.RunConfig.from_yaml(small_config)
    expected = gt.tl.spectrum_map(cfg.system, cfg.grid)
    assert adata.shape == (31, 121)
    np.testing.assert_array_equal(spectrum_complex(adata), spectrum_complex(expected))
    branches = (out / 'small_branches.csv').read_text().splitlines()
    assert len(branches) == 32
    assert branches[0].startswith('field_T,branch_0_Hz,branch_0_cavity_weight')


def test_simulate_zero_coupling(tmp_path, small_config):
    data = yaml.safe_load(small_config.read_text())
    for m in data['magnons']:
        m['g_tilde_mhz'] = 0.0
    path = _write_config(tmp_path, small_config, 'uncoupled', magnons=data['magnons'])
    assert cli_main(['simulate', '-c', str(path), '-o', str(tmp_path)]) == 0
    adata = gt.io.load_spectrum_csv(tmp_path / 'uncoupled_map.csv')
    cfg = gt.io.RunConfig.from_yaml(path)
    bare = gt.tl.spectrum_map(gt.HybridSystem(cavity=cfg.system.cavity), cfg.grid)
    np.testing.assert_allclose(spectrum_complex(adata), spectrum_complex(bare), rtol=1e-14)


def test_simulate_noise_is_seeded(tmp_path, small_config):
    path = _write_config(tmp_path, small_config, 'noisy', noise_db=0.5)
    for seed, target in (('1', 'a'), ('1', 'b'), ('2', 'c')):
        assert cli_main(['simulate', '-c', str(path), '-o', str(tmp_path / target),
                         '--seed', seed]) == 0
    a, b, c = (gt.io.load_spectrum_csv(tmp_path / t / 'noisy_map.csv') for t in 'abc')
    np.testing.assert_array_equal(spectrum_db(a), spectrum_db(b))
    assert not np.array_equal(spectrum_db(a), spectrum_db(c))
    assert spectrum_complex(a) is None


def test_output_dir_from_environment(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv('GARNET_OUTPUT_DIR', str(tmp_path / 'env'))
    assert cli_main(['simulate', '-c', str(small_config)]) == 0
    assert (tmp_path / 'env' / 'small_map.csv').exists()


def test_unit_sweep_equals_simulate(tmp_path, small_config):
    assert cli_main(['simulate', '-c', str(small_config), '-o', str(tmp_path / 'sim')]) == 0
    assert cli_main(['sweep-damping', '-c', str(small_config), '-o', str(tmp_path / 'sweep'),
                     '--multipliers', '1', '--magnon', 'MS']) == 0
    simulated = (tmp_path / 'sim' / 'small_map.csv').read_bytes()
    swept = (tmp_path / 'sweep' / 'small_map.csv').read_bytes()
    assert simulated == swept


def test_sweep_damping(capsys, tmp_path, configs_dir):
    data = yaml.safe_load((configs_dir / 'damping_sweep.yaml').read_text())
    data['grid'].update(field_points=81, freq_points=401)
    path = tmp_path / 'damping_sweep.yaml'
    path.write_text(yaml.safe_dump(data))
    assert cli_main(['sweep-damping', '-c', str(path), '-o', str(tmp_path)]) == 0
    out = _lines(capsys)
    for x in ('1', '10', '100'):
        assert (tmp_path / f'damping_sweep_MS_x{x}_map.csv').exists()
    assert float(out['splitting_MS_x1_mhz']) == pytest.approx(16.6, rel=0.15)
    assert float(out['splitting_MS_x100_mhz']) == 0.0
    assert float(out['splitting_FMR_x100_mhz']) == pytest.approx(19.2, rel=0.15)


def test_fit_from_config_guess(capsys, tmp_path, small_config):
    assert cli_main(['simulate', '-c', str(small_config), '-o', str(tmp_path)]) == 0
    capsys.readouterr()
    data = tmp_path / 'small_map.csv'
    assert cli_main(['fit', '--data', str(data), '-c', str(small_config), '-o', str(tmp_path),
                     '--guess-from-config']) == 0
    out = _lines(capsys)
    assert out['converged'] == 'true'
    assert float(out['residual_rms_db']) < 1e-6
    assert out['C_FMR'] == '22.1'
    summary = yaml.safe_load((tmp_path / 'small_fit.yaml').read_text())
    assert summary['converged'] is True
    assert summary['provenance']['data'] == str(data)
    overlay = gt.io.load_spectrum_csv(tmp_path / 'small_fit_map.csv')
    np.testing.assert_allclose(spectrum_db(overlay), spectrum_db(gt.io.load_spectrum_csv(data)),
                               atol=1e-6)


def test_fit_seeds_unresolved_modes(capsys, tmp_path, small_config):
    assert cli_main(['simulate', '-c', str(small_config), '-o', str(tmp_path)]) == 0
    data = tmp_path / 'small_map.csv'
    assert cli_main(['fit', '--data', str(data), '-c', str(small_config), '-o', str(tmp_path)]) == 0
    summary = yaml.safe_load((tmp_path / 'small_fit.yaml').read_text())
    assert 'MS.g_tilde' in summary['parameters']
    assert any('seeded' in w for w in summary['provenance']['guess_warnings'])


def test_dump_config_reparses(capsys, small_config):
    assert cli_main(['simulate', '-c', str(small_config), '--dump-config']) == 0
    dumped = yaml.safe_load(capsys.readouterr().out)
    cfg = gt.io.RunConfig.from_dict(dumped, name='small')
    assert cfg.grid.shape == (31, 121)
    assert cfg.system.labels == ['FMR', 'MS']


def test_unknown_command():
    assert cli_main(['nope']) == 2


def test_bad_multipliers(small_config):
    assert cli_main(['sweep-damping', '-c', str(small_config), '--multipliers', '1,x']) == 2
    assert cli_main(['sweep-damping', '-c', str(small_config), '--multipliers', '-1']) == 2


def test_domain_errors_exit_1(capsys, tmp_path, small_config):
    data = yaml.safe_load(small_config.read_text())
    data['magnons'][0]['gamma_mhz'] = -1.0
    path = _write_config(tmp_path, small_config, 'broken', magnons=data['magnons'])
    assert cli_main(['derive', '-c', str(path)]) == 1
    assert 'error: system:' in capsys.readouterr().err
    assert cli_main(['derive', '-c', str(tmp_path / 'absent.yaml')]) == 1
    assert cli_main(['fit', '-d', str(tmp_path / 'absent.csv'), '-c', str(small_config)]) == 1
