import io as _io

import pytest
import yaml

import garnet as gt
from garnet.io import RunConfig


def _flat(data, prefix=''):
    # numeric leaves keyed by their dotted path
    out = {}
    items = data.items() if isinstance(data, dict) else enumerate(data)
    for key, value in items:
        where = f'{prefix}{key}'
        if isinstance(value, (dict, list)):
            out.update(_flat(value, where + '.'))
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            out[where] = value
    return out


def _base():
    return {
        'name': 'demo',
        'cavity': {'omega_c_ghz': 8.855, 'kappa_in_mhz': 0.19, 'kappa_out_mhz': 0.20,
                   'kappa_int_mhz': 0.71},
        'magnons': [{'label': 'FMR', 'g_tilde_mhz': 5.4, 'gamma_mhz': 1.2}],
    }


@pytest.mark.parametrize('name, temperature, mode', [
    ('cryo_te101', 'cryo', 'TE101'),
    ('cryo_te102', 'cryo', 'TE102'),
    ('room_te101', 'room', 'TE101'),
    ('room_te102', 'room', 'TE102'),
])
def test_shipped_configs_match_presets(configs_dir, name, temperature, mode):
    cfg = RunConfig.from_yaml(configs_dir / f'{name}.yaml')
    preset = gt.datasets.measured_system(temperature, mode).parameters()
    assert cfg.name == name
    assert cfg.system.labels == gt.datasets.measured_system(temperature, mode).labels
    for key, value in preset.items():
        assert cfg.system.parameters()[key] == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_every_shipped_config_parses(configs_dir):
    paths = sorted(configs_dir.glob('*.yaml'))
    assert len(paths) == 9
    for path in paths:
        RunConfig.from_yaml(path)


def test_defaults():
    cfg = RunConfig.from_dict(_base())
    assert cfg.grid is None
    assert cfg.seed == 0
    assert cfg.fit.labels == ('FMR', 'MS')
    fmr = cfg.system.magnon('FMR')
    assert fmr.dispersion_slope == gt.DEFAULT_CONSTANTS.gamma_e
    assert fmr.dispersion_offset == 0.0
    assert fmr.total_spin is None


def test_units_are_converted():
    data = _base()
    data['constants'] = {'gamma_e_ghz_per_t': 27.9}
    data['grid'] = {'field_min_t': 0.31, 'field_max_t': 0.32, 'field_points': 3,
                    'freq_min_ghz': 8.8, 'freq_max_ghz': 8.9, 'freq_points': 5}
    cfg = RunConfig.from_dict(data)
    assert cfg.constants.gamma_e == pytest.approx(27.9e9)
    assert cfg.system.magnon('FMR').dispersion_slope == pytest.approx(27.9e9)
    assert cfg.system.cavity.kappa_in == pytest.approx(0.19e6)
    assert cfg.grid.shape == (3, 5)
    assert cfg.grid.freq_values[-1] == pytest.approx(8.9e9)


def test_round_trip(configs_dir):
    cfg = RunConfig.from_yaml(configs_dir / 'damping_sweep.yaml')
    again = RunConfig.from_dict(yaml.safe_load(cfg.dump()), name=cfg.name)
    assert _flat(again.to_dict()) == pytest.approx(_flat(cfg.to_dict()), rel=1e-14)
    assert again.system.labels == cfg.system.labels
    assert again.sweep == cfg.sweep
    stream = _io.StringIO()
    cfg.dump(stream)
    assert stream.getvalue() == cfg.dump()


def test_seed_override(configs_dir):
    cfg = RunConfig.from_yaml(configs_dir / 'cryo_te101.yaml')
    assert cfg.with_seed(None) is cfg
    assert cfg.with_seed(7).seed == 7


def test_fit_config(configs_dir):
    cfg = RunConfig.from_yaml(configs_dir / 'cryo_te101.yaml')
    config = cfg.fit_config()
    assert 'FMR.g_tilde' in config.free_parameters
    assert config.port_ratio == pytest.approx(0.20 / 0.19)
    assert config.violations(cfg.system) == []


@pytest.mark.parametrize('mutate, path', [
    (lambda d: d['cavity'].pop('omega_c_ghz'), 'cavity.omega_c_ghz'),
    (lambda d: d['cavity'].update(colour='red'), 'cavity'),
    (lambda d: d['magnons'][0].update(gamma_mhz='fast'), 'magnons[0].gamma_mhz'),
    (lambda d: d['magnons'][0].update(gamma_mhz=-1.0), 'system'),
    (lambda d: d.update(grid={'field_min_t': 0.3}), 'grid.field_max_t'),
    (lambda d: d.update(seed=1.5), 'seed'),
    (lambda d: d.update(magnons={'label': 'FMR'}), 'magnons'),
    (lambda d: d.pop('cavity'), 'cavity'),
    (lambda d: d.update(extra=1), '<root>'),
])
def test_errors_name_the_field(mutate, path):
    data = _base()
    mutate(data)
    with pytest.raises(gt.ConfigError) as err:
        RunConfig.from_dict(data)
    assert err.value.path == path
    assert str(err.value).startswith(f'{path}:')


def test_yaml_syntax_error(tmp_path):
    path = tmp_path / 'bad.yaml'
    path.write_text('name: x\ncavity: [1, 2\n')
    with pytest.raises(gt.ConfigError) as err:
        RunConfig.from_yaml(path)
    assert err.value.path.startswith(str(path) + ':')


def test_missing_file(tmp_path):
    with pytest.raises(gt.ConfigError):
        RunConfig.from_yaml(tmp_path / 'absent.yaml')
