import numpy as np
import pandas as pd
import pytest

import garnet as gt
from garnet._utils import spectrum_complex, spectrum_db, spectrum_grid, is_complex_spectrum


def _write(tmp_path, text, name='map.csv'):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_single_row_three_frequencies(tmp_path):
    path = _write(tmp_path, 'field_T,freq_Hz,s21_db\n'
                            '0.1,3e9,-5\n0.1,1e9,-3\n0.1,2e9,-4\n')
    adata = gt.io.load_spectrum_csv(path)
    assert adata.shape == (1, 3)
    np.testing.assert_array_equal(spectrum_grid(adata).freq_values, [1e9, 2e9, 3e9])
    np.testing.assert_array_equal(spectrum_db(adata), [[-3.0, -4.0, -5.0]])
    assert not is_complex_spectrum(adata)


def test_single_cell(tmp_path):
    adata = gt.io.load_spectrum_csv(_write(tmp_path, 'field_T,freq_Hz,s21_db\n0.3,8.8e9,-12.5\n'))
    assert adata.shape == (1, 1)
    assert spectrum_db(adata)[0, 0] == -12.5


def test_complex_columns(tmp_path):
    path = _write(tmp_path, 'field_T,freq_Hz,s21_db,s21_re,s21_im\n'
                            '0.1,1e9,-6.0206,0.5,0.0\n0.2,1e9,-6.0206,0.0,-0.5\n')
    adata = gt.io.load_spectrum_csv(path)
    assert adata.shape == (2, 1)
    np.testing.assert_array_equal(spectrum_complex(adata)[:, 0], [0.5, -0.5j])


def test_round_trip(tmp_path, cryo_te101):
    grid = gt.SweepGrid.linspace(0.315, 0.320, 7, 8.84e9, 8.87e9, 13)
    adata = gt.tl.spectrum_map(cryo_te101, grid)
    path = tmp_path / 'out.csv'
    gt.io.save_spectrum_csv(adata, path)
    back = gt.io.load_spectrum_csv(path)
    np.testing.assert_array_equal(spectrum_grid(back).field_values, grid.field_values)
    np.testing.assert_array_equal(spectrum_grid(back).freq_values, grid.freq_values)
    np.testing.assert_array_equal(spectrum_complex(back), spectrum_complex(adata))
    np.testing.assert_allclose(spectrum_db(back), spectrum_db(adata), rtol=1e-8)
    header = path.read_text().splitlines()[0]
    assert header == ','.join(gt.io.COMPLEX_COLUMNS)


def test_resave_is_identical(tmp_path, cryo_te101):
    grid = gt.SweepGrid.linspace(0.315, 0.320, 11, 8.84e9, 8.87e9, 17)
    first, second = tmp_path / 'first.csv', tmp_path / 'second.csv'
    gt.io.save_spectrum_csv(gt.tl.spectrum_map(cryo_te101, grid), first)
    gt.io.save_spectrum_csv(gt.io.load_spectrum_csv(first), second)
    assert second.read_bytes() == first.read_bytes()


@pytest.mark.parametrize('value', [0.1 + 0.2, 0.31576923076923075, 8855000000.000002, -1.2345678901234567e-05])
def test_seventeen_digits_read_back_exactly(tmp_path, value):
    text = f'field_T,freq_Hz,s21_db,s21_re,s21_im\n{value:.17g},{value:.17g},-3,{value:.17g},{-value:.17g}\n'
    adata = gt.io.load_spectrum_csv(_write(tmp_path, text))
    assert spectrum_grid(adata).field_values[0] == value
    assert spectrum_grid(adata).freq_values[0] == value
    assert spectrum_complex(adata)[0, 0] == complex(value, -value)


def test_magnitude_only_save(tmp_path, cryo_te101):
    grid = gt.SweepGrid.linspace(0.315, 0.320, 3, 8.84e9, 8.87e9, 4)
    adata = gt.tl.spectrum_map(cryo_te101, grid)
    flat = gt._utils.make_spectrum(grid, db=spectrum_db(adata))
    path = tmp_path / 'db.csv'
    gt.io.save_spectrum_csv(flat, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == gt.io.MAGNITUDE_COLUMNS
    assert len(frame) == 12


@pytest.mark.parametrize('text, row, fragment', [
    ('field,freq,db\n0.1,1e9,-3\n', 1, 'header'),
    ('field_T,freq_Hz,s21_db\n0.1,1e9,-3\n0.1,abc,-3\n', 3, 'malformed'),
    ('field_T,freq_Hz,s21_db\n0.1,1e9,-3\n0.1,1e9,-4\n', 3, 'duplicate'),
    ('field_T,freq_Hz,s21_db\n0.1,1e9,-3\n0.1,2e9,nan\n', 3, 'malformed'),
])
def test_format_errors(tmp_path, text, row, fragment):
    with pytest.raises(gt.SpectrumFormatError) as err:
        gt.io.load_spectrum_csv(_write(tmp_path, text))
    assert err.value.row == row
    assert fragment in str(err.value)
    assert str(err.value).startswith(f'row {row}:')


def test_missing_cell(tmp_path):
    text = 'field_T,freq_Hz,s21_db\n0.1,1e9,-3\n0.1,2e9,-3\n0.2,1e9,-3\n'
    with pytest.raises(gt.SpectrumFormatError) as err:
        gt.io.load_spectrum_csv(_write(tmp_path, text))
    assert 'not rectangular' in str(err.value)
    assert '1 missing' in str(err.value)


def test_empty_file(tmp_path):
    with pytest.raises(gt.SpectrumFormatError):
        gt.io.load_spectrum_csv(_write(tmp_path, ''))
    with pytest.raises(gt.SpectrumFormatError):
        gt.io.load_spectrum_csv(_write(tmp_path, 'field_T,freq_Hz,s21_db\n', 'header_only.csv'))


def test_unwritable_path(tmp_path, cryo_te101):
    adata = gt.tl.spectrum_map(cryo_te101, gt.SweepGrid([0.3], [8.8e9]))
    with pytest.raises(OSError) as err:
        gt.io.save_spectrum_csv(adata, tmp_path / 'missing' / 'out.csv')
    assert 'missing' in str(err.value)


def test_branches_frame(cryo_te101):
    diagram = gt.tl.polariton_branches(cryo_te101, [0.316, 0.317])
    frame = gt.io.branches_frame(diagram)
    assert list(frame.columns) == ['field_T', 'branch_0_Hz', 'branch_0_cavity_weight',
                                   'branch_1_Hz', 'branch_1_cavity_weight',
                                   'branch_2_Hz', 'branch_2_cavity_weight']
    np.testing.assert_allclose(frame.filter(like='weight').sum(axis=1), 1.0)
