"""Command-line interface: simulate, fit and analyse cavity-magnon spectra."""

import sys
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import typer
import yaml
from scanpy import logging as logg
from scanpy import settings
from typing_extensions import Annotated

from . import datasets, inference, io
from . import tools as tl
from ._errors import GarnetError, ConfigError
from ._types import validate_system
from ._utils import dbm_to_watt, make_spectrum, spectrum_db, spectrum_grid

try:  # typer >= 0.26 vendors its own click
    from typer._click import exceptions as _click_exceptions
except ImportError:
    _click_exceptions = click.exceptions

app = typer.Typer(
    name='garnet',
    help='Cavity-magnon polariton spectra: simulate, fit and derive.',
    add_completion=False,
    no_args_is_help=True,
)

ConfigOption = Annotated[Path, typer.Option('--config', '-c', help='YAML run configuration')]
OutOption = Annotated[Optional[Path], typer.Option(
    '--out', '-o', envvar='GARNET_OUTPUT_DIR',
    help='Output directory (default: config output.directory, then .)')]
SeedOption = Annotated[Optional[int], typer.Option('--seed', help='Random seed (overrides config)')]
DumpOption = Annotated[bool, typer.Option(
    '--dump-config', help='Print the parsed configuration as YAML and exit')]


@app.callback()
def _setup(
    verbose: Annotated[int, typer.Option('--verbose', '-v', count=True, help='More log output')] = 0,
    log_file: Annotated[Optional[Path], typer.Option('--log-file', help='Write the log here')] = None,
):
    settings.verbosity = min(1 + verbose, 4)
    if log_file is not None:
        settings.logfile = str(log_file)


def _load(config: Path, seed: Optional[int]) -> io.RunConfig:
    return io.RunConfig.from_yaml(config).with_seed(seed)


def _out_dir(out: Optional[Path], cfg: io.RunConfig) -> Path:
    path = out or Path(cfg.output_dir or '.')
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_grid(cfg: io.RunConfig):
    if cfg.grid is None:
        raise ConfigError('grid', 'this command needs a grid section')
    return cfg.grid


def _noisy(adata, cfg: io.RunConfig):
    # gaussian dB noise from the run seed; the complex layers no longer apply
    if cfg.noise_db <= 0:
        return adata
    rng = np.random.default_rng(cfg.seed)
    db = spectrum_db(adata) + rng.normal(0.0, cfg.noise_db, size=adata.shape)
    meta = dict(adata.uns['garnet']['metadata'], noise_db=cfg.noise_db, seed=cfg.seed)
    return make_spectrum(spectrum_grid(adata), db=db, metadata=meta)


def _save_map(adata, path: Path, cfg: io.RunConfig):
    if not cfg.write_complex:
        adata = make_spectrum(spectrum_grid(adata), db=spectrum_db(adata))
    io.save_spectrum_csv(adata, path)
    typer.echo(f'wrote {path}')


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    return f'{value:.4g}'


@app.command()
def simulate(
    config: ConfigOption,
    out: OutOption = None,
    seed: SeedOption = None,
    dump_config: DumpOption = False,
):
    """Transmission map and polariton branches over the configured grid."""
    cfg = _load(config, seed)
    if dump_config:
        typer.echo(cfg.dump(), nl=False)
        return 0
    grid = _require_grid(cfg)
    target = _out_dir(out, cfg)
    adata = tl.spectrum_map(cfg.system, grid, metadata={'config': cfg.name}, n_jobs=cfg.n_jobs)
    _save_map(_noisy(adata, cfg), target / f'{cfg.name}_map.csv', cfg)
    diagram = tl.polariton_branches(cfg.system, grid.field_values)
    path = target / f'{cfg.name}_branches.csv'
    io.save_branches_csv(diagram, path)
    typer.echo(f'wrote {path}')
    return 0


@app.command()
def fit(
    data: Annotated[Path, typer.Option('--data', '-d', help='Spectrum CSV')],
    config: ConfigOption,
    out: OutOption = None,
    seed: SeedOption = None,
    guess_from_config: Annotated[bool, typer.Option(
        '--guess-from-config', help='Start from the configured system instead of the peak-based guess')] = False,
    dump_config: DumpOption = False,
):
    """Fit the transmission model to a measured or simulated map."""
    cfg = _load(config, seed)
    if dump_config:
        typer.echo(cfg.dump(), nl=False)
        return 0
    adata = io.load_spectrum_csv(data)
    if guess_from_config:
        guess = inference.InitialGuess(system=cfg.system)
    else:
        guess = inference.initial_guess(
            adata, labels=cfg.fit.labels, port_ratio=cfg.fit.port_ratio,
            prominence_db=cfg.fit.prominence_db, constants=cfg.constants, reference=cfg.system,
        )
    report = inference.fit_hybrid(adata, cfg.fit_config(guess.system), guess, n_jobs=cfg.n_jobs)

    target = _out_dir(out, cfg)
    summary = report.to_dict()
    summary['provenance']['data'] = str(data)
    summary['provenance']['guess_warnings'] = list(guess.warnings)
    path = target / f'{cfg.name}_fit.yaml'
    with open(path, 'w') as f:
        yaml.safe_dump(summary, f, sort_keys=False)
    typer.echo(f'wrote {path}')

    grid = spectrum_grid(adata)
    model = tl.spectrum_map(report.fitted, grid, metadata={'config': cfg.name})
    overlay = make_spectrum(grid, db=spectrum_db(model) + report.db_offset)
    _save_map(overlay, target / f'{cfg.name}_fit_map.csv', cfg)

    typer.echo(f'converged={_fmt(report.converged)}')
    typer.echo(f'residual_rms_db={_fmt(report.residual_rms)}')
    for label, c in report.cooperativities().items():
        typer.echo(f'C_{label}={c:.3g}')
    return 0


def derive_lines(cfg: io.RunConfig) -> List[str]:
    """Derived quantities of a configuration, one `key=value` string each."""
    system, mat, consts = cfg.system, cfg.material, cfg.constants
    cav = system.cavity
    lines = [f'kappa_tot_mhz={cav.kappa_tot / 1e6:.4g}']
    for m in system.magnons:
        lines.append(f'C_{m.label}={tl.cooperativity(m.g_tilde, cav.kappa_tot, m.gamma_m):.3g}')

    g_single = tl.single_spin_coupling(mat.eta, cav.omega_c, mat.mode_volume_m3, consts)
    lines.append(f'g_single_hz={_fmt(g_single)}')
    n_spins = None
    if system.magnons:
        reference = system.magnons[0]
        n_spins = tl.spin_count(reference.g_tilde, g_single, consts.spin_per_ion)
        lines.append(f'N_spins={_fmt(n_spins)}')

    n_thermal = tl.thermal_photon_number(cav.omega_c, mat.temperature_k, consts)
    lines.append(f'n_thermal_cavity={_fmt(n_thermal)}')
    if mat.temperature_k < 1:
        logg.warning(
            f'{n_thermal:.2g} thermal photons at {mat.temperature_k:g} K; 1e-2 photons would need '
            f'{tl.effective_temperature(1e-2, cav.omega_c, consts) * 1e3:.0f} mK'
        )
    for p in mat.input_power_dbm:
        n = tl.drive_photon_number(dbm_to_watt(p), cav.omega_c, cav,
                                   line_gain_db=mat.line_gain_db, constants=consts)
        lines.append(f'n_drive_at_{p:g}dBm={_fmt(n)}')

    if mat.relative_permittivity is not None and mat.k_ms_rad_per_m is not None:
        report = tl.magnetostatic_regime_check(
            cav.omega_c, mat.relative_permittivity, mat.k_ms_rad_per_m, consts, mat.regime_threshold)
        lines += [
            f'k0_rad_per_m={_fmt(report.k0)}',
            f'exchange_cutoff_rad_per_m={_fmt(report.exchange_cutoff)}',
            f'regime_lower_ratio={_fmt(report.lower_ratio)}',
            f'regime_upper_ratio={_fmt(report.upper_ratio)}',
            f'regime_ok={_fmt(report.ok)}',
        ]
    else:
        lines.append('regime_check=skipped, relative_permittivity and k_ms_rad_per_m are not configured')

    for m in system.magnons:
        total_spin = m.total_spin
        if total_spin is None and n_spins is not None:
            total_spin = consts.spin_per_ion * n_spins
        if total_spin is None:
            continue
        occupation = mat.mean_magnon_number
        if occupation is None:
            occupation = tl.thermal_magnon_number(
                m, m.resonant_field(cav.omega_c), mat.temperature_k, consts)
        ratio = tl.low_excitation_ratio(occupation, total_spin)
        lines.append(f'low_excitation_ratio_{m.label}={_fmt(ratio)}')
        lines.append(f'low_excitation_ok_{m.label}={_fmt(ratio < mat.low_excitation_threshold)}')
    return lines


@app.command()
def derive(
    config: ConfigOption,
    seed: SeedOption = None,
    dump_config: DumpOption = False,
):
    """Cooperativities, spin count, photon numbers and regime checks."""
    cfg = _load(config, seed)
    if dump_config:
        typer.echo(cfg.dump(), nl=False)
        return 0
    for line in derive_lines(cfg):
        typer.echo(line)
    return 0


def _parse_multipliers(value: str) -> List[float]:
    try:
        multipliers = [float(x) for x in value.split(',') if x.strip()]
    except ValueError:
        raise typer.BadParameter(f'expected comma-separated numbers, got {value!r}') from None
    if not multipliers or any(not x > 0 for x in multipliers):
        raise typer.BadParameter(f'multipliers must be positive, got {value!r}')
    return multipliers


@app.command('sweep-damping')
def sweep_damping(
    config: ConfigOption,
    multipliers: Annotated[Optional[str], typer.Option(
        '--multipliers', '-m', help='Comma-separated damping factors (default: config sweep)')] = None,
    magnon: Annotated[Optional[str], typer.Option(
        '--magnon', help='Label of the swept magnon (default: config sweep)')] = None,
    out: OutOption = None,
    seed: SeedOption = None,
    dump_config: DumpOption = False,
):
    """One transmission map per damping multiplier of one magnon mode."""
    cfg = _load(config, seed)
    if dump_config:
        typer.echo(cfg.dump(), nl=False)
        return 0
    factors = _parse_multipliers(multipliers) if multipliers else list(cfg.sweep.multipliers)
    label = magnon or cfg.sweep.magnon
    grid = _require_grid(cfg)
    target = _out_dir(out, cfg)
    maps = tl.damping_sweep(cfg.system, label, factors, grid, n_jobs=cfg.n_jobs)
    cav = cfg.system.cavity
    for x, adata in zip(factors, maps):
        path = target / f'{cfg.name}_map.csv' if factors == [1.0] else target / f'{cfg.name}_{label}_x{x:g}_map.csv'
        _save_map(_noisy(adata, cfg), path, cfg)
        for m in cfg.system.magnons:
            split = tl.dip_splitting(adata, m.resonant_field(cav.omega_c), cav.omega_c,
                                     window=2 * m.g_tilde + cav.kappa_tot)
            typer.echo(f'splitting_{m.label}_x{x:g}_mhz={split / 1e6:.4g}')
    return 0


@app.command()
def check(
    config: ConfigOption,
    seed: SeedOption = None,
    dump_config: DumpOption = False,
):
    """Validate the system, the magnetostatic regime and the low-excitation limit."""
    cfg = _load(config, seed)
    if dump_config:
        typer.echo(cfg.dump(), nl=False)
        return 0
    ok = True
    violations = validate_system(cfg.system, None if cfg.grid is None else cfg.grid.field_values)
    typer.echo(f'system_valid={_fmt(not violations)}')
    for v in violations:
        typer.echo(f'violation={v}')
    ok &= not violations

    for line in derive_lines(cfg):
        key, value = line.split('=', 1)
        if key == 'regime_check':
            typer.echo(line)
        elif key == 'regime_ok' or key.startswith('low_excitation_ok_'):
            typer.echo(line)
            ok &= value == 'true'
    typer.echo(f'all_ok={_fmt(ok)}')
    return 0 if ok else 1


@app.command()
def table():
    """Cooperativity table of the shipped presets, as CSV."""
    frame = tl.cooperativity_table(datasets.measured_systems())
    typer.echo(frame.to_csv(index=False, float_format='%.4g', lineterminator='\n'), nl=False)
    return 0


def cli_main(argv: Optional[List[str]] = None) -> int:
    """\
    Run the CLI on `argv` and return the exit code: 0 on success, 1 on a
    domain error, 2 on a usage error.
    """
    try:
        rv = app(args=argv, standalone_mode=False, prog_name='garnet')
    except _click_exceptions.UsageError as e:
        e.show()
        return 2
    except _click_exceptions.Abort:
        return 1
    except (GarnetError, ValueError, KeyError, OSError) as e:
        typer.echo(f'error: {e}', err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def main():
    sys.exit(cli_main())


if __name__ == '__main__':
    main()
