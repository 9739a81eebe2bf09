"""
Command-line entry point for the Sentinel federated simulator
"""
import logging
import os
from dataclasses import replace

import click

from config import get_config
from models.run_config import RunConfig
from services.experiment_service import ExperimentService
from services.gradcheck_service import GradcheckService
from services.report_service import ABLATION_FILE
from utils.decorators import cli_errors


def configure_logging(verbose=False):
    settings = get_config()
    level = logging.DEBUG if verbose else getattr(logging, str(settings.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, force=True)


def load_run_config(config_path=None, out=None, seed=None, threads=None):
    """RunConfig from an optional file, process-level defaults, then command-line overrides"""
    settings = get_config()
    cfg = RunConfig.from_file(config_path) if config_path else RunConfig()
    process_defaults = {
        'threads': settings.DEFAULT_THREADS,
        'float_dtype': settings.FLOAT_DTYPE,
        'output_dir': os.path.join(settings.OUTPUT_DIR, 'latest'),
    }
    cfg = replace(cfg, **{k: v for k, v in process_defaults.items() if k not in cfg.explicit_keys})
    return cfg.with_overrides(output_dir=out, seed=seed, threads=threads)


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Log at DEBUG level.')
def cli(verbose):
    """Personalized federated intrusion-detection simulator."""
    configure_logging(verbose)


@cli.command()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='key=value run configuration.')
@click.option('--out', type=click.Path(file_okay=False), help='Output directory (overrides output_dir).')
@click.option('--seed', type=int, help='Random seed (overrides seed).')
@click.option('--threads', type=int, help='Worker threads for client updates.')
@cli_errors
def run(config_path, out, seed, threads):
    """Train Sentinel or FedAvg and write rounds.csv, summary.json and the config echo."""
    cfg = load_run_config(config_path, out, seed, threads)
    result = ExperimentService.run_experiment(cfg, cfg.output_dir)
    click.echo(f"Wrote {result.paths['rounds']}")


@cli.command()
@click.option('--trials', type=int, help='Random instances per loss.')
@click.option('--seed', type=int, default=0, show_default=True)
def gradcheck(trials, seed):
    """Compare analytic gradients with central finite differences."""
    settings = get_config()
    trials = trials or settings.GRADCHECK_TRIALS
    results = GradcheckService.run_suite(trials=trials, tolerance=settings.GRADCHECK_TOLERANCE, seed=seed)
    for r in results:
        click.echo(f"{r.name:<14} {r.max_rel_error:.3e}  {'ok' if r.passed else 'FAIL'}")
    if not GradcheckService.all_passed(results):
        raise click.ClickException('gradient check failed')
    click.echo(f"all {len(results)} checks passed ({trials} trials each)")


@cli.command('partition-inspect')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False))
@click.option('--out', type=click.Path(file_okay=False), help='Directory for partition.csv and labels.json.')
@click.option('--seed', type=int)
@cli_errors
def partition_inspect(config_path, out, seed):
    """Print per-client class counts and their total-variation distance to the global mix."""
    cfg = load_run_config(config_path, seed=seed)
    frame = ExperimentService.inspect_partition(cfg, out)
    click.echo(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


@cli.command()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False))
@click.option('--out', type=click.Path(file_okay=False))
@click.option('--seed', type=int)
@click.option('--threads', type=int)
@cli_errors
def ablate(config_path, out, seed, threads):
    """Run the four loss-component ablation rows on one partition."""
    cfg = load_run_config(config_path, out, seed, threads)
    rows = ExperimentService.run_ablation(cfg, cfg.output_dir)
    for row in rows:
        click.echo(f"{row['row']:<22} {row['macro_f1_mean']:.4f} +/- {row['macro_f1_std']:.4f}")
    click.echo(f"Wrote {os.path.join(cfg.output_dir, ABLATION_FILE)}")


if __name__ == '__main__':
    cli()
