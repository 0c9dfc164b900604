"""Command-line interface: verify, diagnose and sweep."""

import json
import logging
from pathlib import Path

import click

from measure_flow_lab.app import create_catalog
from measure_flow_lab.core.errors import (
    CapacityExceededError,
    ConfigError,
    HypothesisViolationError,
    IndependenceViolationError,
    InvalidArgumentError,
    NumericFailureError,
)
from measure_flow_lab.services.runner import ExperimentRunner
from measure_flow_lab.utils.config import ExperimentConfig, Settings, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

VERIFY_SCENARIOS = ("measure_flow", "extended", "time_linear")
DIAGNOSE_SCENARIOS = ("diagnostic",)
SWEEP_SCENARIOS = ("convergence",)


def _load(config_file: str, seed: int | None) -> ExperimentConfig:
    with open(config_file, encoding="utf-8") as f:
        text = f.read()
    config = parse_config(text)
    if seed is not None:
        # re-parse so overrides pass the same validation as the file
        data = config.to_dict()
        data["ensemble"]["seed"] = seed
        config = parse_config(json.dumps(data))
    return config


def _execute(
    ctx: click.Context,
    config_file: str,
    scenarios: tuple[str, ...],
    out: str | None,
    seed: int | None,
    threads: int | None,
) -> None:
    settings: Settings = ctx.obj["settings"]
    if threads is not None:
        if threads < 1:
            click.echo(f"Error: --threads must be >= 1, got {threads}", err=True)
            ctx.exit(EXIT_USAGE)
        settings.threads = threads
    try:
        config = _load(config_file, seed)
    except ConfigError as exc:
        click.echo("Error: invalid config", err=True)
        for problem in exc.problems:
            click.echo(f"  {problem}", err=True)
        ctx.exit(EXIT_USAGE)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        ctx.exit(EXIT_USAGE)

    if config.scenario not in scenarios:
        click.echo(
            f"Error: scenario {config.scenario!r} is not handled by this command (expects {', '.join(scenarios)})",
            err=True,
        )
        ctx.exit(EXIT_USAGE)

    out_dir = Path(out) if out else Path(config.output.directory) if config.output.directory else settings.get_output_dir()
    runner = ExperimentRunner(ctx.obj["catalog"], settings)
    try:
        run, written = runner.execute(config, out_dir)
    except HypothesisViolationError as exc:
        click.echo(f"Hypothesis violation: {exc}", err=True)
        ctx.exit(EXIT_FAILURE)
    except (NumericFailureError, CapacityExceededError) as exc:
        click.echo(f"Numeric failure: {exc}", err=True)
        ctx.exit(EXIT_FAILURE)
    except (IndependenceViolationError, InvalidArgumentError) as exc:
        click.echo(f"Error: {exc}", err=True)
        ctx.exit(EXIT_USAGE)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        ctx.exit(EXIT_USAGE)

    status = "PASS" if run.passed else "FAIL"
    click.echo(f"{status} {config.scenario} in {run.wall_clock:.2f}s")
    if run.formula is not None:
        click.echo(f"  max |residual| = {run.formula.max_abs_residual:.6g}")
    for report in run.inequalities:
        click.echo(f"  {report.name}: {'pass' if report.passed else 'fail'} (max ratio {report.max_ratio:.6g})")
    if run.convergence is not None:
        click.echo(
            f"  slopes: step {run.convergence.slope_step:.3f}, n_paths {run.convergence.slope_paths:.3f}"
        )
    for failure in run.failures:
        click.echo(f"  {failure}", err=True)
    for kind, path in written.items():
        click.echo(f"  {kind}: {path}")
    ctx.exit(EXIT_OK if run.passed else EXIT_FAILURE)


def _run_options(func):
    func = click.option("--threads", type=click.INT, default=None, help="Worker threads (results do not depend on it)")(func)
    func = click.option("--seed", type=click.INT, default=None, help="Override ensemble.seed")(func)
    func = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")(func)
    return click.argument("config_file", type=click.Path(dir_okay=False))(func)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """Monte Carlo checks of Ito-Krylov formulas for flows of measures."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.ensure_object(dict)
    if "settings" not in ctx.obj:
        ctx.obj["settings"] = Settings.load()
    if "catalog" not in ctx.obj:
        ctx.obj["catalog"] = create_catalog()


@cli.command()
@_run_options
@click.pass_context
def verify(ctx: click.Context, config_file: str, out: str | None, seed: int | None, threads: int | None) -> None:
    """Verify a measure_flow, extended or time_linear scenario."""
    _execute(ctx, config_file, VERIFY_SCENARIOS, out, seed, threads)


@cli.command()
@_run_options
@click.pass_context
def diagnose(ctx: click.Context, config_file: str, out: str | None, seed: int | None, threads: int | None) -> None:
    """Run the inequality diagnostics listed in a diagnostic config."""
    _execute(ctx, config_file, DIAGNOSE_SCENARIOS, out, seed, threads)


@cli.command()
@_run_options
@click.pass_context
def sweep(ctx: click.Context, config_file: str, out: str | None, seed: int | None, threads: int | None) -> None:
    """Run a convergence study over steps and ensemble sizes."""
    _execute(ctx, config_file, SWEEP_SCENARIOS, out, seed, threads)


@cli.command(name="list")
@click.pass_context
def list_names(ctx: click.Context) -> None:
    """List registered functionals, fields, presets and initial laws."""
    catalog = ctx.obj["catalog"]
    for registry in (
        catalog.functionals,
        catalog.extended,
        catalog.scalar_fields,
        catalog.pair_fields,
        catalog.outer_fields,
        catalog.time_fields,
        catalog.presets,
        catalog.init_laws,
    ):
        click.echo(f"{registry.kind}:")
        for name in registry.names():
            click.echo(f"  {name:<16} {registry.describe(name)}")


def run_cli(args: list[str] | None = None) -> int:
    """Run the CLI and map click's own usage errors to exit code 1."""
    try:
        result = cli.main(args=args, prog_name="measure-flow-lab", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    return result if isinstance(result, int) else EXIT_OK
