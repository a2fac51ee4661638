"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""


import logging
import sys

import click

from .config import config_location, get_config, initialize_logging
from .datagen import SCENARIO_BETAS, ScenarioSpec, generate_dataset, write_dataset_csv
from .exceptions import ValidationError, VisimError
from .formatter import Formatter
from .harness import METHODS, ExperimentConfig, run_elbow, run_experiment, theorem_verdicts
from .harness import write_elbow, write_results, write_summary
from .importance import CPI_TESTS
from .models import ForestConfig
from .rng import RngStream
from .utils import RHO_GRID, CsvListParamType, OutputSettings, atomic_output, optional_int, parse_grid

logger = logging.getLogger(__name__)

SCENARIO_LIST = CsvListParamType(str(s) for s in sorted(SCENARIO_BETAS))
METHOD_LIST = CsvListParamType(METHODS)


def _fail(message, exit_code):
    click.secho(message=message, fg="red", err=True)
    sys.exit(exit_code)


def _pick(flag_value, section, key, convert):
    """Flag value if given, otherwise the configured default."""
    if flag_value is not None:
        return flag_value
    return convert(click.get_current_context().obj[section][key])


def _formatter():
    config = click.get_current_context().obj
    settings = OutputSettings(
        table_format=config["main"]["table_format"], missingval=config["main"].get("missing_value", "-")
    )
    return Formatter(settings)


def _n_jobs(threads):
    return -1 if threads == 0 else threads


@click.group()
@click.option(
    "--clirc",
    default=config_location() + "config",
    envvar="VISIMRC",
    help="Location of clirc file.",
    type=click.Path(dir_okay=False),
)
@click.pass_context
def cli(ctx, clirc):
    """
    Variable importance simulation toolkit: permutation importance, OLS and knockoff-based CPI under
    correlated features, plus the equicorrelated knockoff elbow check.
    """
    ctx.obj = get_config(clirc)
    initialize_logging(ctx.obj)


@cli.command()
@click.option("--scenario", "scenarios", type=SCENARIO_LIST, default="1", help="Scenario(s), e.g. 1 or 1,2")
@click.option("--rho", "rho", type=RHO_GRID, help="Single correlation between x1 and x2")
@click.option("--rho-grid", "rho_grid", type=RHO_GRID, help="Correlation grid start:stop:step (inclusive)")
@click.option("--reps", type=click.IntRange(min=1), help="Replicates per (scenario, rho) cell")
@click.option("--n", "n", type=click.IntRange(min=1), help="Rows per simulated dataset")
@click.option("--methods", type=METHOD_LIST, default=",".join(METHODS), help="Comma separated subset of %s"
              % ",".join(METHODS))
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help="Master seed")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Per-replicate results CSV")
@click.option("--summary-out", type=click.Path(dir_okay=False), required=True, help="Aggregated summary CSV")
@click.option("--threads", type=click.IntRange(min=0), envvar="VI_SIM_THREADS", help="Worker count, 0 = auto")
@click.option("--n-trees", type=click.IntRange(min=1), help="Trees per forest")
@click.option("--mtry", type=click.IntRange(min=1), help="Candidate features per split")
@click.option("--min-leaf", type=click.IntRange(min=1), help="Minimum rows per leaf")
@click.option("--max-depth", type=click.IntRange(min=1), help="Maximum tree depth")
@click.option("--n-perms", type=click.IntRange(min=1), help="Shuffles per feature for permutation importance")
@click.option("--split-fraction", type=float, help="Training share for the linear CPI pipeline")
@click.option("--noise-sd", type=float, help="Standard deviation of the target noise")
@click.option("--cpi-test", type=click.Choice(CPI_TESTS), help="CPI inference: paired t-test or Wald")
@click.option("--ols-absolute", is_flag=True, default=False, help="Rank OLS coefficients by absolute value")
def run(scenarios, rho, rho_grid, reps, n, methods, seed, out, summary_out, threads, n_trees, mtry, min_leaf,
        max_depth, n_perms, split_fraction, noise_sd, cpi_test, ols_absolute):
    """Run the scenario x rho x replicate simulation study and write results and summary CSVs."""
    if rho is not None and rho_grid is not None:
        _fail("Use either --rho or --rho-grid, not both", 2)

    config = click.get_current_context().obj
    forest = config["forest"]
    try:
        cfg = ExperimentConfig(
            scenarios=tuple(int(s) for s in scenarios),
            rho_grid=rho or _pick(rho_grid, "experiment", "rho_grid", parse_grid),
            n=_pick(n, "experiment", "n", int),
            reps=_pick(reps, "experiment", "reps", int),
            methods=methods,
            master_seed=seed,
            forest_cfg=ForestConfig(
                n_trees=_pick(n_trees, "forest", "n_trees", int),
                mtry=mtry if mtry is not None else optional_int(forest.get("mtry")),
                min_leaf=_pick(min_leaf, "forest", "min_leaf", int),
                max_depth=max_depth if max_depth is not None else optional_int(forest.get("max_depth")),
            ),
            split_fraction=_pick(split_fraction, "experiment", "split_fraction", float),
            n_perms=_pick(n_perms, "experiment", "n_perms", int),
            noise_sd=_pick(noise_sd, "experiment", "noise_sd", float),
            cpi_test=_pick(cpi_test, "experiment", "cpi_test", str),
            ols_absolute=ols_absolute,
        )
        if cfg.cpi_test not in CPI_TESTS:
            raise ValidationError("cpi_test must be one of %s" % ", ".join(CPI_TESTS))
    except (ValidationError, ValueError) as e:
        _fail("Invalid experiment: %s" % e, 2)

    threads = _pick(threads, "experiment", "threads", int)
    try:
        results, summaries = run_experiment(cfg, n_jobs=_n_jobs(threads))
        # both files appear together or not at all
        with atomic_output(out) as results_file, atomic_output(summary_out) as summary_file:
            write_results(results, results_file)
            write_summary(summaries, summary_file)
    except (VisimError, OSError) as e:
        logger.exception("run failed")
        _fail("Run failed: %r" % e, 1)

    logger.info("wrote %d result rows to %s and %d summary rows to %s", len(results), out, len(summaries),
                summary_out)
    click.echo("\n".join(_formatter().format_rank_summary(summaries)))
    click.echo("Wrote %d result rows to %s and %d summary rows to %s" % (len(results), out, len(summaries),
                                                                         summary_out))


@cli.command()
@click.option("--rho-grid", "rho_grid", type=RHO_GRID, help="Correlation grid start:stop:step (inclusive)")
@click.option("--n", "n", type=click.IntRange(min=3), help="Bivariate Gaussian rows per grid point")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help="Master seed")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Elbow CSV")
@click.option("--estimate", is_flag=True, default=False, help="Build knockoffs from the estimated covariance")
def elbow(rho_grid, n, seed, out, estimate):
    """Tabulate corr(X1, X1~) against corr(X1, X2) for equicorrelated knockoffs."""
    rho_grid = _pick(rho_grid, "elbow", "rho_grid", parse_grid)
    n = _pick(n, "elbow", "n", int)
    try:
        rows = run_elbow(rho_grid, n, seed, estimate=estimate)
        with atomic_output(out) as f:
            write_elbow(rows, f)
    except ValidationError as e:
        _fail("Invalid elbow request: %s" % e, 2)
    except (VisimError, OSError) as e:
        logger.exception("elbow failed")
        _fail("Elbow failed: %r" % e, 1)

    click.echo("\n".join(_formatter().format_elbow(rows)))
    click.echo("Wrote %d rows to %s" % (len(rows), out))


@cli.command("theorem-check")
@click.option("--tol", type=click.FloatRange(min=0), help="Maximum allowed |empirical - theoretical|")
@click.option("--n", "n", type=click.IntRange(min=3), help="Bivariate Gaussian rows per grid point")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help="Master seed")
@click.option("--rho-grid", "rho_grid", type=RHO_GRID, help="Correlation grid start:stop:step (inclusive)")
@click.option("--estimate", is_flag=True, default=False, help="Build knockoffs from the estimated covariance")
def theorem_check(tol, n, seed, rho_grid, estimate):
    """Check corr(X1, X1~) = max(0, 2 corr(X1, X2) - 1) on the elbow grid; exit 0 iff every point passes."""
    tol = _pick(tol, "elbow", "tol", float)
    n = _pick(n, "elbow", "n", int)
    rho_grid = _pick(rho_grid, "elbow", "rho_grid", parse_grid)
    try:
        verdicts = theorem_verdicts(run_elbow(rho_grid, n, seed, estimate=estimate), tol)
    except ValidationError as e:
        _fail("Invalid theorem check request: %s" % e, 2)
    except VisimError as e:
        logger.exception("theorem check failed")
        _fail("Theorem check failed to run: %r" % e, 1)

    click.echo("\n".join(_formatter().format_verdicts(verdicts, tol)))
    passed = all(ok for _, ok in verdicts)
    logger.info("theorem check over %d grid points, tol %g: %s", len(verdicts), tol, "PASS" if passed else "FAIL")
    if passed:
        click.secho("Overall: PASS", fg="green")
    else:
        _fail("Overall: FAIL (%d of %d grid points outside tolerance)"
              % (sum(not ok for _, ok in verdicts), len(verdicts)), 1)


@cli.command("gen-data")
@click.option("--scenario", type=click.Choice([str(s) for s in sorted(SCENARIO_BETAS)]), default="1")
@click.option("--rho", type=RHO_GRID, default="0", help="Correlation between x1 and x2")
@click.option("--n", "n", type=click.IntRange(min=1), help="Rows to generate")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, help="Master seed")
@click.option("--noise-sd", type=float, help="Standard deviation of the target noise")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Dataset CSV")
def gen_data(scenario, rho, n, seed, noise_sd, out):
    """Write one simulated dataset as CSV."""
    if len(rho) != 1:
        _fail("--rho takes a single value", 2)
    try:
        spec = ScenarioSpec.for_scenario(
            int(scenario), rho[0], noise_sd=_pick(noise_sd, "experiment", "noise_sd", float)
        )
        dataset = generate_dataset(spec, _pick(n, "experiment", "n", int), RngStream(seed))
    except ValidationError as e:
        _fail("Invalid dataset request: %s" % e, 2)

    try:
        with atomic_output(out) as f:
            write_dataset_csv(dataset, f)
    except OSError as e:
        _fail("Could not write %s: %r" % (out, e), 1)
    click.echo("Wrote %d rows x %d features to %s" % (dataset.n, dataset.p, out))


if __name__ == "__main__":
    cli()
