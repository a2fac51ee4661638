"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

Simulation study orchestration: scenario x rho x replicate grids for the four importance pipelines, their
aggregation, and the bivariate knockoff elbow experiment.
"""

import csv
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .datagen import DEFAULT_N, DEFAULT_NOISE_SD, SCENARIO_BETAS, ScenarioSpec, generate_dataset, validate_rho
from .exceptions import ValidationError, VisimError
from .importance import DEFAULT_N_PERMS, cpi, ols_importance, permutation_importance
from .knockoffs import GaussianModel, diagnostics, estimate_gaussian, knockoff_params, sample_knockoffs
from .knockoffs import theoretical_self_corr
from .models import ForestConfig, fit_forest, fit_ols
from .numerics import cholesky
from .rng import RngStream

logger = logging.getLogger(__name__)

METHODS = ("lm", "perm-rf", "cpi-lm", "cpi-rf")
REJECTION_LEVEL = 0.05
DEFAULT_RHO_GRID = tuple(round(0.1 * k, 10) for k in range(10))

RESULTS_HEADER = ("scenario", "rho", "replicate", "method", "feature", "importance", "std_err", "p_value", "rank",
                  "error")
SUMMARY_HEADER = ("scenario", "rho", "method", "feature", "mean_importance", "mean_rank", "rejection_rate", "n_reps")
ELBOW_HEADER = ("rho", "empirical_self_corr", "theoretical_self_corr", "n")

# substream keys under a replicate stream
_DATA_STREAM = 0
_FOREST_STREAM = 1
_METHOD_STREAM_BASE = 2

ReplicateResult = namedtuple(
    "ReplicateResult",
    "scenario rho replicate method feature_index feature importance std_err p_value rank error",
)
SummaryResult = namedtuple(
    "SummaryResult", "scenario rho method feature_index feature mean_importance mean_rank rejection_rate n_reps"
)
ElbowRow = namedtuple("ElbowRow", "rho empirical_self_corr theoretical_self_corr n")


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple = (1,)
    rho_grid: tuple = DEFAULT_RHO_GRID
    n: int = DEFAULT_N
    reps: int = 100
    methods: tuple = METHODS
    master_seed: int = 0
    forest_cfg: ForestConfig = field(default_factory=ForestConfig)
    split_fraction: float = 0.5
    n_perms: int = DEFAULT_N_PERMS
    noise_sd: float = DEFAULT_NOISE_SD
    cpi_test: str = "t"
    ols_absolute: bool = False

    def __post_init__(self):
        if not self.scenarios:
            raise ValidationError("at least one scenario is required")
        for scenario in self.scenarios:
            if scenario not in SCENARIO_BETAS:
                raise ValidationError("unknown scenario %r, expected one of 1, 2, 3, 4" % (scenario,))
        if not self.rho_grid:
            raise ValidationError("the rho grid is empty")
        for rho in self.rho_grid:
            validate_rho(rho)
        if not self.methods:
            raise ValidationError("at least one method is required")
        for method in self.methods:
            if method not in METHODS:
                raise ValidationError("invalid method %r, expected one of %s" % (method, ", ".join(METHODS)))
        if self.reps < 1 or self.n < 1 or self.n_perms < 1:
            raise ValidationError("reps, n and n_perms must be positive")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError("split fraction must lie in (0, 1), got %r" % (self.split_fraction,))
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer, got %r" % (self.master_seed,))

    @property
    def n_cells(self):
        return len(self.scenarios) * len(self.rho_grid) * self.reps


class _Replicate:
    """One simulated dataset and the lazily shared pieces its pipelines need."""

    def __init__(self, cfg, scenario, rho_index, rep_index):
        self.cfg = cfg
        self.stream = RngStream(cfg.master_seed).child(scenario, rho_index, rep_index)
        spec = ScenarioSpec.for_scenario(scenario, cfg.rho_grid[rho_index], noise_sd=cfg.noise_sd)
        # lm reads coefficients on the raw scale; every other pipeline sees standardized columns
        self.raw = generate_dataset(spec, cfg.n, self.stream.child(_DATA_STREAM))
        self.data = self.raw.standardized()
        self._forest = None

    @property
    def forest(self):
        if self._forest is None:
            self._forest = fit_forest(self.data, self.cfg.forest_cfg, self.stream.child(_FOREST_STREAM))
        return self._forest

    def run(self, method):
        cfg = self.cfg
        stream = self.stream.child(_METHOD_STREAM_BASE + METHODS.index(method))
        if method == "lm":
            return ols_importance(fit_ols(self.raw), self.raw.feature_names, absolute=cfg.ols_absolute)
        if method == "perm-rf":
            return permutation_importance(self.forest, self.data, cfg.n_perms, stream)
        if method == "cpi-lm":
            train, held_out = self.data.split(cfg.split_fraction, stream.child(0))
            params = knockoff_params(estimate_gaussian(train.x))
            return cpi(fit_ols(train), held_out, params, stream.child(1), test=cfg.cpi_test)
        params = knockoff_params(estimate_gaussian(self.data.x))
        return cpi(self.forest, self.data, params, stream.child(1), test=cfg.cpi_test)


def _failure(scenario, rho, rep_index, method, error):
    message = "%s: %s" % (type(error).__name__, error)
    return ReplicateResult(scenario, rho, rep_index, method, -1, "", None, None, None, None, message)


def run_replicate(cfg, scenario, rho, rep_index):
    """Run every configured method on one simulated dataset.

    :return: list of ReplicateResult, one per (method, feature); a failed method yields a single tagged row
    """
    rho_index = cfg.rho_grid.index(rho)
    try:
        replicate = _Replicate(cfg, scenario, rho_index, rep_index)
    except VisimError as e:
        return [_failure(scenario, rho, rep_index, method, e) for method in cfg.methods]

    results = []
    for method in cfg.methods:
        try:
            report = replicate.run(method)
        except VisimError as e:
            results.append(_failure(scenario, rho, rep_index, method, e))
            continue
        results.extend(
            ReplicateResult(scenario, rho, rep_index, method, j, f.name, f.importance, f.std_err, f.p_value, f.rank,
                            None)
            for j, f in enumerate(report.per_feature)
        )
    return results


def _sort_key(row):
    return row.scenario, row.rho, METHODS.index(row.method), row.feature_index, row.replicate


def summarize(results):
    """Aggregate replicate rows per (scenario, rho, method, feature); tagged failures are skipped."""
    groups = {}
    for row in results:
        if row.error is None:
            key = (row.scenario, row.rho, METHODS.index(row.method), row.feature_index, row.method, row.feature)
            groups.setdefault(key, []).append(row)

    summaries = []
    for key in sorted(groups):
        rows = groups[key]
        tested = [r.p_value for r in rows if r.p_value is not None]
        summaries.append(
            SummaryResult(
                scenario=key[0],
                rho=key[1],
                method=key[4],
                feature_index=key[3],
                feature=key[5],
                mean_importance=math.fsum(r.importance for r in rows) / len(rows),
                mean_rank=math.fsum(r.rank for r in rows) / len(rows),
                rejection_rate=sum(p < REJECTION_LEVEL for p in tested) / len(tested) if tested else None,
                n_reps=len(rows),
            )
        )
    return summaries


def run_experiment(cfg, n_jobs=1):
    """Run the full grid; output order is independent of the execution schedule.

    :param n_jobs: joblib worker count (-1 uses every core)
    :return: (sorted replicate rows, summary rows)
    """
    logger.info(
        "running %d replicates: scenarios=%s rho_grid=%s methods=%s n=%d seed=%d",
        cfg.n_cells, cfg.scenarios, cfg.rho_grid, ",".join(cfg.methods), cfg.n, cfg.master_seed,
    )
    tasks = (
        delayed(run_replicate)(cfg, scenario, rho, rep)
        for scenario in cfg.scenarios
        for rho in cfg.rho_grid
        for rep in range(cfg.reps)
    )
    batches = Parallel(n_jobs=n_jobs)(tasks)
    # worker processes carry no log handlers
    for batch in batches:
        if batch:
            first = batch[0]
            logger.debug("finished scenario %d rho %r replicate %d", first.scenario, first.rho, first.replicate)
        for row in batch:
            if row.error is not None:
                logger.warning("scenario %d rho %r replicate %d method %s failed: %s", row.scenario, row.rho,
                               row.replicate, row.method, row.error)
    results = sorted((row for batch in batches for row in batch), key=_sort_key)
    failures = sum(1 for row in results if row.error is not None)
    if failures:
        logger.warning("%d method runs failed and were tagged in the results", failures)
    return results, summarize(results)


def run_elbow(rho_grid, n, master_seed, estimate=False):
    """Empirical versus theoretical corr(X1, X~1) for bivariate Gaussian data on a grid of correlations.

    :param estimate: build knockoffs from the estimated covariance instead of the true one
    """
    if n < 3:
        raise ValidationError("elbow needs n >= 3, got %r" % (n,))
    rows = []
    for i, rho in enumerate(rho_grid):
        rho = validate_rho(rho)
        stream = RngStream(master_seed).child(i)
        cov = np.array([[1.0, rho], [rho, 1.0]])
        x = stream.child(0).generator().standard_normal((n, 2)) @ cholesky(cov).lower.T
        model = estimate_gaussian(x) if estimate else GaussianModel(mean=np.zeros(2), cov=cov)
        params = knockoff_params(model)
        x_tilde = sample_knockoffs(x, params, stream.child(1))
        stats = diagnostics(x, x_tilde, params)
        rows.append(ElbowRow(rho, float(stats.per_feature_self_corr[0]), theoretical_self_corr(rho), n))
        logger.debug(
            "elbow rho=%g: self corr %.4f, knockoff pair corr %.4f, cross-cov error %.4f",
            rho, rows[-1].empirical_self_corr, stats.knockoff_pair_corr, stats.cross_corr_error,
        )
    return rows


def theorem_verdicts(rows, tol):
    """Pair each elbow row with whether |empirical - theoretical| < tol."""
    return [(row, abs(row.empirical_self_corr - row.theoretical_self_corr) < tol) for row in rows]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(fileobj, header, records):
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(header)
    for record in records:
        writer.writerow([_fmt(getattr(record, name)) for name in header])


def write_results(results, fileobj):
    _write(fileobj, RESULTS_HEADER, results)


def write_summary(summaries, fileobj):
    _write(fileobj, SUMMARY_HEADER, summaries)


def write_elbow(rows, fileobj):
    _write(fileobj, ELBOW_HEADER, rows)
