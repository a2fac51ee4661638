"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

Simulated datasets: Gaussian-copula Uniform(0,1) features with one correlated pair, a linear target
and Gaussian noise.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import InvalidRho, ValidationError
from .numerics import cholesky

logger = logging.getLogger(__name__)

N_RAW_FEATURES = 10
DEFAULT_N = 1000
DEFAULT_NOISE_SD = math.sqrt(0.1)
AVG_FEATURE_NAME = "avg_x1_x2"

_SIGNAL_TAIL = (1.0, 1.0, 1.0, 0.0, 0.5, 0.8, 1.2, 1.5)
SCENARIO_BETAS = {
    1: (1.0, 1.0) + _SIGNAL_TAIL,
    2: (0.0, 1.0) + _SIGNAL_TAIL,
    3: (1.0, 1.0) + _SIGNAL_TAIL,
    4: (0.0, 1.0) + _SIGNAL_TAIL,
}
AGGREGATED_SCENARIOS = frozenset((3, 4))

# substream keys under a dataset stream
_FEATURE_STREAM = 0
_NOISE_STREAM = 1


def validate_rho(rho):
    if not (isinstance(rho, (int, float)) and 0.0 <= rho < 1.0):
        raise InvalidRho("rho must lie in [0, 1), got %r" % (rho,))
    return float(rho)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    beta: tuple
    rho: float
    noise_sd: float = DEFAULT_NOISE_SD
    aggregate_first_two: bool = False

    def __post_init__(self):
        validate_rho(self.rho)
        if len(self.beta) != N_RAW_FEATURES:
            raise ValidationError("beta must have %d entries, got %d" % (N_RAW_FEATURES, len(self.beta)))
        if not self.noise_sd >= 0:
            raise ValidationError("noise_sd must be non-negative, got %r" % (self.noise_sd,))

    @classmethod
    def for_scenario(cls, scenario_id, rho, noise_sd=DEFAULT_NOISE_SD):
        if scenario_id not in SCENARIO_BETAS:
            raise ValidationError("unknown scenario %r, expected one of 1, 2, 3, 4" % (scenario_id,))
        return cls(
            scenario_id=scenario_id,
            beta=SCENARIO_BETAS[scenario_id],
            rho=rho,
            noise_sd=noise_sd,
            aggregate_first_two=scenario_id in AGGREGATED_SCENARIOS,
        )

    @property
    def feature_names(self):
        names = ["x%d" % (j + 1) for j in range(N_RAW_FEATURES)]
        if self.aggregate_first_two:
            return (AVG_FEATURE_NAME,) + tuple(names[2:])
        return tuple(names)


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0] or self.x.shape[1] != len(self.feature_names):
            raise ValidationError(
                "inconsistent dataset: x %s, y %s, %d names" % (self.x.shape, self.y.shape, len(self.feature_names))
            )

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def take(self, rows):
        return Dataset(self.x[rows], self.y[rows], self.feature_names)

    def standardized(self):
        """Return a copy whose feature columns have mean 0 and unit sample standard deviation."""
        sd = self.x.std(axis=0, ddof=1)
        sd[sd == 0] = 1.0
        return Dataset((self.x - self.x.mean(axis=0)) / sd, self.y, self.feature_names)

    def split(self, fraction, rng):
        """Randomly split rows into (train, evaluation) with round(fraction·n) training rows."""
        if not 0.0 < fraction < 1.0:
            raise ValidationError("split fraction must lie in (0, 1), got %r" % (fraction,))
        order = rng.generator().permutation(self.n)
        n_train = int(round(fraction * self.n))
        return self.take(np.sort(order[:n_train])), self.take(np.sort(order[n_train:]))


def copula_sample(n, rho, rng):
    """Draw n rows of 10 Uniform(0,1) features; columns 1 and 2 share latent Gaussian correlation rho."""
    rho = validate_rho(rho)
    if n < 1:
        raise ValidationError("n must be positive, got %r" % (n,))
    latent_corr = np.eye(N_RAW_FEATURES)
    latent_corr[0, 1] = latent_corr[1, 0] = rho
    lower = cholesky(latent_corr).lower
    z = rng.generator().standard_normal((n, N_RAW_FEATURES)) @ lower.T
    return ndtr(z)


def _aggregate(x):
    avg = (x[:, 0] + x[:, 1]) / 2.0
    return np.column_stack([avg, x[:, 2:]])


def _target(spec, x):
    beta = np.asarray(spec.beta)
    if spec.aggregate_first_two:
        weight = (beta[0] + beta[1]) / 2.0
        return weight * (x[:, 0] + x[:, 1]) / 2.0 + x[:, 2:] @ beta[2:]
    return x @ beta


def scenario_target(spec, x_row):
    """Evaluate the scenario's noiseless target at one raw (pre-aggregation) feature row."""
    x_row = np.asarray(x_row, dtype=float)
    if x_row.shape != (N_RAW_FEATURES,):
        raise ValidationError("expected %d raw features, got shape %s" % (N_RAW_FEATURES, x_row.shape))
    return float(_target(spec, x_row[np.newaxis, :])[0])


def generate_dataset(spec, n, rng):
    raw = copula_sample(n, spec.rho, rng.child(_FEATURE_STREAM))
    noise = rng.child(_NOISE_STREAM).generator().standard_normal(n)
    y = _target(spec, raw) + spec.noise_sd * noise
    x = _aggregate(raw) if spec.aggregate_first_two else raw
    logger.debug("generated scenario %d dataset: n=%d rho=%g stream=%r", spec.scenario_id, n, spec.rho, rng)
    return Dataset(x, y, spec.feature_names)


def write_dataset_csv(dataset, fileobj):
    """Write dataset as CSV with one column per feature followed by y (round-trip float formatting)."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(list(dataset.feature_names) + ["y"])
    for row, target in zip(dataset.x, dataset.y):
        writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])
