"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

Variable importance: OLS coefficients, marginal permutation importance and the conditional predictive
impact (CPI) based on knockoff substitution.
"""

import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata
from scipy.stats import t as student_t

from .exceptions import DimensionMismatch, NonFinite, TooFewRows, ValidationError
from .knockoffs import sample_knockoffs
from .models import ForestModel, LinearModel, oob_predictions, per_sample_losses

logger = logging.getLogger(__name__)

METHOD_OLS = "ols"
METHOD_PERM = "perm"
METHOD_CPI = "cpi"
MIN_EVALUATION_ROWS = 30
DEFAULT_N_PERMS = 10
CPI_TESTS = ("t", "wald")

FeatureImportance = namedtuple("FeatureImportance", "name importance std_err p_value rank")


@dataclass(frozen=True)
class ImportanceReport:
    method: str
    per_feature: tuple

    @property
    def importances(self):
        return np.array([f.importance for f in self.per_feature])

    @property
    def ranks(self):
        return np.array([f.rank for f in self.per_feature])

    def __getitem__(self, name):
        for feature in self.per_feature:
            if feature.name == name:
                return feature
        raise KeyError(name)


def rank_features(importances):
    """Average ranks in descending order of importance: 1 is the most important, ties share the mean rank."""
    values = np.asarray(importances, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFinite("importances must be finite, got %r" % (values.tolist(),))
    return rankdata(-values, method="average")


def _report(method, names, importances, std_errs=None, p_values=None):
    importances = np.asarray(importances, dtype=float)
    ranks = rank_features(importances)
    std_errs = [None] * len(names) if std_errs is None else std_errs
    p_values = [None] * len(names) if p_values is None else p_values
    return ImportanceReport(
        method=method,
        per_feature=tuple(
            FeatureImportance(name, float(vi), _opt(se), _opt(pv), float(rank))
            for name, vi, se, pv, rank in zip(names, importances, std_errs, p_values, ranks)
        ),
    )


def _opt(value):
    return None if value is None else float(value)


def ols_importance(model, feature_names, absolute=False):
    """Use the estimated slopes as importances; rank the signed values unless absolute is set."""
    if len(feature_names) != model.n_features:
        raise DimensionMismatch("%d names for %d coefficients" % (len(feature_names), model.n_features))
    coefficients = model.coefficients
    report = _report(METHOD_OLS, feature_names, coefficients, model.std_errors[1:], model.p_values[1:])
    if absolute:
        ranks = rank_features(np.abs(coefficients))
        report = ImportanceReport(
            method=METHOD_OLS,
            per_feature=tuple(f._replace(rank=float(r)) for f, r in zip(report.per_feature, ranks)),
        )
    return report


class _Evaluation:
    """Out-of-sample loss evaluation of a fixed model on a fixed set of rows.

    Linear models are scored on held-out rows; forests are scored on their own training rows through
    out-of-bag predictions, so a row only ever meets trees that did not see it.
    """

    def __init__(self, model, data):
        self.model = model
        if isinstance(model, ForestModel):
            _, valid = oob_predictions(model, data.x)
            self.rows = np.nonzero(valid)[0]
        elif isinstance(model, LinearModel):
            self.rows = np.arange(data.n)
        else:
            raise ValidationError("unsupported model type %s" % type(model).__name__)
        if self.rows.size < MIN_EVALUATION_ROWS:
            raise TooFewRows("need at least %d evaluation rows, got %d" % (MIN_EVALUATION_ROWS, self.rows.size))
        self.x = data.x
        self.y = data.y[self.rows]

    def losses(self, x):
        """Per-row squared errors of the model on x (all data rows, evaluated rows returned)."""
        if isinstance(self.model, ForestModel):
            predictions, _ = oob_predictions(self.model, x)
            predictions = predictions[self.rows]
        else:
            predictions = self.model.predict(x[self.rows])
        return per_sample_losses(self.y, predictions)


def _substitute(x, j, column):
    replaced = x.copy()
    replaced[:, j] = column
    return replaced


def permutation_importance(model, data, n_perms, rng):
    """Marginal permutation importance: loss after shuffling one column minus the baseline loss.

    :param data: evaluation data (held-out rows for linear models, the training rows for forests)
    :param rng: RngStream; feature j uses substream j
    """
    if n_perms < 1:
        raise ValidationError("n_perms must be positive, got %r" % (n_perms,))
    evaluation = _Evaluation(model, data)
    baseline = float(np.mean(evaluation.losses(evaluation.x)))
    rows = evaluation.rows

    importances, std_errs = [], []
    for j in range(data.p):
        gen = rng.child(j).generator()
        increases = np.empty(n_perms)
        for r in range(n_perms):
            column = evaluation.x[:, j].copy()
            column[rows] = column[gen.permutation(rows)]
            increases[r] = float(np.mean(evaluation.losses(_substitute(evaluation.x, j, column)))) - baseline
        importances.append(float(np.mean(increases)))
        std_errs.append(float(np.std(increases, ddof=1) / np.sqrt(n_perms)) if n_perms > 1 else None)
    return _report(METHOD_PERM, data.feature_names, importances, std_errs)


def cpi(model, data, params, rng, test="t"):
    """Conditional predictive impact of every feature using one knockoff draw.

    For feature j the per-row loss differences Δ = loss(x with column j replaced by its knockoff) - loss(x)
    are tested for a positive mean, one-sided, with a paired t-test (test="t") or its normal-reference
    Wald form (test="wald").
    """
    if test not in CPI_TESTS:
        raise ValidationError("unknown CPI test %r, expected one of %s" % (test, ", ".join(CPI_TESTS)))
    if params.dim != data.p:
        raise DimensionMismatch("knockoff params have dimension %d, data has %d features" % (params.dim, data.p))
    evaluation = _Evaluation(model, data)
    x_tilde = sample_knockoffs(evaluation.x, params, rng)
    baseline = evaluation.losses(evaluation.x)
    m = baseline.size

    importances, std_errs, p_values = [], [], []
    for j in range(data.p):
        delta = evaluation.losses(_substitute(evaluation.x, j, x_tilde[:, j])) - baseline
        mean, sd = float(np.mean(delta)), float(np.std(delta, ddof=1))
        se = sd / np.sqrt(m)
        if sd == 0.0:
            # degenerate: no evidence either way
            mean, p_value = 0.0, 1.0
        elif test == "t":
            p_value = float(student_t.sf(mean / se, m - 1))
        else:
            p_value = float(norm.sf(mean / se))
        importances.append(mean)
        std_errs.append(se)
        p_values.append(p_value)
    logger.debug("cpi on %d evaluation rows: %s", m, np.round(importances, 5).tolist())
    return _report(METHOD_CPI, data.feature_names, importances, std_errs, p_values)
