"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

The two learners used by the importance measures: OLS with classical inference and a bagged forest of
CART regression trees with out-of-bag bookkeeping.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

from .exceptions import DimensionMismatch, NotPositiveDefinite, RankDeficient, TooFewRows, ValidationError
from .numerics import solve_spd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearModel:
    """Fitted OLS model. std_errors and p_values list the intercept first, then the p slopes."""

    intercept: float
    coefficients: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    residual_variance: float
    df_resid: int

    @property
    def n_features(self):
        return self.coefficients.shape[0]

    def predict(self, x):
        x = _check_columns(x, self.n_features)
        return self.intercept + x @ self.coefficients


def fit_ols(data):
    """Least squares fit of y on an intercept plus all columns of data.x.

    :raises RankDeficient: if the design's gram matrix is not positive definite
    """
    n, p = data.x.shape
    if n <= p + 1:
        raise TooFewRows("OLS needs more than p+1=%d rows, got %d" % (p + 1, n))

    design = np.column_stack([np.ones(n), data.x])
    # equilibrate so the positivity tolerance is relative to column scale
    scale = np.sqrt(np.sum(design * design, axis=0))
    if np.any(scale == 0):
        raise RankDeficient("design has an all-zero column")
    scaled = design / scale
    gram = scaled.T @ scaled
    try:
        gram_inv = solve_spd(gram, np.eye(p + 1)) / np.outer(scale, scale)
        beta = solve_spd(gram, scaled.T @ data.y) / scale
    except NotPositiveDefinite as e:
        raise RankDeficient("X'X is not positive definite: %s" % e)

    residuals = data.y - design @ beta
    df_resid = n - p - 1
    sigma2 = float(residuals @ residuals) / df_resid
    std_errors = np.sqrt(np.clip(np.diag(gram_inv), 0.0, None) * sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = beta / std_errors
    p_values = 2.0 * student_t.sf(np.abs(t_stats), df_resid)
    # an exact fit has zero standard errors; treat nonzero estimates as certain
    exact = std_errors == 0
    p_values[exact] = np.where(beta[exact] == 0, 1.0, 0.0)

    return LinearModel(
        intercept=float(beta[0]),
        coefficients=beta[1:],
        std_errors=std_errors,
        p_values=np.clip(p_values, 0.0, 1.0),
        residual_variance=sigma2,
        df_resid=df_resid,
    )


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    mtry: int = None
    min_leaf: int = 5
    max_depth: int = None

    def __post_init__(self):
        for name in ("n_trees", "mtry", "min_leaf", "max_depth"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValidationError("%s must be positive, got %r" % (name, value))

    def mtry_for(self, p):
        return min(p, self.mtry) if self.mtry is not None else max(1, p // 3)


class RegressionTree:
    """A fitted CART tree stored as parallel node arrays. Leaves have feature == -1."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def predict(self, x):
        node = np.zeros(x.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[node]
            rows = np.nonzero(feat >= 0)[0]
            if rows.size == 0:
                return self.value[node]
            current = node[rows]
            go_left = x[rows, feat[rows]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])


def _best_split(x, y, rows, candidates, min_leaf):
    """Return (feature, threshold, left_rows, right_rows) maximising variance reduction, or None.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    m = rows.size
    y_rows = y[rows]
    total = y_rows.sum()
    parent_score = total * total / m
    best_score, best = parent_score + 1e-12 * max(1.0, abs(parent_score)), None
    k = np.arange(min_leaf, m - min_leaf + 1)
    for feature in candidates:
        values = x[rows, feature]
        order = np.argsort(values, kind="mergesort")
        sorted_values = values[order]
        csum = np.cumsum(y_rows[order])
        valid = sorted_values[k - 1] < sorted_values[k % m]
        if not valid.any():
            continue
        left_sum = csum[k - 1]
        score = left_sum * left_sum / k + (total - left_sum) ** 2 / (m - k)
        score = np.where(valid, score, -np.inf)
        pos = int(np.argmax(score))
        if score[pos] > best_score:
            lo, hi = sorted_values[k[pos] - 1], sorted_values[k[pos]]
            threshold = 0.5 * (lo + hi)
            if not lo <= threshold < hi:
                threshold = lo
            best_score = score[pos]
            best = (feature, threshold, rows[order[: k[pos]]], rows[order[k[pos]:]])
    return best


def grow_tree(x, y, rows, cfg, gen):
    """Grow one CART tree on the (possibly repeated) training rows given."""
    p = x.shape[1]
    mtry = cfg.mtry_for(p)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(node_rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[node_rows])))
        return len(feature) - 1

    stack = [(new_node(rows), rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        if node_rows.size < 2 * cfg.min_leaf or (cfg.max_depth is not None and depth >= cfg.max_depth):
            continue
        candidates = np.sort(gen.choice(p, size=mtry, replace=False))
        split = _best_split(x, y, node_rows, candidates, cfg.min_leaf)
        if split is None:
            continue
        feature[node], threshold[node] = int(split[0]), float(split[1])
        left[node] = new_node(split[2])
        right[node] = new_node(split[3])
        stack.append((right[node], split[3], depth + 1))
        stack.append((left[node], split[2], depth + 1))

    return RegressionTree(
        np.array(feature, dtype=np.intp),
        np.array(threshold),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(value),
    )


class ForestModel:
    """Bagged regression trees. inbag[t, i] is True when row i was drawn into tree t's bootstrap sample."""

    def __init__(self, trees, inbag, config, n_features):
        self.trees = trees
        self.inbag = inbag
        self.config = config
        self.n_features = n_features

    def predict(self, x):
        x = _check_columns(x, self.n_features)
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.predict(x)
        return total / len(self.trees)


def fit_forest(data, cfg, rng):
    n = data.n
    if n < 2 * cfg.min_leaf:
        raise TooFewRows("forest needs at least 2*min_leaf=%d rows, got %d" % (2 * cfg.min_leaf, n))
    trees = []
    inbag = np.zeros((cfg.n_trees, n), dtype=bool)
    for t in range(cfg.n_trees):
        gen = rng.child(t).generator()
        rows = gen.integers(0, n, size=n)
        inbag[t, rows] = True
        trees.append(grow_tree(data.x, data.y, rows, cfg, gen))
    logger.debug(
        "grew %d trees (mtry=%d, min_leaf=%d), mean leaves %.1f",
        cfg.n_trees, cfg.mtry_for(data.p), cfg.min_leaf, np.mean([tr.n_leaves for tr in trees]),
    )
    return ForestModel(trees, inbag, cfg, data.p)


def oob_predictions(model, x):
    """Average each row's predictions over the trees for which it was out-of-bag.

    :param x: feature matrix with the training rows in training order (columns may be perturbed)
    :return: (predictions, valid) where rows with no out-of-bag tree have valid == False and prediction nan
    """
    x = _check_columns(x, model.n_features)
    if x.shape[0] != model.inbag.shape[1]:
        raise DimensionMismatch("forest was trained on %d rows, got %d" % (model.inbag.shape[1], x.shape[0]))
    total = np.zeros(x.shape[0])
    count = np.zeros(x.shape[0], dtype=np.intp)
    for tree, inbag in zip(model.trees, model.inbag):
        oob = np.nonzero(~inbag)[0]
        if oob.size:
            total[oob] += tree.predict(x[oob])
            count[oob] += 1
    valid = count > 0
    with np.errstate(invalid="ignore"):
        predictions = np.where(valid, total / np.maximum(count, 1), np.nan)
    return predictions, valid


def predict(model, x):
    return model.predict(x)


def per_sample_losses(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise DimensionMismatch("y has shape %s, predictions %s" % (y.shape, yhat.shape))
    return (y - yhat) ** 2


def mse(y, yhat):
    return float(np.mean(per_sample_losses(y, yhat)))


def _check_columns(x, p):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != p:
        raise DimensionMismatch("model expects %d columns, got shape %s" % (p, x.shape))
    return x
