"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0

Second-order Gaussian model-X knockoffs with the equicorrelated S construction, applied per block of
correlated features.

For (X, X~) ~ N(mu, G) with G = [[Sigma, Sigma-S], [Sigma-S, Sigma]] the knockoff given X is Gaussian with
mean mu + A (x - mu), A = (Sigma-S) Sigma^-1, and covariance V = 2S - S Sigma^-1 S.
"""

import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .datagen import validate_rho
from .exceptions import DegenerateCovariance, DimensionMismatch, NotPositiveDefinite, ValidationError, ZeroVariance
from .numerics import cholesky, min_eigenvalue, solve_spd, sym_matrix

logger = logging.getLogger(__name__)

SHRINKAGE_LADDER = (0.0, 1e-8, 1e-6, 1e-4, 1e-2)
MIN_EIGENVALUE = 1e-10
PSD_TOL = 1e-8
# features linked by |corr| above this share one equicorrelated block
BLOCK_CORR_THRESHOLD = 0.25

KnockoffDiagnostics = namedtuple(
    "KnockoffDiagnostics", "per_feature_self_corr cross_corr_error knockoff_pair_corr"
)


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass(frozen=True)
class KnockoffParams:
    mean: np.ndarray
    s: np.ndarray
    cond_coef: np.ndarray
    cond_chol: np.ndarray
    joint_cov: np.ndarray

    @property
    def dim(self):
        return self.s.shape[0]


def shrink_to_pd(matrix, what="covariance"):
    """Shrink matrix toward its diagonal by the smallest ladder step that leaves λ_min >= MIN_EIGENVALUE.

    :return: (shrunk matrix, delta used)
    :raises DegenerateCovariance: if the last ladder step still fails
    """
    m = sym_matrix(matrix)
    diag = np.diag(np.diag(m))
    for delta in SHRINKAGE_LADDER:
        candidate = m if delta == 0.0 else (1.0 - delta) * m + delta * diag
        if min_eigenvalue(candidate) >= MIN_EIGENVALUE:
            if delta:
                logger.debug("%s shrunk toward its diagonal with delta=%g", what, delta)
            return candidate, delta
    raise DegenerateCovariance("%s is not positive definite even after shrinkage delta=%g" % (what, delta))


def estimate_gaussian(x):
    """Sample mean and (shrunk if necessary) unbiased sample covariance of the rows of x."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if n <= p:
        raise ValidationError("need more rows than columns to estimate a covariance, got %d x %d" % (n, p))
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    cov, _ = shrink_to_pd(cov)
    return GaussianModel(mean=x.mean(axis=0), cov=cov)


def correlation_blocks(corr, threshold=BLOCK_CORR_THRESHOLD):
    """Block label per feature: connected components of the graph with edges where |corr_ij| > threshold."""
    _, labels = connected_components(np.abs(np.asarray(corr)) > threshold, directed=False)
    return labels


def _joint_scale(corr, s_corr):
    """Largest gamma in [0, 1] (up to halving) with 2·corr - gamma·diag(s_corr) positive semi-definite."""
    positive = s_corr > 0
    if not np.any(positive):
        return 1.0
    root = np.sqrt(s_corr[positive])
    gamma = min(1.0, max(0.0, 2.0 * min_eigenvalue(corr[np.ix_(positive, positive)] / np.outer(root, root))))
    for _ in range(64):
        if min_eigenvalue(2.0 * corr - gamma * np.diag(s_corr)) >= -PSD_TOL:
            break
        gamma /= 2.0
    return gamma


def equi_s(cov):
    """Blockwise equicorrelated diagonal of S.

    Features are grouped by correlation_blocks; inside a block s_j = min(2·λ_min(corr_block), 1) · var_j, so a
    feature correlated with nothing keeps s_j = var_j. The vector is then scaled down, only if needed, until
    2·Sigma - S is positive semi-definite. With a single block this is the global equicorrelated choice.
    """
    cov = sym_matrix(cov)
    var = np.diag(cov)
    if np.any(var <= 0):
        raise DegenerateCovariance("covariance has a non-positive variance")
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    labels = correlation_blocks(corr)
    s_corr = np.ones(len(var))
    for label in np.unique(labels):
        block = np.nonzero(labels == label)[0]
        if block.size > 1:
            s_corr[block] = min(max(2.0 * min_eigenvalue(corr[np.ix_(block, block)]), 0.0), 1.0)
    gamma = _joint_scale(corr, s_corr)
    if gamma < 1.0:
        logger.debug("blockwise s scaled by %.4g to keep 2·Sigma - S positive semi-definite", gamma)
    s = gamma * s_corr * var
    _check_s(cov, s)
    return s


def _check_s(cov, s):
    if np.any(s < 0) or np.any(s > np.diag(cov) * (1.0 + 1e-12)):
        raise DegenerateCovariance("s must satisfy 0 <= s_j <= var_j")
    if min_eigenvalue(2.0 * cov - np.diag(s)) < -PSD_TOL * max(1.0, float(np.max(np.diag(cov)))):
        raise DegenerateCovariance("2·Sigma - S is not positive semi-definite")


def joint_covariance(cov, s):
    off = cov - np.diag(s)
    return sym_matrix(np.block([[cov, off], [off, cov]]))


def knockoff_params(model, s=None):
    """Build the conditional sampler for X~ | X.

    :param model: GaussianModel of the covariates
    :param s: optional override of the diagonal of S (defaults to the blockwise equicorrelated choice)
    """
    cov = sym_matrix(model.cov)
    p = cov.shape[0]
    s = equi_s(cov) if s is None else np.asarray(s, dtype=float)
    if s.shape != (p,):
        raise DimensionMismatch("s has shape %s, covariance has dimension %d" % (s.shape, p))
    _check_s(cov, s)

    joint_cov = joint_covariance(cov, s)
    scale = max(1.0, float(np.max(np.diag(cov))))
    if min_eigenvalue(joint_cov) < -PSD_TOL * scale:
        raise DegenerateCovariance("joint covariance G is not positive semi-definite")

    if not np.any(s):
        # S = 0: the knockoff is the original
        cond_coef, cond_chol = np.eye(p), np.zeros((p, p))
    elif not np.any(cov - np.diag(np.diag(cov))) and np.array_equal(s, np.diag(cov)):
        # uncorrelated features with S = Sigma: knockoffs are fresh independent draws
        cond_coef, cond_chol = np.zeros((p, p)), np.diag(np.sqrt(s))
    else:
        try:
            sigma_inv_s = solve_spd(cov, np.diag(s))
        except NotPositiveDefinite as e:
            raise DegenerateCovariance("covariance is singular: %s" % e)
        cond_coef = np.eye(p) - sigma_inv_s.T
        cond_cov = 2.0 * np.diag(s) - np.diag(s) @ sigma_inv_s
        cond_cov = (cond_cov + cond_cov.T) / 2.0
        if min_eigenvalue(cond_cov) < -PSD_TOL * scale:
            raise DegenerateCovariance("conditional knockoff covariance is not positive semi-definite")
        cond_cov, _ = shrink_to_pd(cond_cov, what="conditional knockoff covariance")
        cond_chol = cholesky(cond_cov).lower

    logger.debug("knockoff params: p=%d, s/var range [%.4g, %.4g]", p, np.min(s / np.diag(cov)), np.max(s / np.diag(cov)))
    return KnockoffParams(
        mean=np.asarray(model.mean, dtype=float),
        s=s,
        cond_coef=cond_coef,
        cond_chol=cond_chol,
        joint_cov=joint_cov,
    )


def sample_knockoffs(x, params, rng):
    """Draw one knockoff row per row of x: mu + A(x - mu) + C z with z ~ N(0, I)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.dim:
        raise DimensionMismatch("knockoff params have dimension %d, x has shape %s" % (params.dim, x.shape))
    z = rng.generator().standard_normal(x.shape)
    # written as x - (x - mu)(I - A)' so that A == I reproduces x bit for bit
    pull = np.eye(params.dim) - params.cond_coef
    return x - (x - params.mean) @ pull.T + z @ params.cond_chol.T


def theoretical_self_corr(rho):
    """corr(X1, X~1) of equicorrelated knockoffs for a bivariate pair with correlation rho."""
    rho = validate_rho(rho)
    return max(0.0, 2.0 * rho - 1.0)


def _column_corr(a, b):
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    denom = np.sqrt(np.sum(a * a, axis=0) * np.sum(b * b, axis=0))
    return np.clip(np.sum(a * b, axis=0) / denom, -1.0, 1.0)


def diagnostics(x, x_tilde, params=None):
    """Empirical knockoff quality statistics.

    :param params: when given, the cross-covariance block cov(X, X~) is compared with Sigma - S
    """
    x = np.asarray(x, dtype=float)
    x_tilde = np.asarray(x_tilde, dtype=float)
    if x.shape != x_tilde.shape or x.ndim != 2:
        raise DimensionMismatch("x has shape %s, knockoffs %s" % (x.shape, x_tilde.shape))
    if np.any(np.ptp(x, axis=0) == 0) or np.any(np.ptp(x_tilde, axis=0) == 0):
        raise ZeroVariance("a feature or knockoff column is constant")

    self_corr = _column_corr(x, x_tilde)
    pair_corr = float(_column_corr(x_tilde[:, :1], x_tilde[:, 1:2])[0]) if x.shape[1] >= 2 else None
    cross_error = None
    if params is not None:
        p = x.shape[1]
        cross = np.cov(x, x_tilde, rowvar=False)[:p, p:]
        cross_error = float(np.max(np.abs(cross - params.joint_cov[:p, p:])))
    return KnockoffDiagnostics(
        per_feature_self_corr=self_corr,
        cross_corr_error=cross_error,
        knockoff_pair_corr=pair_corr,
    )
