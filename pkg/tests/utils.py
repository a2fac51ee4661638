"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import os

import numpy as np
import pytest

from src.vi_sim_cli.datagen import Dataset, ScenarioSpec, generate_dataset
from src.vi_sim_cli.models import ForestConfig
from src.vi_sim_cli.rng import RngStream

SMALL_FOREST = ForestConfig(n_trees=25, min_leaf=5)


def scenario_data(scenario=1, rho=0.0, n=400, seed=0, noise_sd=None, standardize=True):
    spec = ScenarioSpec.for_scenario(scenario, rho) if noise_sd is None else \
        ScenarioSpec.for_scenario(scenario, rho, noise_sd=noise_sd)
    data = generate_dataset(spec, n, RngStream(seed))
    return data.standardized() if standardize else data


def linear_data(beta, n=200, seed=0, noise_sd=0.0, intercept=0.0):
    gen = RngStream(seed).generator()
    x = gen.standard_normal((n, len(beta)))
    y = intercept + x @ np.asarray(beta, dtype=float) + noise_sd * gen.standard_normal(n)
    return Dataset(x, y, tuple("x%d" % (j + 1) for j in range(len(beta))))


def random_spd(dim, seed=0):
    gen = RngStream(seed).generator()
    a = gen.standard_normal((dim, dim))
    return a @ a.T + 0.5 * np.eye(dim)


# Monte Carlo acceptance checks take minutes; run them with VI_SIM_SLOW_TESTS=1
slowtest = pytest.mark.skipif(
    os.environ.get("VI_SIM_SLOW_TESTS") != "1", reason="Set VI_SIM_SLOW_TESTS=1 to run slow Monte Carlo checks"
)
