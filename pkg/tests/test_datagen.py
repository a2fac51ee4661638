"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import io
import math

import numpy as np
import pytest
from scipy.special import ndtri
from scipy.stats import kstest

from src.vi_sim_cli import datagen
from src.vi_sim_cli.datagen import ScenarioSpec, copula_sample, generate_dataset, scenario_target
from src.vi_sim_cli.datagen import write_dataset_csv
from src.vi_sim_cli.exceptions import InvalidRho, ValidationError
from src.vi_sim_cli.rng import RngStream

BIG_N = 100000


@pytest.fixture(scope="module")
def independent_uniforms():
    return copula_sample(BIG_N, 0.0, RngStream(2024))


@pytest.fixture(scope="module")
def correlated_uniforms():
    return copula_sample(BIG_N, 0.9, RngStream(2025))


class TestScenarioSpec:
    def test_betas(self):
        s1 = ScenarioSpec.for_scenario(1, 0.0)
        assert s1.beta == (1, 1, 1, 1, 1, 0, 0.5, 0.8, 1.2, 1.5)
        assert ScenarioSpec.for_scenario(2, 0.0).beta == (0, 1, 1, 1, 1, 0, 0.5, 0.8, 1.2, 1.5)
        assert ScenarioSpec.for_scenario(3, 0.0).beta == s1.beta
        assert ScenarioSpec.for_scenario(4, 0.0).beta == ScenarioSpec.for_scenario(2, 0.0).beta
        assert not s1.aggregate_first_two
        assert ScenarioSpec.for_scenario(3, 0.0).aggregate_first_two
        assert s1.noise_sd == pytest.approx(math.sqrt(0.1))

    @pytest.mark.parametrize("rho", [1.0, -0.1, 1.5])
    def test_invalid_rho(self, rho):
        with pytest.raises(InvalidRho):
            ScenarioSpec.for_scenario(1, rho)

    def test_unknown_scenario(self):
        with pytest.raises(ValidationError):
            ScenarioSpec.for_scenario(5, 0.0)

    def test_negative_noise(self):
        with pytest.raises(ValidationError):
            ScenarioSpec.for_scenario(1, 0.0, noise_sd=-1.0)


class TestScenarioTarget:
    @pytest.mark.parametrize(
        "scenario,value,expected",
        [(1, 0.0, 0.0), (1, 1.0, 9.0), (2, 1.0, 8.0), (3, 1.0, 8.0), (4, 1.0, 7.5)],
        ids=["scenario 1 zeros", "scenario 1 ones", "scenario 2 ones", "scenario 3 ones", "scenario 4 ones"],
    )
    def test_constant_rows(self, scenario, value, expected):
        spec = ScenarioSpec.for_scenario(scenario, 0.0)
        assert scenario_target(spec, np.full(10, value)) == pytest.approx(expected)

    def test_aggregated_scenarios_only_see_the_mean(self):
        spec = ScenarioSpec.for_scenario(3, 0.0)
        a = np.array([0.2, 0.8] + [0.5] * 8)
        b = np.array([0.6, 0.4] + [0.5] * 8)
        assert scenario_target(spec, a) == pytest.approx(scenario_target(spec, b))

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            scenario_target(ScenarioSpec.for_scenario(1, 0.0), np.ones(9))


class TestCopulaSample:
    def test_independence(self, independent_uniforms):
        u = independent_uniforms
        assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1]) < 0.01
        for j in range(10):
            assert kstest(u[:, j], "uniform").statistic < 0.01

    def test_marginals_pass_ks(self, correlated_uniforms):
        for j in range(10):
            assert kstest(correlated_uniforms[:, j], "uniform").pvalue > 0.001

    def test_uniform_scale_correlation(self, correlated_uniforms):
        expected = 6.0 / math.pi * math.asin(0.9 / 2.0)
        assert np.corrcoef(correlated_uniforms[:, 0], correlated_uniforms[:, 1])[0, 1] == pytest.approx(
            expected, abs=0.01
        )

    def test_latent_correlation(self, correlated_uniforms):
        z = ndtri(correlated_uniforms[:, :2])
        assert np.corrcoef(z[:, 0], z[:, 1])[0, 1] == pytest.approx(0.9, abs=0.01)

    def test_only_first_pair_correlated(self, correlated_uniforms):
        corr = np.corrcoef(correlated_uniforms, rowvar=False)
        off = corr - np.diag(np.diag(corr))
        off[0, 1] = off[1, 0] = 0.0
        assert np.max(np.abs(off)) < 0.02

    @pytest.mark.parametrize("rho", [0.0, 0.5, 0.95])
    def test_column_means(self, rho):
        n = 20000
        u = copula_sample(n, rho, RngStream(7))
        assert np.all(np.abs(u.mean(axis=0) - 0.5) < 4 * math.sqrt(1.0 / (12 * n)))
        assert np.all((u >= 0) & (u <= 1))

    def test_invalid_rho(self):
        with pytest.raises(InvalidRho):
            copula_sample(10, 1.0, RngStream(0))


class TestGenerateDataset:
    def test_deterministic(self):
        spec = ScenarioSpec.for_scenario(2, 0.6)
        a = generate_dataset(spec, 500, RngStream(99, (1, 2)))
        b = generate_dataset(spec, 500, RngStream(99, (1, 2)))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        c = generate_dataset(spec, 500, RngStream(99, (1, 3)))
        assert not np.array_equal(a.x, c.x)

    def test_noise_variance(self):
        spec = ScenarioSpec.for_scenario(1, 0.0)
        data = generate_dataset(spec, BIG_N, RngStream(5))
        residuals = data.y - data.x @ np.asarray(spec.beta)
        assert np.var(residuals, ddof=1) == pytest.approx(0.1, abs=0.005)

    def test_noiseless_target(self):
        spec = ScenarioSpec.for_scenario(1, 0.0, noise_sd=0.0)
        data = generate_dataset(spec, 50, RngStream(5))
        assert np.allclose(data.y, data.x @ np.asarray(spec.beta), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("scenario", [3, 4])
    def test_aggregated_layout(self, scenario):
        spec = ScenarioSpec.for_scenario(scenario, 0.7)
        stream = RngStream(3)
        data = generate_dataset(spec, 200, stream)
        assert data.p == 9
        assert data.feature_names[0] == "avg_x1_x2"
        assert data.feature_names[1:] == tuple("x%d" % j for j in range(3, 11))
        raw = copula_sample(200, 0.7, stream.child(datagen._FEATURE_STREAM))
        assert np.array_equal(data.x[:, 0], (raw[:, 0] + raw[:, 1]) / 2.0)
        assert np.array_equal(data.x[:, 1:], raw[:, 2:])

    def test_raw_features_in_unit_interval(self):
        data = generate_dataset(ScenarioSpec.for_scenario(1, 0.9), 1000, RngStream(1))
        assert data.n == 1000 and data.p == 10
        assert np.all((data.x >= 0) & (data.x <= 1))

    def test_standardized(self):
        data = generate_dataset(ScenarioSpec.for_scenario(1, 0.3), 300, RngStream(1)).standardized()
        assert np.allclose(data.x.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(data.x.std(axis=0, ddof=1), 1.0)

    def test_split(self):
        data = generate_dataset(ScenarioSpec.for_scenario(1, 0.3), 101, RngStream(1))
        train, held_out = data.split(0.5, RngStream(2))
        assert train.n == 50 and held_out.n == 51
        rows = {tuple(r) for r in train.x} | {tuple(r) for r in held_out.x}
        assert len(rows) == 101


class TestDatasetCsv:
    def test_header_and_round_trip(self):
        data = generate_dataset(ScenarioSpec.for_scenario(3, 0.5), 20, RngStream(4))
        buf = io.StringIO()
        write_dataset_csv(data, buf)
        lines = buf.getvalue().split("\n")
        assert lines[0] == "avg_x1_x2,x3,x4,x5,x6,x7,x8,x9,x10,y"
        assert len(lines) == 22 and lines[-1] == ""
        first = [float(v) for v in lines[1].split(",")]
        assert first[:-1] == list(data.x[0])
        assert first[-1] == data.y[0]
