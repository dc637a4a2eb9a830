import json

import numpy as np
import pandas as pd
import pytest

from src.diagnostics.constants import Baselines
from src.diagnostics.fit import (baseline_predictions, boundary_distance_profile, boundary_distances, r2,
                                 r2_adjusted, standardize, standardized_residuals)
from src.diagnostics.report import REPORT_FILE, build_report, write_report
from src.diagnostics.summaries import lag1_autocorrelation, trace_summary
from src.mesh.grain_mesh import centroids
from src.sampler.chain import FieldSnapshot
from src.utils.random import make_rng


def snapshot(iteration, residual, sigma2=1.0, omega=None, dims=(0, 0)):
    omega = np.ones_like(residual) if omega is None else omega
    return FieldSnapshot(iteration=iteration, sigma2=sigma2, phi_beta=1.0, phi_gamma=1.0,
                         beta=np.zeros(dims[0]), gamma=np.zeros(dims[1]), omega=omega, residual=residual)


class TestR2:
    def test_perfect_fit(self):
        y = np.array([1.0, 2.0, 4.0])
        assert r2(y, y) == 1.0

    def test_mean_prediction_scores_zero(self):
        y = np.array([1.0, 2.0, 4.0, 7.0])
        assert r2(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)

    def test_constant_data(self):
        assert np.isnan(r2(np.full(5, 3.0), np.zeros(5)))

    def test_grain_mean_baseline(self):
        y = np.array([1.0, 3.0, 10.0, 14.0])
        grains = np.array([1, 1, 2, 2])
        np.testing.assert_array_equal(baseline_predictions(y, Baselines.GRAIN_MEANS, grains), [2, 2, 12, 12])
        fitted = baseline_predictions(y, Baselines.GRAIN_MEANS, grains)
        assert r2(y, fitted, Baselines.GRAIN_MEANS, grains) == pytest.approx(0.0, abs=1e-15)
        assert r2(y, fitted) > 0.9

    def test_grain_mean_baseline_needs_grains(self):
        with pytest.raises(ValueError, match='needs grain_of_element'):
            baseline_predictions(np.ones(3), Baselines.GRAIN_MEANS)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match='shape'):
            r2(np.ones(3), np.ones(4))

    def test_adjusted(self):
        rng = make_rng(0)
        y = rng.standard_normal(30)
        fitted = y + 0.3 * rng.standard_normal(30)
        expected = 1 - (1 - r2(y, fitted)) * 29 / (29 - 5)
        assert r2_adjusted(y, fitted, 5) == pytest.approx(expected, rel=1e-12)

    def test_adjusted_without_degrees_of_freedom(self):
        with pytest.raises(ValueError, match='no residual degrees of freedom'):
            r2_adjusted(np.arange(10.0), np.arange(10.0), 9)


class TestStandardizedResiduals:
    def test_scale(self):
        np.testing.assert_allclose(standardize(np.array([2.0, -3.0]), 4.0, np.array([1.0, 9.0])), [1.0, -0.5])

    def test_from_state(self, random_state):
        state, _ = random_state
        np.testing.assert_allclose(standardized_residuals(state),
                                   state.residual / np.sqrt(state.sigma2 * state.omega))


class TestBoundaryProfile:
    def test_distances_match_brute_force(self, cartoon_mesh, cartoon_bg):
        points = cartoon_mesh.nodes[cartoon_bg.boundary_nodes()]
        middle = centroids(cartoon_mesh)
        expected = np.sqrt(((middle[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        np.testing.assert_allclose(boundary_distances(cartoon_mesh, cartoon_bg), expected, rtol=1e-12)

    def test_constant_values(self, cartoon_mesh, cartoon_bg):
        profile = boundary_distance_profile(cartoon_mesh, cartoon_bg, np.full(cartoon_mesh.M, 2.5), n_bins=4)
        assert list(profile.columns) == ['bin', 'distance_lower', 'distance_upper', 'distance', 'n', 'mean', 'sd']
        assert profile['n'].sum() == cartoon_mesh.M
        filled = profile[profile['n'] > 0]
        np.testing.assert_array_equal(filled['mean'], 2.5)
        np.testing.assert_array_equal(filled['sd'], 0.0)
        assert profile.loc[profile['n'] == 0, 'mean'].isna().all()

    def test_decaying_values(self, cartoon_mesh, cartoon_bg):
        values = np.exp(-boundary_distances(cartoon_mesh, cartoon_bg))
        profile = boundary_distance_profile(cartoon_mesh, cartoon_bg, values, n_bins=3)
        means = profile.loc[profile['n'] > 0, 'mean'].to_numpy()
        assert means.size >= 2
        assert (np.diff(means) < 0).all()

    def test_wrong_length(self, cartoon_mesh, cartoon_bg):
        with pytest.raises(ValueError, match='one value per element'):
            boundary_distance_profile(cartoon_mesh, cartoon_bg, np.ones(3))


class TestTraceSummary:
    def test_columns_and_values(self):
        scalars = pd.DataFrame({'iteration': [1, 2, 3, 4], 'sigma2': [1.0, 2.0, 3.0, 4.0],
                                'r2_adj': [np.nan] * 4})
        summary = trace_summary(scalars).set_index('parameter')
        assert list(summary.index) == ['sigma2', 'r2_adj']
        assert summary.loc['sigma2', 'mean'] == 2.5
        assert summary.loc['sigma2', 'q50'] == 2.5
        assert summary.loc['sigma2', 'sd'] == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert summary.loc['r2_adj', 'n'] == 0
        assert np.isnan(summary.loc['r2_adj', 'mean'])

    def test_lag1_autocorrelation(self):
        alternating = np.tile([1.0, -1.0], 50)
        assert lag1_autocorrelation(alternating) == pytest.approx(-0.99)
        assert np.isnan(lag1_autocorrelation(np.ones(10)))
        assert np.isnan(lag1_autocorrelation(np.ones(2)))


class TestReport:
    def test_perfect_fit(self, cartoon_mesh, cartoon_bg, cartoon_data):
        zero = np.zeros(cartoon_mesh.M)
        snapshots = [snapshot(10, zero), snapshot(20, zero)]
        scalars = pd.DataFrame({'iteration': [10, 20], 'sigma2': [1.0, 1.0]})
        report = build_report(cartoon_data.y, cartoon_mesh, cartoon_bg, scalars, snapshots, p_effective=3)
        assert report.iteration == 20
        assert report.r2 == 1.0
        assert report.r2_adj_constant == 1.0
        assert report.r2_adj_grain_means == 1.0
        np.testing.assert_array_equal(report.residuals['fitted'], cartoon_data.y)
        np.testing.assert_array_equal(report.residuals['standardized'], 0.0)
        assert set(report.profile['values']) == {'y', 'fitted_posterior_mean', 'residual'}

    def test_uses_the_chosen_snapshot(self, cartoon_mesh, cartoon_bg, cartoon_data):
        rng = make_rng(1)
        first = snapshot(1, rng.standard_normal(cartoon_mesh.M), sigma2=4.0)
        last = snapshot(2, np.zeros(cartoon_mesh.M))
        scalars = pd.DataFrame({'iteration': [1, 2]})
        report = build_report(cartoon_data.y, cartoon_mesh, cartoon_bg, scalars, [first, last], snapshot_index=0)
        assert report.iteration == 1
        np.testing.assert_allclose(report.residuals['standardized'], first.residual / 2.0)
        np.testing.assert_allclose(report.residuals['fitted_posterior_mean'], cartoon_data.y - first.residual / 2)
        assert report.p_effective == 3 + cartoon_bg.dim_beta + cartoon_bg.dim_gamma

    def test_no_degrees_of_freedom(self, cartoon_mesh, cartoon_bg, cartoon_data):
        report = build_report(cartoon_data.y, cartoon_mesh, cartoon_bg, pd.DataFrame({'iteration': [1]}),
                              [snapshot(1, np.zeros(cartoon_mesh.M))], p_effective=cartoon_mesh.M)
        assert np.isnan(report.r2_adj_constant)
        assert report.r2 == 1.0

    def test_needs_snapshots(self, cartoon_mesh, cartoon_bg, cartoon_data):
        with pytest.raises(ValueError, match='no field snapshots'):
            build_report(cartoon_data.y, cartoon_mesh, cartoon_bg, pd.DataFrame(), [])

    def test_written_files(self, cartoon_mesh, cartoon_bg, cartoon_data, tmp_path):
        report = build_report(cartoon_data.y, cartoon_mesh, cartoon_bg, pd.DataFrame({'iteration': [1]}),
                              [snapshot(1, np.ones(cartoon_mesh.M))], p_effective=3)
        payload = write_report(report, tmp_path)
        with open(tmp_path / REPORT_FILE) as f:
            assert json.load(f) == json.loads(json.dumps(payload))
        for filename in payload['files']:
            assert (tmp_path / filename).is_file()
        residuals = pd.read_csv(tmp_path / 'residuals.csv')
        assert len(residuals) == cartoon_mesh.M
