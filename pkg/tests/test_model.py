from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from src.exceptions import ResidualDriftError
from src.gmrf.hyperparams import log_jacobian, transform
from src.model.joint import log_field_prior, log_prior
from src.model.likelihood import log_likelihood, scale_mixture_draw
from src.model.priors import PriorConfig, default_beta_prior, default_gamma_prior
from src.model.state import audit_residual, recompute_residual
from src.utils.random import make_rng


@pytest.fixture
def priors(cartoon_data):
    return PriorConfig().with_data_mean(cartoon_data.y)


class TestScaleMixture:
    def test_zero_variance_gives_zero_errors(self):
        epsilon, omega = scale_mixture_draw(5.0, 0.0, make_rng(0), size=100)
        np.testing.assert_array_equal(epsilon, 0.0)
        assert (omega > 0).all()

    @pytest.mark.parametrize('df', [2.0, 4.0, 30.0])
    def test_errors_are_student_t(self, df):
        sigma2 = 2.5
        epsilon, _ = scale_mixture_draw(df, sigma2, make_rng(1), size=5000)
        result = stats.kstest(epsilon / np.sqrt(sigma2), 't', args=(df,))
        assert result.pvalue > 1e-3

    @pytest.mark.parametrize('df', [2.0, 30.0])
    def test_agrees_with_direct_student_t_draws(self, df):
        sigma2 = 0.7
        epsilon, _ = scale_mixture_draw(df, sigma2, make_rng(2), size=5000)
        direct = stats.t.rvs(df, scale=np.sqrt(sigma2), size=5000, random_state=make_rng(3))
        assert stats.ks_2samp(epsilon, direct).pvalue > 1e-3

    def test_mixing_weights_are_inverse_gamma(self):
        df = 6.0
        _, omega = scale_mixture_draw(df, 1.0, make_rng(4), size=5000)
        result = stats.kstest(omega, stats.invgamma(a=df / 2, scale=df / 2).cdf)
        assert result.pvalue > 1e-3

    def test_invalid_parameters(self):
        with pytest.raises(ValueError, match='df must be positive'):
            scale_mixture_draw(0.0, 1.0, make_rng(0))


class TestLikelihood:
    def test_matches_normal_densities(self, random_state):
        state, _ = random_state
        expected = stats.norm.logpdf(state.residual, 0.0, np.sqrt(state.sigma2 * state.omega)).sum()
        expected += 0.5 * state.residual.size * np.log(2 * np.pi)
        assert log_likelihood(state) == pytest.approx(expected, rel=1e-12)

    def test_staged_residual(self, random_state):
        state, _ = random_state
        other = state.residual + 1.0
        moved = state.copy()
        moved.residual = other
        assert log_likelihood(state, other) == log_likelihood(moved)


class TestLogPrior:
    def test_finite_at_a_valid_state(self, random_state, priors, cartoon_graphs):
        state, _ = random_state
        assert np.isfinite(log_prior(state, priors, cartoon_graphs))

    @pytest.mark.parametrize('change', [
        {'sigma2': 0.0},
        {'tau2': -1.0},
        {'df': 0.5},
        {'df': 600.0},
    ])
    def test_outside_support(self, random_state, priors, cartoon_graphs, change):
        state, _ = random_state
        assert log_prior(replace(state, **change), priors, cartoon_graphs) == -np.inf

    def test_rho_outside_prior_support(self, random_state, priors, cartoon_graphs):
        state, _ = random_state
        # inside the positive-definite region (-0.5, 1) but below the prior's lower limit
        state = replace(state, hp_gamma=replace(state.hp_gamma, rho=-0.45))
        assert log_field_prior(state, 'gamma', priors, cartoon_graphs) == -np.inf

    def test_transformed_adds_jacobian(self, random_state, priors, cartoon_graphs):
        state, _ = random_state
        jacobian = sum(log_jacobian(transform(state.hp(which), priors.field_prior(which).rho_lower,
                                              priors.field_prior(which).rho_upper),
                                    priors.field_prior(which).rho_lower, priors.field_prior(which).rho_upper)
                       for which in ('beta', 'gamma'))
        plain = log_prior(state, priors, cartoon_graphs)
        assert log_prior(state, priors, cartoon_graphs, transformed=True) == pytest.approx(plain + jacobian,
                                                                                         rel=1e-12)

    def test_mu_prior_needs_a_mean(self, random_state, cartoon_graphs):
        state, _ = random_state
        with pytest.raises(ValueError, match='mu prior mean is unset'):
            log_prior(state, PriorConfig(), cartoon_graphs)

    def test_explicit_mean_kept(self):
        assert PriorConfig(mu_mean=3.0).with_data_mean(np.array([100.0])).mu_mean == 3.0


class TestHyperpriors:
    def test_beta_decay_prior(self):
        distribution = default_beta_prior().phi_distribution()
        assert distribution.median() == pytest.approx(0.6)
        assert distribution.mean() == pytest.approx(0.8)

    def test_gamma_decay_prior(self):
        distribution = default_gamma_prior().phi_distribution()
        assert distribution.median() == pytest.approx(0.8)
        assert distribution.mean() == pytest.approx(1.0)

    def test_kappa_prior_mean(self):
        assert default_beta_prior().kappa_distribution().mean() == pytest.approx(0.8)

    def test_median_hyperparams_are_valid(self):
        hp = default_beta_prior().median_hyperparams()
        hp.check(rho_lower=-0.4)
        assert hp.theta == 1.0

    def test_df_prior(self):
        priors = PriorConfig()
        assert priors.log_density_df(2.0) == pytest.approx(-2 * np.log(2.0))
        assert priors.log_density_df(500.0) == pytest.approx(-2 * np.log(500.0))
        assert priors.log_density_df(0.5) == -np.inf


class TestResidualAudit:
    def test_consistent_residual(self, random_state, cartoon_mesh, cartoon_data):
        state, design = random_state
        assert audit_residual(state, cartoon_data.y, design, cartoon_mesh.grain_of_element) < 1e-10

    def test_drift_detected(self, random_state, cartoon_mesh, cartoon_data):
        state, design = random_state
        state.residual = state.residual.copy()
        state.residual[3] += 1e-6
        with pytest.raises(ResidualDriftError, match='drifted'):
            audit_residual(state, cartoon_data.y, design, cartoon_mesh.grain_of_element)

    def test_drift_limit_follows_data_scale(self, random_state, cartoon_mesh, cartoon_data):
        state, design = random_state
        grain = cartoon_mesh.grain_of_element
        y = 1e-3 * cartoon_data.y
        state.mu_g, state.beta, state.gamma = 1e-3 * state.mu_g, 1e-3 * state.beta, 1e-3 * state.gamma
        state.residual = recompute_residual(state, y, design, grain)
        assert audit_residual(state, y, design, grain) < 1e-12
        state.residual = state.residual + 5e-11
        with pytest.raises(ResidualDriftError, match='drifted'):
            audit_residual(state, y, design, grain)

    def test_recompute_is_exact_decomposition(self, random_state, cartoon_mesh, cartoon_data):
        state, design = random_state
        fitted = cartoon_data.y - recompute_residual(state, cartoon_data.y, design, cartoon_mesh.grain_of_element)
        expected = (state.mu_g[cartoon_mesh.grain_of_element - 1] + design.X_b @ state.beta
                    + design.X_c @ state.gamma)
        np.testing.assert_allclose(fitted, expected, rtol=1e-12)
