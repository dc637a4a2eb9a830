import numpy as np
from scipy.special import gammaln

from src.gmrf.precision import PrecisionMatrix
from src.model.likelihood import draw_inverse_gamma
from src.model.priors import PriorConfig
from src.model.state import ModelState


def gibbs_nu(state: ModelState, which: str, precision: PrecisionMatrix, priors: PriorConfig,
             rng: np.random.Generator) -> float:
    """
    nu | x ~ N(V (a + m0 / s0^2), V) with a = 1^T Q x, b = 1^T Q 1 and
    V = 1 / (b + 1 / s0^2).
    """
    field_prior = priors.field_prior(which)
    x = state.field(which)
    row_sums = np.asarray(precision.Q.sum(axis=1)).ravel()
    a = float(row_sums @ x)
    b = float(row_sums.sum())
    prior_precision = 1.0 / field_prior.nu_sd ** 2
    variance = 1.0 / (b + prior_precision)
    mean = variance * (a + field_prior.nu_mean * prior_precision)
    nu = float(mean + np.sqrt(variance) * rng.standard_normal())
    state.set_hp(which, state.hp(which).with_nu(nu))
    return nu


def gibbs_grain_means(state: ModelState, grain_of_element: np.ndarray, priors: PriorConfig,
                      rng: np.random.Generator) -> None:
    """Draws mu_g, then mu, then tau2, each from its full conditional; keeps the residual in step."""
    n_grains = state.mu_g.size
    index = grain_of_element - 1
    w = state.weights()
    partial = state.residual + state.mu_g[index]

    precision = np.bincount(index, weights=w, minlength=n_grains) + 1.0 / state.tau2
    mean = (np.bincount(index, weights=w * partial, minlength=n_grains) + state.mu / state.tau2) / precision
    mu_g = mean + rng.standard_normal(n_grains) / np.sqrt(precision)
    state.residual = partial - mu_g[index]
    state.mu_g = mu_g

    prior_precision = 1.0 / priors.mu_sd ** 2
    variance = 1.0 / (n_grains / state.tau2 + prior_precision)
    mean = variance * (mu_g.sum() / state.tau2 + priors.mu_mean * prior_precision)
    state.mu = float(mean + np.sqrt(variance) * rng.standard_normal())

    state.tau2 = float(draw_inverse_gamma(n_grains / 2.0 + priors.tau2_shape,
                                          0.5 * np.sum((mu_g - state.mu) ** 2) + priors.tau2_scale, rng))


def gibbs_error_params(state: ModelState, priors: PriorConfig, rng: np.random.Generator) -> None:
    """sigma2 | omega, r then omega | sigma2, df, r; each omega_m independently."""
    r2 = state.residual ** 2
    n = r2.size
    state.sigma2 = float(draw_inverse_gamma(n / 2.0 + priors.sigma2_shape,
                                            0.5 * np.sum(r2 / state.omega) + priors.sigma2_scale, rng))
    shape = (state.df + 1.0) / 2.0
    state.omega = draw_inverse_gamma(shape, 0.5 * (r2 / state.sigma2 + state.df), rng, size=n)


def log_df_conditional(df: float, omega: np.ndarray) -> float:
    """
    log p(df | omega) up to a constant, with the 1/df^2 prior folded in:
    -M lnGamma(df/2) + (M df/2 - 2) ln(df/2) + (df/2) sum ln(1/omega) - (df/2) sum 1/omega.
    """
    n = omega.size
    half = df / 2.0
    return float(-n * gammaln(half) + (n * half - 2.0) * np.log(half)
                 - half * np.sum(np.log(omega)) - half * np.sum(1.0 / omega))


def metropolis_df(state: ModelState, proposal, priors: PriorConfig, rng: np.random.Generator) -> bool:
    """Random walk on ln df. Proposals outside (df_lower, df_upper] are rejected."""
    log_df = np.log(state.df)
    log_df_new = log_df + float(np.ravel(proposal.draw(rng))[0])
    df_new = float(np.exp(log_df_new))
    if not priors.df_lower < df_new <= priors.df_upper:
        return False
    log_ratio = (log_df_conditional(df_new, state.omega) - log_df_conditional(state.df, state.omega)
                 + log_df_new - log_df)
    if np.log(rng.uniform()) < log_ratio:
        state.df = df_new
        return True
    return False
