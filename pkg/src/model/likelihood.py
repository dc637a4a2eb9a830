import numpy as np

from src.model.state import ModelState


def log_likelihood_terms(residual: np.ndarray, sigma2: float, omega: np.ndarray) -> float:
    """log |W|^(1/2) - r^T W r / 2 with W = diag(1 / (sigma2 omega)); (2 pi)^(-M/2) dropped."""
    scale = sigma2 * omega
    return float(-0.5 * np.sum(np.log(scale) + residual ** 2 / scale))


def log_likelihood(state: ModelState, residual: np.ndarray = None) -> float:
    """
    Conditional log-likelihood of y given the state. y enters through the
    maintained residual r = y - mu - X_b beta - X_c gamma; pass `residual`
    to evaluate a staged proposal instead.
    """
    if residual is None:
        residual = state.residual
    return log_likelihood_terms(residual, state.sigma2, state.omega)


def draw_inverse_gamma(shape, scale, rng: np.random.Generator, size=None):
    return scale / rng.gamma(shape, 1.0, size=size)


def scale_mixture_draw(df: float, sigma2: float, rng: np.random.Generator, size=None) -> tuple:
    """
    Student-t errors as a normal scale mixture: omega ~ InvGam(df/2, df/2) and
    epsilon | omega ~ N(0, sigma2 omega), so epsilon ~ t_df(0, sigma2).

    Returns (epsilon, omega).
    """
    if df <= 0 or sigma2 < 0:
        raise ValueError(f'df must be positive and sigma2 non-negative, got df={df}, sigma2={sigma2}')
    omega = draw_inverse_gamma(df / 2.0, df / 2.0, rng, size=size)
    z = rng.standard_normal(size=size)
    return np.sqrt(omega * sigma2) * z, omega
