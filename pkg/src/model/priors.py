from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from src.gmrf.constants import RHO_PRIOR_LOWER, RHO_PRIOR_UPPER
from src.gmrf.hyperparams import FieldHyperparams, TransformedHyperparams, log_jacobian, untransform
from src.mesh.constants import Fields


@dataclass
class FieldPrior:
    """
    Hyperpriors of one latent field: phi ~ logN(median, variance) on the log
    scale, nu ~ N(mean, sd^2), theta ~ Gam(shape, rate), kappa ~ Beta(a, b),
    rho ~ Unif(lower, upper).
    """
    phi_log_median: float
    phi_log_variance: float
    nu_mean: float = 0.0
    nu_sd: float = 8.0
    theta_shape: float = 0.001
    theta_rate: float = 0.001
    kappa_a: float = 32 / 5
    kappa_b: float = 8 / 5
    rho_lower: float = RHO_PRIOR_LOWER
    rho_upper: float = RHO_PRIOR_UPPER

    def phi_distribution(self):
        return stats.lognorm(s=np.sqrt(self.phi_log_variance), scale=np.exp(self.phi_log_median))

    def kappa_distribution(self):
        return stats.beta(self.kappa_a, self.kappa_b)

    def log_density(self, hp: FieldHyperparams) -> float:
        """Joint log prior of (phi, theta, kappa, rho); -inf outside the support."""
        if not (hp.phi > 0 and hp.theta > 0 and 0 < hp.kappa < 1 and self.rho_lower < hp.rho < self.rho_upper):
            return -np.inf
        return float(self.phi_distribution().logpdf(hp.phi)
                     + stats.gamma.logpdf(hp.theta, self.theta_shape, scale=1.0 / self.theta_rate)
                     + self.kappa_distribution().logpdf(hp.kappa)
                     - np.log(self.rho_upper - self.rho_lower))

    def log_density_transformed(self, alpha: TransformedHyperparams, nu: float = 0.0) -> float:
        hp = untransform(alpha, nu, self.rho_lower, self.rho_upper)
        return self.log_density(hp) + log_jacobian(alpha, self.rho_lower, self.rho_upper)

    def log_density_nu(self, nu: float) -> float:
        return float(stats.norm.logpdf(nu, self.nu_mean, self.nu_sd))

    def median_hyperparams(self) -> FieldHyperparams:
        return FieldHyperparams(nu=self.nu_mean,
                                theta=1.0,
                                kappa=float(self.kappa_distribution().median()),
                                rho=0.5 * (self.rho_lower + self.rho_upper),
                                phi=float(np.exp(self.phi_log_median)))


def default_beta_prior() -> FieldPrior:
    return FieldPrior(phi_log_median=float(np.log(0.6)),
                      phi_log_variance=float(2 * (np.log(0.8) - np.log(0.6))))


def default_gamma_prior() -> FieldPrior:
    return FieldPrior(phi_log_median=float(np.log(0.8)),
                      phi_log_variance=float(2 * (np.log(1.0) - np.log(0.8))))


@dataclass
class PriorConfig:
    mu_mean: Optional[float] = None
    mu_sd: float = 100.0
    tau2_shape: float = 0.001
    tau2_scale: float = 0.001
    sigma2_shape: float = 0.001
    sigma2_scale: float = 0.001
    df_lower: float = 0.5
    df_upper: float = 500.0
    beta: FieldPrior = field(default_factory=default_beta_prior)
    gamma: FieldPrior = field(default_factory=default_gamma_prior)

    def field_prior(self, which: str) -> FieldPrior:
        return self.beta if which == Fields.BETA else self.gamma

    def with_data_mean(self, y: np.ndarray) -> 'PriorConfig':
        """Freezes mean(y) into the grand-mean prior unless it was set explicitly."""
        if self.mu_mean is not None:
            return self
        return replace(self, mu_mean=float(np.mean(y)))

    def log_density_df(self, df: float) -> float:
        if not self.df_lower < df <= self.df_upper:
            return -np.inf
        return float(-2.0 * np.log(df))

    def log_density_mu(self, mu: float) -> float:
        if self.mu_mean is None:
            raise ValueError('mu prior mean is unset; call with_data_mean(y) first')
        return float(stats.norm.logpdf(mu, self.mu_mean, self.mu_sd))


def log_invgamma(x, shape: float, scale: float) -> float:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        return -np.inf
    return float(np.sum(stats.invgamma.logpdf(x, shape, scale=scale)))
