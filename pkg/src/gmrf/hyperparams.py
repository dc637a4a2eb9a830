from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import norm

from src.exceptions import PrecisionBoundsError
from src.gmrf.constants import RHO_PRIOR_LOWER, RHO_PRIOR_UPPER


@dataclass(frozen=True)
class FieldHyperparams:
    nu: float
    theta: float
    kappa: float
    rho: float
    phi: float

    def check(self, rho_lower: float = -np.inf, rho_upper: float = 1.0) -> 'FieldHyperparams':
        if not self.theta > 0:
            raise PrecisionBoundsError(f'theta must be positive, got {self.theta}')
        if not 0 < self.kappa < 1:
            raise PrecisionBoundsError(f'kappa must lie in (0, 1), got {self.kappa}')
        if not rho_lower < self.rho < rho_upper:
            raise PrecisionBoundsError(f'rho must lie in ({rho_lower}, {rho_upper}), got {self.rho}')
        if not self.phi > 0:
            raise PrecisionBoundsError(f'phi must be positive, got {self.phi}')
        return self

    def with_nu(self, nu: float) -> 'FieldHyperparams':
        return replace(self, nu=float(nu))

    def as_dict(self) -> dict:
        return {'nu': self.nu, 'theta': self.theta, 'kappa': self.kappa, 'rho': self.rho, 'phi': self.phi}


@dataclass(frozen=True)
class TransformedHyperparams:
    """(ln phi, ln(theta/kappa), probit kappa, probit of rho rescaled to (0, 1))."""
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', np.asarray(self.values, dtype=float).reshape(4))


def transform(hp: FieldHyperparams, rho_lower: float = RHO_PRIOR_LOWER,
              rho_upper: float = RHO_PRIOR_UPPER) -> TransformedHyperparams:
    rho_unit = (hp.rho - rho_lower) / (rho_upper - rho_lower)
    return TransformedHyperparams(np.array([
        np.log(hp.phi),
        np.log(hp.theta / hp.kappa),
        ndtri(hp.kappa),
        ndtri(rho_unit),
    ]))


def untransform(alpha: TransformedHyperparams, nu: float, rho_lower: float = RHO_PRIOR_LOWER,
                rho_upper: float = RHO_PRIOR_UPPER) -> FieldHyperparams:
    log_phi, log_theta_over_kappa, probit_kappa, probit_rho = alpha.values
    kappa = float(ndtr(probit_kappa))
    return FieldHyperparams(nu=float(nu),
                            theta=float(kappa * np.exp(log_theta_over_kappa)),
                            kappa=kappa,
                            rho=float(rho_lower + (rho_upper - rho_lower) * ndtr(probit_rho)),
                            phi=float(np.exp(log_phi)))


def log_jacobian(alpha: TransformedHyperparams, rho_lower: float = RHO_PRIOR_LOWER,
                 rho_upper: float = RHO_PRIOR_UPPER) -> float:
    """
    log |d(phi, theta, kappa, rho) / d alpha|.

    The Jacobian is triangular: theta depends on (alpha_2, alpha_3), the
    others on one coordinate each.
    """
    log_phi, log_theta_over_kappa, probit_kappa, probit_rho = alpha.values
    log_theta = log_theta_over_kappa + np.log(ndtr(probit_kappa))
    return float(log_phi + log_theta + norm.logpdf(probit_kappa)
                 + np.log(rho_upper - rho_lower) + norm.logpdf(probit_rho))
