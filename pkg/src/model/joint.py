import logging

import numpy as np

from src.exceptions import FactorizationError, PrecisionBoundsError
from src.gmrf.hyperparams import transform
from src.gmrf.precision import assemble_precision, log_density_gmrf
from src.mesh.constants import Fields
from src.mesh.neighborhoods import FieldGraphs
from src.model.priors import PriorConfig, log_invgamma
from src.model.state import ModelState

logger = logging.getLogger(__name__)


def log_field_prior(state: ModelState, which: str, priors: PriorConfig, graphs: FieldGraphs,
                    transformed: bool = False) -> float:
    """Hyperpriors, the nu prior and the GMRF density of one latent field."""
    field_prior = priors.field_prior(which)
    hp = state.hp(which)
    if transformed:
        hyper = field_prior.log_density_transformed(transform(hp, field_prior.rho_lower, field_prior.rho_upper),
                                                    hp.nu)
    else:
        hyper = field_prior.log_density(hp)
    if not np.isfinite(hyper):
        return -np.inf

    try:
        precision = assemble_precision(graphs.of(which), hp)
        gmrf = log_density_gmrf(precision, hp.nu, state.field(which))
    except (PrecisionBoundsError, FactorizationError) as exc:
        logger.debug(f'{which} prior outside support: {exc}')
        return -np.inf
    return hyper + field_prior.log_density_nu(hp.nu) + gmrf


def log_prior(state: ModelState, priors: PriorConfig, graphs: FieldGraphs, transformed: bool = False) -> float:
    """
    Sum of every prior and hyperprior density. With transformed=True the field
    hyperparameters are measured in the unbounded alpha coordinates, which adds
    the change-of-variables Jacobian. Returns -inf outside the support.
    """
    if not (state.tau2 > 0 and state.sigma2 > 0 and np.all(state.omega > 0)):
        return -np.inf

    total = priors.log_density_mu(state.mu)
    total += float(np.sum(-0.5 * np.log(2 * np.pi * state.tau2) - (state.mu_g - state.mu) ** 2 / (2 * state.tau2)))
    total += log_invgamma(state.tau2, priors.tau2_shape, priors.tau2_scale)
    total += log_invgamma(state.sigma2, priors.sigma2_shape, priors.sigma2_scale)

    df_term = priors.log_density_df(state.df)
    if not np.isfinite(df_term):
        return -np.inf
    total += df_term + log_invgamma(state.omega, state.df / 2.0, state.df / 2.0)

    for which in Fields.ALL:
        total += log_field_prior(state, which, priors, graphs, transformed=transformed)
    return float(total)
