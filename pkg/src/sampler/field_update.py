import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.design.kernels import KernelDesign, with_phi
from src.exceptions import FactorizationError, PrecisionBoundsError
from src.gmrf.hyperparams import FieldHyperparams, TransformedHyperparams, transform, untransform
from src.gmrf.precision import PrecisionMatrix, assemble_precision, log_density_gmrf
from src.model.likelihood import log_likelihood
from src.model.state import ModelState
from src.sampler.context import ChainContext
from src.sampler.subblocks import Subblock, subblock_conditional

logger = logging.getLogger(__name__)


@dataclass
class FieldProposal:
    """A staged joint move of (alpha, field) for one field; nothing in the state is touched."""
    which: str
    hp: FieldHyperparams
    field: np.ndarray
    residual: np.ndarray
    design: KernelDesign
    precision: PrecisionMatrix
    log_ratio: float
    n_density_evaluations: int


def _sweep(state: ModelState, which: str, subblocks: List[Subblock], design: KernelDesign,
           precision: PrecisionMatrix, field: np.ndarray, residual: np.ndarray, weights: np.ndarray,
           rng: Optional[np.random.Generator] = None, targets: Optional[np.ndarray] = None) -> tuple:
    """
    One ordered pass over the subblocks. Each subblock is either drawn from
    its conditional (rng) or set to the matching slice of `targets`; either
    way the conditional log density of the new value is accumulated.

    Returns (field, residual, log_density, n_evaluations).
    """
    x = field.copy()
    r = residual.copy()
    total = 0.0
    for s in subblocks:
        conditional = subblock_conditional(state, design, precision, s, field=x, residual=r, weights=weights)
        new = conditional.sample(rng) if targets is None else targets[s.index]
        total += conditional.log_density(new)
        rows = design.rows(s.grain)
        r[rows] += design.block(which, s.grain)[:, s.local] @ (x[s.index] - new)
        x[s.index] = new
    return x, r, total, len(subblocks)


def _swap_design(residual: np.ndarray, x: np.ndarray, which: str, source: KernelDesign,
                 target: KernelDesign) -> np.ndarray:
    """Residual of the same field values after replacing `source`'s kernel with `target`'s."""
    if source is target:
        return residual.copy()
    return residual + source.apply_field(which, x) - target.apply_field(which, x)


def propose_field_joint(state: ModelState, which: str, context: ChainContext, alpha_new: TransformedHyperparams,
                        rng: np.random.Generator) -> Optional[FieldProposal]:
    """
    Stages a joint (alpha, field) move. The field is redrawn subblock by
    subblock from its conditionals under the proposed alpha; the reverse move
    re-evaluates the current field under the current alpha in the same order,
    starting from the proposed field.

    Returns None when alpha_new lies outside the valid region (immediate
    rejection).
    """
    field_prior = context.priors.field_prior(which)
    bounds = (field_prior.rho_lower, field_prior.rho_upper)
    hp_old = state.hp(which)
    if np.array_equal(alpha_new.values, transform(hp_old, *bounds).values):
        hp_new = hp_old
    else:
        hp_new = untransform(alpha_new, hp_old.nu, *bounds)

    log_hyper_new = field_prior.log_density_transformed(alpha_new, hp_old.nu)
    if not np.isfinite(log_hyper_new):
        return None
    try:
        precision_new = assemble_precision(context.graphs.of(which), hp_new, context.cfg.factorization_backend)
        precision_new.factor
    except (PrecisionBoundsError, FactorizationError) as exc:
        logger.debug(f'{which} proposal rejected outright: {exc}')
        return None

    precision_old = context.precision(which, state)
    design_old = context.design
    design_new = with_phi(design_old, which, hp_new.phi)
    subblocks = context.subblocks[which]
    weights = state.weights()
    x_old = state.field(which)

    try:
        start = _swap_design(state.residual, x_old, which, design_old, design_new)
        x_new, r_new, log_forward, n_forward = _sweep(state, which, subblocks, design_new, precision_new,
                                                      x_old, start, weights, rng=rng)
        start = _swap_design(r_new, x_new, which, design_new, design_old)
        _, _, log_reverse, n_reverse = _sweep(state, which, subblocks, design_old, precision_old,
                                              x_new, start, weights, targets=x_old)
    except FactorizationError as exc:
        logger.debug(f'{which} proposal rejected, subblock conditional failed: {exc}')
        return None

    nu = hp_old.nu
    log_target_new = log_likelihood(state, r_new) + log_density_gmrf(precision_new, nu, x_new) + log_hyper_new
    log_target_old = (log_likelihood(state) + log_density_gmrf(precision_old, nu, x_old)
                      + field_prior.log_density_transformed(transform(hp_old, *bounds), nu))
    log_ratio = log_target_new - log_target_old + log_reverse - log_forward
    return FieldProposal(which=which, hp=hp_new, field=x_new, residual=r_new, design=design_new,
                         precision=precision_new, log_ratio=float(log_ratio),
                         n_density_evaluations=n_forward + n_reverse)


def update_field_joint(state: ModelState, which: str, context: ChainContext, proposal,
                       rng: np.random.Generator) -> bool:
    """
    Metropolis-Hastings step on (alpha, field) of one field. `proposal`
    supplies the random-walk step on alpha through draw(rng). On acceptance
    the state's field, hyperparameters and residual and the context's design
    and precision move together; on rejection nothing changes.

    The reverse sweep runs in the forward order, so the move is not a time
    reversal of the forward sweep. From a field far from its conditional
    (a random start, say) the reverse density of the old values is tiny and
    acceptance can stay near zero; chains should start from a sensible field.
    """
    if context.design.layout(which).dim == 0:
        return False
    field_prior = context.priors.field_prior(which)
    alpha_old = transform(state.hp(which), field_prior.rho_lower, field_prior.rho_upper)
    alpha_new = TransformedHyperparams(alpha_old.values + proposal.draw(rng))

    staged = propose_field_joint(state, which, context, alpha_new, rng)
    if staged is None or not np.isfinite(staged.log_ratio):
        return False
    if np.log(rng.uniform()) >= staged.log_ratio:
        return False

    state.set_field(which, staged.field)
    state.set_hp(which, staged.hp)
    state.residual = staged.residual
    context.design = staged.design
    context.set_precision(which, staged.precision)
    return True
