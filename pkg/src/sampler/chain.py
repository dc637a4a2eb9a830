import logging
import tempfile
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.diagnostics.constants import Baselines
from src.diagnostics.fit import r2, r2_adjusted
from src.exceptions import ChainAbortedError, GrainModelError
from src.gmrf.hyperparams import transform
from src.mesh.boundaries import BoundaryGeometry
from src.mesh.constants import Fields
from src.mesh.grain_mesh import GrainMesh
from src.mesh.neighborhoods import FieldGraphs
from src.model.priors import PriorConfig
from src.model.state import ModelState, audit_residual
from src.sampler.adaptation import ProposalAdapter, adapt_proposals
from src.sampler.config import ChainConfig
from src.sampler.constants import DF_PROPOSAL, Phases
from src.sampler.context import ChainContext, build_context
from src.sampler.field_update import update_field_joint
from src.sampler.gibbs import gibbs_error_params, gibbs_grain_means, gibbs_nu, metropolis_df

logger = logging.getLogger(__name__)

DUMP_FILE = 'failed_state.npz'


@dataclass
class FieldSnapshot:
    iteration: int
    sigma2: float
    phi_beta: float
    phi_gamma: float
    beta: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    residual: np.ndarray


@dataclass
class ChainTrace:
    scalars: pd.DataFrame
    snapshots: List[FieldSnapshot]
    acceptance: Dict[str, Dict[str, float]]
    timings: Dict[str, float]
    adaptation: Dict[str, list] = field(default_factory=dict)
    final_state: Optional[ModelState] = None

    @property
    def n_retained(self) -> int:
        return len(self.scalars)


class AcceptanceCounter:
    def __init__(self):
        self.accepted = defaultdict(int)
        self.proposed = defaultdict(int)

    def add(self, name: str, accepted: bool) -> None:
        self.proposed[name] += 1
        self.accepted[name] += int(accepted)

    def rates(self) -> Dict[str, float]:
        return {name: self.accepted[name] / count for name, count in sorted(self.proposed.items()) if count}


def initialize_state(y: np.ndarray, mesh: GrainMesh, priors: PriorConfig, initial_df: float = 5.0) -> ModelState:
    """
    mu_g at per-grain data means, beta = gamma = 0, sigma2 at the pooled
    within-grain variance, omega = 1 and field hyperparameters at prior
    medians (theta = 1, the Gamma(0.001, 0.001) median being numerically zero).
    """
    y = np.asarray(y, dtype=float)
    index = mesh.grain_of_element - 1
    mu_g = np.bincount(index, weights=y, minlength=mesh.G) / np.bincount(index, minlength=mesh.G)
    residual = y - mu_g[index]
    sigma2 = float(np.mean(residual ** 2))
    tau2 = float(np.var(mu_g, ddof=1)) if mesh.G > 1 else 0.0
    hp_beta = priors.beta.median_hyperparams()
    hp_gamma = priors.gamma.median_hyperparams()
    return ModelState(mu_g=mu_g, mu=float(mu_g.mean()), tau2=tau2 if tau2 > 0 else 1.0,
                      beta=np.zeros(0), gamma=np.zeros(0), hp_beta=hp_beta, hp_gamma=hp_gamma,
                      sigma2=sigma2 if sigma2 > 0 else 1.0, omega=np.ones(y.size), df=float(initial_df),
                      residual=residual).check()


def _trace_row(iteration: int, state: ModelState, context: ChainContext, p_effective: int) -> dict:
    y = context.y
    fitted = y - state.residual
    row = {'iteration': iteration}
    row.update(state.as_scalars())
    for which in Fields.ALL:
        values = state.field(which)
        row[f'{which}_mean'] = float(values.mean()) if values.size else np.nan
        row[f'{which}_sd'] = float(values.std()) if values.size else np.nan
    row['r2'] = r2(y, fitted)
    if p_effective < y.size - 1:
        row['r2_adj'] = r2_adjusted(y, fitted, p_effective)
        row['r2_adj_grain'] = r2_adjusted(y, fitted, p_effective, Baselines.GRAIN_MEANS,
                                          context.mesh.grain_of_element)
    else:
        row['r2_adj'] = row['r2_adj_grain'] = np.nan
    return row


def _snapshot(iteration: int, state: ModelState) -> FieldSnapshot:
    return FieldSnapshot(iteration=iteration, sigma2=state.sigma2, phi_beta=state.hp_beta.phi,
                         phi_gamma=state.hp_gamma.phi, beta=state.beta.copy(), gamma=state.gamma.copy(),
                         omega=state.omega.copy(), residual=state.residual.copy())


def _dump_state(state: ModelState, iteration: int, dump_dir: Optional[Path]) -> Path:
    dump_dir = Path(tempfile.mkdtemp(prefix='grain-gmrf-')) if dump_dir is None else Path(dump_dir)
    dump_dir.mkdir(parents=True, exist_ok=True)
    path = dump_dir / DUMP_FILE
    scalars = {key: np.asarray(value) for key, value in state.as_scalars().items()}
    np.savez(path, iteration=iteration, beta=state.beta, gamma=state.gamma, omega=state.omega,
             residual=state.residual, mu_g=state.mu_g, **scalars)
    return path


def _iteration(state: ModelState, context: ChainContext, adapters: Dict[str, ProposalAdapter],
               rng: np.random.Generator, counter: AcceptanceCounter) -> None:
    priors = context.priors
    for which in Fields.ALL:
        if which not in adapters:
            continue
        accepted = update_field_joint(state, which, context, adapters[which], rng)
        field_prior = priors.field_prior(which)
        adapters[which].record(transform(state.hp(which), field_prior.rho_lower, field_prior.rho_upper).values,
                               accepted)
        counter.add(which, accepted)

    for which in Fields.ALL:
        gibbs_nu(state, which, context.precision(which, state), priors, rng)
    gibbs_grain_means(state, context.mesh.grain_of_element, priors, rng)
    gibbs_error_params(state, priors, rng)

    accepted = metropolis_df(state, adapters[DF_PROPOSAL], priors, rng)
    adapters[DF_PROPOSAL].record([np.log(state.df)], accepted)
    counter.add(DF_PROPOSAL, accepted)


def run_chain(y: np.ndarray, mesh: GrainMesh, bg: BoundaryGeometry, graphs: FieldGraphs, cfg: ChainConfig,
              rng: np.random.Generator, priors: Optional[PriorConfig] = None, state: Optional[ModelState] = None,
              dump_dir: Optional[Path] = None) -> ChainTrace:
    """
    Metropolis-within-Gibbs over the full model. Per iteration: joint
    (alpha, field) update for beta then gamma, nu for both fields, grain
    means, error parameters, then df.

    Retains every cfg.thin-th sampling iteration as one scalar row and every
    cfg.field_stride-th retained sample (plus the last) as a field snapshot.
    A failing iteration dumps the state and raises ChainAbortedError.
    """
    cfg.check()
    y = np.asarray(y, dtype=float)
    priors = (PriorConfig() if priors is None else priors).with_data_mean(y)
    state = initialize_state(y, mesh, priors, cfg.initial_df) if state is None else state.copy()

    context = build_context(y, mesh, bg, graphs, priors, cfg, state.hp_beta.phi, state.hp_gamma.phi)
    for which in Fields.ALL:
        if state.field(which).size != context.design.layout(which).dim:
            state.set_field(which, np.zeros(context.design.layout(which).dim))
    state.residual = y - state.mu_g[mesh.grain_of_element - 1] - context.design.apply_field(
        Fields.BETA, state.beta) - context.design.apply_field(Fields.GAMMA, state.gamma)

    adapters = {which: ProposalAdapter(which, cfg.initial_cov(which), cfg.target_acceptance, cfg.adaptation_rate)
                for which in Fields.ALL if context.design.layout(which).dim}
    adapters[DF_PROPOSAL] = ProposalAdapter(DF_PROPOSAL, [[cfg.proposal_var_df]], cfg.target_acceptance,
                                            cfg.adaptation_rate)
    if cfg.n_adapt_blocks == 0:
        for adapter in adapters.values():
            adapter.freeze()

    p_effective = mesh.G + context.design.layout(Fields.BETA).dim + context.design.layout(Fields.GAMMA).dim
    counters = {phase: AcceptanceCounter() for phase in Phases.ALL}
    timings = {phase: 0.0 for phase in Phases.ALL}
    rows, snapshots = list(), list()
    sampling_start = cfg.adaptation_iterations + cfg.burn_in

    logger.info(f'Running {cfg.total_iterations} iterations ({cfg.adaptation_iterations} adaptive, '
                f'{cfg.burn_in} burn-in, {cfg.n_samples} sampling, thin {cfg.thin}); '
                f'{len(context.subblocks[Fields.BETA])} beta and {len(context.subblocks[Fields.GAMMA])} '
                f'gamma subblocks')

    for iteration in tqdm(range(cfg.total_iterations), disable=not cfg.progress, desc='MCMC'):
        if iteration < cfg.adaptation_iterations:
            phase = Phases.ADAPTATION
        elif iteration < sampling_start:
            phase = Phases.BURN_IN
        else:
            phase = Phases.SAMPLING
        if iteration == sampling_start and cfg.n_samples:
            logger.info(f'Sampling from iteration {iteration}')

        started = time.perf_counter()
        try:
            _iteration(state, context, adapters, rng, counters[phase])
            if cfg.audit_every and (iteration + 1) % cfg.audit_every == 0:
                drift = audit_residual(state, y, context.design, mesh.grain_of_element)
                logger.debug(f'iteration {iteration}: residual drift {drift:.3e}')
        except (GrainModelError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            path = _dump_state(state, iteration, dump_dir)
            raise ChainAbortedError(f'iteration {iteration} failed: {exc}', dump_path=path) from exc
        timings[phase] += time.perf_counter() - started

        if phase == Phases.ADAPTATION and (iteration + 1) % cfg.adapt_block_size == 0:
            block = (iteration + 1) // cfg.adapt_block_size - 1
            adapt_proposals(adapters, cfg, block)
            rates = ', '.join(f'{name} {adapter.history[-1]["acceptance"]:.3f}'
                              for name, adapter in adapters.items() if adapter.history)
            logger.info(f'Adaptation block {block + 1}/{cfg.n_adapt_blocks}: {rates}')

        if phase == Phases.SAMPLING and (iteration - sampling_start + 1) % cfg.thin == 0:
            rows.append(_trace_row(iteration, state, context, p_effective))
            if (len(rows) - 1) % cfg.field_stride == 0 or len(rows) == cfg.n_retained:
                snapshots.append(_snapshot(iteration, state))

    columns = list(_trace_row(-1, state, context, p_effective))
    scalars = pd.DataFrame(rows, columns=columns)
    acceptance = {phase: counter.rates() for phase, counter in counters.items()}
    logger.info(f'Chain finished: {len(rows)} retained rows, {len(snapshots)} field snapshots, '
                f'sampling acceptance {acceptance[Phases.SAMPLING]}')
    return ChainTrace(scalars=scalars, snapshots=snapshots, acceptance=acceptance, timings=timings,
                      adaptation={name: adapter.history for name, adapter in adapters.items()},
                      final_state=state)
