import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.design.kernels import KernelDesign, apply, build_design
from src.gmrf.precision import assemble_precision, sample_gmrf
from src.mesh.boundaries import BoundaryGeometry, extract_boundaries
from src.mesh.grain_mesh import GrainMesh
from src.mesh.neighborhoods import FieldGraphs, build_field_graphs
from src.model.likelihood import scale_mixture_draw
from src.synth.config import SynthConfig
from src.utils.random import make_rng

logger = logging.getLogger(__name__)


@dataclass
class SimulatedData:
    y: np.ndarray
    mu_g: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    epsilon: np.ndarray

    def truth_dict(self) -> dict:
        return {
            'mu_g': self.mu_g.tolist(),
            'beta': self.beta.tolist(),
            'gamma': self.gamma.tolist(),
            'omega_mean': float(self.omega.mean()) if self.omega.size else None,
        }


def simulate_data(mesh: GrainMesh, synth: SynthConfig, rng: Optional[np.random.Generator] = None,
                  bg: Optional[BoundaryGeometry] = None, graphs: Optional[FieldGraphs] = None,
                  design: Optional[KernelDesign] = None, beta: Optional[np.ndarray] = None,
                  gamma: Optional[np.ndarray] = None) -> SimulatedData:
    """
    Draws y = mu_g(m) + X_b beta + X_c gamma + eps from the generative model at
    synth.truth. beta / gamma may be fixed instead of drawn from their GMRFs.
    A missing rng is derived from synth.seed, so the result is a pure function
    of (mesh, synth).
    """
    truth = synth.truth
    rng = make_rng(synth.seed) if rng is None else rng
    bg = extract_boundaries(mesh) if bg is None else bg
    graphs = build_field_graphs(mesh, bg) if graphs is None else graphs
    if design is None:
        design = build_design(mesh, bg, truth.hp_beta.phi, truth.hp_gamma.phi)

    if truth.mu_g is None:
        mu_g = truth.mu + np.sqrt(truth.tau2) * rng.standard_normal(mesh.G)
    else:
        mu_g = np.asarray(truth.mu_g, dtype=float)

    # Raises PrecisionBoundsError for parameters outside the positive-definite region.
    if beta is None:
        beta = sample_gmrf(assemble_precision(graphs.beta, truth.hp_beta), truth.hp_beta.nu, rng)
    if gamma is None:
        gamma = sample_gmrf(assemble_precision(graphs.gamma, truth.hp_gamma), truth.hp_gamma.nu, rng)

    epsilon, omega = scale_mixture_draw(truth.df, truth.sigma2, rng, size=mesh.M)
    y = mu_g[mesh.grain_of_element - 1] + apply(design, beta, gamma) + epsilon

    logger.info(f'Simulated {mesh.M} observations (dim beta={beta.size}, dim gamma={gamma.size})')
    return SimulatedData(y=y, mu_g=mu_g, beta=np.asarray(beta, dtype=float), gamma=np.asarray(gamma, dtype=float),
                         omega=omega, epsilon=epsilon)
