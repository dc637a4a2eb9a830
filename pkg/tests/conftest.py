import numpy as np
import pytest

from src.design.kernels import build_design
from src.gmrf.hyperparams import FieldHyperparams
from src.mesh.boundaries import extract_boundaries
from src.mesh.neighborhoods import build_field_graphs
from src.model.state import ModelState, recompute_residual
from src.synth.constants import GeometryKinds
from src.synth.geometry import generate_geometry
from src.synth.simulate import simulate_data
from src.synth.config import SynthConfig
from src.utils.random import make_rng


def small_synth(kind: str = GeometryKinds.CARTOON3, n_grains: int = 3, resolution: int = 2, seed: int = 0):
    return SynthConfig(kind=kind, n_grains=n_grains, resolution=resolution, seed=seed)


@pytest.fixture(scope='session')
def cartoon_mesh():
    return generate_geometry(small_synth())


@pytest.fixture(scope='session')
def cartoon_bg(cartoon_mesh):
    return extract_boundaries(cartoon_mesh)


@pytest.fixture(scope='session')
def cartoon_graphs(cartoon_mesh, cartoon_bg):
    return build_field_graphs(cartoon_mesh, cartoon_bg)


@pytest.fixture(scope='session')
def slab_mesh():
    return generate_geometry(small_synth(GeometryKinds.SLAB_STACK, n_grains=2))


@pytest.fixture(scope='session')
def slab_bg(slab_mesh):
    return extract_boundaries(slab_mesh)


@pytest.fixture(scope='session')
def cartoon_data(cartoon_mesh, cartoon_bg, cartoon_graphs):
    synth = small_synth()
    return simulate_data(cartoon_mesh, synth, rng=make_rng(11), bg=cartoon_bg, graphs=cartoon_graphs)


@pytest.fixture
def random_state(cartoon_mesh, cartoon_bg, cartoon_data):
    """A state away from the origin: random fields, uneven omega, hyperparameters off their defaults."""
    rng = make_rng(5)
    hp_beta = FieldHyperparams(nu=0.3, theta=2.0, kappa=0.7, rho=0.2, phi=0.9)
    hp_gamma = FieldHyperparams(nu=-0.2, theta=1.5, kappa=0.85, rho=0.1, phi=1.3)
    design = build_design(cartoon_mesh, cartoon_bg, hp_beta.phi, hp_gamma.phi)
    state = ModelState(mu_g=np.array([99.0, 101.0, 100.5]), mu=100.0, tau2=4.0,
                       beta=rng.standard_normal(cartoon_bg.dim_beta),
                       gamma=rng.standard_normal(cartoon_bg.dim_gamma),
                       hp_beta=hp_beta, hp_gamma=hp_gamma, sigma2=2.0,
                       omega=rng.uniform(0.5, 2.0, cartoon_mesh.M), df=5.0, residual=np.zeros(cartoon_mesh.M))
    state.residual = recompute_residual(state, cartoon_data.y, design, cartoon_mesh.grain_of_element)
    return state, design
