"""
Dense reference implementations for tests.

Everything here is rebuilt from element and node coordinates with explicit
loops and conditioned in covariance form, so it shares no linear-algebra path
with the sparse sampler it checks.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.gmrf.hyperparams import FieldHyperparams
from src.mesh.boundaries import BoundaryGeometry
from src.mesh.constants import Fields
from src.mesh.grain_mesh import GrainMesh
from src.mesh.neighborhoods import NeighborhoodGraph

DENSE_SIZE_CAP = 200
MATCH_TOLERANCE = 1e-12


class OracleSizeError(ValueError):
    pass


@dataclass
class DenseInstance:
    """
    The latent-field part of the model at fixed hyperparameters: data is
    y - mu_g(m), so data = X_b beta + X_c gamma + eps with eps ~ N(0, diag(1 / weights)).
    """
    Q_beta: np.ndarray
    Q_gamma: np.ndarray
    X_b: np.ndarray
    X_c: np.ndarray
    nu_beta: float
    nu_gamma: float
    weights: np.ndarray
    data: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    size_cap: int = DENSE_SIZE_CAP

    def __post_init__(self):
        if self.Q_beta.shape[0] + self.Q_gamma.shape[0] > self.size_cap:
            raise OracleSizeError(f'{self.Q_beta.shape[0] + self.Q_gamma.shape[0]} latent dimensions exceed '
                                  f'the dense cap of {self.size_cap}')

    def Q(self, which: str) -> np.ndarray:
        return self.Q_beta if which == Fields.BETA else self.Q_gamma

    def X(self, which: str) -> np.ndarray:
        return self.X_b if which == Fields.BETA else self.X_c

    def nu(self, which: str) -> float:
        return self.nu_beta if which == Fields.BETA else self.nu_gamma

    def field(self, which: str) -> np.ndarray:
        return self.beta if which == Fields.BETA else self.gamma

    def other(self, which: str) -> str:
        return Fields.GAMMA if which == Fields.BETA else Fields.BETA

    def verify(self, design=None, precisions: Optional[dict] = None, tolerance: float = MATCH_TOLERANCE) -> None:
        """Entrywise comparison against the sparse production structures."""
        for which in Fields.ALL:
            if design is not None:
                gap = np.max(np.abs(design.X(which).toarray() - self.X(which)), initial=0.0)
                if gap > tolerance:
                    raise AssertionError(f'dense X_{which} differs from the sparse design by {gap:.3e}')
            if precisions is not None and which in precisions:
                gap = np.max(np.abs(precisions[which].toarray() - self.Q(which)), initial=0.0)
                if gap > tolerance:
                    raise AssertionError(f'dense Q_{which} differs from the sparse precision by {gap:.3e}')


def dense_precision(graph: NeighborhoodGraph, hp: FieldHyperparams) -> np.ndarray:
    n = graph.dim
    Q = np.zeros((n, n))
    for p in range(n):
        within = graph.within_grain_neighbors(p)
        between = graph.between_grain_neighbors(p)
        Q[p, p] = hp.theta * (len(within) + hp.rho * len(between)) / hp.kappa
        for q in within:
            Q[p, q] -= hp.theta
        for q in between:
            Q[p, q] -= hp.theta * hp.rho
    return Q


def dense_design(mesh: GrainMesh, bg: BoundaryGeometry, which: str, phi: float) -> np.ndarray:
    layout = bg.layout(which)
    X = np.zeros((mesh.M, layout.dim))
    for m in range(mesh.M):
        corners = mesh.nodes[mesh.elements[m]]
        centroid = corners.sum(axis=0) / 4.0
        for p in range(layout.dim):
            if layout.grain[p] != mesh.grain_of_element[m]:
                continue
            distance = np.sqrt(np.sum((centroid - mesh.nodes[layout.node[p]]) ** 2))
            X[m, p] = np.exp(-phi * distance) * layout.weight[p]
    return X


def build_dense_instance(mesh: GrainMesh, bg: BoundaryGeometry, graphs, state, y: np.ndarray,
                         size_cap: int = DENSE_SIZE_CAP) -> DenseInstance:
    if bg.dim_beta + bg.dim_gamma > size_cap:
        raise OracleSizeError(f'{bg.dim_beta + bg.dim_gamma} latent dimensions exceed the dense cap of {size_cap}')
    return DenseInstance(Q_beta=dense_precision(graphs.beta, state.hp_beta),
                         Q_gamma=dense_precision(graphs.gamma, state.hp_gamma),
                         X_b=dense_design(mesh, bg, Fields.BETA, state.hp_beta.phi),
                         X_c=dense_design(mesh, bg, Fields.GAMMA, state.hp_gamma.phi),
                         nu_beta=state.hp_beta.nu, nu_gamma=state.hp_gamma.nu,
                         weights=1.0 / (state.sigma2 * state.omega),
                         data=np.asarray(y, dtype=float) - state.mu_g[mesh.grain_of_element - 1],
                         beta=state.beta.copy(), gamma=state.gamma.copy(), size_cap=size_cap)


def _gaussian_update(mean: np.ndarray, cov: np.ndarray, X: np.ndarray, z: np.ndarray, weights: np.ndarray):
    """Posterior of x ~ N(mean, cov) after observing z = X x + eps, eps ~ N(0, diag(1 / weights))."""
    observed = weights > 0
    X = X[observed]
    if X.shape[0] == 0 or mean.size == 0:
        return mean, cov
    innovation = X @ cov @ X.T + np.diag(1.0 / weights[observed])
    gain = cov @ X.T @ np.linalg.inv(innovation)
    return mean + gain @ (z[observed] - X @ mean), cov - gain @ X @ cov


def dense_conditional(instance: DenseInstance, s: Sequence[int], which: str = Fields.BETA) -> tuple:
    """
    Exact conditional of field[s] given the rest of both fields and the data,
    from the joint normal by covariance partitioning.
    """
    s = np.asarray(s, dtype=int)
    n = instance.Q(which).shape[0]
    rest = np.setdiff1d(np.arange(n), s)
    sigma = np.linalg.inv(instance.Q(which)) if n else np.zeros((0, 0))
    nu = instance.nu(which)
    x = instance.field(which)

    if rest.size:
        solve = np.linalg.solve(sigma[np.ix_(rest, rest)], sigma[np.ix_(rest, s)])
        prior_mean = nu + solve.T @ (x[rest] - nu)
        prior_cov = sigma[np.ix_(s, s)] - sigma[np.ix_(s, rest)] @ solve
    else:
        prior_mean = np.full(s.size, nu)
        prior_cov = sigma[np.ix_(s, s)]

    other = instance.other(which)
    X = instance.X(which)
    z = instance.data - instance.X(other) @ instance.field(other) - X[:, rest] @ x[rest]
    return _gaussian_update(prior_mean, prior_cov, X[:, s], z, instance.weights)


def dense_posterior_moments(instance: DenseInstance) -> tuple:
    """Joint posterior mean and covariance of (beta, gamma) at the instance's fixed hyperparameters."""
    n_beta, n_gamma = instance.Q_beta.shape[0], instance.Q_gamma.shape[0]
    cov = np.zeros((n_beta + n_gamma, n_beta + n_gamma))
    if n_beta:
        cov[:n_beta, :n_beta] = np.linalg.inv(instance.Q_beta)
    if n_gamma:
        cov[n_beta:, n_beta:] = np.linalg.inv(instance.Q_gamma)
    mean = np.concatenate([np.full(n_beta, instance.nu_beta), np.full(n_gamma, instance.nu_gamma)])
    X = np.hstack([instance.X_b, instance.X_c])
    return _gaussian_update(mean, cov, X, instance.data, instance.weights)
