import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sps

from src.exceptions import PrecisionBoundsError
from src.gmrf.constants import SYMBOLIC_CACHE_SIZE
from src.gmrf.factor import Backends, SymbolicFactorization
from src.gmrf.hyperparams import FieldHyperparams
from src.mesh.neighborhoods import NeighborhoodGraph

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


def rho_bounds(graph: NeighborhoodGraph) -> tuple:
    """
    Admissible rho interval from diagonal dominance: (-min_p |wgn(p)| / |bgn(p)|, 1)
    over indices with between-grain neighbors; (-inf, 1) when there are none.
    """
    bgn_count = graph.bgn_count
    has_bgn = bgn_count > 0
    if not has_bgn.any():
        return -np.inf, 1.0
    return -float(np.min(graph.wgn_count[has_bgn] / bgn_count[has_bgn])), 1.0


@lru_cache(maxsize=SYMBOLIC_CACHE_SIZE)
def symbolic_factorization(graph: NeighborhoodGraph, backend: str = Backends.BANDED) -> SymbolicFactorization:
    pattern = graph.wgn + graph.bgn + sps.identity(graph.dim, format='csr')
    return SymbolicFactorization(pattern, backend=backend)


@dataclass(frozen=True, eq=False)
class PrecisionMatrix:
    Q: sps.csr_matrix
    K: np.ndarray
    graph: NeighborhoodGraph
    hp: FieldHyperparams
    backend: str = field(default=Backends.BANDED)

    @property
    def dim(self) -> int:
        return self.graph.dim

    @cached_property
    def factor(self):
        return symbolic_factorization(self.graph, self.backend).factorize(self.Q)

    def logdet(self) -> float:
        return self.factor.logdet() if self.dim else 0.0

    def toarray(self) -> np.ndarray:
        return self.Q.toarray()


def assemble_precision(graph: NeighborhoodGraph, hp: FieldHyperparams,
                       backend: str = Backends.BANDED) -> PrecisionMatrix:
    lower, upper = rho_bounds(graph)
    hp.check(rho_lower=lower, rho_upper=upper)

    K = graph.wgn_count + hp.rho * graph.bgn_count
    if graph.dim == 0:
        return PrecisionMatrix(Q=sps.csr_matrix((0, 0)), K=K, graph=graph, hp=hp, backend=backend)
    if K.min() <= 0:
        raise PrecisionBoundsError(f'index {int(K.argmin())} has no neighbors, its precision is singular')

    Q = hp.theta * (sps.diags(K / hp.kappa) - graph.wgn - hp.rho * graph.bgn)
    return PrecisionMatrix(Q=sps.csr_matrix(Q), K=K, graph=graph, hp=hp, backend=backend)


def conditional_moments(Q: PrecisionMatrix, hp: FieldHyperparams, x: np.ndarray, p: int) -> tuple:
    graph = Q.graph
    K_p = Q.K[p]
    wgn_sum = np.sum(x[graph.within_grain_neighbors(p)] - hp.nu)
    bgn_sum = np.sum(x[graph.between_grain_neighbors(p)] - hp.nu)
    mean = hp.nu + (hp.kappa / K_p) * (wgn_sum + hp.rho * bgn_sum)
    variance = hp.kappa / (hp.theta * K_p)
    return float(mean), float(variance)


def sample_gmrf(Q: PrecisionMatrix, mean, rng: np.random.Generator) -> np.ndarray:
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (Q.dim,))
    if Q.dim == 0:
        return np.zeros(0)
    z = rng.standard_normal(Q.dim)
    return mean + Q.factor.solve_upper(z)


def log_density_gmrf(Q: PrecisionMatrix, mean, x: np.ndarray) -> float:
    if Q.dim == 0:
        return 0.0
    centered = np.asarray(x, dtype=float) - mean
    quadratic = float(centered @ (Q.Q @ centered))
    return 0.5 * Q.logdet() - 0.5 * Q.dim * LOG_2PI - 0.5 * quadratic
