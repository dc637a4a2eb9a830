from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from src.design.kernels import KernelDesign
from src.exceptions import FactorizationError
from src.gmrf.precision import LOG_2PI, PrecisionMatrix
from src.mesh.boundaries import FieldLayout
from src.model.state import ModelState
from src.sampler.constants import SubblockSchemes


@dataclass(frozen=True)
class Subblock:
    """Contiguous run [start, stop) of one field's indices, inside a single grain."""
    which: str
    grain: int
    start: int
    stop: int
    local_start: int
    local_stop: int

    @property
    def index(self) -> slice:
        return slice(self.start, self.stop)

    @property
    def local(self) -> slice:
        return slice(self.local_start, self.local_stop)

    @property
    def size(self) -> int:
        return self.stop - self.start


def make_subblocks(layout: FieldLayout, which: str, scheme: str = SubblockSchemes.PER_GRAIN,
                   size: int = 200) -> List[Subblock]:
    subblocks = []
    n_grains = layout.offsets.size - 1
    for grain in range(1, n_grains + 1):
        grain_slice = layout.grain_slice(grain)
        n_grain = grain_slice.stop - grain_slice.start
        chunk = n_grain if scheme == SubblockSchemes.PER_GRAIN else size
        for local_start in range(0, n_grain, max(chunk, 1)):
            local_stop = min(local_start + chunk, n_grain)
            subblocks.append(Subblock(which=which, grain=grain,
                                      start=grain_slice.start + local_start, stop=grain_slice.start + local_stop,
                                      local_start=local_start, local_stop=local_stop))
    return subblocks


@dataclass
class SubblockConditional:
    """N(mean, precision^-1) full conditional of one subblock; `upper` is the Cholesky factor."""
    precision: np.ndarray
    mean: np.ndarray
    upper: np.ndarray

    @property
    def size(self) -> int:
        return self.mean.size

    def logdet(self) -> float:
        return 2.0 * float(np.log(np.diag(self.upper)).sum())

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.size)
        return self.mean + solve_triangular(self.upper, z, lower=False)

    def log_density(self, x: np.ndarray) -> float:
        centered = self.upper @ (x - self.mean)
        return 0.5 * self.logdet() - 0.5 * self.size * LOG_2PI - 0.5 * float(centered @ centered)


def subblock_conditional(state: ModelState, design: KernelDesign, Q: PrecisionMatrix, s: Subblock,
                         field: Optional[np.ndarray] = None, residual: Optional[np.ndarray] = None,
                         weights: Optional[np.ndarray] = None) -> SubblockConditional:
    """
    Full conditional of subblock s given the rest of the field and the data.

    `field` and `residual` default to the state's; a staged proposal passes
    its own pair, which must satisfy residual = y - mu - X field - X_other other
    under `design`. The partial residual r_sbar = r + X_s x_s is formed from
    the full residual, never from X_sbar x_sbar.
    """
    x = state.field(s.which) if field is None else field
    r = state.residual if residual is None else residual
    w = state.weights() if weights is None else weights
    nu = state.hp(s.which).nu

    rows = design.rows(s.grain)
    X_s = design.block(s.which, s.grain)[:, s.local]
    w_s = w[rows]
    partial = r[rows] + X_s @ x[s.index]

    Q_rows = Q.Q[s.start:s.stop]
    Q_ss = Q_rows[:, s.index].toarray()
    centered = x - nu
    coupling = Q_rows @ centered - Q_ss @ centered[s.index]

    weighted = X_s * w_s[:, None]
    precision = X_s.T @ weighted + Q_ss
    rhs = weighted.T @ partial + nu * Q_ss.sum(axis=1) - coupling

    try:
        upper, _ = cho_factor(precision, lower=False)
    except LinAlgError as exc:
        raise FactorizationError(f'subblock {s.which}[{s.start}:{s.stop}] conditional precision: {exc}') from exc
    upper = np.triu(upper)
    mean = cho_solve((upper, False), rhs)
    return SubblockConditional(precision=precision, mean=mean, upper=upper)
