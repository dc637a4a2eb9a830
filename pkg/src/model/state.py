from dataclasses import dataclass, replace

import numpy as np

from src.design.kernels import KernelDesign, apply
from src.exceptions import ResidualDriftError
from src.gmrf.hyperparams import FieldHyperparams
from src.mesh.constants import Fields

RESIDUAL_TOLERANCE = 1e-10


@dataclass
class ModelState:
    mu_g: np.ndarray
    mu: float
    tau2: float
    beta: np.ndarray
    gamma: np.ndarray
    hp_beta: FieldHyperparams
    hp_gamma: FieldHyperparams
    sigma2: float
    omega: np.ndarray
    df: float
    residual: np.ndarray

    def copy(self) -> 'ModelState':
        return replace(self, mu_g=self.mu_g.copy(), beta=self.beta.copy(), gamma=self.gamma.copy(),
                       omega=self.omega.copy(), residual=self.residual.copy())

    def field(self, which: str) -> np.ndarray:
        return self.beta if which == Fields.BETA else self.gamma

    def set_field(self, which: str, values: np.ndarray) -> None:
        if which == Fields.BETA:
            self.beta = values
        else:
            self.gamma = values

    def hp(self, which: str) -> FieldHyperparams:
        return self.hp_beta if which == Fields.BETA else self.hp_gamma

    def set_hp(self, which: str, hp: FieldHyperparams) -> None:
        if which == Fields.BETA:
            self.hp_beta = hp
        else:
            self.hp_gamma = hp

    def weights(self) -> np.ndarray:
        """Diagonal of W = (1 / sigma2) diag(1 / omega)."""
        return 1.0 / (self.sigma2 * self.omega)

    def check(self) -> 'ModelState':
        if not (self.sigma2 > 0 and self.tau2 > 0 and self.df > 0 and np.all(self.omega > 0)):
            raise ValueError('sigma2, tau2, df and every omega must be positive')
        return self

    def as_scalars(self) -> dict:
        scalars = {'mu': self.mu, 'tau2': self.tau2, 'sigma2': self.sigma2, 'df': self.df}
        for which in Fields.ALL:
            for name, value in self.hp(which).as_dict().items():
                scalars[f'{name}_{which}'] = value
        for grain, value in enumerate(self.mu_g, start=1):
            scalars[f'mu_{grain}'] = value
        return scalars


def mean_structure(state: ModelState, design: KernelDesign, grain_of_element: np.ndarray) -> np.ndarray:
    return state.mu_g[grain_of_element - 1] + apply(design, state.beta, state.gamma)


def recompute_residual(state: ModelState, y: np.ndarray, design: KernelDesign,
                       grain_of_element: np.ndarray) -> np.ndarray:
    return y - mean_structure(state, design, grain_of_element)


def audit_residual(state: ModelState, y: np.ndarray, design: KernelDesign, grain_of_element: np.ndarray,
                   tolerance: float = RESIDUAL_TOLERANCE) -> float:
    """
    Largest gap between the maintained residual and a full recomputation.
    The limit is relative to max |y|; all-zero data falls back to an absolute limit.
    """
    drift = float(np.max(np.abs(state.residual - recompute_residual(state, y, design, grain_of_element))))
    scale = float(np.max(np.abs(y))) or 1.0
    if drift > tolerance * scale:
        raise ResidualDriftError(f'maintained residual drifted by {drift:.3e} (limit {tolerance * scale:.3e})')
    return drift
