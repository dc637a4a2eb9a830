from dataclasses import dataclass, field
from typing import List, Optional

from src.exceptions import InfeasibleGeometryError
from src.gmrf.hyperparams import FieldHyperparams
from src.synth.constants import GeometryKinds


def default_hp_beta() -> FieldHyperparams:
    return FieldHyperparams(nu=0.0, theta=1.0, kappa=0.8, rho=0.3, phi=1.0)


def default_hp_gamma() -> FieldHyperparams:
    return FieldHyperparams(nu=0.0, theta=1.0, kappa=0.8, rho=0.3, phi=1.5)


@dataclass
class TruthParameters:
    mu: float = 100.0
    tau2: float = 25.0
    mu_g: Optional[List[float]] = None
    sigma2: float = 4.0
    df: float = 5.0
    hp_beta: FieldHyperparams = field(default_factory=default_hp_beta)
    hp_gamma: FieldHyperparams = field(default_factory=default_hp_gamma)

    def as_dict(self) -> dict:
        return {
            'mu': self.mu,
            'tau2': self.tau2,
            'mu_g': None if self.mu_g is None else list(self.mu_g),
            'sigma2': self.sigma2,
            'df': self.df,
            'hp_beta': self.hp_beta.as_dict(),
            'hp_gamma': self.hp_gamma.as_dict(),
        }


@dataclass
class SynthConfig:
    kind: str = GeometryKinds.CARTOON3
    n_grains: int = 3
    resolution: int = 6
    seed: int = 0
    box_size: float = 10.0
    truth: TruthParameters = field(default_factory=TruthParameters)

    def check(self) -> 'SynthConfig':
        if self.kind not in GeometryKinds.ALL:
            raise InfeasibleGeometryError(f'Unknown geometry kind {self.kind!r}, expected one of {GeometryKinds.ALL}')
        if self.n_grains < 2:
            raise InfeasibleGeometryError(f'At least 2 grains are required, got {self.n_grains}')
        if self.kind == GeometryKinds.CARTOON3 and self.n_grains != 3:
            raise InfeasibleGeometryError('cartoon3 geometry always has 3 grains')
        if self.kind == GeometryKinds.CARTOON3 and self.resolution < 2:
            raise InfeasibleGeometryError('cartoon3 needs resolution >= 2')
        if self.kind == GeometryKinds.SLAB_STACK and self.resolution < self.n_grains:
            raise InfeasibleGeometryError(
                f'slab-stack needs resolution >= grain count ({self.resolution} < {self.n_grains})')
        if self.resolution ** 3 < self.n_grains:
            raise InfeasibleGeometryError(
                f'resolution {self.resolution} gives fewer cells than grains ({self.n_grains})')
        if self.box_size <= 0:
            raise InfeasibleGeometryError('box_size must be positive')
        if self.truth.mu_g is not None and len(self.truth.mu_g) != self.n_grains:
            raise InfeasibleGeometryError('truth.mu_g must have one entry per grain')
        return self
