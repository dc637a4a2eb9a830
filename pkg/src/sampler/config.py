from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.exceptions import ConfigError
from src.gmrf.factor import Backends
from src.mesh.constants import Fields
from src.sampler.constants import SubblockSchemes


@dataclass
class ChainConfig:
    n_adapt_blocks: int = 20
    adapt_block_size: int = 500
    burn_in: int = 5000
    n_samples: int = 15000
    thin: int = 5
    target_acceptance: float = 0.234
    adaptation_rate: float = 3.0
    subblock_scheme: str = SubblockSchemes.PER_GRAIN
    subblock_size: int = 200
    proposal_var_beta: float = 0.01
    proposal_var_gamma: float = 0.01
    proposal_var_df: float = 0.05
    proposal_cov_beta: Optional[List[List[float]]] = None
    proposal_cov_gamma: Optional[List[List[float]]] = None
    field_stride: int = 25
    audit_every: int = 0
    initial_df: float = 5.0
    factorization_backend: str = Backends.BANDED
    cache_distances: bool = True
    kernel_truncation: Optional[float] = None
    progress: bool = False

    @property
    def adaptation_iterations(self) -> int:
        return self.n_adapt_blocks * self.adapt_block_size

    @property
    def total_iterations(self) -> int:
        return self.adaptation_iterations + self.burn_in + self.n_samples

    @property
    def n_retained(self) -> int:
        return self.n_samples // self.thin

    def initial_cov(self, which: str) -> np.ndarray:
        explicit = self.proposal_cov_beta if which == Fields.BETA else self.proposal_cov_gamma
        if explicit is not None:
            return np.asarray(explicit, dtype=float).reshape(4, 4)
        variance = self.proposal_var_beta if which == Fields.BETA else self.proposal_var_gamma
        return variance * np.eye(4)

    def check(self) -> 'ChainConfig':
        try:
            self._check_values()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f'chain: invalid value ({exc})') from exc
        return self

    def _check_values(self) -> None:
        for name in ('n_adapt_blocks', 'burn_in', 'n_samples', 'audit_every'):
            if getattr(self, name) < 0:
                raise ConfigError(f'chain.{name} must be non-negative')
        for name in ('adapt_block_size', 'thin', 'subblock_size', 'field_stride'):
            if getattr(self, name) <= 0:
                raise ConfigError(f'chain.{name} must be positive')
        if self.n_samples % self.thin:
            raise ConfigError(f'chain.thin ({self.thin}) must divide chain.n_samples ({self.n_samples})')
        if not 0 < self.target_acceptance < 1:
            raise ConfigError('chain.target_acceptance must lie in (0, 1)')
        if self.subblock_scheme not in SubblockSchemes.ALL:
            raise ConfigError(f'chain.subblock_scheme must be one of {SubblockSchemes.ALL}')
        if self.factorization_backend not in (Backends.BANDED, Backends.CHOLMOD):
            raise ConfigError(f'unknown chain.factorization_backend {self.factorization_backend!r}')
        for which in Fields.ALL:
            cov = self.initial_cov(which)
            if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov).min() < 0:
                raise ConfigError(f'initial {which} proposal covariance must be symmetric PSD')
        if self.proposal_var_df < 0:
            raise ConfigError('chain.proposal_var_df must be non-negative')
