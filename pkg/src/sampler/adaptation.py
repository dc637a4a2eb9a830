import logging
from typing import Dict, List

import numpy as np

from src.sampler.config import ChainConfig
from src.sampler.constants import HAARIO_SCALE

logger = logging.getLogger(__name__)

SHAPE_JITTER = 1e-8


class ProposalAdapter:
    """
    Gaussian random-walk proposal whose covariance is exp(log_scale) * shape.

    During adaptation, end_block() moves log_scale by rate * (acceptance - target)
    and, when the block's states have a positive-definite sample covariance,
    resets the shape to 2.38^2 / d times it. After freeze() the proposal is fixed.
    """

    def __init__(self, name: str, initial_cov: np.ndarray, target: float = 0.234, rate: float = 3.0,
                 jitter: float = SHAPE_JITTER):
        self.name = name
        self.shape = np.atleast_2d(np.asarray(initial_cov, dtype=float)).copy()
        self.dim = self.shape.shape[0]
        self.target = target
        self.rate = rate
        self.jitter = jitter
        self.log_scale = 0.0
        self.frozen = False
        self.history: List[dict] = []
        self._states: List[np.ndarray] = []
        self._accepted = 0
        self._proposed = 0
        self._root = None

    @property
    def cov(self) -> np.ndarray:
        return np.exp(self.log_scale) * self.shape

    @property
    def acceptance_rate(self) -> float:
        return self._accepted / self._proposed if self._proposed else float('nan')

    def _matrix_root(self) -> np.ndarray:
        if self._root is None:
            eigenvalues, eigenvectors = np.linalg.eigh(self.cov)
            self._root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
        return self._root

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self._matrix_root() @ rng.standard_normal(self.dim)

    def record(self, value, accepted: bool) -> None:
        self._proposed += 1
        self._accepted += int(accepted)
        if not self.frozen:
            self._states.append(np.atleast_1d(np.asarray(value, dtype=float)).copy())

    def multiplier(self, acceptance: float) -> float:
        return float(np.exp(self.rate * (acceptance - self.target)))

    def end_block(self) -> float:
        acceptance = self.acceptance_rate
        if not self.frozen and self._proposed:
            self.log_scale += np.log(self.multiplier(acceptance))
            if len(self._states) > self.dim + 1:
                sample = np.atleast_2d(np.cov(np.asarray(self._states), rowvar=False))
                if np.linalg.eigvalsh(sample).min() > self.jitter:
                    self.shape = HAARIO_SCALE / self.dim * sample + self.jitter * np.eye(self.dim)
            self._root = None
            self.history.append({'block': len(self.history), 'acceptance': acceptance,
                                 'log_scale': self.log_scale})
        self._states = []
        self._accepted = 0
        self._proposed = 0
        return acceptance

    def freeze(self) -> None:
        self.frozen = True
        self._states = []


def adapt_proposals(adapters: Dict[str, ProposalAdapter], cfg: ChainConfig, block: int) -> Dict[str, np.ndarray]:
    """Closes one adaptation block for every proposal; freezes them after the last block."""
    covariances = {}
    for name, adapter in adapters.items():
        acceptance = adapter.end_block()
        logger.debug(f'adaptation block {block}: {name} acceptance {acceptance:.3f}, '
                     f'log scale {adapter.log_scale:.3f}')
        if block + 1 >= cfg.n_adapt_blocks:
            adapter.freeze()
        covariances[name] = adapter.cov
    return covariances
