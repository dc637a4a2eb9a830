import logging

import numpy as np
import scipy.sparse as sps
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded, solve_banded
from scipy.sparse.csgraph import reverse_cuthill_mckee

from src.exceptions import FactorizationError

try:
    from sksparse.cholmod import CholmodNotPositiveDefiniteError, analyze as cholmod_analyze
except ImportError:
    cholmod_analyze = None
    CholmodNotPositiveDefiniteError = LinAlgError

logger = logging.getLogger(__name__)


class Backends:
    BANDED = 'banded'
    CHOLMOD = 'cholmod'


class BandedCholeskyFactor:
    """Q[perm][:, perm] = U^T U with U stored in LAPACK upper banded form."""

    def __init__(self, upper_band: np.ndarray, perm: np.ndarray):
        self.upper_band = upper_band
        self.perm = perm
        self.bandwidth = upper_band.shape[0] - 1

    @property
    def n(self) -> int:
        return self.perm.size

    def logdet(self) -> float:
        return 2.0 * float(np.log(self.upper_band[-1]).sum())

    def solve(self, b: np.ndarray) -> np.ndarray:
        permuted = cho_solve_banded((self.upper_band, False), b[self.perm])
        x = np.empty_like(permuted)
        x[self.perm] = permuted
        return x

    def solve_upper(self, z: np.ndarray) -> np.ndarray:
        """Returns x with cov(x) = Q^-1 when z is standard normal."""
        permuted = solve_banded((0, self.bandwidth), self.upper_band, z)
        x = np.empty_like(permuted)
        x[self.perm] = permuted
        return x


class CholmodFactor:
    def __init__(self, factor):
        self.factor = factor

    @property
    def n(self) -> int:
        return self.factor.P().size

    def logdet(self) -> float:
        return float(self.factor.logdet())

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.factor(b)

    def solve_upper(self, z: np.ndarray) -> np.ndarray:
        return self.factor.apply_Pt(self.factor.solve_Lt(z, use_LDLt_decomposition=False))


class SymbolicFactorization:
    """
    Fill-reducing ordering for a fixed sparsity pattern, computed once and
    reused for every numeric factorization with that pattern.
    """

    def __init__(self, pattern: sps.spmatrix, backend: str = Backends.BANDED):
        pattern = sps.csr_matrix(pattern)
        self.n = pattern.shape[0]
        self.backend = backend

        if backend == Backends.CHOLMOD:
            if cholmod_analyze is None:
                raise ImportError('scikit-sparse is not installed, use the banded backend')
            self._analysis = cholmod_analyze(sps.csc_matrix(pattern))
            return
        if backend != Backends.BANDED:
            raise ValueError(f'Unknown factorization backend {backend!r}')

        if self.n:
            self.perm = np.asarray(reverse_cuthill_mckee(pattern, symmetric_mode=True), dtype=np.int64)
        else:
            self.perm = np.zeros(0, dtype=np.int64)
        permuted = pattern[self.perm][:, self.perm].tocoo()
        self.bandwidth = int(np.abs(permuted.row - permuted.col).max()) if permuted.nnz else 0
        logger.debug(f'RCM ordering: n={self.n}, bandwidth={self.bandwidth}')

    def factorize(self, Q: sps.spmatrix):
        if self.backend == Backends.CHOLMOD:
            try:
                return CholmodFactor(self._analysis.cholesky(sps.csc_matrix(Q)))
            except CholmodNotPositiveDefiniteError as exc:
                raise FactorizationError(str(exc)) from exc

        if self.n == 0:
            return BandedCholeskyFactor(np.ones((1, 0)), self.perm)
        permuted = sps.csr_matrix(Q)[self.perm][:, self.perm].tocoo()
        upper = permuted.row <= permuted.col
        rows, cols = permuted.row[upper], permuted.col[upper]
        band = np.zeros((self.bandwidth + 1, self.n))
        band[self.bandwidth + rows - cols, cols] = permuted.data[upper]
        try:
            upper_band = cholesky_banded(band, lower=False)
        except LinAlgError as exc:
            raise FactorizationError(f'precision matrix is not positive definite: {exc}') from exc
        return BandedCholeskyFactor(upper_band, self.perm)
