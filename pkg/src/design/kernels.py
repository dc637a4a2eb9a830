import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sps
from scipy.spatial.distance import cdist

from src.mesh.boundaries import BoundaryGeometry, FieldLayout
from src.mesh.constants import Fields
from src.mesh.grain_mesh import GrainMesh, centroids

logger = logging.getLogger(__name__)

# Upper bound on cached centroid-to-node distances (float64 entries).
DEFAULT_MAX_CACHE_ENTRIES = 50_000_000


@dataclass(frozen=True, eq=False)
class DistanceCache:
    centroids: np.ndarray
    nodes: np.ndarray
    element_rows: Tuple[np.ndarray, ...]
    layouts: Dict[str, FieldLayout]
    blocks: Optional[Dict[str, Tuple[np.ndarray, ...]]]

    @property
    def cached(self) -> bool:
        return self.blocks is not None

    def compute(self, which: str, grain: int) -> np.ndarray:
        rows = self.element_rows[grain - 1]
        boundary_nodes = self.layouts[which].nodes_of(grain)
        if boundary_nodes.size == 0:
            return np.zeros((rows.size, 0))
        return cdist(self.centroids[rows], self.nodes[boundary_nodes])

    def distances(self, which: str, grain: int) -> np.ndarray:
        if self.blocks is not None:
            return self.blocks[which][grain - 1]
        return self.compute(which, grain)


def build_distance_cache(mesh: GrainMesh, bg: BoundaryGeometry, cache_distances: bool = True,
                         max_cache_entries: int = DEFAULT_MAX_CACHE_ENTRIES) -> DistanceCache:
    element_rows = tuple(mesh.elements_of_grain(grain) for grain in range(1, bg.n_grains + 1))
    layouts = {Fields.BETA: bg.beta, Fields.GAMMA: bg.gamma}
    cache = DistanceCache(centroids=centroids(mesh), nodes=mesh.nodes, element_rows=element_rows,
                          layouts=layouts, blocks=None)

    entries = sum(rows.size * (bg.beta.nodes_of(g).size + bg.gamma.nodes_of(g).size)
                  for g, rows in enumerate(element_rows, start=1))
    if not cache_distances:
        return cache
    if entries > max_cache_entries:
        logger.warning(f'Distance cache would hold {entries} entries (cap {max_cache_entries}); '
                       f'distances will be recomputed on every rebuild')
        return cache

    blocks = {which: tuple(cache.compute(which, g) for g in range(1, bg.n_grains + 1)) for which in Fields.ALL}
    return replace(cache, blocks=blocks)


@dataclass(frozen=True, eq=False)
class KernelDesign:
    """
    Block-diagonal quadrature designs X_b and X_c.

    Block g of a field has the rows of grain g's elements and the columns of
    grain g's boundary entries; it is stored dense.
    """
    n_elements: int
    phi_beta: float
    phi_gamma: float
    blocks_beta: Tuple[np.ndarray, ...]
    blocks_gamma: Tuple[np.ndarray, ...]
    cache: DistanceCache
    truncation: Optional[float] = None

    @property
    def n_grains(self) -> int:
        return len(self.cache.element_rows)

    def phi(self, which: str) -> float:
        return self.phi_beta if which == Fields.BETA else self.phi_gamma

    def layout(self, which: str) -> FieldLayout:
        return self.cache.layouts[which]

    def blocks(self, which: str) -> Tuple[np.ndarray, ...]:
        return self.blocks_beta if which == Fields.BETA else self.blocks_gamma

    def rows(self, grain: int) -> np.ndarray:
        return self.cache.element_rows[grain - 1]

    def block(self, which: str, grain: int) -> np.ndarray:
        return self.blocks(which)[grain - 1]

    def X(self, which: str) -> sps.csr_matrix:
        layout = self.layout(which)
        rows, cols, values = [], [], []
        for grain, block in enumerate(self.blocks(which), start=1):
            grain_rows = self.rows(grain)
            offset = layout.offsets[grain - 1]
            rows.append(np.repeat(grain_rows, block.shape[1]))
            cols.append(np.tile(np.arange(block.shape[1]) + offset, grain_rows.size))
            values.append(block.ravel())
        shape = (self.n_elements, layout.dim)
        if not rows:
            return sps.csr_matrix(shape)
        return sps.csr_matrix((np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=shape)

    @property
    def X_b(self) -> sps.csr_matrix:
        return self.X(Fields.BETA)

    @property
    def X_c(self) -> sps.csr_matrix:
        return self.X(Fields.GAMMA)

    def apply_field(self, which: str, x: np.ndarray) -> np.ndarray:
        layout = self.layout(which)
        x = np.asarray(x, dtype=float)
        if x.shape != (layout.dim,):
            raise ValueError(f'{which} has dimension {layout.dim}, got vector of shape {x.shape}')
        out = np.zeros(self.n_elements)
        for grain, block in enumerate(self.blocks(which), start=1):
            if block.size:
                out[self.rows(grain)] += block @ x[layout.grain_slice(grain)]
        return out


def _kernel_blocks(cache: DistanceCache, which: str, phi: float, truncation: Optional[float]) -> tuple:
    layout = cache.layouts[which]
    blocks = []
    for grain in range(1, len(cache.element_rows) + 1):
        kernel = np.exp(-phi * cache.distances(which, grain))
        if truncation is not None:
            kernel[kernel < truncation] = 0.0
        blocks.append(kernel * layout.weights_of(grain))
    return tuple(blocks)


def build_design(mesh: GrainMesh, bg: BoundaryGeometry, phi_beta: float, phi_gamma: float,
                 cache_distances: bool = True, max_cache_entries: int = DEFAULT_MAX_CACHE_ENTRIES,
                 truncation: Optional[float] = None) -> KernelDesign:
    if not (phi_beta > 0 and phi_gamma > 0):
        raise ValueError(f'phi values must be positive, got {phi_beta}, {phi_gamma}')
    cache = build_distance_cache(mesh, bg, cache_distances, max_cache_entries)
    return KernelDesign(n_elements=mesh.M, phi_beta=float(phi_beta), phi_gamma=float(phi_gamma),
                        blocks_beta=_kernel_blocks(cache, Fields.BETA, phi_beta, truncation),
                        blocks_gamma=_kernel_blocks(cache, Fields.GAMMA, phi_gamma, truncation),
                        cache=cache, truncation=truncation)


def with_phi(design: KernelDesign, which: str, phi: float) -> KernelDesign:
    if phi == design.phi(which):
        return design
    blocks = _kernel_blocks(design.cache, which, phi, design.truncation)
    if which == Fields.BETA:
        return replace(design, phi_beta=float(phi), blocks_beta=blocks)
    return replace(design, phi_gamma=float(phi), blocks_gamma=blocks)


def rebuild_for_phi(design: KernelDesign, phi_beta: float, phi_gamma: float) -> KernelDesign:
    return with_phi(with_phi(design, Fields.BETA, phi_beta), Fields.GAMMA, phi_gamma)


def apply(design: KernelDesign, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    return design.apply_field(Fields.BETA, beta) + design.apply_field(Fields.GAMMA, gamma)
