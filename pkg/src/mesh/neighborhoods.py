import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from src.mesh.boundaries import BoundaryGeometry, FieldLayout
from src.mesh.constants import Fields, TET_EDGES
from src.mesh.grain_mesh import GrainMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NeighborhoodGraph:
    """
    Within-grain (wgn) and between-grain (bgn) adjacency over one field's
    flattened indices, stored as symmetric 0/1 CSR matrices.
    """
    field: str
    layout: FieldLayout
    wgn: sps.csr_matrix
    bgn: sps.csr_matrix

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def wgn_count(self) -> np.ndarray:
        return np.asarray(self.wgn.sum(axis=1)).ravel()

    @property
    def bgn_count(self) -> np.ndarray:
        return np.asarray(self.bgn.sum(axis=1)).ravel()

    def within_grain_neighbors(self, p: int) -> np.ndarray:
        return self.wgn.indices[self.wgn.indptr[p]:self.wgn.indptr[p + 1]]

    def between_grain_neighbors(self, p: int) -> np.ndarray:
        return self.bgn.indices[self.bgn.indptr[p]:self.bgn.indptr[p + 1]]


@dataclass(frozen=True)
class FieldGraphs:
    beta: NeighborhoodGraph
    gamma: NeighborhoodGraph

    def of(self, which: str) -> NeighborhoodGraph:
        return self.beta if which == Fields.BETA else self.gamma


def node_adjacency(mesh: GrainMesh) -> sps.csr_matrix:
    pairs = mesh.elements[:, TET_EDGES].reshape(-1, 2)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adjacency = sps.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()
    adjacency.data[:] = 1.0
    return adjacency


def _within_grain(adjacency: sps.csr_matrix, layout: FieldLayout, n_grains: int) -> sps.csr_matrix:
    rows, cols = [], []
    for grain in range(1, n_grains + 1):
        nodes = layout.nodes_of(grain)
        if nodes.size == 0:
            continue
        block = adjacency[nodes][:, nodes].tocoo()
        offset = layout.offsets[grain - 1]
        rows.append(block.row + offset)
        cols.append(block.col + offset)

    dim = layout.dim
    if not rows:
        return sps.csr_matrix((dim, dim))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    wgn = sps.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(dim, dim)).tocsr()
    wgn.setdiag(0)
    wgn.eliminate_zeros()
    return wgn


def _between_grain(layout: FieldLayout, n_nodes: int) -> sps.csr_matrix:
    dim = layout.dim
    incidence = sps.csr_matrix((np.ones(dim), (np.arange(dim), layout.node)), shape=(dim, n_nodes))
    # A node appears at most once per grain, so same-node pairs are always cross-grain.
    bgn = (incidence @ incidence.T).tocsr()
    bgn.setdiag(0)
    bgn.eliminate_zeros()
    return bgn


def build_neighborhoods(mesh: GrainMesh, bg: BoundaryGeometry, which: str = Fields.BETA) -> NeighborhoodGraph:
    layout = bg.layout(which)
    adjacency = node_adjacency(mesh)
    wgn = _within_grain(adjacency, layout, bg.n_grains)
    bgn = _between_grain(layout, bg.n_nodes)
    graph = NeighborhoodGraph(field=which, layout=layout, wgn=wgn, bgn=bgn)
    logger.debug(f'{which} graph: dim={graph.dim}, wgn edges={wgn.nnz // 2}, bgn edges={bgn.nnz // 2}')
    return graph


def build_field_graphs(mesh: GrainMesh, bg: BoundaryGeometry) -> FieldGraphs:
    return FieldGraphs(beta=build_neighborhoods(mesh, bg, Fields.BETA),
                       gamma=build_neighborhoods(mesh, bg, Fields.GAMMA))
