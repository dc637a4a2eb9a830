import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import DegenerateBoundaryError, MeshValidationError, NonConformalMeshError
from src.mesh.constants import COINCIDENCE_TOLERANCE, Fields, TET_EDGES, TET_FACES
from src.mesh.grain_mesh import GrainMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldLayout:
    """
    Flattened index layout of one latent field.

    Entry p lives on node `node[p]` of grain `grain[p]` with quadrature weight
    `weight[p]`. Indices are sorted by grain, then by node; the entries of
    grain g occupy `offsets[g - 1]:offsets[g]`.
    """
    grain: np.ndarray
    node: np.ndarray
    weight: np.ndarray
    offsets: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.node.shape[0])

    def grain_slice(self, grain: int) -> slice:
        return slice(int(self.offsets[grain - 1]), int(self.offsets[grain]))

    def nodes_of(self, grain: int) -> np.ndarray:
        return self.node[self.grain_slice(grain)]

    def weights_of(self, grain: int) -> np.ndarray:
        return self.weight[self.grain_slice(grain)]


@dataclass(frozen=True)
class BoundaryGeometry:
    n_nodes: int
    n_grains: int
    beta: FieldLayout
    gamma: FieldLayout
    second_order_faces: np.ndarray
    face_grains: np.ndarray
    face_areas: np.ndarray
    third_order_edges: np.ndarray
    edge_grains: list
    edge_lengths: np.ndarray

    @property
    def dim_beta(self) -> int:
        return self.beta.dim

    @property
    def dim_gamma(self) -> int:
        return self.gamma.dim

    @property
    def delta_v(self) -> np.ndarray:
        return self.beta.weight

    @property
    def delta_vprime(self) -> np.ndarray:
        return self.gamma.weight

    def layout(self, which: str) -> FieldLayout:
        if which == Fields.BETA:
            return self.beta
        if which == Fields.GAMMA:
            return self.gamma
        raise ValueError(f'Unknown field {which!r}')

    def B(self, grain: int) -> np.ndarray:
        return self.beta.nodes_of(grain)

    def C(self, grain: int) -> np.ndarray:
        return self.gamma.nodes_of(grain)

    def boundary_nodes(self) -> np.ndarray:
        return np.union1d(self.beta.node, self.gamma.node)

    def total_second_order_area(self, grain: int) -> float:
        touches = (self.face_grains == grain).any(axis=1)
        return float(self.face_areas[touches].sum())


def _unique_rows(rows: np.ndarray):
    unique, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    return unique, inverse.ravel(), counts


def _layout_from_contributions(grains: np.ndarray, nodes: np.ndarray, weights: np.ndarray,
                               n_nodes: int, n_grains: int) -> FieldLayout:
    keys = grains.astype(np.int64) * n_nodes + nodes.astype(np.int64)
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=weights, minlength=unique_keys.size)
    layout_grain = unique_keys // n_nodes
    offsets = np.searchsorted(layout_grain, np.arange(1, n_grains + 2), side='left')
    return FieldLayout(grain=layout_grain, node=unique_keys % n_nodes, weight=summed, offsets=offsets)


def _check_conformal(mesh: GrainMesh, exterior_faces: np.ndarray) -> None:
    if exterior_faces.shape[0] < 2:
        return
    span = np.ptp(mesh.nodes, axis=0)
    scale = float(np.linalg.norm(span)) or 1.0
    corners = np.round(mesh.nodes[exterior_faces] / (scale * COINCIDENCE_TOLERANCE)).astype(np.int64)
    order = np.lexsort((corners[:, :, 2], corners[:, :, 1], corners[:, :, 0]), axis=-1)
    corners = np.take_along_axis(corners, order[:, :, None], axis=1).reshape(-1, 9)
    _, _, counts = _unique_rows(corners)
    if (counts > 1).any():
        raise NonConformalMeshError(
            f'{int((counts > 1).sum())} geometrically coincident faces use distinct node indices')


def _interior_face_elements(face_rows: np.ndarray, n_elements: int):
    faces, inverse, counts = _unique_rows(face_rows)
    if counts.max() > 2:
        raise MeshValidationError(f'a face is shared by {counts.max()} elements')

    face_element = np.repeat(np.arange(n_elements), len(TET_FACES))
    order = np.argsort(inverse, kind='stable')
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    shared = counts == 2
    first = face_element[order[starts[shared]]]
    second = face_element[order[starts[shared] + 1]]
    return faces, counts, shared, first, second


def extract_boundaries(mesh: GrainMesh) -> BoundaryGeometry:
    elements, grains, nodes = mesh.elements, mesh.grain_of_element, mesh.nodes
    n_nodes, n_grains = mesh.n_nodes, mesh.G
    scale = float(np.linalg.norm(np.ptp(nodes, axis=0))) or 1.0

    face_rows = np.sort(elements[:, TET_FACES], axis=2).reshape(-1, 3)
    faces, counts, shared, first, second = _interior_face_elements(face_rows, mesh.M)
    _check_conformal(mesh, faces[counts == 1])

    interface = grains[first] != grains[second]
    so_faces = faces[shared][interface]
    so_grains = np.sort(np.stack([grains[first][interface], grains[second][interface]], axis=1), axis=1)

    corners = nodes[so_faces]
    areas = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]),
                                 axis=1)
    if areas.size and areas.min() <= 1e-14 * scale ** 2:
        raise DegenerateBoundaryError(f'second-order face {so_faces[areas.argmin()]} has zero area')

    # Each face contributes a third of its area to each corner, once per bordering grain.
    face_contrib_node = np.concatenate([so_faces, so_faces], axis=1).ravel()
    face_contrib_grain = np.concatenate([np.repeat(so_grains[:, :1], 3, axis=1),
                                         np.repeat(so_grains[:, 1:], 3, axis=1)], axis=1).ravel()
    face_contrib_weight = np.repeat(areas / 3.0, 6)
    beta = _layout_from_contributions(face_contrib_grain, face_contrib_node, face_contrib_weight,
                                      n_nodes, n_grains)

    edge_rows = np.sort(elements[:, TET_EDGES], axis=2).reshape(-1, 2)
    edge_grain = np.repeat(grains, len(TET_EDGES))
    edges, edge_inverse, _ = _unique_rows(edge_rows)
    pairs = np.unique(np.stack([edge_inverse, edge_grain], axis=1), axis=0)
    grains_per_edge = np.bincount(pairs[:, 0], minlength=edges.shape[0])
    triple = grains_per_edge >= 3
    to_edges = edges[triple]
    to_pairs = pairs[triple[pairs[:, 0]]]
    edge_grains = [np.sort(to_pairs[to_pairs[:, 0] == edge_id, 1]) for edge_id in np.flatnonzero(triple)]

    lengths = np.linalg.norm(nodes[to_edges[:, 1]] - nodes[to_edges[:, 0]], axis=1)
    if lengths.size and lengths.min() <= 1e-14 * scale:
        raise DegenerateBoundaryError(f'third-order edge {to_edges[lengths.argmin()]} has zero length')

    edge_length_by_id = np.zeros(edges.shape[0])
    edge_length_by_id[triple] = lengths
    pair_nodes = edges[to_pairs[:, 0]]
    pair_weight = edge_length_by_id[to_pairs[:, 0]] / 2.0
    gamma = _layout_from_contributions(np.repeat(to_pairs[:, 1], 2), pair_nodes.ravel(),
                                       np.repeat(pair_weight, 2), n_nodes, n_grains)

    beta_keys = beta.grain * n_nodes + beta.node
    gamma_keys = gamma.grain * n_nodes + gamma.node
    if not np.isin(gamma_keys, beta_keys).all():
        raise MeshValidationError('a third-order node is missing from its grain\'s second-order set')

    logger.info(f'Boundaries: {so_faces.shape[0]} second-order faces, {to_edges.shape[0]} third-order edges, '
                f'dim beta={beta.dim}, dim gamma={gamma.dim}')

    return BoundaryGeometry(n_nodes=n_nodes, n_grains=n_grains, beta=beta, gamma=gamma,
                            second_order_faces=so_faces, face_grains=so_grains, face_areas=areas,
                            third_order_edges=to_edges, edge_grains=edge_grains, edge_lengths=lengths)
