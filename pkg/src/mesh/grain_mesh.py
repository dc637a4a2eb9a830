import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.exceptions import MeshParseError, MeshValidationError

logger = logging.getLogger(__name__)

# Relative to the largest |volume| in the mesh.
VOLUME_TOLERANCE = 1e-14


@dataclass(frozen=True)
class GrainMesh:
    """
    Grain-labeled tetrahedral mesh.

    nodes is (N, 3), elements is (M, 4) with 0-based node indices and
    grain_of_element holds 1-based grain ids.
    """
    nodes: np.ndarray
    elements: np.ndarray
    grain_of_element: np.ndarray

    @property
    def M(self) -> int:
        return int(self.elements.shape[0])

    @property
    def G(self) -> int:
        return int(self.grain_of_element.max()) if self.M else 0

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    def elements_of_grain(self, grain: int) -> np.ndarray:
        return np.flatnonzero(self.grain_of_element == grain)

    def __repr__(self):
        return f'GrainMesh(nodes={self.n_nodes}, elements={self.M}, grains={self.G})'


def element_volumes(mesh: GrainMesh) -> np.ndarray:
    corners = mesh.nodes[mesh.elements]
    edges = corners[:, 1:, :] - corners[:, :1, :]
    return np.linalg.det(edges) / 6.0


def centroids(mesh: GrainMesh) -> np.ndarray:
    return mesh.nodes[mesh.elements].mean(axis=1)


def validate_mesh(mesh: GrainMesh) -> GrainMesh:
    nodes, elements, grains = mesh.nodes, mesh.elements, mesh.grain_of_element

    if nodes.ndim != 2 or nodes.shape[1] != 3:
        raise MeshValidationError(f'nodes must be (N, 3), got {nodes.shape}')
    if elements.ndim != 2 or elements.shape[1] != 4:
        raise MeshValidationError(f'elements must be (M, 4), got {elements.shape}')
    if grains.shape != (elements.shape[0],):
        raise MeshValidationError('grain_of_element must have one entry per element')
    if elements.shape[0] == 0:
        raise MeshValidationError('mesh has no elements')

    bad = (elements < 0) | (elements >= nodes.shape[0])
    if bad.any():
        element_ind, corner = np.argwhere(bad)[0]
        raise MeshValidationError(
            f'element {element_ind} references node {elements[element_ind, corner]} '
            f'but the mesh has {nodes.shape[0]} nodes')

    sorted_elements = np.sort(elements, axis=1)
    repeated = (np.diff(sorted_elements, axis=1) == 0).any(axis=1)
    if repeated.any():
        raise MeshValidationError(f'element {np.flatnonzero(repeated)[0]} repeats a node index')

    if grains.min() < 1:
        raise MeshValidationError(f'grain ids must start at 1, found {grains.min()}')
    present = np.unique(grains)
    missing = np.setdiff1d(np.arange(1, grains.max() + 1), present)
    if missing.size:
        raise MeshValidationError(f'grain {missing[0]} has no elements')

    volumes = np.abs(element_volumes(mesh))
    flat = volumes <= VOLUME_TOLERANCE * max(volumes.max(), 1.0)
    if flat.any():
        raise MeshValidationError(f'element {np.flatnonzero(flat)[0]} has zero volume')

    return mesh


def make_mesh(nodes, elements, grain_of_element) -> GrainMesh:
    mesh = GrainMesh(nodes=np.asarray(nodes, dtype=float),
                     elements=np.asarray(elements, dtype=np.int64),
                     grain_of_element=np.asarray(grain_of_element, dtype=np.int64))
    return validate_mesh(mesh)


def _parse_header(line: str, path) -> tuple:
    tokens = line.split()
    if len(tokens) != 6 or tokens[0::2] != ['nodes', 'elements', 'grains']:
        raise MeshParseError(f'{path}: bad header {line.strip()!r}, '
                             f'expected "nodes N elements M grains G"')
    try:
        return int(tokens[1]), int(tokens[3]), int(tokens[5])
    except ValueError as exc:
        raise MeshParseError(f'{path}: non-integer count in header') from exc


def load_mesh(path) -> GrainMesh:
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as file:
        lines = [line for line in file if line.strip()]

    if not lines:
        raise MeshParseError(f'{path}: empty mesh file')

    n_nodes, n_elements, n_grains = _parse_header(lines[0], path)
    body = lines[1:]
    if len(body) != n_nodes + n_elements:
        raise MeshParseError(f'{path}: expected {n_nodes} node and {n_elements} element lines, '
                             f'found {len(body)} lines')

    try:
        nodes = np.array([[float(tok) for tok in line.split()] for line in body[:n_nodes]], dtype=float)
        element_rows = np.array([[int(tok) for tok in line.split()] for line in body[n_nodes:]],
                                dtype=np.int64)
    except ValueError as exc:
        raise MeshParseError(f'{path}: {exc}') from exc

    if nodes.shape != (n_nodes, 3):
        raise MeshParseError(f'{path}: node lines must have 3 coordinates')
    if element_rows.shape != (n_elements, 5):
        raise MeshParseError(f'{path}: element lines must have 4 node indices and a grain id')

    mesh = make_mesh(nodes, element_rows[:, :4], element_rows[:, 4])
    if mesh.G != n_grains:
        raise MeshValidationError(f'{path}: header declares {n_grains} grains, elements use {mesh.G}')

    logger.info(f'Loaded {mesh} from {path}')
    return mesh


def save_mesh(mesh: GrainMesh, path) -> None:
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as file:
        file.write(f'nodes {mesh.n_nodes} elements {mesh.M} grains {mesh.G}\n')
        for x, y, z in mesh.nodes:
            file.write(f'{float(x)!r} {float(y)!r} {float(z)!r}\n')
        for element, grain in zip(mesh.elements, mesh.grain_of_element):
            file.write(' '.join(str(int(ind)) for ind in element) + f' {int(grain)}\n')
