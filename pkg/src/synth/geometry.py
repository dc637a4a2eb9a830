import logging

import numpy as np
from scipy.spatial import cKDTree

from src.mesh.grain_mesh import GrainMesh, make_mesh
from src.synth.constants import GeometryKinds, KUHN_AXIS_ORDERS
from src.synth.config import SynthConfig
from src.utils.random import make_rng

logger = logging.getLogger(__name__)


def _grid_nodes(resolution: int, box_size: float) -> np.ndarray:
    ticks = np.linspace(0.0, box_size, resolution + 1)
    z, y, x = np.meshgrid(ticks, ticks, ticks, indexing='ij')
    return np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)


def _node_index(i, j, k, resolution: int):
    stride = resolution + 1
    return i + stride * (j + stride * k)


def _cube_tetrahedra(resolution: int) -> tuple:
    """Kuhn split of every cube; returns (elements, cube index of each element)."""
    n = resolution
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing='ij')
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    cube_ids = i + n * (j + n * k)

    elements = []
    for axes in KUHN_AXIS_ORDERS:
        corner = np.zeros((cube_ids.size, 3), dtype=np.int64)
        path = [_node_index(i, j, k, n)]
        for axis in axes:
            corner[:, axis] += 1
            path.append(_node_index(i + corner[:, 0], j + corner[:, 1], k + corner[:, 2], n))
        elements.append(np.stack(path, axis=1))

    elements = np.concatenate(elements, axis=0)
    return elements, np.tile(cube_ids, len(KUHN_AXIS_ORDERS))


def _cube_centers(resolution: int, box_size: float) -> np.ndarray:
    h = box_size / resolution
    ticks = (np.arange(resolution) + 0.5) * h
    k, j, i = np.meshgrid(ticks, ticks, ticks, indexing='ij')
    return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)


def _slab_labels(centers: np.ndarray, synth: SynthConfig) -> np.ndarray:
    layer = np.floor(centers[:, 2] / synth.box_size * synth.resolution).astype(np.int64)
    return layer * synth.n_grains // synth.resolution + 1


def _cartoon3_labels(centers: np.ndarray, synth: SynthConfig) -> np.ndarray:
    middle = synth.box_size / 2.0
    angle = np.mod(np.arctan2(centers[:, 1] - middle, centers[:, 0] - middle), 2.0 * np.pi)
    return np.minimum(np.floor(angle / (2.0 * np.pi / 3.0)).astype(np.int64), 2) + 1


def _voronoi_labels(centers: np.ndarray, synth: SynthConfig) -> np.ndarray:
    rng = make_rng(synth.seed)
    # Seeds sit on distinct cube centers, so every grain owns at least its seed cube.
    seed_cubes = rng.choice(centers.shape[0], size=synth.n_grains, replace=False)
    _, nearest = cKDTree(centers[seed_cubes]).query(centers)
    return nearest.astype(np.int64) + 1


LABELERS = {
    GeometryKinds.SLAB_STACK: _slab_labels,
    GeometryKinds.CARTOON3: _cartoon3_labels,
    GeometryKinds.VORONOI: _voronoi_labels,
}


def generate_geometry(synth: SynthConfig) -> GrainMesh:
    synth.check()
    nodes = _grid_nodes(synth.resolution, synth.box_size)
    elements, cube_of_element = _cube_tetrahedra(synth.resolution)
    cube_grain = LABELERS[synth.kind](_cube_centers(synth.resolution, synth.box_size), synth)

    mesh = make_mesh(nodes, elements, cube_grain[cube_of_element])
    logger.info(f'Generated {synth.kind} geometry: {mesh}')
    return mesh
