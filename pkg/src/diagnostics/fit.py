from typing import Optional

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from src.diagnostics.constants import DEFAULT_PROFILE_BINS, Baselines
from src.mesh.boundaries import BoundaryGeometry
from src.mesh.grain_mesh import GrainMesh, centroids
from src.model.state import ModelState


def baseline_predictions(y: np.ndarray, baseline: str = Baselines.CONSTANT,
                         grain_of_element: Optional[np.ndarray] = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if baseline == Baselines.CONSTANT:
        return np.full_like(y, y.mean())
    if baseline == Baselines.GRAIN_MEANS:
        if grain_of_element is None:
            raise ValueError('grain-means baseline needs grain_of_element')
        index = np.asarray(grain_of_element) - 1
        sums = np.bincount(index, weights=y)
        counts = np.bincount(index)
        means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
        return means[index]
    raise ValueError(f'unknown baseline {baseline!r}, expected one of {Baselines.ALL}')


def r2(y: np.ndarray, fitted: np.ndarray, baseline: str = Baselines.CONSTANT,
       grain_of_element: Optional[np.ndarray] = None) -> float:
    """1 - SSE / SSE(baseline); NaN when the baseline already fits exactly."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if y.shape != fitted.shape:
        raise ValueError(f'y has shape {y.shape}, fitted has shape {fitted.shape}')
    sse = float(np.sum((y - fitted) ** 2))
    sst = float(np.sum((y - baseline_predictions(y, baseline, grain_of_element)) ** 2))
    if sst == 0.0:
        return float('nan')
    return 1.0 - sse / sst


def r2_adjusted(y: np.ndarray, fitted: np.ndarray, p_effective: int, baseline: str = Baselines.CONSTANT,
                grain_of_element: Optional[np.ndarray] = None) -> float:
    n = np.asarray(y).size
    if p_effective >= n - 1:
        raise ValueError(f'p_effective={p_effective} leaves no residual degrees of freedom for n={n}')
    r_squared = r2(y, fitted, baseline, grain_of_element)
    return 1.0 - (1.0 - r_squared) * (n - 1) / (n - p_effective - 1)


def standardize(residual: np.ndarray, sigma2: float, omega: np.ndarray) -> np.ndarray:
    return np.asarray(residual, dtype=float) / np.sqrt(np.asarray(omega, dtype=float) * sigma2)


def standardized_residuals(state: ModelState) -> np.ndarray:
    """r_m / (sqrt(omega_m) sigma), all from the same iteration."""
    return standardize(state.residual, state.sigma2, state.omega)


def boundary_distances(mesh: GrainMesh, bg: BoundaryGeometry) -> np.ndarray:
    """Distance from each element centroid to the nearest second- or third-order boundary node."""
    nodes = bg.boundary_nodes()
    if nodes.size == 0:
        return np.full(mesh.M, np.inf)
    distances, _ = cKDTree(mesh.nodes[nodes]).query(centroids(mesh))
    return distances


def boundary_distance_profile(mesh: GrainMesh, bg: BoundaryGeometry, values: np.ndarray,
                              n_bins: int = DEFAULT_PROFILE_BINS) -> pd.DataFrame:
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.M,):
        raise ValueError(f'expected one value per element ({mesh.M}), got shape {values.shape}')
    distances = boundary_distances(mesh, bg)
    edges = np.linspace(0.0, float(distances.max()) if distances.size else 0.0, n_bins + 1)
    bins = np.clip(np.searchsorted(edges, distances, side='right') - 1, 0, n_bins - 1)

    rows = list()
    for b in range(n_bins):
        in_bin = values[bins == b]
        rows.append({
            'bin': b,
            'distance_lower': edges[b],
            'distance_upper': edges[b + 1],
            'distance': 0.5 * (edges[b] + edges[b + 1]),
            'n': in_bin.size,
            'mean': in_bin.mean() if in_bin.size else np.nan,
            'sd': in_bin.std() if in_bin.size else np.nan,
        })
    return pd.DataFrame(rows)
