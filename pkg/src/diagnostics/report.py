import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from src.diagnostics.constants import DEFAULT_PROFILE_BINS, Baselines
from src.diagnostics.fit import boundary_distance_profile, boundary_distances, r2, r2_adjusted, standardize
from src.diagnostics.summaries import trace_summary
from src.mesh.boundaries import BoundaryGeometry
from src.mesh.grain_mesh import GrainMesh
from src.utils.hashing import file_sha256

logger = logging.getLogger(__name__)

REPORT_FILE = 'report.json'
RESIDUALS_FILE = 'residuals.csv'
SUMMARY_FILE = 'trace_summary.csv'
PROFILE_FILE = 'boundary_profile.csv'
R2_FILE = 'r2_by_snapshot.csv'
FLOAT_FORMAT = '%.17g'


@dataclass
class FitReport:
    iteration: int
    p_effective: int
    r2: float
    r2_adj_constant: float
    r2_adj_grain_means: float
    residuals: pd.DataFrame
    summary: pd.DataFrame
    profile: pd.DataFrame
    r2_by_snapshot: pd.DataFrame

    def as_dict(self) -> dict:
        return {
            'iteration': self.iteration,
            'p_effective': self.p_effective,
            'r2': self.r2,
            'r2_adj_constant': self.r2_adj_constant,
            'r2_adj_grain_means': self.r2_adj_grain_means,
            'standardized_residual_sd': float(self.residuals['standardized'].std(ddof=1))
            if len(self.residuals) > 1 else None,
        }


def _adjusted(y, fitted, p_effective, baseline, grain_of_element) -> float:
    if p_effective >= y.size - 1:
        return float('nan')
    return r2_adjusted(y, fitted, p_effective, baseline, grain_of_element)


def build_report(y: np.ndarray, mesh: GrainMesh, bg: BoundaryGeometry, scalars: pd.DataFrame, snapshots: List,
                 p_effective: Optional[int] = None, snapshot_index: int = -1,
                 n_bins: int = DEFAULT_PROFILE_BINS) -> FitReport:
    """
    Goodness-of-fit report from a recorded trace. Residual diagnostics use one
    snapshot (the last by default) so each residual is standardized by the
    same iteration's omega and sigma; the posterior-mean fit averages y - r
    over all snapshots.
    """
    y = np.asarray(y, dtype=float)
    if not snapshots:
        raise ValueError('trace has no field snapshots to diagnose')
    if p_effective is None:
        p_effective = mesh.G + bg.dim_beta + bg.dim_gamma
    grains = mesh.grain_of_element
    chosen = snapshots[snapshot_index]

    rows = list()
    for s in snapshots:
        fitted = y - s.residual
        rows.append({
            'iteration': s.iteration,
            'r2': r2(y, fitted),
            'r2_adj_constant': _adjusted(y, fitted, p_effective, Baselines.CONSTANT, grains),
            'r2_adj_grain_means': _adjusted(y, fitted, p_effective, Baselines.GRAIN_MEANS, grains),
        })
    r2_table = pd.DataFrame(rows)

    fitted_last = y - chosen.residual
    fitted_mean = y - np.mean([s.residual for s in snapshots], axis=0)
    residuals = pd.DataFrame({
        'element_id': np.arange(1, mesh.M + 1),
        'grain': grains,
        'y': y,
        'fitted': fitted_last,
        'fitted_posterior_mean': fitted_mean,
        'residual': chosen.residual,
        'standardized': standardize(chosen.residual, chosen.sigma2, chosen.omega),
        'boundary_distance': boundary_distances(mesh, bg),
    })

    profiles = list()
    for source, values in (('y', y), ('fitted_posterior_mean', fitted_mean),
                           ('residual', chosen.residual)):
        profile = boundary_distance_profile(mesh, bg, values, n_bins)
        profile.insert(0, 'values', source)
        profiles.append(profile)

    chosen_row = r2_table.iloc[snapshot_index]
    return FitReport(iteration=int(chosen.iteration), p_effective=int(p_effective), r2=float(chosen_row['r2']),
                     r2_adj_constant=float(chosen_row['r2_adj_constant']),
                     r2_adj_grain_means=float(chosen_row['r2_adj_grain_means']),
                     residuals=residuals, summary=trace_summary(scalars), profile=pd.concat(profiles,
                                                                                          ignore_index=True),
                     r2_by_snapshot=r2_table)


def write_report(report: FitReport, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {
        RESIDUALS_FILE: report.residuals,
        SUMMARY_FILE: report.summary,
        PROFILE_FILE: report.profile,
        R2_FILE: report.r2_by_snapshot,
    }
    for filename, table in tables.items():
        table.to_csv(out_dir / filename, index=False, float_format=FLOAT_FORMAT)

    payload = report.as_dict()
    payload['files'] = {filename: file_sha256(out_dir / filename) for filename in sorted(tables)}
    with open(out_dir / REPORT_FILE, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f'Report written to {out_dir}: R2_adj constant {report.r2_adj_constant:.4f}, '
                f'grain means {report.r2_adj_grain_means:.4f}')
    return payload
