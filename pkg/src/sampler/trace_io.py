import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from src.exceptions import TraceIntegrityError
from src.sampler.chain import ChainTrace, FieldSnapshot
from src.utils.hashing import file_sha256

logger = logging.getLogger(__name__)

SCALARS_FILE = 'scalars.csv'
SNAPSHOT_INDEX_FILE = 'snapshots.csv'
SNAPSHOT_ARRAYS = ('beta', 'gamma', 'omega', 'residual')
MANIFEST_FILE = 'manifest.json'
FLOAT_FORMAT = '%.17g'


def _snapshot_file(name: str) -> str:
    return f'snapshots_{name}.csv'


def trace_files() -> List[str]:
    return [SCALARS_FILE, SNAPSHOT_INDEX_FILE] + [_snapshot_file(name) for name in SNAPSHOT_ARRAYS]


def write_trace(trace: ChainTrace, out_dir) -> Dict[str, dict]:
    """
    Writes the scalar trace and the field snapshots as CSV. Returns, per file,
    the row count and sha256 for the run manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.scalars.to_csv(out_dir / SCALARS_FILE, index=False, float_format=FLOAT_FORMAT)

    index = pd.DataFrame([{'iteration': s.iteration, 'sigma2': s.sigma2, 'phi_beta': s.phi_beta,
                           'phi_gamma': s.phi_gamma} for s in trace.snapshots],
                         columns=['iteration', 'sigma2', 'phi_beta', 'phi_gamma'])
    index.to_csv(out_dir / SNAPSHOT_INDEX_FILE, index=False, float_format=FLOAT_FORMAT)
    for name in SNAPSHOT_ARRAYS:
        width = getattr(trace.snapshots[0], name).size if trace.snapshots else 0
        matrix = np.array([getattr(s, name) for s in trace.snapshots], dtype=float)
        matrix = matrix.reshape(len(trace.snapshots), width)
        frame = pd.DataFrame(matrix, columns=[str(j) for j in range(width)])
        frame.insert(0, 'iteration', [s.iteration for s in trace.snapshots])
        frame.to_csv(out_dir / _snapshot_file(name), index=False, float_format=FLOAT_FORMAT)

    checksums = {}
    for filename in trace_files():
        n_rows = len(trace.scalars) if filename == SCALARS_FILE else len(trace.snapshots)
        checksums[filename] = {'rows': n_rows, 'sha256': file_sha256(out_dir / filename)}
    logger.info(f'Trace written to {out_dir} ({len(trace.scalars)} rows, {len(trace.snapshots)} snapshots)')
    return checksums


def write_manifest(out_dir, manifest: dict) -> Path:
    path = Path(out_dir) / MANIFEST_FILE
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=float)
        f.write('\n')
    return path


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        raise TraceIntegrityError(f'no run manifest at {path}')
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise TraceIntegrityError(f'unreadable manifest {path}: {exc}') from exc


def _read_csv(path: Path, expected: dict) -> pd.DataFrame:
    if not path.exists():
        raise TraceIntegrityError(f'missing trace file {path}')
    if file_sha256(path) != expected['sha256']:
        raise TraceIntegrityError(f'{path.name} does not match the manifest checksum (truncated or modified)')
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TraceIntegrityError(f'cannot parse {path}: {exc}') from exc
    if len(frame) != expected['rows']:
        raise TraceIntegrityError(f'{path.name} has {len(frame)} rows, manifest says {expected["rows"]}')
    return frame


def read_trace(out_dir, manifest: dict = None) -> Tuple[pd.DataFrame, List[FieldSnapshot]]:
    """Reads a trace back, verifying every file against the manifest."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir) if manifest is None else manifest
    files = manifest.get('trace_files')
    if not files:
        raise TraceIntegrityError('manifest lists no trace files')

    scalars = _read_csv(out_dir / SCALARS_FILE, files[SCALARS_FILE])
    index = _read_csv(out_dir / SNAPSHOT_INDEX_FILE, files[SNAPSHOT_INDEX_FILE])
    arrays = {name: _read_csv(out_dir / _snapshot_file(name), files[_snapshot_file(name)])
              .drop(columns='iteration').to_numpy(dtype=float)
              for name in SNAPSHOT_ARRAYS}

    snapshots = list()
    for k, row in enumerate(index.itertuples(index=False)):
        snapshots.append(FieldSnapshot(iteration=int(row.iteration), sigma2=float(row.sigma2),
                                       phi_beta=float(row.phi_beta), phi_gamma=float(row.phi_gamma),
                                       **{name: arrays[name][k] for name in SNAPSHOT_ARRAYS}))
    return scalars, snapshots
