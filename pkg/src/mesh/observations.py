from pathlib import Path

import numpy as np
import pandas as pd

from src.exceptions import MeshParseError

OBSERVATION_COLUMNS = ('element_id', 'value')


def save_observations(y: np.ndarray, path) -> None:
    frame = pd.DataFrame({'element_id': np.arange(1, len(y) + 1), 'value': np.asarray(y, dtype=float)})
    frame.to_csv(Path(path), index=False, float_format='%.17g')


def load_observations(path, n_elements: int) -> np.ndarray:
    """
    Reads an `element_id,value` CSV (1-based ids, any order) into a vector
    indexed by element. Every element must appear exactly once.
    """
    try:
        frame = pd.read_csv(Path(path), float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise MeshParseError(f'{path}: cannot parse observations: {exc}') from exc
    if tuple(frame.columns) != OBSERVATION_COLUMNS:
        raise MeshParseError(f'{path}: expected header {",".join(OBSERVATION_COLUMNS)}, got {list(frame.columns)}')

    ids = pd.to_numeric(frame['element_id'], errors='coerce').to_numpy()
    values = pd.to_numeric(frame['value'], errors='coerce').to_numpy(dtype=float)
    if np.isnan(ids).any() or not np.isfinite(values).all():
        raise MeshParseError(f'{path}: non-numeric or non-finite entries')
    if ids.size != n_elements or not np.array_equal(np.sort(ids), np.arange(1, n_elements + 1)):
        raise MeshParseError(f'{path}: element ids must be exactly 1..{n_elements}')

    y = np.empty(n_elements)
    y[ids.astype(int) - 1] = values
    return y
