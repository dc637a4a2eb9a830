import numpy as np
import pandas as pd

from src.diagnostics.constants import SUMMARY_QUANTILES


def lag1_autocorrelation(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return np.nan
    centered = values - values.mean()
    denominator = float(centered @ centered)
    if denominator == 0.0:
        return np.nan
    return float(centered[1:] @ centered[:-1]) / denominator


def trace_summary(scalars: pd.DataFrame, exclude=('iteration',)) -> pd.DataFrame:
    """Mean, sd, 5/50/95% quantiles and lag-1 autocorrelation of every traced scalar."""
    rows = list()
    for column in scalars.columns:
        if column in exclude:
            continue
        values = scalars[column].to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        row = {
            'parameter': column,
            'n': finite.size,
            'mean': finite.mean() if finite.size else np.nan,
            'sd': finite.std(ddof=1) if finite.size > 1 else np.nan,
        }
        for q in SUMMARY_QUANTILES:
            row[f'q{int(round(q * 100)):02d}'] = np.quantile(finite, q) if finite.size else np.nan
        row['lag1_autocorrelation'] = lag1_autocorrelation(finite)
        rows.append(row)
    return pd.DataFrame(rows)
