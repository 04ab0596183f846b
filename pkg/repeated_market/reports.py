"""
CSV and JSON output for traces, audits and sweeps.
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

ROUND_COLUMNS = [
    'tau',
    'price_good',
    'price_right',
    'expected_frustration',
    'useful_money',
    'useless_money',
    'volume_offered',
    'volume_sold',
]
BUYER_FIELDS = ('money', 'good', 'right', 'frustration')
FLOAT_FORMAT = '%.12g'


def buyer_columns(num_buyers):
    return [f'b{b}_{name}' for b in range(num_buyers) for name in BUYER_FIELDS]


def trace_columns(num_buyers):
    return ROUND_COLUMNS + buyer_columns(num_buyers)


def trace_frame(trace, columns=None):
    """One row per round: prices, money flows, volumes, then per-buyer groups."""
    expected = trace.expected_frustration_path
    rows = []
    for record, expected_frustration in zip(trace.records, expected):
        row = {
            'tau': record.round,
            'price_good': record.price_good,
            'price_right': record.price_right,
            'expected_frustration': expected_frustration,
            'useful_money': record.useful_money,
            'useless_money': record.useless_money,
            'volume_offered': record.volume_offered,
            'volume_sold': record.volume_sold,
        }
        for b in range(trace.config.num_buyers):
            row[f'b{b}_money'] = record.money_start[b]
            row[f'b{b}_good'] = record.good_end[b]
            row[f'b{b}_right'] = record.right_assigned[b]
            row[f'b{b}_frustration'] = record.frustration[b]
        rows.append(row)
    frame = pd.DataFrame(rows, columns=trace_columns(trace.config.num_buyers))
    if columns:
        unknown = [column for column in columns if column not in frame.columns]
        if unknown:
            raise KeyError(f'unknown columns {unknown}')
        frame = frame[list(columns)]
    return frame


def frame_to_csv(frame, path=None):
    """Write with a dot decimal separator and '\\n' line endings; return the text when no path is given."""
    text = frame.to_csv(index=False, lineterminator='\n', float_format=FLOAT_FORMAT)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8', newline='')
        logger.info(f'wrote {len(frame)} rows to {path}')
    return text


def write_trace_csv(trace, path=None, columns=None):
    return frame_to_csv(trace_frame(trace, columns), path)


def sweep_frame(rows):
    """Mean and standard error per (size, variant) of the sweep's asymptotic values and prices."""
    frame = pd.DataFrame(rows)
    grouped = frame.groupby(['size', 'variant'], sort=True)
    summary = grouped.agg(
        runs=('seed', 'count'),
        frustration_mean=('frustration', 'mean'),
        frustration_sem=('frustration', 'sem'),
        expected_frustration_mean=('expected_frustration', 'mean'),
        price_mean=('price', 'mean'),
        price_sem=('price', 'sem'),
        price_right_mean=('price_right', 'mean'),
        price_right_sem=('price_right', 'sem'),
    )
    return summary.reset_index()


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_json_report(data, path=None):
    text = json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + '\n'
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f'wrote report to {path}')
    return text
