"""
Reading and writing result tables (sweeps, zone rasters, single solutions).

CSV files use ',' delimiters, '.' decimals and LF line endings; JSON files hold
{"metadata": {...}, "rows": [...]}. Numbers are written to 12 significant digits
so a table re-read and re-written is byte-identical.
"""
import os
import json
import math
import logging
from enum import Enum

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
FLOAT_FORMAT = "%.12g"
NON_FINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def significant(value):
    """JSON-safe scalar rounded to 12 significant digits"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return float(FLOAT_FORMAT % value)
    if isinstance(value, dict):
        return {k: significant(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [significant(v) for v in value]
    return value


def _restore(value):
    if isinstance(value, str) and value in NON_FINITE:
        return NON_FINITE[value]
    return value


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(parent):
        os.makedirs(parent)
        logger.info(f"Created output directory: {parent}")


def table_metadata(**config):
    return {"tool": "gausscap", "version": TOOL_VERSION, "config": significant(config)}


def write_table(frame, path, fmt="csv", metadata=None):
    """Write a table as CSV or JSON"""
    _ensure_parent(path)
    if fmt == "csv":
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    elif fmt == "json":
        payload = {
            "metadata": significant(metadata or {}),
            "rows": [significant(row) for row in frame.to_dict("records")],
        }
        with open(path, "w", newline="\n") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}; expected csv or json")
    logger.info(f"Saved {len(frame)} rows to {path}")
    return path


def read_table(path):
    """Read a table written by write_table; returns (frame, metadata)"""
    if path.endswith(".json"):
        with open(path) as f:
            payload = json.load(f)
        rows = [{k: _restore(v) for k, v in row.items()} for row in payload.get("rows", [])]
        return pd.DataFrame(rows), payload.get("metadata", {})
    return pd.read_csv(path), {}


def format_record(record):
    """Aligned 'key: value' lines for terminal output"""
    record = significant(record)
    width = max((len(k) for k in record), default=0)
    return "\n".join(f"{k.ljust(width)} : {v}" for k, v in record.items())
