# -*- coding: utf-8 -*-

# report_writer.py
"""
Result tables for a run directory.

All tables go through pandas with a fixed float format and '\\n' line endings,
and every row carries the config hash. Nothing time-dependent is written
here; timestamps belong to manifest.json.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping
import logging

import pandas as pd

from run_metadata import MANIFEST_NAME

logger = logging.getLogger("tubesim.report_writer")

FLOAT_FORMAT = "%.10g"


def _frame(rows: Iterable[Mapping] | pd.DataFrame, config_hash: str) -> pd.DataFrame:
    frame = rows.copy() if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    frame["config_hash"] = config_hash
    return frame


def _require_manifest(out_dir: Path) -> None:
    if not (out_dir / MANIFEST_NAME).exists():
        raise FileNotFoundError(f"{out_dir / MANIFEST_NAME} must be written before results")


def write_table(
    rows: Iterable[Mapping] | pd.DataFrame,
    out_dir: Path,
    name: str,
    config_hash: str,
    sep: str = ",",
    index: bool = False,
) -> Path:
    """Write `name` (.csv or .tsv) under out_dir and return its path."""
    _require_manifest(out_dir)
    frame = _frame(rows, config_hash)
    path = out_dir / name
    frame.to_csv(path, sep=sep, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def write_csv(rows, out_dir: Path, name: str, config_hash: str) -> Path:
    return write_table(rows, out_dir, name, config_hash)


def write_tsv(rows, out_dir: Path, name: str, config_hash: str) -> Path:
    """Plot-ready companion table (epsilon first, tab separated)."""
    return write_table(rows, out_dir, name, config_hash, sep="\t")


def write_matrix(frame: pd.DataFrame, out_dir: Path, name: str, config_hash: str) -> Path:
    """Source x target probability table, row labels kept."""
    return write_table(frame, out_dir, name, config_hash, index=True)


def event_rows(epsilon: float, logs: Iterable[tuple]) -> list[dict]:
    """Flatten (record, events) pairs from run_cycles into CSV rows."""
    rows = []
    for record, events in logs:
        for ev in events:
            rows.append(
                {
                    "epsilon": epsilon,
                    "trajectory": record.trajectory,
                    "event_kind": ev.kind,
                    "time": ev.time,
                    "edge": ev.edge,
                    "abscissa": ev.abscissa,
                }
            )
    return rows


def text_summary(rows: Iterable[Mapping]) -> str:
    """Human-readable one-line-per-test listing."""
    lines = []
    for r in rows:
        lines.append(
            f"{r.get('epsilon', float('nan')):<10.4g} {r['name']:<22} "
            f"N={r['n']:<7d} stat={r['statistic']:<12.6g} thr={r['threshold']:<10.4g} {r['verdict']}"
        )
    return "\n".join(lines)
