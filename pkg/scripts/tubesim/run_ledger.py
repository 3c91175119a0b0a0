# -*- coding: utf-8 -*-

"""
run_ledger.py

SQLite storage for run verdicts (ledger.db in the output directory).

Typical usage from experiment_dispatcher.py:

    ledger = RunLedger(out_dir)
    ledger.open_run(manifest)
    ledger.insert_report(run_id, eps, report_row)
    ledger.close_run(run_id, finished_utc, exit_code)
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping
import logging
import math
import sqlite3

from create_database import init_database, ledger_path
from run_metadata import RunManifest

logger = logging.getLogger("tubesim.run_ledger")


def _nullable(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class RunLedger:
    def __init__(self, out_dir: Path):
        self.path = ledger_path(out_dir)
        init_database(self.path)
        logger.info("Opening SQLite ledger at %s", self.path)
        self._conn = sqlite3.connect(self.path)
        self._conn.row_factory = sqlite3.Row

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "RunLedger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- runs ----------------------------------------------------------------

    def open_run(self, manifest: RunManifest) -> None:
        with self._conn:
            self._conn.execute(
                """
                INSERT INTO runs (
                    run_id, command, config_name, config_hash, code_version,
                    seed, workers, started_utc
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?);
                """,
                (
                    manifest.run_id,
                    manifest.command,
                    manifest.config_name,
                    manifest.config_hash,
                    manifest.code_version,
                    manifest.seed,
                    manifest.workers,
                    manifest.started_utc,
                ),
            )
        logger.debug("Inserted run %s", manifest.run_id)

    def close_run(self, run_id: str, finished_utc: str | None, exit_code: int) -> None:
        with self._conn:
            self._conn.execute(
                "UPDATE runs SET finished_utc = ?, exit_code = ? WHERE run_id = ?;",
                (finished_utc, exit_code, run_id),
            )

    # -- reports -------------------------------------------------------------

    def insert_report(self, run_id: str, epsilon: float, row: Mapping[str, Any]) -> int:
        """Store one verdict row (keys as produced by TestReport.as_row)."""
        with self._conn:
            cur = self._conn.execute(
                """
                INSERT INTO reports (
                    run_id, epsilon, name, n, censored, statistic, threshold,
                    p_value, verdict, notes
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?);
                """,
                (
                    run_id,
                    _nullable(float(epsilon)),
                    row["name"],
                    int(row["n"]),
                    int(row.get("censored", 0)),
                    _nullable(row.get("statistic")),
                    _nullable(row.get("threshold")),
                    _nullable(row.get("p_value")),
                    row["verdict"],
                    row.get("notes") or None,
                ),
            )
        return int(cur.lastrowid)

    def reports(self, run_id: str) -> list[dict]:
        cur = self._conn.execute(
            "SELECT * FROM reports WHERE run_id = ? ORDER BY id;", (run_id,)
        )
        return [dict(r) for r in cur.fetchall()]

    def failed(self, run_id: str) -> int:
        cur = self._conn.execute(
            "SELECT COUNT(*) FROM reports WHERE run_id = ? AND verdict != 'pass';", (run_id,)
        )
        return int(cur.fetchone()[0])
