#!/usr/bin/env python3
"""
create_database.py

Create the SQLite run ledger kept in every output directory:

    ledger.db
        runs     - one row per campaign (mirrors manifest.json)
        reports  - one row per verdict (TestReport / PredictionReport)

run_ledger.py does the inserts.
"""

from __future__ import annotations

from pathlib import Path
import logging
import sqlite3

logger = logging.getLogger("tubesim.create_database")

LEDGER_NAME = "ledger.db"


LEDGER_SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,                -- '<utc timestamp>_<8 hex>'
    command TEXT NOT NULL,                  -- 'exit-stats' | 'metastable' | ...
    config_name TEXT NOT NULL,
    config_hash TEXT NOT NULL,
    code_version TEXT NOT NULL,
    seed INTEGER NOT NULL,
    workers INTEGER NOT NULL,
    started_utc TEXT NOT NULL,
    finished_utc TEXT,
    exit_code INTEGER                       -- NULL while running
);

CREATE TABLE IF NOT EXISTS reports (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id TEXT NOT NULL REFERENCES runs (run_id),
    epsilon REAL,                           -- NULL for analytic checks
    name TEXT NOT NULL,                     -- e.g. 'ks_exponential', 'mc:bump1'
    n INTEGER NOT NULL,
    censored INTEGER NOT NULL DEFAULT 0,
    statistic REAL,
    threshold REAL,
    p_value REAL,
    verdict TEXT NOT NULL,                  -- 'pass' | 'fail' | 'invalid'
    notes TEXT
);

CREATE INDEX IF NOT EXISTS idx_reports_run
    ON reports (run_id);

CREATE INDEX IF NOT EXISTS idx_reports_name_eps
    ON reports (name, epsilon);
"""


def ledger_path(out_dir: Path) -> Path:
    return Path(out_dir) / LEDGER_NAME


def init_database(path: Path, schema_sql: str = LEDGER_SCHEMA) -> None:
    """Create the database at `path` if needed and apply the schema."""
    path.parent.mkdir(parents=True, exist_ok=True)
    logger.debug("Initializing %s", path)
    conn = sqlite3.connect(path)
    try:
        with conn:
            conn.executescript(schema_sql)
    finally:
        conn.close()
    logger.debug("%s ready", path.name)


def main(out_dir: Path = Path(".")) -> None:
    init_database(ledger_path(out_dir))


if __name__ == "__main__":
    logging.basicConfig(
        level=logging.DEBUG,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    main()
