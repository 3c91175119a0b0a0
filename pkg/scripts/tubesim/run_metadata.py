# -*- coding: utf-8 -*-

# run_metadata.py

"""
Run manifest for one experiment campaign.

Responsibilities:
- Generate a unique, sortable run_id (UTC timestamp plus a short random suffix).
- Stamp the run with UTC and local start times.
- Record config hash, code version, seed and per-epsilon censoring rates.
- Write manifest.json into the output directory before any result file.

Timestamps live only here; result tables stay byte-identical across reruns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
import json
import logging
import socket
import uuid

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.run_metadata")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

CODE_VERSION = "0.3.0"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    command: str
    config_name: str
    config_hash: str
    code_version: str
    seed: int
    workers: int
    started_utc: str
    started_local: str
    host: str
    censoring: dict = field(default_factory=dict)
    finished_utc: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def with_censoring(self, epsilon: float, rate: float) -> "RunManifest":
        return replace(self, censoring={**self.censoring, f"{epsilon:g}": rate})


def _now_utc() -> datetime:
    return datetime.now(timezone.utc)


def _make_run_id(ts: datetime, config_hash: str, seed: int) -> str:
    """<utc start>_<config hash prefix>_s<seed>_<nonce>; sorts by start time."""
    nonce = uuid.uuid4().hex[:6]
    return f"{ts:%Y%m%dT%H%M%S}Z_{config_hash[:8]}_s{seed}_{nonce}"


def new_manifest(
    command: str,
    config_name: str,
    config_hash: str,
    seed: int,
    workers: int,
) -> RunManifest:
    ts_utc = _now_utc()
    ts_local = ts_utc.astimezone()
    return RunManifest(
        run_id=_make_run_id(ts_utc, config_hash, seed),
        command=command,
        config_name=config_name,
        config_hash=config_hash,
        code_version=CODE_VERSION,
        seed=seed,
        workers=workers,
        started_utc=ts_utc.isoformat(timespec="milliseconds"),
        started_local=ts_local.isoformat(timespec="milliseconds"),
        host=socket.gethostname(),
    )


def finish(manifest: RunManifest) -> RunManifest:
    return replace(manifest, finished_utc=_now_utc().isoformat(timespec="milliseconds"))


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote manifest %s (run_id=%s)", path, manifest.run_id)
    return path


def read_manifest(out_dir: Path) -> dict:
    return json.loads((out_dir / MANIFEST_NAME).read_text(encoding="utf-8"))


if __name__ == "__main__":
    logging.basicConfig(
        level=logging.DEBUG,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    sample = new_manifest("exit-stats", "demo", "0" * 16, seed=1, workers=1)
    print(sample.with_censoring(0.02, 0.0).to_dict())
