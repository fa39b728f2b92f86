"""Run ledger: one `runs` row per CLI invocation, in a SQLite file beside the outputs."""

import json
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from sqlalchemy import select

from app.core.db import get_session, init_db
from app.core.models import Run

logger = logging.getLogger(__name__)


class RunRecord:
    """Handle yielded by `record_run`; set `summary` before the block ends."""

    def __init__(self, run_id: int):
        self.id = run_id
        self.summary: dict = {}


@contextmanager
def record_run(ledger_path: Path, command: str, cfg, out_dir: Path | None = None) -> Iterator[RunRecord]:
    """Mark a run as running, then done (with summary) or failed (with the error)."""
    init_db(ledger_path)
    session = get_session(ledger_path)
    started = datetime.now(timezone.utc)
    run = Run(
        command=command,
        status="running",
        seed=cfg.seed,
        rule=cfg.rule,
        config_json=json.dumps(cfg.raw, sort_keys=True, default=str),
        out_dir=str(out_dir) if out_dir else None,
        started_at=started,
    )
    session.add(run)
    session.commit()
    record = RunRecord(run.id)

    try:
        yield record
        finished = datetime.now(timezone.utc)
        summary = {**record.summary, "duration_sec": round((finished - started).total_seconds(), 1)}
        run.status = "done"
        run.finished_at = finished
        run.summary_json = json.dumps(summary, ensure_ascii=False, default=str)
        if isinstance(summary.get("accuracy"), float):
            run.accuracy = summary["accuracy"]
        session.commit()
    except Exception as e:
        run.status = "failed"
        run.error = f"{type(e).__name__}: {e}"
        run.finished_at = datetime.now(timezone.utc)
        session.commit()
        logger.error(f"{command} run {run.id} failed: {e}")
        raise
    finally:
        session.close()


def list_runs(ledger_path: Path, limit: int = 20) -> list[dict]:
    """Most recent runs first.

    Returns: [{"id", "command", "status", "seed", "rule", "accuracy", "out_dir", "started_at", "error"}]
    """
    if not Path(ledger_path).exists():
        return []
    init_db(ledger_path)
    session = get_session(ledger_path)
    try:
        rows = session.execute(select(Run).order_by(Run.id.desc()).limit(limit)).scalars().all()
        return [
            {
                "id": r.id,
                "command": r.command,
                "status": r.status,
                "seed": r.seed,
                "rule": r.rule,
                "accuracy": r.accuracy,
                "out_dir": r.out_dir,
                "started_at": r.started_at.isoformat(timespec="seconds") if r.started_at else None,
                "error": r.error,
            }
            for r in rows
        ]
    finally:
        session.close()
