"""SQLAlchemy ORM models for the run ledger."""

from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Float, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    pass


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class Run(Base):
    """One CLI invocation: what ran, with which config, and how it ended."""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(32), nullable=False)  # device-trace/train/eval/sweep
    status = Column(String(32), nullable=False, default="pending")  # pending/running/done/failed
    seed = Column(Integer)
    rule = Column(String(16))
    config_json = Column(Text)  # merged config the run used
    out_dir = Column(Text)
    summary_json = Column(Text)  # JSON: accuracy, paths, duration, etc.
    accuracy = Column(Float)
    error = Column(Text)
    started_at = Column(DateTime)
    finished_at = Column(DateTime)
    created_at = Column(DateTime, default=_utcnow)

    def __repr__(self) -> str:
        return f"<Run(id={self.id}, command={self.command}, status={self.status})>"
