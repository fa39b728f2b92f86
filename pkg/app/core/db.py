"""Database session management for the run ledger.

Engines and session factories are cached per ledger file, so several ledgers can be used
from one process.
"""

import logging
from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy import event as sa_event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker

from app.core.models import Base

logger = logging.getLogger(__name__)

_engines: dict[Path, Engine] = {}
_session_factories: dict[Path, sessionmaker] = {}


def _key(db_path: Path) -> Path:
    return Path(db_path).resolve()


def get_engine(db_path: Path) -> Engine:
    key = _key(db_path)
    engine = _engines.get(key)
    if engine is None:
        key.parent.mkdir(parents=True, exist_ok=True)
        engine = create_engine(f"sqlite:///{key}", echo=False)

        @sa_event.listens_for(engine, "connect")
        def _set_sqlite_pragma(dbapi_conn, connection_record):
            cursor = dbapi_conn.cursor()
            cursor.execute("PRAGMA journal_mode=WAL")
            cursor.close()

        _engines[key] = engine
        logger.debug(f"opened ledger {key}")
    return engine


def get_session_factory(db_path: Path) -> sessionmaker:
    key = _key(db_path)
    factory = _session_factories.get(key)
    if factory is None:
        factory = sessionmaker(bind=get_engine(key))
        _session_factories[key] = factory
    return factory


def get_session(db_path: Path) -> Session:
    """Get a new session. Caller is responsible for closing."""
    return get_session_factory(db_path)()


def init_db(db_path: Path):
    """Create the ledger tables. Safe to call multiple times."""
    Base.metadata.create_all(get_engine(db_path))


def reset_engine():
    """Dispose every cached engine/session factory (for testing)."""
    for engine in _engines.values():
        engine.dispose()
    _engines.clear()
    _session_factories.clear()
