"""
Database models using SQLAlchemy
Run ledger: one row per CLI command invocation, stored next to its artifacts
"""

from datetime import datetime
from functools import lru_cache
from pathlib import Path

from sqlalchemy import Column, DateTime, Float, Integer, JSON, String, Text, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from config.settings import settings

Base = declarative_base()


class Run(Base):
    """Run history tracking"""
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(50))  # 'solve', 'risk', 'axioms', 'bvie', 'counterexample', 'convergence'
    status = Column(String(20))  # 'processing', 'completed', 'failed'

    # Inputs
    config_path = Column(String(500), nullable=True)
    seed = Column(Integer, nullable=True)
    settings_used = Column(JSON, nullable=True)

    # Outcome
    headline_value = Column(Float, nullable=True)
    exit_code = Column(Integer, nullable=True)
    error_message = Column(Text, nullable=True)
    processing_time_seconds = Column(Float, nullable=True)

    # Timestamps
    created_at = Column(DateTime, default=datetime.utcnow)
    completed_at = Column(DateTime, nullable=True)

    def to_dict(self):
        return {
            "id": self.id,
            "command": self.command,
            "status": self.status,
            "config_path": self.config_path,
            "seed": self.seed,
            "settings_used": self.settings_used,
            "headline_value": self.headline_value,
            "exit_code": self.exit_code,
            "error_message": self.error_message,
            "processing_time_seconds": self.processing_time_seconds,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "completed_at": self.completed_at.isoformat() if self.completed_at else None,
        }


@lru_cache(maxsize=None)
def _session_factory(database_path: str) -> sessionmaker:
    engine = create_engine(f"sqlite:///{database_path}", echo=settings.debug, future=True)
    Base.metadata.create_all(engine)
    return sessionmaker(engine, expire_on_commit=False)


def init_db(output_dir: Path) -> sessionmaker:
    """Session factory for the ledger in output_dir, tables created on first use"""
    output_dir.mkdir(parents=True, exist_ok=True)
    return _session_factory(str(output_dir / settings.history_db_name))
