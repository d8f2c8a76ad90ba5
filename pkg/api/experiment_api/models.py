from datetime import datetime

from sqlalchemy import Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from ..settings import get_settings

Base = declarative_base()


class ExperimentRun(Base):
    """One integrate / converge / drift run and its CSV output."""
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, index=True)
    kind = Column(String, nullable=False, index=True)  # 'integrate', 'converge' or 'drift'
    problem = Column(String, nullable=False)
    parameters = Column(Text, nullable=False)  # JSON of the request
    result_csv = Column(Text, nullable=True)
    status = Column(String, nullable=False)  # 'ok' or 'failed'
    message = Column(Text, nullable=True)
    timestamp = Column(DateTime, default=datetime.utcnow)
    processing_time = Column(Integer, nullable=True)  # milliseconds


# Create the database engine
DATABASE_URL = get_settings().database_url

# SQLite connections are shared with the threadpool that runs the endpoints
connect_args = {"check_same_thread": False} if DATABASE_URL.startswith("sqlite") else {}
engine = create_engine(DATABASE_URL, connect_args=connect_args)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def init_db():
    Base.metadata.create_all(bind=engine)
