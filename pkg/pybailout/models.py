from datetime import datetime
from typing import Optional

from sqlmodel import Field, SQLModel


class ResultRow(SQLModel, table=True):
    __tablename__ = "results"

    id: Optional[int] = Field(default=None, primary_key=True)
    run: str = Field(index=True)
    experiment: str
    instance: str
    algorithm: str
    k: Optional[float] = None
    budget: float = 0.0
    g: Optional[float] = None
    seed: int = 0
    m: int = 0
    mean: Optional[float] = None
    std: Optional[float] = None
    opt_r: Optional[float] = None
    gc: Optional[float] = None
    pgc: Optional[float] = None
    sgc: Optional[float] = None
    pof: Optional[float] = None
    spent: Optional[float] = None
    wall_time: float = 0.0
    status: str = Field(default="ok")
    message: str = ""
    created: Optional[datetime] = None


# Column order of the delimiter-separated results files.
RESULT_COLUMNS = [
    "run", "experiment", "instance", "algorithm", "k", "budget", "g", "seed", "m",
    "mean", "std", "opt_r", "gc", "pgc", "sgc", "pof", "spent", "wall_time", "status", "message",
]
