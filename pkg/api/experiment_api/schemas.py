from datetime import datetime
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Controls(BaseModel):
    """Fixed-point controls shared by every run request; None means the configured default."""
    fp_tol: Optional[float] = Field(default=None, gt=0)
    fp_max_iter: Optional[int] = Field(default=None, ge=1)
    predictor: str = "extrapolate"


class ProblemChoice(BaseModel):
    problem: str = "pendulum3"
    eccentricity: Optional[float] = None
    poly: Optional[list] = None  # [[coefficient, [exponents...]], ...] replaces the built-in problem
    y0: Optional[List[float]] = None


class IntegrateRequest(ProblemChoice, Controls):
    method: str = "mk"
    family: str = "lobatto"
    k: Optional[int] = None
    h: float = Field(gt=0)
    t_end: Optional[float] = Field(default=None, gt=0)
    drift_correct: bool = False


class ConvergeRequest(ProblemChoice, Controls):
    method: str = "mk"
    family: str = "lobatto"
    k: Optional[int] = None
    h_list: str = "2^-3..2^-6"
    t_end: float = Field(gt=0)
    reference_factor: int = Field(default=8, ge=2)
    drift_correct: bool = False


class DriftRequest(ProblemChoice, Controls):
    configs: str = "mk:lobatto,mk-lin:lobatto"
    h: float = Field(gt=0)
    t_end: float = Field(gt=0)


class ExperimentRunResponse(BaseModel):
    id: int
    kind: str
    problem: str
    parameters: str
    status: str
    message: Optional[str] = None
    timestamp: datetime
    processing_time: Optional[int] = None

    model_config = ConfigDict(from_attributes=True)


class ExperimentHistoryResponse(BaseModel):
    id: int
    kind: str
    problem: str
    status: str
    timestamp: datetime

    model_config = ConfigDict(from_attributes=True)


class ExperimentResultResponse(ExperimentRunResponse):
    summary: dict = {}
