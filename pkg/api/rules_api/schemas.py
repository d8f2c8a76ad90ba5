from typing import List, Optional

from pydantic import BaseModel


class QuadratureRuleResponse(BaseModel):
    family: str
    k: int
    nodes: List[float]
    weights: List[float]
    declared_degree: int
    verified_degree: int


class RequiredNodesResponse(BaseModel):
    family: str
    nu: int
    k: int
    degree_of_precision: int


class ProblemResponse(BaseModel):
    name: str
    description: str
    dim_m: int
    poly_degree: Optional[int] = None
    y0: List[float]
    energy0: float
    default_interval: float
    period: Optional[float] = None
