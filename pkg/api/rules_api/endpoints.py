from typing import List

from fastapi import APIRouter, HTTPException

from twostep.errors import TwoStepError
from twostep.problems import PROBLEMS
from twostep.quadrature import QuadratureFamily, degree_of_precision, make_rule, required_nodes, verified_degree

from .schemas import ProblemResponse, QuadratureRuleResponse, RequiredNodesResponse

router = APIRouter()


def _family(name: str) -> QuadratureFamily:
    try:
        return QuadratureFamily(name)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"Unknown quadrature family: {name}")


@router.get("/quadrature/{family}/{k}", response_model=QuadratureRuleResponse)
def get_quadrature_rule(family: str, k: int):
    """Nodes and weights on [0, 1] with declared and verified degree of precision."""
    try:
        rule = make_rule(_family(family), k)
    except TwoStepError as e:
        raise HTTPException(status_code=400, detail=str(e))
    # Re-check the degree of precision against monomials
    return QuadratureRuleResponse(
        family=rule.family.value,
        k=rule.k,
        nodes=rule.nodes.tolist(),
        weights=rule.weights.tolist(),
        declared_degree=rule.degree,
        verified_degree=verified_degree(rule),
    )


@router.get("/required-nodes/{family}/{nu}", response_model=RequiredNodesResponse)
def get_required_nodes(family: str, nu: int):
    """Smallest k making M_k energy preserving for a degree-nu polynomial Hamiltonian."""
    quadrature_family = _family(family)
    try:
        k = required_nodes(quadrature_family, nu)
    except (TwoStepError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return RequiredNodesResponse(family=quadrature_family.value, nu=nu, k=k,
                                 degree_of_precision=degree_of_precision(quadrature_family, k))


@router.get("/problems", response_model=List[ProblemResponse])
def list_problems():
    problems = []
    # Build each problem once to report its initial energy
    for factory in PROBLEMS.values():
        problem = factory()
        problems.append(ProblemResponse(
            name=problem.name,
            description=problem.description,
            dim_m=problem.hamiltonian.dim_m,
            poly_degree=problem.poly_degree,
            y0=problem.y0.tolist(),
            energy0=problem.energy0,
            default_interval=problem.default_interval,
            period=problem.period,
        ))
    return problems
