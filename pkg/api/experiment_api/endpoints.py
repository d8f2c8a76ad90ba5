import logging
import time
from datetime import datetime
from typing import List

from fastapi import APIRouter, Depends, HTTPException
from fastapi.responses import Response
from sqlalchemy.orm import Session

from twostep.errors import TwoStepError
from twostep.harness import experiments, reports
from twostep.problems import load_problem

from ..settings import get_settings
from .models import ExperimentRun, SessionLocal
from .schemas import (
    ConvergeRequest,
    DriftRequest,
    ExperimentHistoryResponse,
    ExperimentResultResponse,
    ExperimentRunResponse,
    IntegrateRequest,
)

logger = logging.getLogger(__name__)

router = APIRouter()


# Dependency to get the database session
def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def _controls(request) -> dict:
    settings = get_settings()
    return {
        "fp_tol": request.fp_tol if request.fp_tol is not None else settings.fp_tol,
        "fp_max_iter": request.fp_max_iter if request.fp_max_iter is not None else settings.fp_max_iter,
        "predictor": request.predictor,
    }


def _problem(request):
    return load_problem(request.problem, request.eccentricity, request.poly, request.y0)


def _record(db: Session, kind: str, request, started: float, status: str, csv=None, message=None) -> ExperimentRun:
    # Create a database record
    run = ExperimentRun(
        kind=kind,
        problem=request.problem if request.poly is None else "user",
        parameters=request.model_dump_json(),
        result_csv=csv,
        status=status,
        message=message,
        processing_time=int((time.time() - started) * 1000),
        timestamp=datetime.utcnow(),
    )

    # Add to database
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def _run(db: Session, kind: str, request, compute):
    """Run compute() -> (frame, summary), store the outcome and build the response."""
    started = time.time()
    try:
        frame, summary = compute()
    except HTTPException:
        raise
    except (TwoStepError, ValueError) as e:
        logger.warning(f"{kind} request rejected: {e}")
        _record(db, kind, request, started, "failed", message=f"{type(e).__name__}: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception(f"{kind} request failed unexpectedly")
        _record(db, kind, request, started, "failed", message=f"{type(e).__name__}: {e}")
        raise HTTPException(status_code=500, detail=f"Error running {kind}: {str(e)}")

    # Store the table and return the stored run with its summary
    run = _record(db, kind, request, started, "ok", csv=reports.frame_to_csv(frame))
    response = ExperimentResultResponse.model_validate(run)
    response.summary = summary
    return response


@router.post("/integrate", response_model=ExperimentResultResponse)
def integrate_problem(request: IntegrateRequest, db: Session = Depends(get_db)):
    """Integrate one problem with one method and store the per-step table."""
    def compute():
        # Build the problem and the method from the request
        problem = _problem(request)
        config = experiments.build_config(problem, request.method, request.family, request.k,
                                          drift_correct=request.drift_correct, **_controls(request))
        trajectory = experiments.run_integration(problem, config, request.h, request.t_end)
        summary = {
            "method": config.label,
            "n_steps": len(trajectory.records) - 1,
            "max_energy_error": trajectory.max_energy_error,
            "final_state": trajectory.final.y.tolist(),
            "fp_iterations": trajectory.total_iterations,
        }
        return reports.trajectory_frame(trajectory), summary

    return _run(db, "integrate", request, compute)


@router.post("/converge", response_model=ExperimentResultResponse)
def converge_problem(request: ConvergeRequest, db: Session = Depends(get_db)):
    """Convergence study over a halving sequence of stepsizes."""
    def compute():
        # Build the problem and the method from the request
        problem = _problem(request)
        config = experiments.build_config(problem, request.method, request.family, request.k,
                                          drift_correct=request.drift_correct, **_controls(request))
        report = experiments.run_convergence(problem, config, experiments.parse_h_list(request.h_list),
                                             request.t_end, reference_factor=request.reference_factor,
                                             max_workers=get_settings().max_workers)
        summary = {"method": report.method, "reference": report.reference, "orders": report.orders}
        return report.to_frame(), summary

    return _run(db, "converge", request, compute)


@router.post("/drift", response_model=ExperimentResultResponse)
def drift_problem(request: DriftRequest, db: Session = Depends(get_db)):
    """|H(y_n) - H(y_0)| over time for several configurations."""
    def compute():
        problem = _problem(request)
        configs = experiments.parse_config_spec(problem, request.configs, **_controls(request))
        report = experiments.run_drift(problem, configs, request.h, request.t_end)
        summary = {"max_error": {s.label: s.max_error for s in report.series}}
        return report.to_frame(), summary

    return _run(db, "drift", request, compute)


@router.get("/history", response_model=List[ExperimentHistoryResponse])
def get_history(limit: int = 10, db: Session = Depends(get_db)):
    """Most recent runs first."""
    # Query the database
    return db.query(ExperimentRun).order_by(ExperimentRun.id.desc()).limit(limit).all()


def _get_run(db: Session, run_id: int) -> ExperimentRun:
    run = db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
    if not run:
        raise HTTPException(status_code=404, detail="Experiment run not found")
    return run


@router.get("/history/{run_id}", response_model=ExperimentRunResponse)
def get_run(run_id: int, db: Session = Depends(get_db)):
    return _get_run(db, run_id)


@router.get("/history/{run_id}/csv")
def get_run_csv(run_id: int, db: Session = Depends(get_db)):
    run = _get_run(db, run_id)
    if run.result_csv is None:
        raise HTTPException(status_code=404, detail="This run has no CSV output")
    return Response(content=run.result_csv, media_type="text/csv",
                    headers={"Content-Disposition": f"attachment; filename=run_{run.id}.csv"})
