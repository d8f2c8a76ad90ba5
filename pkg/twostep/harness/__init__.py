from .experiments import (
    build_config,
    estimate_order,
    parse_config_spec,
    parse_h_list,
    run_convergence,
    run_drift,
    run_integration,
)
from .reports import ConvergenceReport, DriftReport, frame_to_csv, render, trajectory_frame
