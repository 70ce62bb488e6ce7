"""Predictor/observer-based sliding mode stabilization for delayed-output LTI plants.

Simulation, stability certification, and trace auditing for a closed loop made
of an open-loop delay-compensating predictor, a super-twisting disturbance
observer, and a sliding mode controller.
"""

from .analysis import (
    CertificationReport,
    TraceAudit,
    audit_trace,
    corollary_bound,
    theorem_rho_coefficient,
)
from .controller import ControlDecomposition, ControllerConfig, control_law, design_surface
from .harness import Scenario, Trace, bundled_scenario_path, load_scenario, read_trace, run, write_trace
from .observer import ObserverGains, ObserverState, observer_step, reconstruct_fault
from .plant import DelayProfile, FaultSignal, HistoryBuffer, PlantModel, UncertaintyModel
from .predictor import PredictorOutput, predict_x2, predict_x2_direct, residual_bound

__version__ = "0.1.0"

__all__ = [
    "CertificationReport",
    "ControlDecomposition",
    "ControllerConfig",
    "DelayProfile",
    "FaultSignal",
    "HistoryBuffer",
    "ObserverGains",
    "ObserverState",
    "PlantModel",
    "PredictorOutput",
    "Scenario",
    "Trace",
    "TraceAudit",
    "UncertaintyModel",
    "audit_trace",
    "bundled_scenario_path",
    "control_law",
    "corollary_bound",
    "design_surface",
    "load_scenario",
    "observer_step",
    "predict_x2",
    "predict_x2_direct",
    "read_trace",
    "reconstruct_fault",
    "residual_bound",
    "run",
    "theorem_rho_coefficient",
    "write_trace",
]
