"""
Domain schemas for SPCA-SI Monitor.
"""

from .model import ARCHIVE_FORMAT_VERSION, ModeData, ModelArchive, ModeModel, Provenance, Scaler
from .monitoring import DetectionScore, MonitoringResult
from .report import AcceptanceBand, ReportRow, RunReport, SweepRow
from .scenario import FaultSpec, ModeSpec, PlanRow, ScenarioBundle, ScenarioPlan, SourceDistribution
from .solver import APGResult, PriorTerm, ProjectionFit, SolverConfig, SolverTrace

__all__ = [
    "ARCHIVE_FORMAT_VERSION",
    "APGResult",
    "AcceptanceBand",
    "DetectionScore",
    "FaultSpec",
    "ModeData",
    "ModeModel",
    "ModeSpec",
    "ModelArchive",
    "MonitoringResult",
    "PlanRow",
    "PriorTerm",
    "ProjectionFit",
    "Provenance",
    "ReportRow",
    "RunReport",
    "Scaler",
    "ScenarioBundle",
    "ScenarioPlan",
    "SolverConfig",
    "SolverTrace",
    "SourceDistribution",
    "SweepRow",
]
