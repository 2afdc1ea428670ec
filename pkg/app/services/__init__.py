"""
Services for SPCA-SI Monitor.
"""

from app.services.continual import ContinualUpdater
from app.services.datagen import DataGenerator
from app.services.model_store import ModelStore
from app.services.monitor import MonitorService
from app.services.scenario import ScenarioRunner
from app.services.solver import SPCASolver

__all__ = [
    "SPCASolver",
    "ContinualUpdater",
    "MonitorService",
    "DataGenerator",
    "ModelStore",
    "ScenarioRunner",
]
