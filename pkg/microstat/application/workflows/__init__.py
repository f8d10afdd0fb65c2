"""
Workflow orchestrators.
"""

from .decontamination_workflow import DecontaminationWorkflow
from .ordination_workflow import OrdinationWorkflow
from .pipeline_workflow import PipelineResult, PipelineWorkflow, Stage, load_config

__all__ = [
    "DecontaminationWorkflow",
    "OrdinationWorkflow",
    "PipelineResult",
    "PipelineWorkflow",
    "Stage",
    "load_config",
]
