"""HTTP service and command line entry points over the curation pipeline."""

from .app import create_app
from .config import ServiceConfig, load_config
from .jobs import JOB_STATES, CurationJob, JobRunner, calibrate_space

__all__ = [
    "JOB_STATES",
    "CurationJob",
    "JobRunner",
    "ServiceConfig",
    "calibrate_space",
    "create_app",
    "load_config",
]
