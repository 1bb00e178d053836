"""hapsim: deterministic simulator and analysis toolkit for bilateral
telemanipulation stiffness-perception experiments."""

from .config import RunConfig, default_config, load_config
from .engine import SessionEngine, TrialResult, run_session
from .feedback import FeedbackConfig, gate, method1, method2
from .observer import Observer, PerceptualModel
from .samples import SampleSpec, SensorRange, catalog, shore_to_stiffness
from .schedule import TrialSchedule, schedule_table1, validate_schedule
from .sessionlog import SessionLog

__version__ = "0.1.0"

__all__ = [
    "FeedbackConfig",
    "Observer",
    "PerceptualModel",
    "RunConfig",
    "SampleSpec",
    "SensorRange",
    "SessionEngine",
    "SessionLog",
    "TrialResult",
    "TrialSchedule",
    "catalog",
    "default_config",
    "gate",
    "load_config",
    "method1",
    "method2",
    "run_session",
    "schedule_table1",
    "shore_to_stiffness",
    "validate_schedule",
    "__version__",
]
