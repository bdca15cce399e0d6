"""Adaptive SMS quiz service: fuzzy difficulty control, session protocol,
file-backed tables, and a simulated GSM gateway."""

__version__ = "0.1.0"

from .fuzzy import (
    CrispInput,
    FuzzySystem,
    InferenceResult,
    ZeroActivation,
    default_system,
    infer_level,
    load_system,
)
from .tables import Store, load_store
from .session import Engine, InboundSms, SessionConfig, normalize
from .gateway import Gateway, SimClock

__all__ = [
    "CrispInput",
    "Engine",
    "FuzzySystem",
    "Gateway",
    "InboundSms",
    "InferenceResult",
    "SessionConfig",
    "SimClock",
    "Store",
    "ZeroActivation",
    "default_system",
    "infer_level",
    "load_store",
    "load_system",
    "normalize",
    "__version__",
]
