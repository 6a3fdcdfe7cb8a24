"""Access-link bottleneck buffer simulator and QoS toolkit."""

__version__ = "0.1.0"

from .buffers import BufferPolicy, RedParams
from .config import LinkConfig, ScenarioConfig, load_scenario, validate
from .traffic import (BurstParams, CbrParams, FlowSpec, SyntheticVideoParams,
                      TraceParams)

__all__ = [
    "BufferPolicy", "RedParams", "LinkConfig", "ScenarioConfig",
    "load_scenario", "validate", "BurstParams", "CbrParams", "FlowSpec",
    "SyntheticVideoParams", "TraceParams", "__version__",
]
