"""Resequencing engine for a parallel-FIFO body buffer.

The package controls the buffer between body construction and painting via
three decisions (which lane a car enters, which car leaves next, and which
order a leaving car realizes), simulates the downstream paint shop to assess
sequence quality, and ships the replay/experiment harness used to evaluate
both.
"""

from .controller import DEFAULT_STRATEGY, ControllerState, Strategy
from .domain import CarBody, ColorId, Order, ScenarioCatalog, validate_catalog
from .lanes import LaneBuffer, new_buffer
from .paintshop import PaintShopConfig, aabs, simulate
from .session import Emission, EventRecord, Session

__version__ = "0.1.0"

__all__ = [
    "CarBody",
    "ColorId",
    "ControllerState",
    "DEFAULT_STRATEGY",
    "Emission",
    "EventRecord",
    "LaneBuffer",
    "Order",
    "PaintShopConfig",
    "ScenarioCatalog",
    "Session",
    "Strategy",
    "aabs",
    "new_buffer",
    "simulate",
    "validate_catalog",
    "__version__",
]
