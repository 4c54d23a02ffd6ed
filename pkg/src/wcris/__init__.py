"""Wave-controlled RIS toolkit: exact simulator, surrogate model, beam synthesis."""

from ._peaks import BACKEND as KERNEL_BACKEND
from .physics import (
    BswConfig,
    ChannelSetup,
    RisGeometry,
    UnitCellCircuit,
    VaractorCurve,
    default_geometry,
    default_varactor_curve,
    radiation_pattern,
)

__version__ = "0.1.0"

__all__ = [
    "BswConfig",
    "ChannelSetup",
    "KERNEL_BACKEND",
    "RisGeometry",
    "UnitCellCircuit",
    "VaractorCurve",
    "default_geometry",
    "default_varactor_curve",
    "radiation_pattern",
    "__version__",
]
