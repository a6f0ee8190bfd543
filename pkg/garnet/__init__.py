from . import inference
from . import tools as tl
from . import io
from . import datasets
from ._constants import PhysicalConstants, DEFAULT_CONSTANTS
from ._errors import *
from ._types import (
    SpectrumMap,
    CavityMode,
    MagnonMode,
    HybridSystem,
    SweepGrid,
    validate_system,
    check_system,
)

__version__ = '0.1.0'
