from ._presets import *
from ._presets import __all__
