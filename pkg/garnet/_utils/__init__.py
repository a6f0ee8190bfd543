from ._units import *
from ._spectrum import *
from ._parallel import *
