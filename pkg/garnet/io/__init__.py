from ._csv import (
    MAGNITUDE_COLUMNS,
    COMPLEX_COLUMNS,
    load_spectrum_csv,
    save_spectrum_csv,
    branches_frame,
    save_branches_csv,
)
from ._config import RunConfig, MaterialSettings, FitSettings, SweepSettings
