from ._polariton import (
    ModeMatrix,
    BranchDiagram,
    AvoidedCrossing,
    build_mode_matrix,
    polariton_branches,
    avoided_crossing,
)
from ._transmission import ComplexResponse, self_energy, s21, spectrum_map, damping_sweep
from ._peaks import extract_peaks, dip_splitting
from ._physics import *
