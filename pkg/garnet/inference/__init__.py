from ._bare_cavity import BareCavityFit, fit_bare_cavity, lorentzian_db
from ._initial_guess import InitialGuess, initial_guess
from ._hybrid_fit import FitConfig, FitReport, fit_hybrid, residual_norm, select_model
