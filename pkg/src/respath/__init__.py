"""Resonance path sums for a driven two-level system coupled to a thermal reservoir.

The reduced dynamics under a piecewise-constant Hamiltonian is evaluated at
dominant order in the coupling as a sum over resonance paths.  Modules:

``model``       basis conventions, states, observables, protocols
``spectral``    form factors, gamma, gamma0, principal values, thermal transform
``resonance``   level-shift matrices, resonance sets, transition matrices
``pathsum``     full and jump-truncated path sums
``continuum``   continuous-time limit for smooth gap schedules
``scenarios``   sudden level crossing in both regimes
``cli``         protocol files, CSV output, ``respath`` command
"""

from .continuum import GapSchedule, continuum_value, discretize, no_jump_product
from .errors import (
    BudgetError,
    DegeneracyError,
    DegenerateCouplingError,
    InfraredError,
    NumericError,
    ParseError,
    RegimeError,
    ResonanceError,
    ValidationError,
)
from .model import (
    BASIS,
    INDEX,
    PSI_S,
    Observable,
    Protocol,
    Regime,
    Segment,
    SystemState,
    apply_observable,
    vectorize_state,
)
from .pathsum import REMAINDER_CLASS, Path, expectation_full, expectation_truncated, path_value, resonance_data
from .resonance import (
    LevelShiftMatrix,
    ResonanceSet,
    TransitionMatrix,
    level_shift_overlapping,
    resonances_isolated,
    resonances_overlapping,
    transition_matrix,
)
from .scenarios import CrossingSpec, crossing_jump, crossing_probability, crossing_probability_isolated
from .spectral import SpectralDensity, ThermalTransform, pv_integral, sigma_tau

__version__ = "0.1.0"

__all__ = [
    "BASIS",
    "INDEX",
    "PSI_S",
    "REMAINDER_CLASS",
    "BudgetError",
    "CrossingSpec",
    "DegeneracyError",
    "DegenerateCouplingError",
    "GapSchedule",
    "InfraredError",
    "LevelShiftMatrix",
    "NumericError",
    "Observable",
    "ParseError",
    "Path",
    "Protocol",
    "Regime",
    "RegimeError",
    "ResonanceError",
    "ResonanceSet",
    "Segment",
    "SpectralDensity",
    "SystemState",
    "ThermalTransform",
    "TransitionMatrix",
    "ValidationError",
    "apply_observable",
    "continuum_value",
    "crossing_jump",
    "crossing_probability",
    "crossing_probability_isolated",
    "discretize",
    "expectation_full",
    "expectation_truncated",
    "level_shift_overlapping",
    "no_jump_product",
    "path_value",
    "pv_integral",
    "resonance_data",
    "resonances_isolated",
    "resonances_overlapping",
    "sigma_tau",
    "transition_matrix",
    "vectorize_state",
]
