"""Decide and quantify contextuality of empirical probability tables.

Modules: ``scenario`` (models), ``hierarchy`` (levels and contextual
fraction), ``csw`` (graph bounds), ``cbd`` (Contextuality-by-Default),
``quantum`` and ``noise`` (sequential-measurement simulator), ``bounds``
(corrected noncontextual bounds), ``optim`` (LP and SDP back ends).
"""
__version__ = "0.1.0"

from .scenario import (EmpiricalModel, MeasurementScenario, PossibilisticModel, load_model,
                       marginalize, signalling_deficit, to_possibilistic, validate_model)
from .hierarchy import classify, contextual_fraction, noncontextual_distribution

__all__ = [
    "EmpiricalModel", "MeasurementScenario", "PossibilisticModel", "load_model", "marginalize",
    "signalling_deficit", "to_possibilistic", "validate_model", "classify",
    "contextual_fraction", "noncontextual_distribution",
]
