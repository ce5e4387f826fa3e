"""Error-trade-off relations for approximate joint measurements.

Modules
-------
core
    Observables, states and their statistics (means, spreads, commutator term).
joint
    Approximate joint measurements, rms errors, POVMs and their Neumark
    extensions, weak-value optimal outputs.
relations
    Preparation and error-trade-off inequalities, boundary curves.
geometry
    Real-vector lemmas behind the bounds and their saturation witness.
constructions
    Strategies that saturate the tight bounds.
sweep, cli
    Seeded randomized verification and the command-line front end.
"""

from __future__ import annotations

from . import constructions, core, geometry, joint, relations, tolerances
from .core import StateStatistics, state_statistics
from .joint import ApproxJointMeasurement, ErrorPair, Povm, neumark_extend, optimal_outputs, rms_error
from .relations import RelationReport, TradeoffCurve, boundary_curve, evaluate, ozawa_implied_check

__version__ = "0.1.0"

__all__ = [
    "ApproxJointMeasurement",
    "ErrorPair",
    "Povm",
    "RelationReport",
    "StateStatistics",
    "TradeoffCurve",
    "boundary_curve",
    "constructions",
    "core",
    "evaluate",
    "geometry",
    "joint",
    "neumark_extend",
    "optimal_outputs",
    "ozawa_implied_check",
    "relations",
    "rms_error",
    "state_statistics",
    "tolerances",
]
