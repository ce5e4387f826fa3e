"""Evaluation of uncertainty, error-trade-off and error-disturbance relations.

Each ``eval_*`` function returns a :class:`RelationReport` holding both
sides of an inequality ``lhs >= rhs`` and the slack ``lhs - rhs``.  The
scalar ``*_lhs`` helpers take plain numbers so that curves and vectorized
sweeps can reuse exactly the same formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import tolerances
from .core import DegenerateStatisticsError, StateStatistics
from .joint import ErrorPair

RELATION_IDS = (
    "robertson",
    "hak",
    "ozawa_joint",
    "ozawa_ed",
    "branciard",
    "branciard_dimless",
    "same_spectrum",
    "b_only_spectrum",
)

# Relations that hold for every strategy; "hak" is the odd one out.
UNIVERSAL = frozenset(RELATION_IDS) - {"hak"}


class RegimeError(ValueError):
    """Inputs fall outside the regime a relation was derived for."""


@dataclass(frozen=True)
class RelationReport:
    relation_id: str
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    saturated: bool
    universal: bool = True
    notes: dict = field(default_factory=dict)

    @classmethod
    def build(cls, relation_id: str, lhs: float, rhs: float, **notes) -> "RelationReport":
        tol = tolerances.get()
        slack = float(lhs - rhs)
        satisfied = slack >= -tol.num
        return cls(
            relation_id=relation_id,
            lhs=float(lhs),
            rhs=float(rhs),
            slack=slack,
            satisfied=satisfied,
            saturated=satisfied and abs(slack) <= tol.sat,
            universal=relation_id in UNIVERSAL,
            notes=notes,
        )


def _sqrt_clip(x):
    return np.sqrt(np.maximum(x, 0.0))


def squeezed(eps):
    """``eps * sqrt(1 - eps^2/4)``: the distance-to-sine map for +-1 valued observables."""
    return eps * _sqrt_clip(1.0 - np.square(eps) / 4.0)


# Plain-number forms of each left-hand side.  They broadcast over numpy arrays.


def branciard_lhs(eps_a, eps_b, delta_a, delta_b, c_ab):
    cross = _sqrt_clip(np.square(delta_a * delta_b) - np.square(c_ab))
    return (
        np.square(delta_b * eps_a) + np.square(delta_a * eps_b) + 2.0 * cross * eps_a * eps_b
    )


def branciard_dimless_lhs(eps_a_tilde, eps_b_tilde, c_tilde):
    cross = _sqrt_clip(1.0 - np.square(c_tilde))
    return np.square(eps_a_tilde) + np.square(eps_b_tilde) + 2.0 * cross * eps_a_tilde * eps_b_tilde


def same_spectrum_lhs(eps_a, eta_b, c_ab):
    return branciard_dimless_lhs(squeezed(eps_a), squeezed(eta_b), c_ab)


def b_only_lhs(eps_a_tilde, eta_b, c_tilde):
    return branciard_dimless_lhs(eps_a_tilde, squeezed(eta_b), c_tilde)


def ozawa_lhs(eps_a, eps_b, delta_a, delta_b, drop_product=False):
    linear = delta_b * eps_a + delta_a * eps_b
    return linear if drop_product else eps_a * eps_b + linear


def eval_robertson(stats: StateStatistics) -> RelationReport:
    return RelationReport.build("robertson", stats.delta_a * stats.delta_b, abs(stats.c_ab))


def eval_hak(errors: ErrorPair, stats: StateStatistics) -> RelationReport:
    """Heisenberg-Arthurs-Kelly product bound; not valid for every strategy."""
    return RelationReport.build("hak", errors.eps_a * errors.eps_b, abs(stats.c_ab), not_universal=True)


def eval_ozawa(
    errors: ErrorPair,
    stats: StateStatistics,
    mode: Literal["joint", "error_disturbance"] = "joint",
    drop_product: bool = False,
) -> RelationReport:
    """Ozawa's relation; ``mode`` only changes the reading of ``eps_b`` (error vs. disturbance)."""
    if mode not in ("joint", "error_disturbance"):
        raise ValueError(f"unknown Ozawa mode {mode!r}")
    relation_id = "ozawa_joint" if mode == "joint" else "ozawa_ed"
    lhs = ozawa_lhs(errors.eps_a, errors.eps_b, stats.delta_a, stats.delta_b, drop_product)
    return RelationReport.build(relation_id, lhs, abs(stats.c_ab), drop_product=drop_product)


def eval_branciard(errors: ErrorPair, stats: StateStatistics, dimensionless: bool = False) -> RelationReport:
    if not dimensionless:
        lhs = branciard_lhs(errors.eps_a, errors.eps_b, stats.delta_a, stats.delta_b, stats.c_ab)
        return RelationReport.build("branciard", lhs, stats.c_ab**2)
    if stats.degenerate:
        raise DegenerateStatisticsError("dimensionless form needs both spreads nonzero")
    c = stats.c_tilde
    lhs = branciard_dimless_lhs(errors.eps_a_tilde, errors.eps_b_tilde, c)
    return RelationReport.build("branciard_dimless", lhs, c**2)


def _check_dichotomic_range(**values: float) -> None:
    slack = tolerances.get().num
    for name, value in values.items():
        if not -slack <= value <= 2.0 + slack:
            raise RegimeError(f"{name} = {value!r} outside [0, 2]; not a +-1 valued approximation")


def _regime_notes(stats: StateStatistics, **flags) -> dict:
    tol = tolerances.get().num
    return {
        "zero_means": abs(stats.mean_a) <= tol and abs(stats.mean_b) <= tol,
        "unit_spreads": abs(stats.delta_a - 1) <= tol and abs(stats.delta_b - 1) <= tol,
        **flags,
    }


def eval_same_spectrum(
    errors: ErrorPair, stats: StateStatistics, regime_verified: bool = False
) -> RelationReport:
    """Error-disturbance bound for +-1 valued ``A``, ``B`` and approximations, zero means.

    ``errors.eps_b`` is read as the disturbance.  ``regime_verified`` records
    that the caller checked ``A^2 = B^2 = approx^2 = 1``; the statistics
    alone cannot.
    """
    _check_dichotomic_range(eps_a=errors.eps_a, eta_b=errors.eps_b)
    lhs = same_spectrum_lhs(errors.eps_a, errors.eps_b, stats.c_ab)
    return RelationReport.build(
        "same_spectrum", lhs, stats.c_ab**2, **_regime_notes(stats, regime_verified=regime_verified)
    )


def eval_b_only(errors: ErrorPair, stats: StateStatistics, regime_verified: bool = False) -> RelationReport:
    """Variant where only the ``B`` approximation keeps the spectrum of ``B``."""
    _check_dichotomic_range(eta_b=errors.eps_b)
    if stats.degenerate:
        raise DegenerateStatisticsError("needs both spreads nonzero")
    c = stats.c_tilde
    lhs = b_only_lhs(errors.eps_a_tilde, errors.eps_b, c)
    return RelationReport.build("b_only_spectrum", lhs, c**2, regime_verified=regime_verified)


def evaluate(relation_id: str, errors: ErrorPair, stats: StateStatistics) -> RelationReport:
    """Dispatch on a relation id."""
    if relation_id == "robertson":
        return eval_robertson(stats)
    if relation_id == "hak":
        return eval_hak(errors, stats)
    if relation_id == "ozawa_joint":
        return eval_ozawa(errors, stats, "joint")
    if relation_id == "ozawa_ed":
        return eval_ozawa(errors, stats, "error_disturbance")
    if relation_id == "branciard":
        return eval_branciard(errors, stats)
    if relation_id == "branciard_dimless":
        return eval_branciard(errors, stats, dimensionless=True)
    if relation_id == "same_spectrum":
        return eval_same_spectrum(errors, stats)
    if relation_id == "b_only_spectrum":
        return eval_b_only(errors, stats)
    raise ValueError(f"unknown relation {relation_id!r}; choose from {RELATION_IDS}")


def ozawa_chain(errors: ErrorPair, stats: StateStatistics) -> tuple[float, float, float, float]:
    """The four quantities whose ordering derives Ozawa's bound from the tight one.

    ``(eps eps' + dB eps + dA eps')^2 >= (dB eps + dA eps')^2 >= tight lhs >= C^2``.
    """
    ea, eb, da, db = errors.eps_a, errors.eps_b, stats.delta_a, stats.delta_b
    return (
        float(ozawa_lhs(ea, eb, da, db) ** 2),
        float(ozawa_lhs(ea, eb, da, db, drop_product=True) ** 2),
        float(branciard_lhs(ea, eb, da, db, stats.c_ab)),
        float(stats.c_ab**2),
    )


def ozawa_implied_check(errors: ErrorPair, stats: StateStatistics) -> bool:
    tol = tolerances.get().num
    links = ozawa_chain(errors, stats)
    return all(upper - lower >= -tol for upper, lower in zip(links, links[1:]))


# Boundary curves


@dataclass(frozen=True)
class TradeoffCurve:
    relation_id: str
    c_tilde: float
    branch: str
    points: tuple[tuple[float, float, float], ...]  # (parameter, eps_a_tilde, eps_b_tilde)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def eps_a(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def eps_b(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    def slacks(self) -> np.ndarray:
        return curve_slack(self.relation_id, self.eps_a, self.eps_b, self.c_tilde)


def curve_slack(relation_id: str, eps_a, eps_b, c_tilde):
    """Slack of normalized error pairs against a dimensionless relation."""
    if relation_id in ("branciard", "branciard_dimless"):
        lhs = branciard_dimless_lhs(eps_a, eps_b, c_tilde)
    elif relation_id == "same_spectrum":
        lhs = same_spectrum_lhs(eps_a, eps_b, c_tilde)
    elif relation_id == "b_only_spectrum":
        lhs = b_only_lhs(eps_a, eps_b, c_tilde)
    else:
        raise ValueError(f"no boundary curve for relation {relation_id!r}")
    return lhs - c_tilde**2


CURVE_BRANCHES = {
    "branciard": ("lower",),
    "branciard_dimless": ("lower",),
    "same_spectrum": ("lower", "upper", "contour"),
    "b_only_spectrum": ("lower", "upper"),
}


def default_branch(relation_id: str) -> str:
    return "contour" if relation_id == "same_spectrum" else "lower"


def _arc(kind_a: str, kind_b: str, phi: float, u: np.ndarray):
    """Map a split ``u + (phi - u) = phi`` to error coordinates.

    ``sin``: the sine itself; ``chord``: ``2 sin(x/2)``; ``cochord``:
    ``2 cos(x/2)``, the sign-flipped counterpart of ``chord``.
    """
    maps = {
        "sin": np.sin,
        "chord": lambda x: 2.0 * np.sin(x / 2.0),
        "cochord": lambda x: 2.0 * np.cos(x / 2.0),
    }
    return maps[kind_a](u), maps[kind_b](phi - u)


def boundary_curve(relation_id: str, c_tilde: float, n_points: int, branch: str | None = None) -> TradeoffCurve:
    """Points saturating a dimensionless relation, at uniform parameter spacing.

    With ``sin(phi) = |c_tilde|`` and ``u`` running over ``[0, phi]``:

    * tight joint bound, lower: ``(sin u, sin(phi - u))``
    * same-spectrum, lower: ``(2 sin(u/2), 2 sin((phi-u)/2))``; upper:
      ``(2 cos(u/2), 2 cos((phi-u)/2))``; contour: the four arcs of the
      allowed region's boundary traversed in order
    * B-only spectrum, lower: ``(sin u, 2 sin((phi-u)/2))``; upper:
      ``(sin u, 2 cos((phi-u)/2))``

    For ``c_tilde = 0`` every arc collapses to a single point.
    """
    if not -1.0 <= c_tilde <= 1.0:
        raise ValueError(f"c_tilde must lie in [-1, 1], got {c_tilde!r}")
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    branch = default_branch(relation_id) if branch is None else branch
    if branch not in CURVE_BRANCHES.get(relation_id, ()):
        raise ValueError(f"unsupported branch {branch!r} for relation {relation_id!r}")

    phi = math.asin(abs(c_tilde))
    u = np.linspace(0.0, phi, n_points)
    if relation_id in ("branciard", "branciard_dimless"):
        arcs = [("sin", "sin", False)]
    elif relation_id == "b_only_spectrum":
        arcs = [("sin", "chord" if branch == "lower" else "cochord", False)]
    elif branch == "lower":
        arcs = [("chord", "chord", False)]
    elif branch == "upper":
        arcs = [("cochord", "cochord", False)]
    else:
        # arcs cutting the corners (0,0), (2,0), (2,2), (0,2) in turn; the
        # straight stretches between them lie on the edges of [0,2]^2
        arcs = [
            ("chord", "chord", False),
            ("cochord", "chord", True),
            ("cochord", "cochord", False),
            ("chord", "cochord", True),
        ]

    points: list[tuple[float, float, float]] = []
    for kind_a, kind_b, reverse in arcs:
        params = u[::-1] if reverse else u
        xa, xb = _arc(kind_a, kind_b, phi, params)
        for t, ea, eb in zip(params, xa, xb):
            point = (float(t), float(ea), float(eb))
            if points and points[-1][1:] == point[1:]:
                continue
            points.append(point)
    if branch == "contour" and points[-1][1:] != points[0][1:]:
        points.append(points[0])
    return TradeoffCurve(relation_id, float(c_tilde), branch, tuple(points))
