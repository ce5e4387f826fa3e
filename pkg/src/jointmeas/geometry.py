"""Euclidean inequalities behind the trade-off bounds.

For unit vectors ``a``, ``b`` with ``chi = a . b`` and an orthogonal pair
``x``, ``y``, the distances of ``a`` to ``x`` and of ``b`` to ``y`` cannot
both be small.  Three variants are provided:

* lemma 1: ``x``, ``y`` arbitrary orthogonal vectors, distances ``|a-x|``, ``|b-y|``;
* lemma 2: ``x``, ``y`` orthonormal, "distances" ``sqrt(1-(a.x)^2)``, ``sqrt(1-(b.y)^2)``;
* lemma 3: mixed, ``x`` arbitrary and ``y`` a unit vector.

Each ``lemmaN_slack`` returns ``lhs - chi^2``, which is never negative.
Batched versions act on stacks of shape ``(n, dim)`` for fuzzing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import tolerances
from .core import as_ket


class PreconditionError(ValueError):
    pass


def embed(ket, convention: Literal["a_type", "b_type"] = "a_type") -> np.ndarray:
    """Real embedding of a complex vector.

    ``a_type`` stacks ``(Re, Im)``; ``b_type`` stacks ``(Im, -Re)``, so that
    ``embed(u, "a_type") . embed(v, "b_type") == Im <u|v>``.
    """
    ket = np.asarray(ket, dtype=complex)
    if convention == "a_type":
        return np.concatenate([ket.real, ket.imag])
    if convention == "b_type":
        return np.concatenate([ket.imag, -ket.real])
    raise ValueError(f"unknown convention {convention!r}")


def _trade(u, v, chi):
    return u**2 + v**2 + 2.0 * np.sqrt(np.maximum(1.0 - chi**2, 0.0)) * u * v - chi**2


def _perp(vector, direction):
    """``sqrt(1 - (vector . direction)^2)`` for unit ``vector`` and ``direction``."""
    return np.sqrt(np.maximum(1.0 - np.sum(vector * direction, axis=-1) ** 2, 0.0))


def _unit_orthogonal_to(vector: np.ndarray) -> np.ndarray:
    """First canonical direction made orthogonal to ``vector``, normalized."""
    norm = np.linalg.norm(vector)
    for axis in range(vector.size):
        e = np.zeros(vector.size)
        e[axis] = 1.0
        if norm > 0:
            e = e - (vector @ e) / norm**2 * vector
        if np.linalg.norm(e) > 0.5:
            return e / np.linalg.norm(e)
    raise ValueError("no orthogonal direction in dimension 1")


@dataclass(frozen=True, eq=False)
class LemmaInstance:
    """Four real vectors: unit ``a_hat``, ``b_hat`` and the orthogonal pair ``x_vec``, ``y_vec``."""

    a_hat: np.ndarray
    b_hat: np.ndarray
    x_vec: np.ndarray
    y_vec: np.ndarray

    def __post_init__(self):
        vecs = [np.asarray(v, dtype=float) for v in (self.a_hat, self.b_hat, self.x_vec, self.y_vec)]
        dims = {v.shape for v in vecs}
        if len(dims) != 1 or vecs[0].ndim != 1:
            raise PreconditionError(f"all four vectors need the same 1-D shape, got {sorted(dims)}")
        for name, v in zip(("a_hat", "b_hat", "x_vec", "y_vec"), vecs):
            object.__setattr__(self, name, v)

    @property
    def dim(self) -> int:
        return self.a_hat.size

    @property
    def chi(self) -> float:
        return float(self.a_hat @ self.b_hat)

    @property
    def x_dir(self) -> np.ndarray:
        """``x_vec`` normalized; any unit vector orthogonal to ``y_vec`` if ``x_vec`` vanishes."""
        norm = np.linalg.norm(self.x_vec)
        return self.x_vec / norm if norm > 0 else _unit_orthogonal_to(self.y_vec)

    @property
    def y_dir(self) -> np.ndarray:
        norm = np.linalg.norm(self.y_vec)
        return self.y_vec / norm if norm > 0 else _unit_orthogonal_to(self.x_dir)

    @property
    def a_perp(self) -> float:
        return float(_perp(self.a_hat, self.x_dir))

    @property
    def b_perp(self) -> float:
        return float(_perp(self.b_hat, self.y_dir))

    @property
    def dist_a(self) -> float:
        return float(np.linalg.norm(self.a_hat - self.x_vec))

    @property
    def dist_b(self) -> float:
        return float(np.linalg.norm(self.b_hat - self.y_vec))


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise PreconditionError(message)


def _check_common(inst: LemmaInstance) -> None:
    tol = tolerances.get().num
    _require(abs(np.linalg.norm(inst.a_hat) - 1) <= tol, "a_hat is not a unit vector")
    _require(abs(np.linalg.norm(inst.b_hat) - 1) <= tol, "b_hat is not a unit vector")
    _require(abs(inst.x_vec @ inst.y_vec) <= tol, "x_vec and y_vec are not orthogonal")


def lemma1_slack(inst: LemmaInstance) -> float:
    _check_common(inst)
    return float(_trade(inst.dist_a, inst.dist_b, inst.chi))


def lemma2_slack(inst: LemmaInstance) -> float:
    _check_common(inst)
    tol = tolerances.get().num
    _require(abs(np.linalg.norm(inst.x_vec) - 1) <= tol, "x_vec is not a unit vector")
    _require(abs(np.linalg.norm(inst.y_vec) - 1) <= tol, "y_vec is not a unit vector")
    return float(_trade(inst.a_perp, inst.b_perp, inst.chi))


def lemma3_slack(inst: LemmaInstance) -> float:
    _check_common(inst)
    _require(abs(np.linalg.norm(inst.y_vec) - 1) <= tolerances.get().num, "y_vec is not a unit vector")
    return float(_trade(inst.dist_a, inst.b_perp, inst.chi))


LEMMAS = {1: lemma1_slack, 2: lemma2_slack, 3: lemma3_slack}


@dataclass(frozen=True)
class SaturationDiagnosis:
    lemma_id: int
    slack: float
    coplanar: bool
    singular_values: tuple[float, ...]
    x_is_projection: bool | None  # lemmas 1 and 3
    y_is_projection: bool | None  # lemma 1 only

    @property
    def consistent(self) -> bool:
        """Coplanarity, plus the projection conditions the lemma needs, all hold."""
        return self.coplanar and self.x_is_projection is not False and self.y_is_projection is not False


def _is_projection(vec: np.ndarray, target: np.ndarray, direction: np.ndarray, tol: float) -> bool:
    return bool(np.linalg.norm(vec - (target @ direction) * direction) <= tol)


def saturation_witness(inst: LemmaInstance, lemma_id: int) -> SaturationDiagnosis:
    """Check the geometric conditions that equality in a lemma requires.

    Equality forces the four vectors into a common plane (rank of their
    Gram matrix at most 2); for lemmas 1 and 3 it also forces ``x_vec`` to
    be the orthogonal projection of ``a_hat`` onto its own direction, and
    for lemma 1 likewise ``y_vec`` for ``b_hat``.
    """
    if lemma_id not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma_id!r}")
    tol = tolerances.get()
    slack = LEMMAS[lemma_id](inst)
    stacked = np.vstack([inst.a_hat, inst.b_hat, inst.x_vec, inst.y_vec])
    sv = np.linalg.svd(stacked, compute_uv=False)
    coplanar = bool(np.all(sv[2:] <= tol.rank))
    x_proj = _is_projection(inst.x_vec, inst.a_hat, inst.x_dir, tol.rank) if lemma_id in (1, 3) else None
    y_proj = _is_projection(inst.y_vec, inst.b_hat, inst.y_dir, tol.rank) if lemma_id == 1 else None
    return SaturationDiagnosis(lemma_id, slack, coplanar, tuple(float(s) for s in sv), x_proj, y_proj)


# Vectorized forms: rows are independent instances, no precondition checks.


def lemma1_slack_batch(a, b, x, y) -> np.ndarray:
    chi = np.sum(a * b, axis=-1)
    return _trade(np.linalg.norm(a - x, axis=-1), np.linalg.norm(b - y, axis=-1), chi)


def lemma2_slack_batch(a, b, x, y) -> np.ndarray:
    chi = np.sum(a * b, axis=-1)
    return _trade(_perp(a, x), _perp(b, y), chi)


def lemma3_slack_batch(a, b, x, y) -> np.ndarray:
    chi = np.sum(a * b, axis=-1)
    return _trade(np.linalg.norm(a - x, axis=-1), _perp(b, y), chi)


BATCH_LEMMAS = {1: lemma1_slack_batch, 2: lemma2_slack_batch, 3: lemma3_slack_batch}


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_lemma_batch(lemma_id: int, n: int, dim: int, rng: np.random.Generator):
    """Random ``(a, b, x, y)`` stacks satisfying the lemma's hypotheses.

    ``a``, ``b`` are uniform on the sphere.  ``x`` is uniform in direction
    with a length spread over ``[0, 2)`` for lemmas 1 and 3 (unit for
    lemma 2); ``y`` is a random direction orthogonal to ``x`` with length
    in ``[0, 2)`` for lemma 1 (unit otherwise).
    """
    if dim < 2:
        raise ValueError("orthogonal pairs need dimension >= 2")
    a = _unit_rows(rng, n, dim)
    b = _unit_rows(rng, n, dim)
    x_dir = _unit_rows(rng, n, dim)
    y_raw = rng.standard_normal((n, dim))
    for _ in range(2):  # a second pass restores orthogonality lost to cancellation
        y_raw -= np.sum(y_raw * x_dir, axis=1, keepdims=True) * x_dir
    y_dir = y_raw / np.linalg.norm(y_raw, axis=1, keepdims=True)
    if lemma_id == 2:
        return a, b, x_dir, y_dir
    x = x_dir * rng.uniform(0.0, 2.0, (n, 1))
    if lemma_id == 3:
        return a, b, x, y_dir
    if lemma_id == 1:
        return a, b, x, y_dir * rng.uniform(0.0, 2.0, (n, 1))
    raise ValueError(f"unknown lemma {lemma_id!r}")


def planar_instance(phi_a: float, phi_b: float, varphi: float, lemma_id: int = 1, dim: int = 2) -> LemmaInstance:
    """Coplanar instance that makes the lemma an equality.

    ``a`` and ``b`` sit at angles ``phi_a`` and ``phi_b`` in the plane of the
    first two axes, ``b`` rotated back by a quarter turn; the axis of ``x``
    is at ``varphi`` and ``y`` is perpendicular to it, with
    ``phi_a <= varphi <= phi_b`` and ``phi_b - phi_a <= pi/2``, so that
    ``a . b = sin(phi_b - phi_a)``.  For lemma 1 and 3 ``x`` is the projection
    of ``a`` onto its axis (distance ``sin(varphi - phi_a)``); for lemma 2
    it is the unit axis vector itself (distance ``2 sin((varphi - phi_a)/2)``).
    """

    def unit(angle):
        v = np.zeros(dim)
        v[0], v[1] = np.cos(angle), np.sin(angle)
        return v

    a = unit(phi_a)
    # b and the y axis sit a quarter turn back so that a . b = sin(phi_b - phi_a)
    b = unit(phi_b - np.pi / 2)
    x_hat = unit(varphi)
    y_hat = unit(varphi - np.pi / 2)
    x = (a @ x_hat) * x_hat if lemma_id in (1, 3) else x_hat
    y = (b @ y_hat) * y_hat if lemma_id == 1 else y_hat
    return LemmaInstance(a, b, x, y)


def vectors_from_measurement(a_op, b_op, approx_a, approx_b, joint_state):
    """The four real vectors built from observables, approximations and the joint state.

    Returns ``(a_hat, b_hat, x_vec, y_vec)`` with the ``a_type`` embedding for
    ``a``, ``x`` and ``b_type`` for ``b``, ``y``.  ``a_op`` and ``b_op`` must
    already act on the joint space.
    """
    psi = as_ket(joint_state)
    mean_a = np.vdot(psi, a_op @ psi).real
    mean_b = np.vdot(psi, b_op @ psi).real
    da = np.linalg.norm(a_op @ psi - mean_a * psi)
    db = np.linalg.norm(b_op @ psi - mean_b * psi)
    ket_a = (a_op @ psi - mean_a * psi) / da
    ket_b = (b_op @ psi - mean_b * psi) / db
    ket_x = (approx_a @ psi - mean_a * psi) / da
    ket_y = (approx_b @ psi - mean_b * psi) / db
    return (
        embed(ket_a, "a_type"),
        embed(ket_b, "b_type"),
        embed(ket_x, "a_type"),
        embed(ket_y, "b_type"),
    )
