"""Dense finite-dimensional linear algebra and single-state statistics.

Kets are 1-D complex arrays and observables are 2-D complex arrays.  The
``as_ket`` / ``as_hermitian`` validators convert array-likes and reject
inputs that break the invariants instead of silently repairing them.
Product spaces are ordered system-major, ancilla-minor, i.e. ``np.kron``
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tolerances


class DimensionError(ValueError):
    """Operands live on spaces of different dimension."""


class NotHermitianError(ValueError):
    pass


class NotNormalizedError(ValueError):
    pass


class DegenerateStatisticsError(ValueError):
    """A standard deviation vanishes where a normalization needs it."""


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

KET_PLUS_Z = np.array([1, 0], dtype=complex)
KET_MINUS_Z = np.array([0, 1], dtype=complex)
KET_PLUS_X = np.array([1, 1], dtype=complex) / math.sqrt(2)


def as_ket(amplitudes, *, min_dim: int = 1) -> np.ndarray:
    """Validate a normalized state vector and return it as a complex array."""
    ket = np.asarray(amplitudes, dtype=complex)
    if ket.ndim != 1:
        raise DimensionError(f"a ket must be one-dimensional, got shape {ket.shape}")
    if ket.size < min_dim:
        raise DimensionError(f"a ket needs dimension >= {min_dim}, got {ket.size}")
    norm = np.linalg.norm(ket)
    if not abs(norm - 1.0) <= tolerances.get().norm:  # also rejects nan / inf
        raise NotNormalizedError(f"ket norm is {norm!r}, expected 1")
    return ket


def as_hermitian(entries) -> np.ndarray:
    """Validate a square Hermitian matrix and return it as a complex array."""
    op = np.asarray(entries, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"an observable must be a square matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise NotHermitianError("matrix has non-finite entries")
    residual = np.max(np.abs(op - op.conj().T)) if op.size else 0.0
    if residual > tolerances.get().herm:
        raise NotHermitianError(f"matrix deviates from its adjoint by {residual:.3g}")
    return op


def normalize(vector) -> np.ndarray:
    vector = np.asarray(vector, dtype=complex)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return vector / norm


def is_unitary(matrix, atol: float | None = None) -> bool:
    matrix = np.asarray(matrix, dtype=complex)
    atol = tolerances.get().num if atol is None else atol
    eye = np.eye(matrix.shape[0])
    return bool(np.allclose(matrix.conj().T @ matrix, eye, atol=atol, rtol=0))


def _check_dims(op: np.ndarray, state: np.ndarray) -> None:
    if op.shape[0] != state.shape[0]:
        raise DimensionError(f"operator of dimension {op.shape[0]} applied to a ket of dimension {state.shape[0]}")


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > tolerances.get().num * max(1.0, abs(value.real)):
        raise NotHermitianError(f"{what} has imaginary part {value.imag:.3g}")
    return float(value.real)


def expectation(op, state) -> float:
    """Return ``<state|op|state>`` for a Hermitian ``op``."""
    op = as_hermitian(op)
    state = as_ket(state)
    _check_dims(op, state)
    return _real_part(np.vdot(state, op @ state), "expectation value")


def second_moment(op, state) -> float:
    op = as_hermitian(op)
    state = as_ket(state)
    _check_dims(op, state)
    image = op @ state
    return float(np.vdot(image, image).real)


def std_dev(op, state) -> float:
    """Standard deviation of ``op`` in ``state``.

    Computed as the norm of ``(op - <op>) |state>``, which is never negative
    and does not suffer from cancellation in ``<op^2> - <op>^2``.
    """
    op = as_hermitian(op)
    state = as_ket(state)
    _check_dims(op, state)
    mean = expectation(op, state)
    return float(np.linalg.norm(op @ state - mean * state))


def commutator_value(a, b, state) -> float:
    """Return ``<state|[a, b]|state> / 2i``, which is real for Hermitian ``a``, ``b``."""
    a = as_hermitian(a)
    b = as_hermitian(b)
    state = as_ket(state)
    if a.shape != b.shape:
        raise DimensionError(f"observables have shapes {a.shape} and {b.shape}")
    _check_dims(a, state)
    # <[a,b]> = 2i Im <a psi | b psi>
    return float(np.vdot(a @ state, b @ state).imag)


def normalized_observable(op, state) -> np.ndarray:
    """Return ``(op - <op>) / std_dev``: zero mean and unit second moment in ``state``."""
    op = as_hermitian(op)
    spread = std_dev(op, state)
    if spread <= tolerances.get().deg:
        raise DegenerateStatisticsError(f"standard deviation {spread:.3g} is too small to normalize")
    mean = expectation(op, state)
    return (op - mean * np.eye(op.shape[0])) / spread


def tensor_extend(op, ancilla_dim: int) -> np.ndarray:
    """Embed ``op`` as ``op (x) identity`` on system (x) ancilla."""
    if ancilla_dim < 1:
        raise ValueError(f"ancilla_dim must be >= 1, got {ancilla_dim}")
    op = np.asarray(op, dtype=complex)
    return np.kron(op, np.eye(ancilla_dim, dtype=complex))


def product_state(system, ancilla) -> np.ndarray:
    return np.kron(as_ket(system), as_ket(ancilla))


@dataclass(frozen=True)
class StateStatistics:
    """Means, spreads and commutator value of a pair of observables in one state.

    ``corr_a0b0`` is ``<A0 B0>`` with ``A0 = (A - <A>)/dA``; it is ``nan``
    when either spread vanishes.
    """

    mean_a: float
    mean_b: float
    delta_a: float
    delta_b: float
    c_ab: float
    corr_a0b0: complex

    @property
    def degenerate(self) -> bool:
        deg = tolerances.get().deg
        return self.delta_a <= deg or self.delta_b <= deg

    @property
    def c_tilde(self) -> float:
        if self.degenerate:
            raise DegenerateStatisticsError("normalized commutator undefined when a spread vanishes")
        # clip rounding overshoot beyond the Robertson bound
        return float(np.clip(self.c_ab / (self.delta_a * self.delta_b), -1.0, 1.0))


def state_statistics(a, b, state) -> StateStatistics:
    a = as_hermitian(a)
    b = as_hermitian(b)
    state = as_ket(state)
    if a.shape != b.shape:
        raise DimensionError(f"observables have shapes {a.shape} and {b.shape}")
    _check_dims(a, state)
    mean_a = expectation(a, state)
    mean_b = expectation(b, state)
    shifted_a = a @ state - mean_a * state
    shifted_b = b @ state - mean_b * state
    delta_a = float(np.linalg.norm(shifted_a))
    delta_b = float(np.linalg.norm(shifted_b))
    overlap = complex(np.vdot(shifted_a, shifted_b))
    deg = tolerances.get().deg
    if delta_a > deg and delta_b > deg:
        corr = overlap / (delta_a * delta_b)
    else:
        corr = complex(math.nan, math.nan)
    return StateStatistics(
        mean_a=mean_a,
        mean_b=mean_b,
        delta_a=delta_a,
        delta_b=delta_b,
        c_ab=float(overlap.imag),
        corr_a0b0=corr,
    )


def bloch_vector(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def pauli_dot(vector) -> np.ndarray:
    """Return ``v . sigma`` for a real 3-vector ``v``."""
    vx, vy, vz = vector
    return vx * SIGMA_X + vy * SIGMA_Y + vz * SIGMA_Z


def equatorial_pauli(angle: float) -> np.ndarray:
    """``cos(angle) sigma_x + sin(angle) sigma_y``."""
    return math.cos(angle) * SIGMA_X + math.sin(angle) * SIGMA_Y


# Random sampling.  All generators take a numpy ``Generator`` so callers
# control reproducibility.


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
