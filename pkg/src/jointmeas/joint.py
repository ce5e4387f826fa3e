"""Approximate joint measurements and their rms errors.

A joint measurement is a projective measurement onto an orthonormal basis
``{|m>}`` of system (x) ancilla, together with two real output functions
``f(m)`` and ``g(m)`` estimating ``A`` and ``B``.  Equivalently, the two
commuting observables ``sum_m f(m)|m><m|`` and ``sum_m g(m)|m><m|``.  The
same errors can be computed from the POVM induced on the system, which is
how :func:`povm_rms_error` and :func:`neumark_extend` tie the two pictures
together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances
from .core import (
    DimensionError,
    StateStatistics,
    as_hermitian,
    as_ket,
    state_statistics,
    tensor_extend,
)


class InvalidPovmError(ValueError):
    pass


class NeumarkError(ArithmeticError):
    """The numerical dilation does not reproduce the POVM."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


def as_basis(basis) -> np.ndarray:
    """Return the basis as a square matrix whose columns are the basis kets.

    Accepts either such a matrix or a sequence of 1-D kets.
    """
    if isinstance(basis, (list, tuple)):
        matrix = np.column_stack([np.asarray(k, dtype=complex) for k in basis])
    else:
        matrix = np.asarray(basis, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"a complete basis needs a square matrix of kets, got shape {matrix.shape}")
    gram = matrix.conj().T @ matrix
    residual = float(np.max(np.abs(gram - np.eye(matrix.shape[0]))))
    if residual > tolerances.get().num:
        raise ValueError(f"basis is not orthonormal (Gram residual {residual:.3g})")
    return matrix


def _joint_operands(basis, ideal, joint_state):
    basis = as_basis(basis)
    ideal = as_hermitian(ideal)
    joint_state = as_ket(joint_state)
    total = basis.shape[0]
    if joint_state.size != total:
        raise DimensionError(f"joint state has dimension {joint_state.size}, basis spans {total}")
    if total % ideal.shape[0]:
        raise DimensionError(f"system dimension {ideal.shape[0]} does not divide joint dimension {total}")
    extended = tensor_extend(ideal, total // ideal.shape[0])
    return basis, extended, joint_state


@dataclass(frozen=True)
class ErrorPair:
    """rms errors of the two approximations, raw and divided by the spreads.

    The normalized errors are ``nan`` when the matching spread vanishes.
    """

    eps_a: float
    eps_b: float
    eps_a_tilde: float
    eps_b_tilde: float

    @classmethod
    def from_errors(cls, eps_a: float, eps_b: float, stats: StateStatistics) -> "ErrorPair":
        deg = tolerances.get().deg
        tilde_a = eps_a / stats.delta_a if stats.delta_a > deg else math.nan
        tilde_b = eps_b / stats.delta_b if stats.delta_b > deg else math.nan
        return cls(float(eps_a), float(eps_b), float(tilde_a), float(tilde_b))


@dataclass(frozen=True, eq=False)
class ApproxJointMeasurement:
    """Common eigenbasis plus output values for the two approximations.

    ``basis`` holds the kets ``|m>`` as columns on system (x) ancilla;
    ``ancilla`` is the ancilla state ``|xi>`` (``None`` means no ancilla).
    """

    basis: np.ndarray
    f_out: np.ndarray
    g_out: np.ndarray
    ancilla: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        basis = as_basis(self.basis)
        f_out = np.asarray(self.f_out, dtype=float)
        g_out = np.asarray(self.g_out, dtype=float)
        if f_out.shape != (basis.shape[0],) or g_out.shape != (basis.shape[0],):
            raise DimensionError(
                f"need one output per basis vector ({basis.shape[0]}), got {f_out.shape} and {g_out.shape}"
            )
        ancilla = None if self.ancilla is None else as_ket(self.ancilla)
        if ancilla is not None and basis.shape[0] % ancilla.size:
            raise DimensionError(f"ancilla dimension {ancilla.size} does not divide {basis.shape[0]}")
        for arr in (basis, f_out, g_out):
            arr.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "f_out", f_out)
        object.__setattr__(self, "g_out", g_out)
        object.__setattr__(self, "ancilla", ancilla)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ancilla_dim(self) -> int:
        return 1 if self.ancilla is None else self.ancilla.size

    @property
    def system_dim(self) -> int:
        return self.dim // self.ancilla_dim

    @property
    def approx_a(self) -> np.ndarray:
        return (self.basis * self.f_out) @ self.basis.conj().T

    @property
    def approx_b(self) -> np.ndarray:
        return (self.basis * self.g_out) @ self.basis.conj().T

    def joint_state(self, psi) -> np.ndarray:
        psi = as_ket(psi)
        if psi.size != self.system_dim:
            raise DimensionError(f"state has dimension {psi.size}, system has {self.system_dim}")
        return psi if self.ancilla is None else np.kron(psi, self.ancilla)

    def with_outputs(self, f_out=None, g_out=None, **notes) -> "ApproxJointMeasurement":
        return ApproxJointMeasurement(
            self.basis,
            self.f_out if f_out is None else f_out,
            self.g_out if g_out is None else g_out,
            self.ancilla,
            {**self.notes, **notes},
        )

    def errors(self, a, b, psi) -> ErrorPair:
        joint = self.joint_state(psi)
        eps_a = rms_error(self.approx_a, a, joint)
        eps_b = rms_error(self.approx_b, b, joint)
        return ErrorPair.from_errors(eps_a, eps_b, state_statistics(a, b, psi))


def rms_error(approx, ideal, joint_state) -> float:
    """rms error ``<(approx - ideal (x) 1)^2>^(1/2)`` in the joint state.

    ``approx`` acts on system (x) ancilla, ``ideal`` on the system alone.
    """
    approx = as_hermitian(approx)
    ideal = as_hermitian(ideal)
    joint_state = as_ket(joint_state)
    total = approx.shape[0]
    if joint_state.size != total or total % ideal.shape[0]:
        raise DimensionError(
            f"incompatible dimensions: approx {total}, ideal {ideal.shape[0]}, state {joint_state.size}"
        )
    deviation = (approx - tensor_extend(ideal, total // ideal.shape[0])) @ joint_state
    return float(np.linalg.norm(deviation))


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators on the system summing to the identity."""

    elements: np.ndarray
    outcome_labels: np.ndarray | None = None

    def __post_init__(self):
        elements = np.asarray(self.elements, dtype=complex)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise InvalidPovmError(f"elements must have shape (n, d, d), got {elements.shape}")
        tol = tolerances.get()
        for k, element in enumerate(elements):
            as_hermitian(element)
            lowest = np.linalg.eigvalsh(element)[0]
            if lowest < -tol.num:
                raise InvalidPovmError(f"element {k} has negative eigenvalue {lowest:.3g}")
        residual = float(np.max(np.abs(elements.sum(axis=0) - np.eye(elements.shape[1]))))
        if residual > tol.num:
            raise InvalidPovmError(f"elements do not sum to the identity (residual {residual:.3g})")
        labels = np.arange(len(elements), dtype=float) if self.outcome_labels is None else self.outcome_labels
        labels = np.asarray(labels, dtype=float)
        if labels.shape != (len(elements),):
            raise InvalidPovmError(f"need {len(elements)} outcome labels, got shape {labels.shape}")
        elements.flags.writeable = False
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "outcome_labels", labels)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @classmethod
    def projective(cls, observable) -> "Povm":
        """Spectral projectors of ``observable``, labelled by their eigenvalues."""
        observable = as_hermitian(observable)
        values, vectors = np.linalg.eigh(observable)
        labels = []
        projectors = []
        for value, vector in zip(values, vectors.T):
            if labels and abs(value - labels[-1]) <= tolerances.get().num:
                projectors[-1] = projectors[-1] + np.outer(vector, vector.conj())
            else:
                labels.append(value)
                projectors.append(np.outer(vector, vector.conj()))
        return cls(np.array(projectors), np.array(labels))

    def probabilities(self, state) -> np.ndarray:
        state = as_ket(state)
        return np.einsum("i,kij,j->k", state.conj(), self.elements, state).real


def povm_rms_error(povm: Povm, outputs, ideal, state) -> float:
    """rms error of estimating ``ideal`` by ``outputs[m]`` on outcome ``m``.

    Evaluates ``sum_m <psi|(A - f(m)) M_m (A - f(m))|psi>`` on the system
    space, with no reference to any dilation.
    """
    ideal = as_hermitian(ideal)
    state = as_ket(state)
    outputs = np.asarray(outputs, dtype=float)
    if outputs.shape != (len(povm),):
        raise DimensionError(f"need {len(povm)} outputs, got shape {outputs.shape}")
    if ideal.shape[0] != povm.dim or state.size != povm.dim:
        raise DimensionError("POVM, observable and state dimensions differ")
    a_psi = ideal @ state
    total = 0.0
    for element, value in zip(povm.elements, outputs):
        v = a_psi - value * state
        total += np.vdot(v, element @ v).real
    return math.sqrt(max(total, 0.0))


def povm_optimal_outputs(povm: Povm, ideal, state) -> np.ndarray:
    """``Re <M_m A> / <M_m>`` per outcome; 0 where the outcome has zero probability."""
    ideal = as_hermitian(ideal)
    state = as_ket(state)
    probs = povm.probabilities(state)
    cross = np.einsum("i,kij,j->k", state.conj(), povm.elements, ideal @ state)
    out = np.zeros(len(povm))
    support = probs > tolerances.get().p
    out[support] = (cross[support] / probs[support]).real
    return out


@dataclass(frozen=True, eq=False)
class NeumarkExtension:
    """Projective dilation of a POVM.

    ``basis`` columns are orthonormal kets on system (x) ancilla;
    ``outcome_index[j]`` names the POVM outcome basis vector ``j`` belongs
    to.  Basis vectors with no weight on the ancilla state carry the index
    of the last outcome; they never fire on ``|psi, xi>``.
    """

    povm: Povm
    basis: np.ndarray
    outcome_index: np.ndarray
    ancilla: np.ndarray
    residual: float

    @property
    def ancilla_dim(self) -> int:
        return self.ancilla.size

    def joint_state(self, psi) -> np.ndarray:
        return np.kron(as_ket(psi), self.ancilla)

    def measurement(self, f_outputs, g_outputs=None) -> ApproxJointMeasurement:
        """Joint measurement assigning ``f_outputs[m]`` / ``g_outputs[m]`` to each POVM outcome."""
        f_outputs = np.asarray(f_outputs, dtype=float)
        g_outputs = np.zeros(len(self.povm)) if g_outputs is None else np.asarray(g_outputs, dtype=float)
        return ApproxJointMeasurement(
            self.basis,
            f_outputs[self.outcome_index],
            g_outputs[self.outcome_index],
            self.ancilla,
        )

    def reconstructed_elements(self) -> np.ndarray:
        """``(1 (x) <xi|) P_m (1 (x) |xi>)`` summed over each outcome's basis vectors."""
        d = self.povm.dim
        k = self.ancilla_dim
        # rows of basis reshaped to (d, k): contract ancilla index with xi
        reduced = np.einsum("sak,a->sk", self.basis.reshape(d, k, -1), self.ancilla.conj())
        out = np.zeros((len(self.povm), d, d), dtype=complex)
        for j, m in enumerate(self.outcome_index):
            out[m] += np.outer(reduced[:, j], reduced[:, j].conj())
        return out


def _rank_one_pieces(povm: Povm):
    cutoff = tolerances.get().p
    vectors, owners = [], []
    for m, element in enumerate(povm.elements):
        values, vecs = np.linalg.eigh(element)
        for value, vec in zip(values, vecs.T):
            if value > cutoff:
                vectors.append(math.sqrt(value) * vec)
                owners.append(m)
    return np.array(vectors), np.array(owners, dtype=int)


def neumark_extend(povm: Povm, ancilla_dim: int | None = None) -> NeumarkExtension:
    """Dilate a POVM into a projective measurement on system (x) ancilla.

    Each element is split into rank-1 pieces ``|v_j><v_j|``.  The ``N``
    pieces give an isometry ``V = sum_j |j><v_j|``; its columns are placed
    on the ``|i, xi>`` coordinates of a ``d*k`` dimensional unitary whose
    remaining columns complete it.  The rows of that unitary are the
    dilated basis bras.  By default ``k = ceil(N / d)``, the smallest
    ancilla that fits; projective POVMs therefore need no ancilla (``k=1``).
    """
    d = povm.dim
    pieces, owners = _rank_one_pieces(povm)
    n_pieces = len(pieces)
    minimal = max(1, -(-n_pieces // d))
    k = minimal if ancilla_dim is None else int(ancilla_dim)
    if k < minimal:
        raise ValueError(f"ancilla_dim {k} too small for {n_pieces} rank-1 pieces in dimension {d}")
    total = d * k

    isometry = np.zeros((total, d), dtype=complex)
    isometry[:n_pieces] = pieces.conj()
    q, _ = np.linalg.qr(isometry, mode="complete")
    complement = q[:, d:]

    xi_cols = np.arange(d) * k  # ancilla index 0 is |xi>
    other_cols = np.setdiff1d(np.arange(total), xi_cols)
    unitary = np.empty((total, total), dtype=complex)
    unitary[:, xi_cols] = isometry
    unitary[:, other_cols] = complement
    basis = unitary.conj().T  # column j is |m_j> = (row j)^dagger

    outcome_index = np.full(total, len(povm) - 1, dtype=int)
    outcome_index[:n_pieces] = owners
    ancilla = np.zeros(k, dtype=complex)
    ancilla[0] = 1.0

    unitarity = float(np.max(np.abs(basis.conj().T @ basis - np.eye(total))))
    extension = NeumarkExtension(povm, basis, outcome_index, ancilla, residual=0.0)
    recon = float(np.max(np.abs(extension.reconstructed_elements() - povm.elements)))
    residual = max(unitarity, recon)
    if residual > tolerances.get().num:
        raise NeumarkError("dilation does not reproduce the POVM", residual)
    return NeumarkExtension(povm, basis, outcome_index, ancilla, residual=residual)


def outcome_probabilities(basis, joint_state) -> np.ndarray:
    basis = as_basis(basis)
    return np.abs(basis.conj().T @ as_ket(joint_state)) ** 2


def weak_values(basis, ideal, joint_state) -> np.ndarray:
    """``<m|A (x) 1|psi,xi> / <m|psi,xi>`` per basis vector, ``nan`` where ``p(m)`` vanishes."""
    basis, extended, joint_state = _joint_operands(basis, ideal, joint_state)
    amplitudes = basis.conj().T @ joint_state
    numerators = basis.conj().T @ (extended @ joint_state)
    out = np.full(basis.shape[0], complex(math.nan, math.nan))
    support = np.abs(amplitudes) ** 2 > tolerances.get().p
    out[support] = numerators[support] / amplitudes[support]
    return out


def optimal_outputs(basis, ideal, joint_state) -> np.ndarray:
    """rms-optimal estimates: real parts of the weak values.

    Zero-probability outcomes get 0; their value does not affect the error.
    """
    wv = weak_values(basis, ideal, joint_state)
    return np.where(np.isnan(wv), 0.0, wv.real)


def optimal_rms_error(basis, ideal, joint_state) -> float:
    """Minimal rms error over output functions for a fixed basis.

    Sum of ``p(m) (Im weak value)^2`` over outcomes that can occur, plus
    ``|<m|A (x) 1|psi,xi>|^2`` over those that cannot.
    """
    basis, extended, joint_state = _joint_operands(basis, ideal, joint_state)
    amplitudes = basis.conj().T @ joint_state
    numerators = basis.conj().T @ (extended @ joint_state)
    probs = np.abs(amplitudes) ** 2
    support = probs > tolerances.get().p
    # p (Im n/a)^2 == (Im n conj(a))^2 / p
    imag = (numerators[support] * amplitudes[support].conj()).imag
    total = np.sum(imag**2 / probs[support]) + np.sum(np.abs(numerators[~support]) ** 2)
    return math.sqrt(total)


def dichotomic_outputs(basis, ideal, joint_state) -> np.ndarray:
    """Best +-1 outputs for an involutory ``ideal``: the signs of the real weak values.

    Ties (real part within tolerance of 0, or zero-probability outcomes)
    resolve to +1.
    """
    ideal = as_hermitian(ideal)
    residual = float(np.max(np.abs(ideal @ ideal - np.eye(ideal.shape[0]))))
    if residual > tolerances.get().num:
        raise ValueError(f"ideal observable does not square to the identity (residual {residual:.3g})")
    wv = weak_values(basis, ideal, joint_state)
    re = np.where(np.isnan(wv), 0.0, wv.real)
    return np.where(re < -tolerances.get().num, -1.0, 1.0)


def with_optimal_outputs(basis, a, b, psi, ancilla=None) -> ApproxJointMeasurement:
    """Joint measurement on ``basis`` with weak-value outputs for both observables."""
    ancilla = None if ancilla is None else as_ket(ancilla)
    joint = as_ket(psi) if ancilla is None else np.kron(as_ket(psi), ancilla)
    return ApproxJointMeasurement(
        basis,
        optimal_outputs(basis, a, joint),
        optimal_outputs(basis, b, joint),
        ancilla,
    )
