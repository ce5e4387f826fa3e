"""Explicit measurement strategies that reach the trade-off bounds.

All general constructions measure the system directly, without an ancilla,
in a basis whose first two or three vectors span ``{psi, A psi, B psi}``;
the rest of the basis is completed deterministically.  Outputs are the
weak-value optimal ones unless the strategy is restricted to +-1 values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import tolerances
from .core import (
    KET_PLUS_Z,
    DegenerateStatisticsError,
    as_hermitian,
    as_ket,
    bloch_vector,
    equatorial_pauli,
    is_unitary,
    normalize,
    normalized_observable,
    pauli_dot,
    state_statistics,
    SIGMA_Z,
)
from .joint import (
    ApproxJointMeasurement,
    ErrorPair,
    dichotomic_outputs,
    optimal_outputs,
    rms_error,
)


class ConstructionError(ValueError):
    pass


def complete_basis(vectors, dim: int, avoid=()) -> np.ndarray:
    """Extend orthonormal ``vectors`` to a basis of ``C^dim``.

    The new vectors come from Gram-Schmidt on the canonical basis, in
    order, against ``vectors`` and ``avoid`` (which only needs to span the
    subspace to stay clear of).  ``avoid`` must lie in the span of
    ``vectors``; it only steers which canonical vectors get rejected early.
    Returns the basis as columns, ``vectors`` first.
    """
    columns = [np.asarray(v, dtype=complex) for v in vectors]
    span = list(columns)
    for extra in avoid:
        r = np.asarray(extra, dtype=complex)
        for s in span:
            r = r - np.vdot(s, r) * s
        if np.linalg.norm(r) > 1e-8:
            span.append(r / np.linalg.norm(r))
    if len(span) != len(columns):
        raise ConstructionError("vectors to avoid are not contained in the given span")
    for axis in range(dim):
        if len(columns) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[axis] = 1.0
        # twice for numerical orthogonality
        for _ in range(2):
            for s in columns:
                e = e - np.vdot(s, e) * s
        norm = np.linalg.norm(e)
        if norm > 1e-6:
            columns.append(e / norm)
    if len(columns) != dim:
        raise ConstructionError("could not complete the basis")
    return np.column_stack(columns)


def _orthogonality_residual(vectors) -> float:
    worst = 0.0
    for i, u in enumerate(vectors):
        for v in vectors[i + 1 :]:
            worst = max(worst, abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return worst


# Qubit examples


@dataclass(frozen=True)
class QubitPair:
    """Two +-1 valued qubit observables ``a.sigma``, ``b.sigma`` on the state ``|+z>``.

    Angles are the polar and azimuthal angles of the Bloch vectors, with
    ``0 <= phi_b - phi_a <= pi/2``.
    """

    theta_a: float
    phi_a: float
    theta_b: float
    phi_b: float

    @property
    def phi(self) -> float:
        return self.phi_b - self.phi_a

    @property
    def a_vec(self) -> np.ndarray:
        return bloch_vector(self.theta_a, self.phi_a)

    @property
    def b_vec(self) -> np.ndarray:
        return bloch_vector(self.theta_b, self.phi_b)

    @property
    def A(self) -> np.ndarray:
        return pauli_dot(self.a_vec)

    @property
    def B(self) -> np.ndarray:
        return pauli_dot(self.b_vec)

    @property
    def state(self) -> np.ndarray:
        return KET_PLUS_Z.copy()


def _qubit_estimator(m_vec: np.ndarray, cos_theta: float, target: np.ndarray, cos_target: float) -> np.ndarray:
    """Eigenvalues of ``[(cos t_a - cos t m.a) 1 + (m.a - cos t_a cos t) m.sigma] / sin^2 t``.

    Ordered as the (+1, -1) eigenvectors of ``m.sigma``.
    """
    sin2 = 1.0 - cos_theta**2
    m_dot = float(m_vec @ target)
    constant = (cos_target - cos_theta * m_dot) / sin2
    slope = (m_dot - cos_target * cos_theta) / sin2
    return np.array([constant + slope, constant - slope])


def _pauli_eigenbasis(m_vec: np.ndarray) -> np.ndarray:
    """Columns: eigenvectors of ``m.sigma`` for eigenvalues +1 then -1."""
    values, vectors = np.linalg.eigh(pauli_dot(m_vec))
    return vectors[:, np.argsort(values)[::-1]]


def qubit_joint_saturating(pair: QubitPair, theta: float, varphi: float) -> ApproxJointMeasurement:
    """Projective joint measurement along the Bloch direction ``(theta, varphi)``.

    Gives normalized errors ``sin(varphi - phi_a)`` and ``sin(phi_b - varphi)``
    whatever ``theta`` is.
    """
    if abs(math.sin(pair.theta_a) * math.sin(pair.theta_b)) <= tolerances.get().deg:
        raise DegenerateStatisticsError("one of the observables has vanishing spread on |+z>")
    if not 0.0 < theta < math.pi:
        raise ConstructionError(f"theta must lie in (0, pi), got {theta!r}")
    m_vec = bloch_vector(theta, varphi)
    basis = _pauli_eigenbasis(m_vec)
    f_out = _qubit_estimator(m_vec, math.cos(theta), pair.a_vec, math.cos(pair.theta_a))
    g_out = _qubit_estimator(m_vec, math.cos(theta), pair.b_vec, math.cos(pair.theta_b))
    in_range = pair.phi_a - 1e-12 <= varphi <= pair.phi_b + 1e-12
    return ApproxJointMeasurement(basis, f_out, g_out, notes={"on_boundary": in_range})


@dataclass(frozen=True, eq=False)
class EDRealization:
    """Error-disturbance realization: probe coupling ``U``, probe readout and probe state.

    The approximation of ``A`` is ``U^dag (1 (x) probe_obs) U`` and the
    disturbed ``B`` is ``U^dag (B (x) 1) U``, both on system (x) probe.
    """

    interaction: np.ndarray
    probe_obs: np.ndarray
    probe_state: np.ndarray
    system_obs: np.ndarray  # the B being disturbed

    def __post_init__(self):
        if not is_unitary(self.interaction):
            raise ConstructionError("interaction is not unitary")

    @property
    def system_dim(self) -> int:
        return self.system_obs.shape[0]

    @property
    def approx_a(self) -> np.ndarray:
        u = self.interaction
        return u.conj().T @ np.kron(np.eye(self.system_dim), self.probe_obs) @ u

    @property
    def approx_b(self) -> np.ndarray:
        u = self.interaction
        return u.conj().T @ np.kron(self.system_obs, np.eye(self.probe_state.size)) @ u

    def joint_state(self, psi) -> np.ndarray:
        return np.kron(as_ket(psi), self.probe_state)

    def errors(self, a, b, psi) -> ErrorPair:
        """Error on ``a`` and disturbance on ``b`` (``eps_b`` holds the disturbance)."""
        joint = self.joint_state(psi)
        eps = rms_error(self.approx_a, a, joint)
        eta = rms_error(self.approx_b, b, joint)
        return ErrorPair.from_errors(eps, eta, state_statistics(a, b, psi))


def qubit_ed_saturating(pair: QubitPair, varphi: float) -> EDRealization:
    """Copy-then-rotate probe coupling for equatorial qubit observables.

    The probe starts in ``|m+>``, a CNOT in the eigenbasis of
    ``sigma_varphi`` copies that basis onto the probe, then the system is
    rotated about ``z`` by ``phi_b - varphi``.  The probe is read out with
    ``sigma_varphi``.
    """
    tol = tolerances.get().num
    if abs(pair.theta_a - math.pi / 2) > tol or abs(pair.theta_b - math.pi / 2) > tol:
        raise ConstructionError("needs equatorial Bloch vectors (theta_a = theta_b = pi/2)")
    sigma = equatorial_pauli(varphi)
    basis = _pauli_eigenbasis(bloch_vector(math.pi / 2, varphi))
    m_plus, m_minus = basis[:, 0], basis[:, 1]
    # CNOT controlled on the system's m-basis, flipping m+ <-> m- on the probe
    flip = np.outer(m_minus, m_plus.conj()) + np.outer(m_plus, m_minus.conj())
    copy = np.kron(np.outer(m_plus, m_plus.conj()), np.eye(2)) + np.kron(np.outer(m_minus, m_minus.conj()), flip)
    angle = (pair.phi_b - varphi) / 2
    rotation = math.cos(angle) * np.eye(2) - 1j * math.sin(angle) * SIGMA_Z
    interaction = np.kron(rotation, np.eye(2)) @ copy
    return EDRealization(interaction, sigma, m_plus, pair.B)


# General constructions


def correlation_phase(a, b, psi) -> float:
    """``arg <A0 B0>`` for the normalized observables."""
    a0 = normalized_observable(a, psi)
    b0 = normalized_observable(b, psi)
    psi = as_ket(psi)
    return cmath.phase(np.vdot(a0 @ psi, b0 @ psi))


def saturation_angles(a, b, psi) -> tuple[float, float]:
    """Reference angles ``(phi_a, phi_b)`` that parametrize the saturating families.

    When ``|<A0 B0>| = 1`` these are ``-/+ arg<A0 B0> / 2``; otherwise
    ``-/+ arcsin(C~) / 2``.
    """
    stats = state_statistics(a, b, psi)
    if stats.degenerate:
        raise DegenerateStatisticsError("no saturating family when a spread vanishes")
    if abs(abs(stats.corr_a0b0) - 1) <= tolerances.get().num:
        phi = cmath.phase(stats.corr_a0b0)
    else:
        phi = math.asin(stats.c_tilde)
    return -phi / 2, phi / 2


def _optimal_measurement(basis, a, b, psi, **notes) -> ApproxJointMeasurement:
    return ApproxJointMeasurement(basis, optimal_outputs(basis, a, psi), optimal_outputs(basis, b, psi), notes=notes)


def general_saturating_corr1(a, b, psi, q: float = 1.0, varphi: float = 0.0) -> ApproxJointMeasurement:
    """Saturating basis when ``A0 psi`` and ``B0 psi`` are parallel.

    With ``<A0 B0> = e^{i phi}`` and reference angles ``-/+ phi/2`` the two
    vectors ``(1 + q e^{i(varphi - phi_a)} A0) psi`` and
    ``(1 - e^{-i(phi_b - varphi)} B0 / q) psi`` are orthogonal and span
    ``{psi, A psi}``.  With weak-value outputs the errors are
    ``dA |sin(varphi - phi_a)|`` and ``dB |sin(phi_b - varphi)|``, for any
    nonzero ``q``.
    """
    a = as_hermitian(a)
    b = as_hermitian(b)
    psi = as_ket(psi)
    if q == 0:
        raise ConstructionError("q must be nonzero")
    stats = state_statistics(a, b, psi)
    if stats.degenerate:
        raise DegenerateStatisticsError("needs nonzero spreads; see degenerate_strategy")
    if abs(abs(stats.corr_a0b0) - 1) > tolerances.get().num:
        raise ConstructionError(f"|<A0 B0>| = {abs(stats.corr_a0b0):.6g}, need 1")
    phi = cmath.phase(stats.corr_a0b0)
    phi_a, phi_b = -phi / 2, phi / 2
    a0_psi = normalized_observable(a, psi) @ psi
    b0_psi = normalized_observable(b, psi) @ psi
    m1 = psi + q * cmath.exp(1j * (varphi - phi_a)) * a0_psi
    m2 = psi - cmath.exp(-1j * (phi_b - varphi)) / q * b0_psi
    residual = _orthogonality_residual([m1, m2])
    if residual > tolerances.get().num:
        raise ConstructionError(f"constructed vectors not orthogonal (residual {residual:.3g})")
    basis = complete_basis([normalize(m1), normalize(m2)], psi.size)
    on_branch = math.cos(phi) * math.sin(varphi - phi_a) * math.sin(phi_b - varphi) >= -tolerances.get().num
    return _optimal_measurement(
        basis, a, b, psi, phi_a=phi_a, phi_b=phi_b, on_boundary=on_branch, orthogonality_residual=residual
    )


def default_st(norm_sq: float, corr_abs: float) -> float:
    return math.sqrt(norm_sq / (1 - corr_abs**2))


def general_saturating_corr_lt1(
    a,
    b,
    psi,
    q: float = 1.0,
    r: float = 0.0,
    s: float | None = None,
    t: float | None = None,
    varphi: float = 0.0,
) -> ApproxJointMeasurement:
    """Saturating three-vector basis when ``|<A0 B0>| < 1``.

    ``s`` and ``t`` must satisfy ``s t = <m1|m1> / (1 - |<A0 B0>|^2)``; when
    both are omitted they default to the square root of that product, and
    when one is omitted it is solved from the other.  Errors are
    ``dA |sin(varphi - phi_a')|`` and ``dB |sin(phi_b' - varphi)|`` with
    ``phi_a' = -phi'/2``, ``phi_b' = phi'/2``, ``phi' = arcsin C~``.
    """
    a = as_hermitian(a)
    b = as_hermitian(b)
    psi = as_ket(psi)
    tol = tolerances.get().num
    stats = state_statistics(a, b, psi)
    if stats.degenerate:
        raise DegenerateStatisticsError("needs nonzero spreads; see degenerate_strategy")
    corr = stats.corr_a0b0
    if abs(corr) >= 1 - tol:
        raise ConstructionError("|<A0 B0>| = 1; use general_saturating_corr1")
    chi = corr.imag
    phi_p = math.asin(chi)
    phi_a, phi_b = -phi_p / 2, phi_p / 2
    if abs(varphi) > abs(phi_p) / 2 + tol:
        raise ConstructionError(f"varphi must lie in [-{abs(phi_p) / 2:.6g}, {abs(phi_p) / 2:.6g}]")

    a0 = normalized_observable(a, psi)
    b0 = normalized_observable(b, psi)
    alpha = q * math.cos(varphi - phi_a) + 1j * r * math.sin(varphi - phi_a)
    beta = r * math.cos(phi_b - varphi) - 1j * q * math.sin(phi_b - varphi)
    m1 = psi + beta * (a0 @ psi) + alpha * (b0 @ psi)
    n1 = float(np.vdot(m1, m1).real)
    product = n1 / (1 - abs(corr) ** 2)
    if s is None and t is None:
        s = t = math.sqrt(product)
    elif s is None:
        s = product / t
    elif t is None:
        t = product / s
    elif abs(s * t - product) > tol * max(1.0, product):
        raise ConstructionError(f"s*t = {s * t:.12g} but the construction needs {product:.12g}")

    d_op = np.vdot(m1, b0 @ psi) * a0 - np.vdot(m1, a0 @ psi) * b0
    d_psi = d_op @ psi
    m2 = n1 * psi + s * d_psi - m1
    m3 = n1 * psi - t * d_psi - m1
    for name, vec in (("m1", m1), ("m2", m2), ("m3", m3)):
        if np.linalg.norm(vec) <= 1e-9:
            raise ConstructionError(f"{name} vanishes for these parameters (q = r = 0?)")
    residual = _orthogonality_residual([m1, m2, m3])
    if residual > tol:
        raise ConstructionError(f"constructed vectors not orthogonal (residual {residual:.3g})")
    basis = complete_basis([normalize(m1), normalize(m2), normalize(m3)], psi.size)
    return _optimal_measurement(
        basis, a, b, psi, phi_a=phi_a, phi_b=phi_b, s=s, t=t, orthogonality_residual=residual
    )


def _check_dichotomic_regime(a, b, psi) -> None:
    tol = tolerances.get().num
    eye = np.eye(a.shape[0])
    if np.max(np.abs(a @ a - eye)) > tol or np.max(np.abs(b @ b - eye)) > tol:
        raise ConstructionError("A and B must square to the identity")
    stats = state_statistics(a, b, psi)
    if abs(stats.mean_a) > tol or abs(stats.mean_b) > tol:
        raise ConstructionError("A and B must have zero mean in psi")
    if abs(abs(np.vdot(a @ psi, b @ psi)) - 1) > tol:
        raise ConstructionError("needs |<AB>| = 1")


def dichotomic_saturating(
    a, b, psi, q: float = 1.0, varphi: float = 0.0, flip_signs: tuple[bool, bool] = (False, False)
) -> ApproxJointMeasurement:
    """+-1 valued strategy on the parallel-case basis.

    Outputs are the signs of the real weak values, optionally negated per
    observable.  Unflipped, the errors are ``sqrt(2 - 2|cos(varphi - phi_a)|)``
    and ``sqrt(2 - 2|cos(phi_b - varphi)|)``; a flip turns the matching error
    into ``sqrt(2 + 2|cos(...)|)``.
    """
    a = as_hermitian(a)
    b = as_hermitian(b)
    psi = as_ket(psi)
    if q not in (1, -1):
        raise ConstructionError("q must be +1 or -1")
    _check_dichotomic_regime(a, b, psi)
    base = general_saturating_corr1(a, b, psi, q=q, varphi=varphi)
    f_out = dichotomic_outputs(base.basis, a, psi)
    g_out = dichotomic_outputs(base.basis, b, psi)
    if flip_signs[0]:
        f_out = -f_out
    if flip_signs[1]:
        g_out = -g_out
    return base.with_outputs(f_out, g_out, flip_signs=tuple(flip_signs))


def _match_labels(values: np.ndarray, labels: np.ndarray, free: np.ndarray) -> np.ndarray | None:
    """Relabel ``free`` entries so ``labels`` becomes a permutation of ``values``.

    Returns the adjusted labels, or ``None`` if no relabelling works.
    """
    tol = 1e-8
    remaining = list(np.sort(values))
    fixed = labels[~free]
    for label in fixed:
        hits = [i for i, v in enumerate(remaining) if abs(v - label) <= tol]
        if not hits:
            return None
        remaining.pop(hits[0])
    out = labels.copy()
    out[free] = remaining
    return out


def ed_realize(measurement: ApproxJointMeasurement, b, psi=None) -> EDRealization:
    """Turn a direct system measurement into a copy-and-rotate probe coupling.

    The probe is a copy of the system space prepared in the first basis
    vector; ``U_copy |m_i, m_j> = |m_i, m_{i+j mod d}>`` copies the basis,
    and ``U_R`` is the unitary with ``U_R^dag B U_R = sum g(m)|m><m|``.  It
    exists only if the outputs ``g`` are a rearrangement of the spectrum of
    ``B``.  When ``psi`` is given, outputs on zero-probability outcomes may
    be relabelled to make the multiplicities match; they do not affect any
    error.
    """
    if measurement.ancilla is not None and measurement.ancilla_dim != 1:
        raise ConstructionError("needs a measurement on the system alone")
    b = as_hermitian(b)
    basis = measurement.basis
    dim = basis.shape[0]
    if b.shape[0] != dim:
        raise ConstructionError(f"B has dimension {b.shape[0]}, basis {dim}")
    eigvals, eigvecs = np.linalg.eigh(b)
    g_out = measurement.g_out.copy()
    if psi is not None:
        free = np.abs(basis.conj().T @ as_ket(psi)) ** 2 <= tolerances.get().p
    else:
        free = np.zeros(dim, dtype=bool)
    matched = _match_labels(eigvals, g_out, free)
    if matched is None:
        raise ConstructionError("output values of g are not a rearrangement of the spectrum of B")
    g_out = matched
    # pair each basis vector with an eigenvector of B carrying its label
    order_g = np.argsort(g_out, kind="stable")
    perm = np.empty(dim, dtype=int)
    perm[order_g] = np.arange(dim)  # rank of each g label = index into sorted eigvals
    rotation = eigvecs[:, perm] @ basis.conj().T
    shift = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            src = np.kron(basis[:, i], basis[:, j])
            dst = np.kron(basis[:, i], basis[:, (i + j) % dim])
            shift += np.outer(dst, src.conj())
    interaction = np.kron(rotation, np.eye(dim)) @ shift
    probe_obs = (basis * measurement.f_out) @ basis.conj().T
    return EDRealization(interaction, probe_obs, basis[:, 0].copy(), b)


def degenerate_strategy(a, b, psi) -> ApproxJointMeasurement:
    """Zero-error strategy when ``psi`` is an eigenvector of ``A`` or of ``B``.

    If ``A`` has no spread the approximation of ``A`` is the constant
    ``<A>`` and ``B`` is measured exactly, and symmetrically.
    """
    a = as_hermitian(a)
    b = as_hermitian(b)
    stats = state_statistics(a, b, psi)
    deg = tolerances.get().deg
    if stats.delta_a <= deg:
        values, vectors = np.linalg.eigh(b)
        return ApproxJointMeasurement(vectors, np.full(values.size, stats.mean_a), values)
    if stats.delta_b <= deg:
        values, vectors = np.linalg.eigh(a)
        return ApproxJointMeasurement(vectors, values, np.full(values.size, stats.mean_b))
    raise ConstructionError("neither spread vanishes")
