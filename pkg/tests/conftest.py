from __future__ import annotations

import cmath

import numpy as np
import pytest

from jointmeas.core import (
    KET_PLUS_Z,
    equatorial_pauli,
    normalized_observable,
    random_hermitian,
    random_ket,
    random_unitary,
)
from jointmeas.joint import Povm


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def parallel_instance(rng, dim: int, phi: float, mean_b: float = 0.3, spread_b: float = 1.7):
    """``(A, B, psi)`` with ``B0 psi = exp(i phi) A0 psi``, so ``|<A0 B0>| = 1``.

    ``B`` acts as prescribed on ``span{psi, A0 psi}`` and as a random
    Hermitian on the orthogonal complement.
    """
    psi = random_ket(dim, rng)
    a = random_hermitian(dim, rng)
    v = normalized_observable(a, psi) @ psi
    proj_psi = np.outer(psi, psi.conj())
    b = mean_b * proj_psi + spread_b * (
        cmath.exp(1j * phi) * np.outer(v, psi.conj()) + cmath.exp(-1j * phi) * np.outer(psi, v.conj())
    )
    q = np.eye(dim) - proj_psi - np.outer(v, v.conj())
    h = random_hermitian(dim, rng)
    b = b + q @ h @ q
    return a, (b + b.conj().T) / 2, psi


def dichotomic_instance(rng, phi_a: float, phi_b: float, extra: int = 2):
    """Equatorial qubit pair ``sigma_phi_a``, ``sigma_phi_b`` on ``|+z>``, tensored with an
    idle ``extra``-level system and rotated by a random unitary."""
    u = random_unitary(2 * extra, rng)
    a = u @ np.kron(equatorial_pauli(phi_a), np.eye(extra)) @ u.conj().T
    b = u @ np.kron(equatorial_pauli(phi_b), np.eye(extra)) @ u.conj().T
    psi = u @ np.kron(KET_PLUS_Z, random_ket(extra, rng))
    return (a + a.conj().T) / 2, (b + b.conj().T) / 2, psi


def random_povm(rng, dim: int, n_outcomes: int) -> Povm:
    """POVM ``S^-1/2 G_m^dag G_m S^-1/2`` from random Gaussian ``G_m`` of random rank."""
    ranks = [dim] + [int(rng.integers(1, dim + 1)) for _ in range(n_outcomes - 1)]
    grams = []
    for r in ranks:
        g = rng.standard_normal((r, dim)) + 1j * rng.standard_normal((r, dim))
        grams.append(g.conj().T @ g)
    w, v = np.linalg.eigh(sum(grams))
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    elements = np.array([inv_sqrt @ m @ inv_sqrt for m in grams])
    elements = (elements + np.conj(np.swapaxes(elements, 1, 2))) / 2
    return Povm(elements)


def trine_povm() -> Povm:
    kets = [np.array([np.cos(2 * np.pi * j / 3), np.sin(2 * np.pi * j / 3)]) for j in range(3)]
    return Povm(np.array([2 / 3 * np.outer(k, k) for k in kets]))


def pytest_terminal_summary(terminalreporter):
    """Repeat the one-line acceptance verdicts at the end of the run."""
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
