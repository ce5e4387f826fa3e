"""Seeded randomized sweeps over strategies and over the geometric lemmas.

Instances are generated and evaluated in vectorized batches, one batch
stream per dimension.  Each stream draws from its own child of a numpy
``SeedSequence`` built from the run seed, so results depend only on the
seed and the configuration, not on batch sizes or scheduling.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry, relations, tolerances
from .constructions import ConstructionError, general_saturating_corr1, general_saturating_corr_lt1, saturation_angles
from .core import state_statistics

PRNG_NAME = "numpy.random.PCG64 via SeedSequence"
STRATEGIES = ("random_basis", "optimal_outputs", "saturating")
SWEEP_RELATIONS = ("robertson", "hak", "ozawa_joint", "branciard", "branciard_dimless")
BATCH = 4096


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    seed: int = 0
    dims: tuple[int, ...] = (2, 3, 4, 5, 6)
    n_instances: int = 1000
    relations: tuple[str, ...] = SWEEP_RELATIONS
    strategy: str = "optimal_outputs"
    max_ancilla: int = 2  # ancilla dimension drawn from 1..max_ancilla
    near_a_fraction: float = 0.25  # share of bases close to the eigenbasis of A

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "relations", tuple(self.relations))
        self.validate()

    def validate(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_instances < 1:
            raise ConfigError(f"n_instances must be >= 1, got {self.n_instances}")
        if not self.dims or any(d < 2 for d in self.dims):
            raise ConfigError(f"dims must all be >= 2, got {list(self.dims)}")
        unknown = set(self.relations) - set(SWEEP_RELATIONS)
        if unknown or not self.relations:
            raise ConfigError(f"relations must be a non-empty subset of {SWEEP_RELATIONS}, got {sorted(unknown)}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.max_ancilla < 1:
            raise ConfigError("max_ancilla must be >= 1")
        if not 0.0 <= self.near_a_fraction <= 1.0:
            raise ConfigError("near_a_fraction must lie in [0, 1]")

    def digest(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunRecord:
    config_hash: str
    n_instances: int
    violations: dict[str, int]
    min_slack: dict[str, float]
    worst_instance: dict[str, dict]
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)
    prng: str = PRNG_NAME
    must_hold: frozenset = relations.UNIVERSAL

    @property
    def passed(self) -> bool:
        return all(count == 0 for rel, count in self.violations.items() if rel in self.must_hold)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "config_hash": self.config_hash,
            "prng": self.prng,
            "n_instances": self.n_instances,
            "passed": self.passed,
            "violations": dict(sorted(self.violations.items())),
            "min_slack": {k: fmt(v) for k, v in sorted(self.min_slack.items())},
            "worst_instance": self.worst_instance,
            "extra": self.extra,
        }
        if include_timing:
            out["wall_time"] = fmt(self.wall_time)
        return out


def fmt(x: float) -> str:
    """Fixed 17-significant-digit rendering used for every emitted number."""
    return format(float(x), ".17g")


def _split(n: int, parts: int) -> list[int]:
    base, rem = divmod(n, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


# Batched random objects


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _hermitian_batch(rng, n, d):
    g = _gaussian(rng, (n, d, d))
    return (g + np.conj(np.swapaxes(g, 1, 2))) / 2


def _ket_batch(rng, n, d):
    z = _gaussian(rng, (n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _unitary_batch(rng, n, d):
    q, r = np.linalg.qr(_gaussian(rng, (n, d, d)) / math.sqrt(2))
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def _adjoint(m):
    return np.conj(np.swapaxes(m, -1, -2))


def _near_eigenbasis(rng, a, k, scale):
    """Eigenbasis of ``A (x) 1`` twisted by ``exp(i s H)`` with a small random Hermitian ``H``."""
    n, d, _ = a.shape
    _, vecs = np.linalg.eigh(a)
    base = np.einsum("nij,ab->niajb", vecs, np.eye(k)).reshape(n, d * k, d * k)
    h = _hermitian_batch(rng, n, d * k)
    lam, w = np.linalg.eigh(h)
    s = scale * rng.uniform(0.0, 1.0, (n, 1)) / np.max(np.abs(lam), axis=1, keepdims=True)
    twist = (w * np.exp(1j * s * lam)[:, None, :]) @ _adjoint(w)
    return base @ twist


@dataclass
class _Batch:
    a: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    basis: np.ndarray
    f: np.ndarray
    g: np.ndarray
    k: int


def _extend_state(psi, k):
    n, d = psi.shape
    joint = np.zeros((n, d * k), dtype=complex)
    joint[:, ::k] = psi
    return joint


def _extend_op_on(op, psi, k):
    """``(op (x) 1) |psi, e_0>`` without forming the Kronecker product."""
    return _extend_state(np.einsum("nij,nj->ni", op, psi), k)


def _weak_value_outputs(basis, joint, target):
    amp = np.einsum("nji,nj->ni", np.conj(basis), joint)
    num = np.einsum("nji,nj->ni", np.conj(basis), target)
    p = np.abs(amp) ** 2
    support = p > tolerances.get().p
    safe = np.where(support, amp, 1.0)
    return np.where(support, (num / safe).real, 0.0)


def _generate(cfg: SweepConfig, rng, n: int, d: int, k: int) -> _Batch:
    a = _hermitian_batch(rng, n, d)
    b = _hermitian_batch(rng, n, d)
    psi = _ket_batch(rng, n, d)
    dk = d * k
    basis = _unitary_batch(rng, n, dk)
    near = rng.uniform(size=n) < cfg.near_a_fraction
    if near.any():
        basis[near] = _near_eigenbasis(rng, a[near], k, scale=0.05)
    if cfg.strategy == "random_basis":
        f = rng.standard_normal((n, dk)) * 2
        g = rng.standard_normal((n, dk)) * 2
    else:
        joint = _extend_state(psi, k)
        f = _weak_value_outputs(basis, joint, _extend_op_on(a, psi, k))
        g = _weak_value_outputs(basis, joint, _extend_op_on(b, psi, k))
    return _Batch(a, b, psi, basis, f, g, k)


def _saturating_batch(rng, n: int, d: int) -> _Batch:
    """Instances of the saturating families, built one at a time."""
    a_list, b_list, psi_list, basis_list, f_list, g_list = [], [], [], [], [], []
    while len(a_list) < n:
        a = _hermitian_batch(rng, 1, d)[0]
        b = _hermitian_batch(rng, 1, d)[0]
        psi = _ket_batch(rng, 1, d)[0]
        u = rng.uniform()
        try:
            phi_a, phi_b = saturation_angles(a, b, psi)
            varphi = phi_a + u * (phi_b - phi_a)
            if d == 2:
                m = general_saturating_corr1(a, b, psi, q=rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 3), varphi=varphi)
            else:
                m = general_saturating_corr_lt1(a, b, psi, q=rng.normal(), r=rng.normal(), varphi=varphi)
        except ConstructionError:
            continue
        a_list.append(a)
        b_list.append(b)
        psi_list.append(psi)
        basis_list.append(m.basis)
        f_list.append(m.f_out)
        g_list.append(m.g_out)
    return _Batch(*(np.array(x) for x in (a_list, b_list, psi_list, basis_list, f_list, g_list)), k=1)


def _evaluate(batch: _Batch):
    k = batch.k
    joint = _extend_state(batch.psi, k)
    amp = np.einsum("nji,nj->ni", np.conj(batch.basis), joint)
    a_joint = _extend_op_on(batch.a, batch.psi, k)
    b_joint = _extend_op_on(batch.b, batch.psi, k)
    approx_a_psi = np.einsum("nij,nj->ni", batch.basis, batch.f * amp)
    approx_b_psi = np.einsum("nij,nj->ni", batch.basis, batch.g * amp)
    eps_a = np.linalg.norm(approx_a_psi - a_joint, axis=1)
    eps_b = np.linalg.norm(approx_b_psi - b_joint, axis=1)

    a_psi = np.einsum("nij,nj->ni", batch.a, batch.psi)
    b_psi = np.einsum("nij,nj->ni", batch.b, batch.psi)
    mean_a = np.einsum("ni,ni->n", np.conj(batch.psi), a_psi).real
    mean_b = np.einsum("ni,ni->n", np.conj(batch.psi), b_psi).real
    sa = a_psi - mean_a[:, None] * batch.psi
    sb = b_psi - mean_b[:, None] * batch.psi
    delta_a = np.linalg.norm(sa, axis=1)
    delta_b = np.linalg.norm(sb, axis=1)
    c_ab = np.einsum("ni,ni->n", np.conj(sa), sb).imag
    return eps_a, eps_b, delta_a, delta_b, c_ab


def _slacks(rel: str, eps_a, eps_b, delta_a, delta_b, c_ab):
    if rel == "robertson":
        return delta_a * delta_b - np.abs(c_ab)
    if rel == "hak":
        return eps_a * eps_b - np.abs(c_ab)
    if rel == "ozawa_joint":
        return relations.ozawa_lhs(eps_a, eps_b, delta_a, delta_b) - np.abs(c_ab)
    if rel == "branciard":
        return relations.branciard_lhs(eps_a, eps_b, delta_a, delta_b, c_ab) - c_ab**2
    if rel == "branciard_dimless":
        c_t = np.clip(c_ab / (delta_a * delta_b), -1, 1)
        return relations.branciard_dimless_lhs(eps_a / delta_a, eps_b / delta_b, c_t) - c_t**2
    raise ValueError(rel)


def _serialize_instance(batch: _Batch, i: int) -> dict:
    def cplx(arr):
        arr = np.asarray(arr)
        return {"re": np.vectorize(fmt)(arr.real).tolist(), "im": np.vectorize(fmt)(arr.imag).tolist()}

    return {
        "A": cplx(batch.a[i]),
        "B": cplx(batch.b[i]),
        "psi": cplx(batch.psi[i]),
        "ancilla_dim": batch.k,
        "basis": cplx(batch.basis[i]),
        "f": [fmt(x) for x in batch.f[i]],
        "g": [fmt(x) for x in batch.g[i]],
    }


def run_verify(cfg: SweepConfig) -> RunRecord:
    """Evaluate every configured relation on ``n_instances`` random strategies."""
    start = time.perf_counter()
    tol = tolerances.get()
    violations = {rel: 0 for rel in cfg.relations}
    min_slack = {rel: math.inf for rel in cfg.relations}
    worst: dict[str, dict] = {}
    hak_small = hak_small_total = 0
    chain_failures = drop_product_failures = 0
    root = np.random.SeedSequence(cfg.seed)
    per_dim = _split(cfg.n_instances, len(cfg.dims))
    for d, stream, count in zip(cfg.dims, root.spawn(len(cfg.dims)), per_dim):
        rng = np.random.default_rng(stream)
        done = 0
        while done < count:
            n = min(BATCH, count - done)
            if cfg.strategy == "saturating":
                batch = _saturating_batch(rng, n, d)
            else:
                k = int(rng.integers(1, cfg.max_ancilla + 1))
                batch = _generate(cfg, rng, n, d, k)
            eps_a, eps_b, delta_a, delta_b, c_ab = _evaluate(batch)
            for rel in cfg.relations:
                s = _slacks(rel, eps_a, eps_b, delta_a, delta_b, c_ab)
                violations[rel] += int(np.sum(s < -tol.num))
                i = int(np.argmin(s))
                if s[i] < min_slack[rel]:
                    min_slack[rel] = float(s[i])
                    worst[rel] = {"dim": d, "slack": fmt(s[i]), **_serialize_instance(batch, i)}
            small = eps_a / delta_a < 0.1
            hak_small_total += int(np.sum(small))
            hak_small += int(np.sum(small & (eps_a * eps_b - np.abs(c_ab) < -tol.num)))
            # ordering behind the derivation of Ozawa's bound
            l1 = relations.ozawa_lhs(eps_a, eps_b, delta_a, delta_b) ** 2
            l2 = relations.ozawa_lhs(eps_a, eps_b, delta_a, delta_b, drop_product=True) ** 2
            l3 = relations.branciard_lhs(eps_a, eps_b, delta_a, delta_b, c_ab)
            l4 = c_ab**2
            chain_failures += int(np.sum((l1 - l2 < -tol.num) | (l2 - l3 < -tol.num) | (l3 - l4 < -tol.num)))
            drop_product_failures += int(np.sum(np.sqrt(l2) - np.abs(c_ab) < -tol.num))
            done += n
    extra = {
        "strategy": cfg.strategy,
        "dims": list(cfg.dims),
        "small_eps_a_instances": hak_small_total,
        "hak_violations_small_eps_a": hak_small,
        "ozawa_chain_failures": chain_failures,
        "ozawa_drop_product_violations": drop_product_failures,
    }
    if "hak" in cfg.relations:
        extra["hak_violation_fraction"] = fmt(violations["hak"] / cfg.n_instances)
    return RunRecord(
        config_hash=cfg.digest(),
        n_instances=cfg.n_instances,
        violations=violations,
        min_slack=min_slack,
        worst_instance=worst,
        wall_time=time.perf_counter() - start,
        extra=extra,
    )


def _planted_checks(rng, dims, n_planted: int) -> dict:
    """Equality instances in a random plane of each dimension, run through the witness."""
    out = {}
    tol = tolerances.get()
    for lemma_id in (1, 2, 3):
        worst, failures = 0.0, 0
        for i in range(n_planted):
            d = dims[i % len(dims)]
            phi_a = rng.uniform(-np.pi, np.pi)
            phi_b = phi_a + rng.uniform(0, np.pi / 2)
            varphi = rng.uniform(phi_a, phi_b)
            inst = geometry.planar_instance(phi_a, phi_b, varphi, lemma_id=lemma_id, dim=d)
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            inst = geometry.LemmaInstance(q @ inst.a_hat, q @ inst.b_hat, q @ inst.x_vec, q @ inst.y_vec)
            diag = geometry.saturation_witness(inst, lemma_id)
            worst = max(worst, abs(diag.slack))
            failures += int(abs(diag.slack) > tol.sat or not diag.consistent)
        out[f"lemma{lemma_id}"] = {"count": n_planted, "max_abs_slack": fmt(worst), "failures": failures}
    return out


def run_lemmas(seed: int, n_instances: int, dims, max_reported: int = 20, n_planted: int = 200) -> RunRecord:
    """Fuzz the three lemmas with ``n_instances`` random instances each, split over ``dims``.

    Random instances essentially never come within the saturation tolerance,
    so ``n_planted`` rotated equality instances per lemma are checked as well.
    """
    dims = tuple(int(d) for d in dims)
    if n_instances < 1:
        raise ConfigError("n_instances must be >= 1")
    if not dims or any(d < 2 for d in dims):
        raise ConfigError(f"lemma fuzzing needs dims >= 2, got {list(dims)}")
    start = time.perf_counter()
    tol = tolerances.get()
    config = {"seed": seed, "n_instances": n_instances, "dims": list(dims)}
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    violations, min_slack, worst, near = {}, {}, {}, {}
    root = np.random.SeedSequence(seed)
    for lemma_id, lemma_seq in zip((1, 2, 3), root.spawn(3)):
        key = f"lemma{lemma_id}"
        violations[key] = 0
        min_slack[key] = math.inf
        saturating = []
        n_near = n_fail = 0
        for d, stream, count in zip(dims, lemma_seq.spawn(len(dims)), _split(n_instances, len(dims))):
            rng = np.random.default_rng(stream)
            done = 0
            while done < count:
                n = min(65536, count - done)
                a, b, x, y = geometry.random_lemma_batch(lemma_id, n, d, rng)
                s = geometry.BATCH_LEMMAS[lemma_id](a, b, x, y)
                violations[key] += int(np.sum(s < -tol.num))
                i = int(np.argmin(s))
                if s[i] < min_slack[key]:
                    min_slack[key] = float(s[i])
                    worst[key] = {"dim": d, "slack": fmt(s[i]), "vectors": [[fmt(v) for v in arr[i]] for arr in (a, b, x, y)]}
                for j in np.flatnonzero(s <= tol.sat):
                    n_near += 1
                    inst = geometry.LemmaInstance(a[j], b[j], x[j], y[j])
                    diag = geometry.saturation_witness(inst, lemma_id)
                    n_fail += int(not diag.coplanar)
                    if len(saturating) < max_reported or not diag.coplanar:
                        saturating.append({"dim": d, "slack": fmt(s[j]), "coplanar": diag.coplanar, "consistent": diag.consistent})
                done += n
        near[key] = {"count": n_near, "witness_failures": n_fail, "examples": saturating}
    planted = _planted_checks(np.random.default_rng(root.spawn(1)[0]), dims, n_planted)
    for key in list(violations):
        violations[f"{key}_witness"] = near[key]["witness_failures"] + planted[key]["failures"]
    extra = {"near_saturating": near, "planted": planted}
    return RunRecord(
        digest, n_instances, violations, min_slack, worst, time.perf_counter() - start, extra, must_hold=frozenset(violations)
    )
