"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are also
repeated in the terminal summary (see ``conftest.py``).  Run on its own with
``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import csv
import io
import math
import time

import numpy as np
import pytest

from conftest import parallel_instance, random_povm
from jointmeas import cli
from jointmeas.constructions import (
    QubitPair,
    general_saturating_corr1,
    general_saturating_corr_lt1,
    qubit_ed_saturating,
    qubit_joint_saturating,
    saturation_angles,
)
from jointmeas.core import random_hermitian, random_ket, random_unitary, state_statistics
from jointmeas.joint import (
    ApproxJointMeasurement,
    neumark_extend,
    optimal_outputs,
    outcome_probabilities,
    povm_rms_error,
    rms_error,
)
from jointmeas.relations import eval_branciard, eval_ozawa, eval_same_spectrum, ozawa_implied_check
from jointmeas.sweep import SweepConfig, run_lemmas, run_verify

RESULTS: list[str] = []

PHIS = (math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2)
GRID = 50
PHI_A = 0.2  # reference azimuth of A


def record(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def qubit_grid():
    for phi in PHIS:
        pair = QubitPair(math.pi / 2, PHI_A, math.pi / 2, PHI_A + phi)
        for varphi in np.linspace(PHI_A, PHI_A + phi, GRID):
            yield phi, pair, varphi


def criterion1_instances():
    out = []
    for phi, pair, varphi in qubit_grid():
        m = qubit_joint_saturating(pair, math.pi / 3, varphi)
        stats = state_statistics(pair.A, pair.B, pair.state)
        out.append((phi, pair, varphi, m.errors(pair.A, pair.B, pair.state), stats))
    return out


def criterion2_instances():
    out = []
    for phi, pair, varphi in qubit_grid():
        r = qubit_ed_saturating(pair, varphi)
        stats = state_statistics(pair.A, pair.B, pair.state)
        out.append((phi, pair, varphi, r, r.errors(pair.A, pair.B, pair.state), stats))
    return out


@pytest.fixture(scope="module")
def sweep_record():
    start = time.perf_counter()
    rec = run_verify(SweepConfig(seed=2024, dims=(2, 3, 4, 5, 6), n_instances=100_000, strategy="optimal_outputs"))
    return rec, time.perf_counter() - start


def test_criterion_1_qubit_joint_saturation():
    start = time.perf_counter()
    worst_slack = worst_match = 0.0
    for phi, pair, varphi, e, stats in criterion1_instances():
        worst_match = max(
            worst_match,
            abs(e.eps_a_tilde - math.sin(varphi - pair.phi_a)),
            abs(e.eps_b_tilde - math.sin(pair.phi_b - varphi)),
        )
        worst_slack = max(worst_slack, abs(eval_branciard(e, stats, dimensionless=True).slack))
    elapsed = time.perf_counter() - start
    ok = worst_slack <= 1e-7 and worst_match <= 1e-9 and elapsed < 1.0
    record(1, ok, f"max |slack| {worst_slack:.2e}, max |eps - sin| {worst_match:.2e}, {elapsed:.3f} s")


def test_criterion_2_same_spectrum_saturation():
    start = time.perf_counter()
    worst_slack = worst_match = worst_square = 0.0
    eye = np.eye(4)
    for phi, pair, varphi, r, e, stats in criterion2_instances():
        worst_match = max(
            worst_match,
            abs(e.eps_a - 2 * math.sin((varphi - pair.phi_a) / 2)),
            abs(e.eps_b - 2 * math.sin((pair.phi_b - varphi) / 2)),
        )
        worst_slack = max(worst_slack, abs(eval_same_spectrum(e, stats).slack))
        a_op, b_op = r.approx_a, r.approx_b
        worst_square = max(worst_square, np.max(np.abs(a_op @ a_op - eye)), np.max(np.abs(b_op @ b_op - eye)))
    elapsed = time.perf_counter() - start
    ok = worst_slack <= 1e-7 and worst_match <= 1e-9 and worst_square <= 1e-10 and elapsed < 1.0
    record(
        2,
        ok,
        f"max |slack| {worst_slack:.2e}, max |eps - chord| {worst_match:.2e}, "
        f"max |M^2 - 1| {worst_square:.2e}, {elapsed:.3f} s",
    )


def test_criterion_3_universality_sweep(sweep_record):
    rec, elapsed = sweep_record
    universal = ("robertson", "ozawa_joint", "branciard", "branciard_dimless")
    violations = {k: rec.violations[k] for k in universal}
    hak_fraction = rec.violations["hak"] / rec.n_instances
    small = rec.extra["small_eps_a_instances"]
    ok = all(v == 0 for v in violations.values()) and small > 0 and hak_fraction >= 0.01 and elapsed < 120
    record(
        3,
        ok,
        f"{rec.n_instances} instances, violations {violations}, min slack "
        f"{ {k: float(f'{rec.min_slack[k]:.2e}') for k in universal} }, HAK violated in {hak_fraction:.1%} "
        f"({small} instances with eps~_A < 0.1), {elapsed:.1f} s",
    )


def test_criterion_4_lemma_fuzzing():
    start = time.perf_counter()
    rec = run_lemmas(seed=4, n_instances=1_000_000, dims=range(3, 9))
    elapsed = time.perf_counter() - start
    min_slack = {k: rec.min_slack[k] for k in ("lemma1", "lemma2", "lemma3")}
    near = {k: v["count"] for k, v in rec.extra["near_saturating"].items()}
    witness = {k: rec.violations[f"{k}_witness"] for k in min_slack}
    planted = {k: v["failures"] for k, v in rec.extra["planted"].items()}
    ok = (
        all(s >= -1e-9 for s in min_slack.values())
        and all(v == 0 for v in witness.values())
        and all(v == 0 for v in planted.values())
        and elapsed < 60  # all three lemmas together, stricter than a minute each
    )
    record(
        4,
        ok,
        f"1e6 per lemma in R^3..R^8, min slack { {k: float(f'{v:.2e}') for k, v in min_slack.items()} }, "
        f"random near-saturating {near}, witness failures {witness}, planted failures {planted}, {elapsed:.1f} s total",
    )


def test_criterion_5_route_equivalence():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(2, 5))
        n_out = int(rng.integers(2, 7))
        povm = random_povm(rng, dim, n_out)
        a, psi = random_hermitian(dim, rng), random_ket(dim, rng)
        f = rng.normal(size=n_out) * 2
        ext = neumark_extend(povm)
        m = ext.measurement(f)
        worst = max(worst, abs(povm_rms_error(povm, f, a, psi) - rms_error(m.approx_a, a, ext.joint_state(psi))))
    record(5, worst <= 1e-9, f"1000 POVMs (dims 2-4, 2-6 outcomes), max |difference| {worst:.2e}")


def test_criterion_6_parameter_independence():
    rng = np.random.default_rng(6)
    worst = 0.0
    checked = 0
    # parallel case
    a, b, psi = parallel_instance(rng, 4, phi=1.0)
    stats = state_statistics(a, b, psi)
    pa, pb = saturation_angles(a, b, psi)
    for varphi in np.linspace(pa, pb, 7):
        target = (stats.delta_a * abs(math.sin(varphi - pa)), stats.delta_b * abs(math.sin(pb - varphi)))
        for q in (0.5, -0.5, 1.0, -1.0, 3.0):
            e = general_saturating_corr1(a, b, psi, q=q, varphi=varphi).errors(a, b, psi)
            worst = max(worst, abs(e.eps_a - target[0]), abs(e.eps_b - target[1]))
            checked += 1
    # general case: s is random, t solved from s t = <m1|m1> / (1 - |<A0B0>|^2), then passed back in
    a, b, psi = random_hermitian(5, rng), random_hermitian(5, rng), random_ket(5, rng)
    stats = state_statistics(a, b, psi)
    pa, pb = saturation_angles(a, b, psi)
    tuples = [(rng.normal(), rng.normal(), rng.uniform(0.2, 3.0)) for _ in range(5)]
    for varphi in np.linspace(min(pa, pb), max(pa, pb), 7):
        target = (stats.delta_a * abs(math.sin(varphi - pa)), stats.delta_b * abs(math.sin(pb - varphi)))
        for q, r, s in tuples:
            t = general_saturating_corr_lt1(a, b, psi, q, r, s=s, varphi=varphi).notes["t"]
            e = general_saturating_corr_lt1(a, b, psi, q, r, s=s, t=t, varphi=varphi).errors(a, b, psi)
            worst = max(worst, abs(e.eps_a - target[0]), abs(e.eps_b - target[1]))
            checked += 1
    record(6, worst <= 1e-9, f"{checked} strategies, max deviation from dA|sin|, dB|sin| {worst:.2e}")


def test_criterion_7_experiment_reproduction():
    def rows(which):
        text = cli.cmd_experiments(which, 101, "csv")
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]

    erhart = rows("erhart")
    match = max(
        max(abs(r["eps_a"] - 2 * math.sin(r["parameter"] / 2)), abs(r["eta_b"] - math.sqrt(2) * math.cos(r["parameter"])))
        for r in erhart
    )
    mid = erhart[50]
    assert mid["parameter"] == pytest.approx(math.pi / 4)
    ends = max(abs(erhart[0]["slack"]), abs(erhart[-1]["slack"]))
    rozema = max(abs(r["slack"]) for r in rows("rozema"))
    ok = match <= 1e-12 and mid["slack"] > 1e-3 and ends <= 1e-7 and rozema <= 1e-7
    record(
        7,
        ok,
        f"erhart slack {mid['slack']:.4f} at pi/4, {ends:.2e} at the endpoints; rozema max |slack| {rozema:.2e}",
    )


def test_criterion_8_implication_chain(sweep_record):
    failures = 0
    drop_product = 0
    n = 0
    for *_, e, stats in criterion1_instances():
        failures += not ozawa_implied_check(e, stats)
        drop_product += not eval_ozawa(e, stats, drop_product=True).satisfied
        n += 1
    for *_, e, stats in criterion2_instances():
        failures += not ozawa_implied_check(e, stats)
        drop_product += not eval_ozawa(e, stats, mode="error_disturbance", drop_product=True).satisfied
        n += 1
    rec, _ = sweep_record
    failures += rec.extra["ozawa_chain_failures"]
    drop_product += rec.extra["ozawa_drop_product_violations"]
    n += rec.n_instances
    ok = failures == 0 and drop_product == 0
    record(8, ok, f"{n} instances, chain failures {failures}, product-dropped violations {drop_product}")


def test_criterion_9_weak_value_optimality():
    rng = np.random.default_rng(9)
    worst = 0.0
    min_increase = math.inf
    perturbations = 0
    for _ in range(1000):
        dim = int(rng.integers(2, 6))
        u, a, psi = random_unitary(dim, rng), random_hermitian(dim, rng), random_ket(dim, rng)
        f = optimal_outputs(u, a, psi)
        p = outcome_probabilities(u, psi)
        base = rms_error(ApproxJointMeasurement(u, f, f).approx_a, a, psi) ** 2
        for m in np.flatnonzero(p > 1e-6):
            for delta in (0.05, -0.05):
                g = f.copy()
                g[m] += delta
                eps2 = rms_error(ApproxJointMeasurement(u, g, g).approx_a, a, psi) ** 2
                increase = eps2 - base
                worst = max(worst, abs(increase - p[m] * 0.0025))
                min_increase = min(min_increase, increase)
                perturbations += 1
    ok = worst <= 1e-9 and min_increase > 0
    record(
        9,
        ok,
        f"{perturbations} perturbations on 1000 bases, max |increase - p 0.0025| {worst:.2e}, "
        f"smallest increase {min_increase:.2e}",
    )
