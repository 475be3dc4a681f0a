"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from _acceptance_log import record
from sfols import planner
from sfols.baselines import random_weights_run, wcpi_run
from sfols.envs import FourRoomConfig, build_continuing_mdp, build_four_room, build_random_momdp
from sfols.evaluation import (
    evaluate_policy_set,
    gap_bound_audit,
    hypervolume,
    sample_simplex_weights,
    simplex_lattice,
    simplex_sweep,
    vertex_discovery_check,
)
from sfols.gpi import GPIEvaluator, prune_to_ccs, same_vector_sets
from sfols.momdp import one_hot_wrap
from sfols.ols import SFOLSConfig, sfols_run
from sfols.qlearning import QLearnConfig

DST_HV_REF = (0.0, -17.383)
REPORTS = []  # every EvaluationReport built here, for the dominance-chain criterion


def _evaluate(momdp, psi_set, weights):
    rep = evaluate_policy_set(momdp, psi_set, weights)
    REPORTS.append(rep)
    return rep


def test_criterion_01_dst_ccs_recovery(dst_run, dst_sweep):
    result, elapsed = dst_run
    _, _, oracle = dst_sweep
    pruned = prune_to_ccs(result.psi_set.vectors)
    ok = (
        result.stop_reason == "queue empty"
        and len(result.queue) == 0
        and same_vector_sets(pruned, oracle)
        and len(pruned) == 10
        and elapsed < 30
    )
    record(1, ok, f"DST |pruned Psi|={len(pruned)} |oracle CCS|={len(oracle)} stop={result.stop_reason!r} time={elapsed:.2f}s")
    assert ok


def test_criterion_02_gpi_optimal_on_ccs(dst, dst_run):
    result, _ = dst_run
    start = time.perf_counter()
    rep = _evaluate(dst, result.psi_set, sample_simplex_weights(64, 2, seed=2))
    gap = float(np.max(np.abs(rep.v_gpi - rep.v_star)))
    elapsed = time.perf_counter() - start
    ok = gap <= 1e-5 and elapsed < 10
    record(2, ok, f"max |v_gpi - v*| over 64 weights = {gap:.2e} time={elapsed:.2f}s")
    assert ok


def test_criterion_04_early_gpi_expansion(dst, dst_run, dst_sweep):
    result, _ = dst_run
    weights, v_star, oracle = dst_sweep
    k_gpi = k_complete = None
    for rec in result.iterations:
        psi_k = result.psi_at(rec.iteration)
        if k_gpi is None:
            gap = np.max(v_star - GPIEvaluator(dst, psi_k).values(weights))
            if gap <= 1e-5:
                k_gpi = rec.iteration
        if k_complete is None and same_vector_sets(prune_to_ccs(psi_k.vectors), oracle):
            k_complete = rec.iteration
    ok = k_gpi is not None and k_complete is not None and k_gpi < k_complete
    record(4, ok, f"GPI attains v* on the sweep at iteration k={k_gpi}; Psi completes the CCS at iteration {k_complete}")
    assert ok


def test_criterion_05_dual_lp_equivalence(dst_run):
    result, _ = dst_run
    checks = [(p, q) for rec in result.iterations for _, p, q in rec.lp_checks]
    feasible = [(p, q) for p, q in checks if q is not None]
    worst = max((abs(p - q) for p, q in feasible), default=0.0)
    ok = len(feasible) > 0 and worst <= 1e-6
    record(5, ok, f"{len(feasible)}/{len(checks)} improvement LPs had a feasible dual; max |primal - dual| = {worst:.2e}")
    assert ok


def _corner_soundness(momdp, result, weights, v_star) -> tuple[int, int]:
    """Iterations checked and iterations whose worst sweep weight is near a candidate."""
    checked = hits = 0
    for rec in result.iterations:
        psi_k = result.psi_at(rec.iteration)
        gaps = v_star - (weights @ psi_k.vectors.T).max(axis=1)
        top = gaps.max()
        if top <= 1e-9:
            continue
        checked += 1
        argmaxes = weights[gaps >= top - 1e-9 * max(1.0, abs(top))]
        candidates = [w for w, _ in rec.queue] + [w for w, _ in rec.corners]
        if any(np.max(np.abs(a - c)) <= 1e-3 + 1e-12 for a in argmaxes for c in candidates):
            hits += 1
    return checked, hits


def test_criterion_06_corner_weight_soundness(dst, toy, dst_run, dst_sweep):
    weights, v_star, _ = dst_sweep
    c1, h1 = _corner_soundness(dst, dst_run[0], weights, v_star)
    toy_w = np.asarray(simplex_sweep(1001))
    toy_v = np.array([planner.optimal_value(toy, w) for w in toy_w])
    c2, h2 = _corner_soundness(toy, sfols_run(toy), toy_w, toy_v)
    ok = c1 == h1 and c2 == h2 and c1 > 0 and c2 > 0
    record(6, ok, f"worst sweep weight within 1e-3 of a corner/queued weight: DST {h1}/{c1} iterations, toy {h2}/{c2}")
    assert ok


def test_criterion_07_gap_bound_audit(toy):
    cases = [("toy", toy, np.asarray(simplex_sweep(1001)))]
    lattice = np.asarray(simplex_lattice(3, 20))
    for seed in range(5):
        cases.append((f"random{seed}", build_random_momdp(seed, 6, 3, 3, gamma=0.9), lattice))
    audits, failures = 0, []
    worst_excess = -np.inf
    for name, m, grid in cases:
        result = sfols_run(m)
        for n in range(1, len(result.psi_set) + 1):
            audit = gap_bound_audit(result.psi_set.prefix(n), m, grid, check=False)
            audits += 1
            worst_excess = max(worst_excess, audit.observed_gap - audit.bound)
            if not audit.holds:
                failures.append(f"{name}[{n}]")
    ok = not failures
    record(7, ok, f"{audits} partial sets audited, {len(failures)} bound violations, max (observed gap - bound) = {worst_excess:.2e}")
    assert ok


def test_criterion_08_toy_end_to_end(toy):
    start = time.perf_counter()
    result = sfols_run(toy)
    elapsed = time.perf_counter() - start
    expected = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.75, 0.75])]
    ok = len(result.iterations) == 5 and same_vector_sets(result.psi_set.vectors, expected, tol=1e-9) and elapsed < 1
    record(8, ok, f"toy solved {len(result.iterations)} tasks, Psi={result.psi_set.vectors.tolist()} time={elapsed:.3f}s")
    assert ok


@pytest.mark.slow
def test_criterion_09_qlearning_mode(dst):
    start = time.perf_counter()
    ratios = []
    for seed in range(3):
        cfg = SFOLSConfig(solver="qlearning", seed=seed, qlearning=QLearnConfig(learning_rate=0.3, epsilon_start=1.0, epsilon_end=0.05, num_steps=100_000))
        result = sfols_run(dst, cfg)
        rep = _evaluate(dst, result.psi_set, sample_simplex_weights(64, 2, seed=100 + seed))
        ratios.append(float(rep.gap_gpi.mean() / abs(rep.v_star.mean())))
    elapsed = time.perf_counter() - start
    ok = float(np.mean(ratios)) <= 0.05 and elapsed < 300
    record(9, ok, f"mean GPI gap / |mean v*| per seed = {[round(r, 5) for r in ratios]} time={elapsed:.1f}s")
    assert ok


def test_criterion_10_hypervolume(dst_run):
    exact = hypervolume([(1.0, 2.0), (2.0, 1.0)], (0.0, 0.0))
    result, _ = dst_run
    trace = [hypervolume(result.psi_at(rec.iteration).vectors, DST_HV_REF) for rec in result.iterations]
    monotone = all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
    ok = abs(exact - 3.0) <= 1e-12 and monotone
    record(10, ok, f"HV{{(1,2),(2,1)}} = {exact!r}; DST per-iteration HV non-decreasing = {monotone} (final {trace[-1]:.4f})")
    assert ok


def test_criterion_11_baseline_orderings(dst, dst_run):
    result, _ = dst_run
    budget = len(result.iterations)
    rows, wcpi_stops = [], []
    for seed in range(5):
        weights = sample_simplex_weights(64, 2, seed=200 + seed)
        v_sfols = _evaluate(dst, result.psi_set, weights).v_gpi.mean()
        wc = wcpi_run(dst, SFOLSConfig(), max_iters=budget, seed=seed)
        rw = random_weights_run(dst, SFOLSConfig(), num_iters=budget, seed=seed)
        v_wc = _evaluate(dst, wc.psi_set, weights).v_gpi.mean()
        v_rw = _evaluate(dst, rw.psi_set, weights).v_gpi.mean()
        wcpi_stops.append(wc.stop_reason)
        rows.append((v_sfols, v_wc, v_rw))
    ok = all(s >= w - 1e-6 and s >= r - 1e-6 for s, w, r in rows) and all(s == "no improvement" for s in wcpi_stops)
    detail = "; ".join(f"{s:.3f}/{w:.3f}/{r:.3f}" for s, w, r in rows)
    record(11, ok, f"mean test value SFOLS/WCPI/random over 5 seeds (budget {budget}): {detail}; WCPI stops={set(wcpi_stops)}")
    assert ok


def test_criterion_12_vertex_discovery():
    start = time.perf_counter()
    mismatches, cases = [], 0
    for num_states in (2, 3):
        for seed in range(5):
            m = one_hot_wrap(build_continuing_mdp(seed, num_states, 2))
            report = vertex_discovery_check(m, sfols_run(m).psi_set)
            cases += 1
            if not report.equal:
                extra = len(report.found) - len(report.oracle)
                mismatches.append(f"S={num_states} seed={seed} (|Psi|={len(report.found)}, vertices={len(report.oracle)}, pruned match={report.vertices_equal}, extra={extra})")
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 10
    record(12, ok, f"{cases - len(mismatches)}/{cases} MDPs with Psi equal to the vertex set; time={elapsed:.2f}s" + (f"; mismatches: {mismatches}" if mismatches else ""))
    assert ok


@pytest.mark.slow
def test_criterion_13_four_room():
    start = time.perf_counter()
    m = build_four_room(FourRoomConfig(instances_per_type=2))
    result = sfols_run(m, SFOLSConfig(check_dual=False))
    pruned = np.asarray(prune_to_ccs(result.psi_set.vectors))
    weights = sample_simplex_weights(101, 3, seed=13)
    gap = max(abs(planner.optimal_value(m, w) - float((pruned @ w).max())) for w in weights)
    elapsed = time.perf_counter() - start
    ok = result.stop_reason == "queue empty" and gap <= 1e-5 and elapsed < 180
    record(13, ok, f"Four Room |S|={m.num_states} solved {len(result.iterations)} tasks, |pruned Psi|={len(pruned)}, max |max psi.w - v*| = {gap:.2e} time={elapsed:.1f}s")
    assert ok


def test_criterion_03_gpi_dominance_chain(dst, toy):
    # extra runs so this criterion also stands alone
    for m in (toy, build_random_momdp(7, 6, 3, 3, gamma=0.9)):
        result = sfols_run(m)
        for n in range(1, len(result.psi_set) + 1):
            _evaluate(m, result.psi_set.prefix(n), sample_simplex_weights(32, m.d, seed=n))
    rows = sum(len(r) for r in REPORTS)
    bad = [msg for r in REPORTS for msg in r.check(1e-6)]
    ok = rows > 0 and not bad
    record(3, ok, f"{rows} report rows across {len(REPORTS)} reports; {len(bad)} violations of v_smp <= v_gpi <= v*")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
