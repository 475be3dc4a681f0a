import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfols import planner
from sfols.envs import build_dst, build_random_momdp, build_toy3
from sfols.evaluation import simplex_sweep
from sfols.gpi import (
    EmptySet,
    GPIEvaluator,
    PolicyEntry,
    SFSet,
    evaluate_gpi_policy,
    gpi_action,
    gpi_expanded_sfs,
    gpi_policy,
    make_entry,
    prune_to_ccs,
    same_vector_sets,
    smp_value,
)


def _entry(vec, table=None):
    vec = np.asarray(vec, dtype=float)
    table = np.zeros((1, 1, vec.size)) if table is None else np.asarray(table, dtype=float)
    return PolicyEntry(np.zeros(table.shape[0], dtype=np.int64), table, vec, np.ones(vec.size) / vec.size)


def _set(*vectors):
    return SFSet(_entry(v) for v in vectors)


def test_gpi_action_singleton():
    table = np.array([[[0.3, 0.0], [0.1, 0.5]]])
    assert gpi_action(SFSet([_entry((0, 0), table)]), 0, (1.0, 0.0)) == 0
    assert gpi_action(SFSet([_entry((0, 0), table)]), 0, (0.0, 1.0)) == 1


def test_gpi_action_max_over_entries():
    # scalarized values {a1: 0.3, a2: 0.1} and {a1: 0.2, a2: 0.4} with w = (1, 0)
    e1 = _entry((0, 0), [[[0.3, 0], [0.1, 0]]])
    e2 = _entry((1, 1), [[[0.2, 0], [0.4, 0]]])
    assert gpi_action(SFSet([e1, e2]), 0, (1.0, 0.0)) == 1


def test_gpi_action_tie_lowest_index():
    e1 = _entry((0, 0), [[[0.4, 0], [0.4, 0]]])
    assert gpi_action(SFSet([e1]), 0, (1.0, 0.0)) == 0


def test_empty_set_errors():
    with pytest.raises(EmptySet):
        smp_value(SFSet(), (1.0, 0.0))
    with pytest.raises(EmptySet):
        gpi_action(SFSet(), 0, (1.0, 0.0))


def test_smp_value_cases():
    s = _set((1, 0), (0, 1), (0.6, 0.6))
    assert smp_value(s, (0.5, 0.5)) == (pytest.approx(0.6), 2)
    assert smp_value(s, (1.0, 0.0))[0] == pytest.approx(1.0)
    assert smp_value(_set((0.3, 0.2)), (0.5, 0.5))[0] == pytest.approx(0.25)


def test_sfset_dedup():
    s = _set((1, 0), (1 + 1e-8, 0), (0, 1))
    assert len(s) == 2 and (1.0, 0.0) in s and s.index_of((0, 1)) == 1


def test_prune_cases():
    assert same_vector_sets(prune_to_ccs([(1, 0), (0, 1), (0.4, 0.4)]), [(1, 0), (0, 1)])
    assert len(prune_to_ccs([(1, 0), (0, 1), (0.6, 0.6)])) == 3
    assert prune_to_ccs([]) == []


def test_prune_strict_drops_face_points():
    # (0.5, 0.5) ties with both extremes at w = (0.5, 0.5) but never wins alone
    assert len(prune_to_ccs([(1, 0), (0, 1), (0.5, 0.5)])) == 3
    assert len(prune_to_ccs([(1, 0), (0, 1), (0.5, 0.5)], strict=True)) == 2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=8))
def test_prune_keeps_every_sweep_maximizer(points):
    kept = np.asarray(prune_to_ccs(points))
    P = np.asarray(points)
    for w in simplex_sweep(51):
        assert (kept @ w).max() >= (P @ w).max() - 1e-9


def _toy_ccs():
    m = build_toy3()
    return m, SFSet(make_entry(m, planner.solve_task(m, w)[0], w) for w in ((1, 0), (0, 1), (0.5, 0.5)))


def test_gpi_on_toy_ccs_is_optimal():
    m, s = _toy_ccs()
    for w in simplex_sweep(21):
        assert evaluate_gpi_policy(m, s, w) == pytest.approx(planner.optimal_value(m, w), abs=1e-8)


def test_gpi_singleton_at_source_weight():
    m = build_dst()
    w = np.array([0.3, 0.7])
    e = make_entry(m, planner.solve_task(m, w)[0], w)
    s = SFSet([e])
    assert evaluate_gpi_policy(m, s, w) == pytest.approx(e.expected_sf @ w, abs=1e-8)
    out = gpi_expanded_sfs(m, s, [w])
    assert len(out) == 1 and np.allclose(out[0], e.expected_sf, atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1))
def test_gpi_dominates_smp(seed, x):
    m = build_random_momdp(seed, 5, 3, 2, gamma=0.8)
    rng = np.random.default_rng(seed)
    s = SFSet(make_entry(m, rng.integers(3, size=5), (0.5, 0.5)) for _ in range(3))
    w = np.array([x, 1 - x])
    assert evaluate_gpi_policy(m, s, w) >= smp_value(s, w)[0] - 1e-7


def test_evaluator_matches_scalar_evaluation():
    m = build_random_momdp(3, 6, 3, 2, gamma=0.9)
    rng = np.random.default_rng(0)
    s = SFSet(make_entry(m, rng.integers(3, size=6), (0.5, 0.5)) for _ in range(4))
    ev = GPIEvaluator(m, s)
    for w in simplex_sweep(11):
        assert ev.value(w) == pytest.approx(evaluate_gpi_policy(m, s, w), abs=1e-6)


def test_expanded_set_within_ccs():
    m, s = _toy_ccs()
    out = gpi_expanded_sfs(m, s, simplex_sweep(101))
    assert same_vector_sets(prune_to_ccs(out + list(s.vectors)), s.vectors)


def test_dump_round_trip_fields():
    m, s = _toy_ccs()
    doc = s.dump(include_tables=True)
    assert set(doc[0]) == {"source_weight", "expected_sf", "solver_tag", "policy", "sf_table"}
    assert np.allclose(doc[2]["expected_sf"], (0.75, 0.75))
    assert gpi_policy(s, (0.5, 0.5))[0] == 2
