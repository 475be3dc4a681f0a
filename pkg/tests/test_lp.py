import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfols.lp import LinearProgram, LPStatus, Singular, solve_linear_system, solve_lp


def test_box_optimum():
    res = solve_lp(LinearProgram(c=[1, 1], A_ub=[[1, 0], [0, 1]], b_ub=[1, 1]))
    assert res.status is LPStatus.OPTIMAL
    assert res.objective == pytest.approx(2.0) and np.allclose(res.x, [1, 1])


def test_infeasible():
    res = solve_lp(LinearProgram(c=[1], A_ub=[[1], [-1]], b_ub=[-1, -2], bounds=[(-np.inf, np.inf)]))
    assert res.status is LPStatus.INFEASIBLE


def test_unbounded():
    res = solve_lp(LinearProgram(c=[1]))
    assert res.status is LPStatus.UNBOUNDED


def test_equality_and_free_variable():
    # max -t s.t. t >= w0, t >= 1 - w0, w on the simplex: t = 0.5
    lp = LinearProgram(
        c=[0, 0, -1],
        A_ub=[[1, 0, -1], [0, 1, -1]],
        b_ub=[0, 0],
        A_eq=[[1, 1, 0]],
        b_eq=[1],
        bounds=[(0, 1), (0, 1), (-np.inf, np.inf)],
    )
    res = solve_lp(lp)
    assert res.objective == pytest.approx(-0.5)


def _vertex_enumeration(c, A, b, box):
    """Brute-force optimum of max c.x over {A x <= b, |x| <= box} in 2D."""
    rows = list(A) + [[1, 0], [-1, 0], [0, 1], [0, -1]]
    rhs = list(b) + [box] * 4
    best = -np.inf
    for i, j in itertools.combinations(range(len(rows)), 2):
        M = np.array([rows[i], rows[j]], dtype=float)
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, [rhs[i], rhs[j]])
        if np.all(np.asarray(rows) @ x <= np.asarray(rhs) + 1e-7):
            best = max(best, float(np.dot(c, x)))
    return best


coef = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))


@settings(max_examples=80, deadline=None)
@given(st.lists(coef, min_size=2, max_size=2), st.lists(st.lists(coef, min_size=2, max_size=2), min_size=1, max_size=5), st.lists(st.floats(0.1, 5), min_size=5, max_size=5))
def test_matches_vertex_enumeration(c, A, b):
    b = b[: len(A)]  # rhs >= 0 keeps the origin feasible
    lp = LinearProgram(c=c, A_ub=A, b_ub=b, bounds=[(-3, 3)] * 2)
    res = solve_lp(lp)
    assert res.status is LPStatus.OPTIMAL
    assert res.objective == pytest.approx(_vertex_enumeration(c, A, b, 3.0), abs=1e-7)
    assert np.all(np.asarray(A) @ res.x <= np.asarray(b) + 1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_matches_scipy(seed):
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(seed)
    n, m = 4, 6
    c, A, b = rng.normal(size=n), rng.normal(size=(m, n)), rng.random(m) + 0.1
    A_eq, b_eq = np.ones((1, n)), [1.0]
    ours = solve_lp(LinearProgram(c=c, A_ub=A, b_ub=b, A_eq=A_eq, b_eq=b_eq, bounds=[(-2, 2)] * n))
    ref = scipy_opt.linprog(-c, A_ub=A, b_ub=b, A_eq=A_eq, b_eq=b_eq, bounds=[(-2, 2)] * n, method="highs")
    if ref.status == 2:
        assert ours.status is LPStatus.INFEASIBLE
    else:
        assert ours.objective == pytest.approx(-ref.fun, abs=1e-7)


def test_linear_system_identity():
    assert np.allclose(solve_linear_system(np.eye(2), [3, 4]), [3, 4])


def test_linear_system_hand_case():
    assert np.allclose(solve_linear_system([[1, 1], [1, -1]], [1, 0]), [0.5, 0.5])


def test_linear_system_singular():
    with pytest.raises(Singular):
        solve_linear_system([[1, 1], [2, 2]], [1, 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_linear_system_random(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    b = rng.normal(size=4)
    assert np.allclose(M @ solve_linear_system(M, b), b, atol=1e-9)
