"""Small dense LP and linear-system kernel.

``solve_lp`` is a two-phase tableau simplex using Bland's rule, so it never
cycles and returns the same vertex on every platform.  The problems handled
here have at most a few dozen rows, so no attention is paid to sparsity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-7


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericalFailure(RuntimeError):
    pass


class Singular(ValueError):
    pass


@dataclass
class LinearProgram:
    """``maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi``."""

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.A_ub.shape[0] != self.b_ub.size or self.A_eq.shape[0] != self.b_eq.size:
            raise ValueError("constraint rows and right-hand sides differ in length")
        if self.bounds is None:
            self.bounds = [(0.0, np.inf)] * n
        if len(self.bounds) != n:
            raise ValueError("one (lo, hi) bound pair is required per variable")
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]

    @property
    def num_vars(self) -> int:
        return self.c.size

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if self.A_ub.size and np.any(self.A_ub @ x > self.b_ub + tol):
            return False
        if self.A_eq.size and np.any(np.abs(self.A_eq @ x - self.b_eq) > tol):
            return False
        return all(lo - tol <= xi <= hi + tol for xi, (lo, hi) in zip(x, self.bounds))


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = field(default=0, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def _standard_form(lp: LinearProgram):
    """Map bounded free variables onto non-negative ones.

    Returns ``(c, A_ub, b_ub, A_eq, b_eq, recover)`` with ``x >= 0`` implied and
    ``recover(y)`` mapping a standard-form solution back to ``x``.
    """
    n = lp.num_vars
    cols = []  # (orig index, sign, offset) per standard variable
    offsets = np.zeros(n)
    extra_ub_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo > hi:
            return None
        if np.isfinite(lo):
            offsets[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offsets[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    m = len(cols)
    T = np.zeros((n, m))
    for k, (j, sgn) in enumerate(cols):
        T[j, k] = sgn
    # x = offsets + T y
    c = lp.c @ T
    A_ub = lp.A_ub @ T
    b_ub = lp.b_ub - lp.A_ub @ offsets
    if extra_ub_rows:
        rows = np.zeros((len(extra_ub_rows), m))
        rhs = np.zeros(len(extra_ub_rows))
        for r, (k, width) in enumerate(extra_ub_rows):
            rows[r, k] = 1.0
            rhs[r] = width
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, rhs])
    A_eq = lp.A_eq @ T
    b_eq = lp.b_eq - lp.A_eq @ offsets
    return c, A_ub, b_ub, A_eq, b_eq, (lambda y: offsets + T @ y)


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _simplex(tab: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> tuple[str, int]:
    """Maximize the objective held in the last row (stored as ``-c``) with Bland's rule."""
    m = tab.shape[0] - 1
    for it in range(max_iter):
        obj = tab[-1, :-1]
        candidates = np.flatnonzero((obj < -PIVOT_TOL) & allowed)
        if candidates.size == 0:
            return "optimal", it
        col = int(candidates[0])
        column = tab[:m, col]
        positive = column > PIVOT_TOL
        if not np.any(positive):
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tab, basis, row, col)
    raise NumericalFailure(f"simplex did not terminate within {max_iter} pivots")


def solve_lp(lp: LinearProgram, max_iter: int = 10_000) -> LPResult:
    """Solve ``lp`` exactly up to floating-point pivoting error."""
    sf = _standard_form(lp)
    if sf is None:
        return LPResult(LPStatus.INFEASIBLE)
    c, A_ub, b_ub, A_eq, b_eq, recover = sf
    n = c.size
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: structural | slacks (one per ub row) | artificials (one per row needing it)
    rows = []
    rhs = []
    slack_sign = []
    for i in range(m_ub):
        if b_ub[i] >= 0:
            rows.append(A_ub[i])
            rhs.append(b_ub[i])
            slack_sign.append(1.0)
        else:
            rows.append(-A_ub[i])
            rhs.append(-b_ub[i])
            slack_sign.append(-1.0)
    for i in range(m_eq):
        sgn = 1.0 if b_eq[i] >= 0 else -1.0
        rows.append(sgn * A_eq[i])
        rhs.append(sgn * b_eq[i])

    needs_art = [i for i in range(m) if i >= m_ub or slack_sign[i] < 0]
    n_art = len(needs_art)
    width = n + m_ub + n_art
    tab = np.zeros((m + 1, width + 1))
    basis: list[int] = [0] * m
    for i in range(m):
        tab[i, :n] = rows[i]
        tab[i, -1] = rhs[i]
        if i < m_ub:
            tab[i, n + i] = slack_sign[i]
            basis[i] = n + i
    for k, i in enumerate(needs_art):
        tab[i, n + m_ub + k] = 1.0
        basis[i] = n + m_ub + k

    iterations = 0
    allowed = np.ones(width, dtype=bool)
    if n_art:
        # phase 1: maximize -sum(artificials)
        tab[-1, :] = 0.0
        tab[-1, n + m_ub:width] = 1.0
        for i in needs_art:
            tab[-1] -= tab[i]
        status, it = _simplex(tab, basis, allowed, max_iter)
        iterations += it
        if -tab[-1, -1] > FEAS_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
            return LPResult(LPStatus.INFEASIBLE, iterations=iterations)
        # drive remaining artificials out of the basis
        art_cols = set(range(n + m_ub, width))
        for r in range(m):
            if basis[r] in art_cols:
                nonart = np.flatnonzero(np.abs(tab[r, : n + m_ub]) > PIVOT_TOL)
                if nonart.size:
                    _pivot(tab, basis, r, int(nonart[0]))
        allowed[n + m_ub:] = False
        keep = [r for r in range(m) if basis[r] not in art_cols]
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = [basis[r] for r in keep]
        m = len(keep)

    # phase 2
    tab[-1, :] = 0.0
    tab[-1, :n] = -c
    for r in range(m):
        if tab[-1, basis[r]] != 0.0:
            tab[-1] -= tab[-1, basis[r]] * tab[r]
    status, it = _simplex(tab, basis, allowed, max_iter)
    iterations += it
    if status == "unbounded":
        return LPResult(LPStatus.UNBOUNDED, iterations=iterations)
    y = np.zeros(width)
    for r in range(m):
        y[basis[r]] = tab[r, -1]
    x = recover(y[:n])
    return LPResult(LPStatus.OPTIMAL, x=x, objective=float(lp.c @ x), iterations=iterations)


def solve_linear_system(M, b, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    Raises:
        Singular: if a pivot smaller than ``pivot_tol`` is met.
    """
    A = np.array(M, dtype=float)
    x = np.array(b, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or x.size != n:
        raise ValueError("M must be square and match b")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) < pivot_tol * scale:
            raise Singular(f"matrix is singular at column {k}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            x[[k, p]] = x[[p, k]]
        f = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] -= np.outer(f, A[k, k:])
        x[k + 1:] -= f * x[k]
    for k in reversed(range(n)):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x
