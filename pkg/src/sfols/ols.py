"""Optimistic linear support over successor features.

The driver keeps a priority queue of candidate task weights.  Each iteration
solves the highest-priority task, and when the resulting SF vector is new it
retires queued weights the vector improves on, derives the new corner weights
of the upper surface ``max_i psi_i . w`` and queues them by their optimistic
improvement.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import planner
from .gpi import PolicyEntry, SFSet, make_entry, smp_value
from .lp import LinearProgram, Singular, solve_linear_system, solve_lp
from .momdp import SIMPLEX_TOL, TabularMOMDP, simplex_extrema
from .qlearning import QLearnConfig, learn_sf_qlearning

log = logging.getLogger(__name__)

WEIGHT_DEDUP_TOL = 1e-6
REMOVAL_SLACK = 1e-9
SURFACE_TOL = 1e-9


class LPFailure(RuntimeError):
    pass


class IterationCapExceeded(RuntimeError):
    def __init__(self, message: str, result: "RunResult"):
        super().__init__(message)
        self.result = result


@dataclass
class SFOLSConfig:
    epsilon: float = 0.0
    max_iterations: int = 1_000
    solver: str = "planner"  # planner | qlearning
    planner_tol: float = 1e-8
    qlearning: QLearnConfig = field(default_factory=QLearnConfig)
    seed: int = 0
    check_dual: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.solver not in ("planner", "qlearning"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(eq=False)
class QueueEntry:
    weight: np.ndarray
    priority: float
    seq: int


class WeightQueue:
    """Max-priority queue; equal priorities pop in insertion order."""

    def __init__(self):
        self._items: list[QueueEntry] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, w, priority: float) -> None:
        self._items.append(QueueEntry(np.asarray(w, dtype=float), float(priority), self._seq))
        self._seq += 1

    def peek(self) -> QueueEntry:
        return max(self._items, key=lambda e: (e.priority, -e.seq))

    def pop(self) -> QueueEntry:
        top = self.peek()
        self._items = [e for e in self._items if e is not top]
        return top

    def remove_where(self, pred: Callable[[np.ndarray], bool]) -> list[np.ndarray]:
        gone = [e.weight for e in self._items if pred(e.weight)]
        self._items = [e for e in self._items if not pred(e.weight)]
        return gone

    def weights(self) -> list[np.ndarray]:
        return [e.weight for e in self._items]

    def snapshot(self) -> list[tuple[np.ndarray, float]]:
        return [(e.weight.copy(), e.priority) for e in sorted(self._items, key=lambda e: e.seq)]

    @property
    def max_priority(self) -> float | None:
        return self.peek().priority if self._items else None


@dataclass
class IterationRecord:
    iteration: int
    weight: np.ndarray
    expected_sf: np.ndarray
    new_policy: bool
    num_policies: int
    removed: list[np.ndarray] = field(default_factory=list)
    corners: list[tuple[np.ndarray, float]] = field(default_factory=list)
    queue: list[tuple[np.ndarray, float]] = field(default_factory=list)
    lp_checks: list[tuple[np.ndarray, float, float | None]] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def max_priority(self) -> float | None:
        return max((p for _, p in self.queue), default=None)


@dataclass
class RunResult:
    algorithm: str
    psi_set: SFSet
    iterations: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""
    queue: list[tuple[np.ndarray, float]] = field(default_factory=list)

    @property
    def solved_weights(self) -> list[np.ndarray]:
        return [r.weight for r in self.iterations]

    def psi_at(self, iteration: int) -> SFSet:
        """Policy set as it stood after ``iteration`` (1-based)."""
        return self.psi_set.prefix(self.iterations[iteration - 1].num_policies)


def _near(w, pool, tol: float = WEIGHT_DEDUP_TOL) -> bool:
    return any(np.max(np.abs(np.asarray(w) - np.asarray(p))) <= tol for p in pool)


def value_box(momdp: TabularMOMDP) -> float:
    """Magnitude bound on any expected SF component: ``phi_max / (1 - gamma)``."""
    return momdp.phi_max / (1.0 - momdp.gamma)


def optimistic_upper_bound(w, solved_weights, solved_values, box: float | None = None) -> float:
    """``max psi . w`` subject to ``psi . w_i <= v_i`` for every solved weight."""
    w = np.asarray(w, dtype=float)
    d = w.size
    bounds = [(-box, box)] * d if box is not None else [(-np.inf, np.inf)] * d
    lp = LinearProgram(c=w, A_ub=np.asarray(solved_weights, dtype=float).reshape(-1, d), b_ub=solved_values, bounds=bounds)
    res = solve_lp(lp)
    if res.status.value == "unbounded":
        return np.inf
    if not res.optimal:
        raise LPFailure(f"improvement LP returned {res.status.value}")
    return res.objective


def estimate_improvement(w, psi_set: SFSet, solved_weights, box: float | None = None) -> float:
    """Optimistic improvement ``upper bound - max_i psi_i . w`` at ``w``."""
    if len(solved_weights) == 0:
        raise ValueError("at least one solved weight is required")
    values = [smp_value(psi_set, wi)[0] for wi in solved_weights]
    upper = optimistic_upper_bound(w, solved_weights, values, box)
    return upper - smp_value(psi_set, w)[0]


def dual_upper_bound(w, solved_weights, solved_values) -> float | None:
    """``min sum_i alpha_i v_i`` s.t. ``sum_i alpha_i w_i = w``, ``alpha >= 0``.

    Returns ``None`` when ``w`` is outside the cone of the solved weights.
    """
    W = np.asarray(solved_weights, dtype=float)
    v = np.asarray(solved_values, dtype=float)
    lp = LinearProgram(c=-v, A_eq=W.T, b_eq=np.asarray(w, dtype=float))
    res = solve_lp(lp)
    if res.status.value == "infeasible":
        return None
    if not res.optimal:
        raise LPFailure(f"dual LP returned {res.status.value}")
    return -res.objective


def _maximizers(vectors: np.ndarray, w) -> np.ndarray:
    vals = vectors @ np.asarray(w, dtype=float)
    best = vals.max()
    return np.flatnonzero(vals >= best - SURFACE_TOL * max(1.0, abs(best)))


def corner_weights(psi_new, w_solved, psi_set: SFSet, removed, known=()) -> list[np.ndarray]:
    """New corner weights of the upper surface created by ``psi_new``.

    Args:
        psi_new: expected SF of the policy just solved (not yet in ``psi_set``).
        w_solved: weight that was just solved.
        psi_set: the policy set before insertion.
        removed: weights retired from the queue this iteration.
        known: weights to skip (already solved or queued).
    """
    psi_new = np.asarray(psi_new, dtype=float)
    d = psi_new.size
    w_del = [np.asarray(w, dtype=float) for w in removed] + [np.asarray(w_solved, dtype=float)]
    vectors = psi_set.vectors if len(psi_set) else np.zeros((0, d))

    rel_vectors: list[int] = []
    if len(vectors):
        for w in w_del:
            for i in _maximizers(vectors, w):
                if i not in rel_vectors:
                    rel_vectors.append(int(i))
    rel_bounds = sorted({i for w in w_del for i in range(d) if w[i] <= SIMPLEX_TOL})
    items = [("v", i) for i in rel_vectors] + [("b", i) for i in rel_bounds]

    out: list[np.ndarray] = []
    for subset in itertools.combinations(items, d - 1):
        M = np.zeros((d, d))
        for row, (kind, i) in enumerate(subset):
            if kind == "v":
                M[row] = psi_new - vectors[i]
            else:
                M[row, i] = 1.0
        M[-1] = 1.0
        rhs = np.zeros(d)
        rhs[-1] = 1.0
        try:
            wc = solve_linear_system(M, rhs)
        except Singular:
            continue
        if np.any(wc < -SIMPLEX_TOL):
            continue
        wc = np.clip(wc, 0.0, None)
        wc = wc / wc.sum()
        # a corner of the new surface must lie on it
        if len(vectors):
            top = float((vectors @ wc).max())
            if psi_new @ wc < top - SURFACE_TOL * max(1.0, abs(top)):
                continue
        if _near(wc, known) or _near(wc, out):
            continue
        out.append(wc)
    return out


def solve_with(momdp: TabularMOMDP, w, psi_set: SFSet, cfg: SFOLSConfig, task_index: int) -> PolicyEntry:
    """Solve task ``w`` with the configured inner solver; SFs are always exact."""
    if cfg.solver == "planner":
        policy, table, psi = planner.solve_task(momdp, w, cfg.planner_tol)
        return PolicyEntry(policy, table, psi, np.asarray(w, dtype=float), "planner")
    qcfg = replace(cfg.qlearning, seed=int(np.random.SeedSequence([cfg.seed, task_index]).generate_state(1)[0]))
    policy, _ = learn_sf_qlearning(momdp, w, list(psi_set), qcfg)
    return make_entry(momdp, policy, w, "qlearning", cfg.planner_tol)


def sfols_run(momdp: TabularMOMDP, cfg: SFOLSConfig = None, metrics: Callable[[SFSet], dict] | None = None) -> RunResult:
    """Run SFOLS until the queue is exhausted or no entry beats ``cfg.epsilon``."""
    cfg = cfg or SFOLSConfig()
    d = momdp.d
    box = value_box(momdp)
    psi_set = SFSet()
    solved: list[np.ndarray] = []
    queue = WeightQueue()
    for w in simplex_extrema(d):
        queue.push(w, np.inf)
    result = RunResult("sfols", psi_set)

    while True:
        if len(queue) == 0:
            result.stop_reason = "queue empty"
            break
        if queue.max_priority <= cfg.epsilon:
            result.stop_reason = "epsilon reached"
            break
        if len(result.iterations) >= cfg.max_iterations:
            result.stop_reason = "iteration cap"
            result.queue = queue.snapshot()
            raise IterationCapExceeded(f"SFOLS hit {cfg.max_iterations} iterations", result)

        w = queue.pop().weight
        entry = solve_with(momdp, w, psi_set, cfg, len(result.iterations))
        solved.append(w)
        rec = IterationRecord(len(result.iterations) + 1, w, entry.expected_sf, False, len(psi_set))

        if entry.expected_sf not in psi_set:
            psi_new = entry.expected_sf
            if len(psi_set):
                def improved(wq):
                    return psi_new @ wq > smp_value(psi_set, wq)[0] + REMOVAL_SLACK

                rec.removed = queue.remove_where(improved)
            corners = corner_weights(psi_new, w, psi_set, rec.removed, known=solved + queue.weights())
            psi_set.add(entry)
            rec.new_policy = True
            rec.num_policies = len(psi_set)
            values = [smp_value(psi_set, ws)[0] for ws in solved]
            for wc in corners:
                upper = optimistic_upper_bound(wc, solved, values, box)
                delta = upper - smp_value(psi_set, wc)[0]
                if cfg.check_dual:
                    rec.lp_checks.append((wc, upper, dual_upper_bound(wc, solved, values)))
                rec.corners.append((wc, delta))
                if delta > cfg.epsilon + 1e-9 * max(1.0, abs(upper)):
                    queue.push(wc, delta)

        rec.queue = queue.snapshot()
        if metrics is not None:
            rec.metrics = metrics(psi_set)
        result.iterations.append(rec)
        log.debug("iteration %d: w=%s new=%s |Psi|=%d |Q|=%d", rec.iteration, w, rec.new_policy, len(psi_set), len(queue))

    result.queue = queue.snapshot()
    return result
