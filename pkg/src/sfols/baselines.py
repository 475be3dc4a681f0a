"""Competing ways of building a policy set: WCPI, SIP and random task weights."""

from __future__ import annotations

import numpy as np

from .gpi import SFSet
from .lp import LinearProgram, solve_lp
from .momdp import raw_weight, validate_weight
from .ols import IterationRecord, LPFailure, RunResult, SFOLSConfig, solve_with

WCPI_IMPROVEMENT_TOL = 1e-6
SIP_NEGATIVE = 0.1


def _record(result: RunResult, w, entry, new: bool) -> IterationRecord:
    rec = IterationRecord(len(result.iterations) + 1, np.asarray(w, dtype=float), entry.expected_sf, new, len(result.psi_set))
    result.iterations.append(rec)
    return rec


def worst_case_weight(psi_set: SFSet) -> tuple[np.ndarray, float]:
    """Weight minimizing ``max_i psi_i . w`` over the simplex, and that value.

    Solved as the epigraph LP ``min t`` s.t. ``psi_i . w <= t``.
    """
    V = psi_set.vectors
    n, d = V.shape
    lp = LinearProgram(
        c=np.r_[np.zeros(d), -1.0],
        A_ub=np.hstack([V, -np.ones((n, 1))]),
        b_ub=np.zeros(n),
        A_eq=np.r_[np.ones(d), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0.0, 1.0)] * d + [(-np.inf, np.inf)],
    )
    res = solve_lp(lp)
    if not res.optimal:
        raise LPFailure(f"worst-case LP returned {res.status.value}")
    w = np.clip(res.x[:d], 0.0, None)
    return w / w.sum(), -res.objective


def wcpi_run(momdp, cfg: SFOLSConfig = None, max_iters: int = 100, seed: int = 0) -> RunResult:
    """Worst-case policy iteration.

    The first task is a seeded random simplex weight.  Afterwards each task is
    the current worst-case weight of the set; the run stops once the
    worst-case value improves by less than ``1e-6`` or ``max_iters`` tasks
    have been solved.  ``metrics['worst_value']`` logs the min-max value seen
    before each solve.
    """
    cfg = cfg or SFOLSConfig()
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    psi_set = SFSet()
    result = RunResult("wcpi", psi_set)
    w = np.random.default_rng(seed).dirichlet(np.ones(momdp.d))
    prev = None
    while True:
        entry = solve_with(momdp, w, psi_set, cfg, len(result.iterations))
        new = psi_set.add(entry)
        rec = _record(result, w, entry, new)
        if prev is not None:
            rec.metrics["worst_value"] = prev
        if len(result.iterations) >= max_iters:
            result.stop_reason = "iteration cap"
            break
        w, value = worst_case_weight(psi_set)
        if prev is not None and value - prev < WCPI_IMPROVEMENT_TOL:
            result.stop_reason = "no improvement"
            rec.metrics["final_worst_value"] = value
            break
        prev = value
    return result


def sip_weights(d: int, negative: float = SIP_NEGATIVE) -> list[np.ndarray]:
    """One weight per feature: ``+1`` on it and ``-negative`` everywhere else."""
    if d < 1:
        raise ValueError("d must be positive")
    if negative <= 0:
        raise ValueError("negative magnitude must be positive")
    out = []
    for i in range(d):
        w = np.full(d, -float(negative))
        w[i] = 1.0
        out.append(raw_weight(w))
    return out


def sip_run(momdp, cfg: SFOLSConfig = None, negative: float = SIP_NEGATIVE) -> RunResult:
    """Set of independent policies, one per feature; duplicate SFs are dropped."""
    cfg = cfg or SFOLSConfig()
    psi_set = SFSet()
    result = RunResult("sip", psi_set)
    for w in sip_weights(momdp.d, negative):
        entry = solve_with(momdp, w, psi_set, cfg, len(result.iterations))
        _record(result, w, entry, psi_set.add(entry))
    result.stop_reason = "all features solved"
    return result


def random_weights_run(momdp, cfg: SFOLSConfig = None, num_iters: int = 10, seed: int = 0) -> RunResult:
    """Solve ``num_iters`` flat-Dirichlet tasks."""
    cfg = cfg or SFOLSConfig()
    if num_iters < 1:
        raise ValueError("num_iters must be positive")
    rng = np.random.default_rng(seed)
    psi_set = SFSet()
    result = RunResult("random_weights", psi_set)
    for w in rng.dirichlet(np.ones(momdp.d), size=num_iters):
        w = validate_weight(w / w.sum())
        entry = solve_with(momdp, w, psi_set, cfg, len(result.iterations))
        _record(result, w, entry, psi_set.add(entry))
    result.stop_reason = "budget exhausted"
    return result


def smp_worst_value(psi_set: SFSet) -> float:
    return worst_case_weight(psi_set)[1]

