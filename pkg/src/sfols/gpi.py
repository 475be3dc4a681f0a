"""Policy sets over successor features: GPI, SMP values and CCS pruning."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import planner
from .lp import LinearProgram, solve_lp
from .momdp import TabularMOMDP

SF_DEDUP_TOL = 1e-6
PRUNE_SLACK_TOL = 1e-9


class EmptySet(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PolicyEntry:
    policy: np.ndarray
    sf_table: np.ndarray
    expected_sf: np.ndarray
    source_weight: np.ndarray
    solver_tag: str = "planner"

    def q(self, w) -> np.ndarray:
        return self.sf_table @ np.asarray(w, dtype=float)

    def to_dict(self, include_table: bool = False) -> dict:
        doc = {
            "source_weight": [float(x) for x in self.source_weight],
            "expected_sf": [float(x) for x in self.expected_sf],
            "solver_tag": self.solver_tag,
            "policy": [int(a) for a in self.policy],
        }
        if include_table:
            doc["sf_table"] = np.asarray(self.sf_table).tolist()
        return doc


def make_entry(momdp: TabularMOMDP, policy, source_weight, solver_tag: str = "planner", tol: float = 1e-8) -> PolicyEntry:
    """Bundle ``policy`` with its exactly evaluated successor features."""
    policy = np.asarray(policy, dtype=np.int64)
    table = planner.policy_sf_evaluation(momdp, policy, tol)
    return PolicyEntry(policy, table, planner.expected_sf(momdp, table, policy), np.asarray(source_weight, dtype=float), solver_tag)


class SFSet:
    """Ordered policy set whose expected SFs are pairwise distinct."""

    def __init__(self, entries: Iterable[PolicyEntry] = (), tol: float = SF_DEDUP_TOL):
        self.tol = tol
        self.entries: list[PolicyEntry] = []
        for e in entries:
            self.add(e)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[PolicyEntry]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def vectors(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.stack([e.expected_sf for e in self.entries])

    def index_of(self, psi) -> int | None:
        psi = np.asarray(psi, dtype=float)
        for i, e in enumerate(self.entries):
            if np.max(np.abs(e.expected_sf - psi)) <= self.tol:
                return i
        return None

    def __contains__(self, psi) -> bool:
        return self.index_of(psi) is not None

    def add(self, entry: PolicyEntry) -> bool:
        """Append ``entry`` unless its expected SF is already present."""
        if entry.expected_sf in self:
            return False
        self.entries.append(entry)
        return True

    def prefix(self, n: int) -> "SFSet":
        out = SFSet(tol=self.tol)
        out.entries = list(self.entries[:n])
        return out

    def dump(self, include_tables: bool = False) -> list[dict]:
        return [e.to_dict(include_tables) for e in self.entries]

    def to_json(self, include_tables: bool = False) -> str:
        return json.dumps(self.dump(include_tables), indent=1)


def _require(psi_set) -> None:
    if len(psi_set) == 0:
        raise EmptySet("policy set is empty")


def _stacked_q(psi_set: SFSet, w) -> np.ndarray:
    """Scalarized action values of every entry, shape ``(n, S, A)``."""
    w = np.asarray(w, dtype=float)
    return np.stack([e.sf_table @ w for e in psi_set])


def gpi_action(psi_set: SFSet, s: int, w) -> int:
    """``argmax_a max_i psi_i(s, a) . w`` with lowest-index tie-breaking."""
    _require(psi_set)
    w = np.asarray(w, dtype=float)
    q = np.stack([e.sf_table[s] @ w for e in psi_set]).max(axis=0)
    return int(planner.greedy(q[None, :])[0])


def gpi_policy(psi_set: SFSet, w) -> np.ndarray:
    """Stationary GPI policy for task ``w`` over all states."""
    _require(psi_set)
    return planner.greedy(_stacked_q(psi_set, w).max(axis=0))


def smp_value(psi_set: SFSet, w) -> tuple[float, int]:
    """Best expected value ``max_i psi_i . w`` and the (lowest) index achieving it."""
    _require(psi_set)
    vals = psi_set.vectors @ np.asarray(w, dtype=float)
    i = int(np.argmax(vals))
    return float(vals[i]), i


def evaluate_gpi_policy(momdp: TabularMOMDP, psi_set: SFSet, w, tol: float = 1e-8) -> float:
    """Exact value under ``mu`` of the GPI policy for ``w``."""
    return planner.policy_value(momdp, gpi_policy(psi_set, w), w, tol)


class GPIEvaluator:
    """Batch evaluation of GPI policies over many weights.

    Distinct GPI policies are evaluated once (vector SF evaluation) and their
    value at any weight is read off as ``psi^pi . w``.
    """

    def __init__(self, momdp: TabularMOMDP, psi_set: SFSet, tol: float = 1e-8):
        _require(psi_set)
        self.momdp = momdp
        self.psi_set = psi_set
        self.tol = tol
        self._cache: dict[bytes, np.ndarray] = {}

    def expected_sf(self, w) -> np.ndarray:
        pol = gpi_policy(self.psi_set, w)
        key = pol.tobytes()
        if key not in self._cache:
            table = planner.policy_sf_evaluation(self.momdp, pol, self.tol)
            self._cache[key] = planner.expected_sf(self.momdp, table, pol)
        return self._cache[key]

    def value(self, w) -> float:
        return float(self.expected_sf(w) @ np.asarray(w, dtype=float))

    def values(self, weights) -> np.ndarray:
        return np.array([self.value(w) for w in weights])


def gpi_expanded_sfs(momdp: TabularMOMDP, psi_set: SFSet, weights: Sequence, tol: float = 1e-8) -> list[np.ndarray]:
    """Expected SFs of the GPI policies induced by ``weights`` (deduplicated).

    Only the listed weights are visited, so this is a finite-grid stand-in for
    the expansion over the whole simplex.
    """
    if len(weights) == 0:
        raise EmptySet("no weights given")
    ev = GPIEvaluator(momdp, psi_set, tol)
    return dedup_vectors(ev.expected_sf(w) for w in weights)


def dedup_vectors(vectors: Iterable, tol: float = SF_DEDUP_TOL) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if not any(np.max(np.abs(v - o)) <= tol for o in out):
            out.append(v)
    return out


def ccs_slack(vectors: Sequence, i: int) -> float:
    """Largest margin by which ``vectors[i]`` beats all others at some simplex weight."""
    V = np.asarray(vectors, dtype=float)
    n, d = V.shape
    others = np.delete(V, i, axis=0)
    if len(others) == 0:
        return np.inf
    # variables: w (d), t ; maximize t s.t. (psi' - psi) . w + t <= 0
    A_ub = np.hstack([others - V[i], np.ones((len(others), 1))])
    lp = LinearProgram(
        c=np.r_[np.zeros(d), 1.0],
        A_ub=A_ub,
        b_ub=np.zeros(len(others)),
        A_eq=np.r_[np.ones(d), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0.0, 1.0)] * d + [(-np.inf, np.inf)],
    )
    res = solve_lp(lp)
    if not res.optimal:
        raise RuntimeError(f"pruning LP returned {res.status}")
    return res.objective


def prune_to_ccs(vectors: Sequence, strict: bool = False, tol: float = PRUNE_SLACK_TOL) -> list[np.ndarray]:
    """Keep the vectors that are optimal for at least one simplex weight.

    With ``strict=True`` a vector must be the unique maximizer somewhere
    (positive slack), which keeps only vertices of the value polytope.
    """
    V = dedup_vectors(vectors)
    if not V:
        return []
    keep = []
    for i in range(len(V)):
        slack = ccs_slack(V, i)
        if (slack > tol) if strict else (slack >= -tol):
            keep.append(V[i])
    return keep


def same_vector_sets(a: Sequence, b: Sequence, tol: float = SF_DEDUP_TOL) -> bool:
    """Set equality after deduplication, matching vectors within ``tol`` (inf-norm)."""
    A, B = dedup_vectors(a, tol), dedup_vectors(b, tol)
    if len(A) != len(B):
        return False
    used = [False] * len(B)
    for x in A:
        for j, y in enumerate(B):
            if not used[j] and np.max(np.abs(x - y)) <= tol:
                used[j] = True
                break
        else:
            return False
    return True

