"""Measurement harness for policy sets.

Covers test-weight sampling, SMP/GPI/optimal value reports, hypervolume,
the distance-based GPI gap bound, zero-shot lifelong rollouts and a
brute-force check of vertex discovery on small models.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import planner
from .gpi import EmptySet, GPIEvaluator, SFSet, evaluate_gpi_policy, gpi_policy, prune_to_ccs, same_vector_sets, smp_value
from .momdp import TabularMOMDP, validate_weight

REPORT_TOL = 1e-6
BRUTE_FORCE_LIMIT = 4096


class DimensionTooLarge(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class BoundViolation(AssertionError):
    pass


class TooLargeForBruteForce(ValueError):
    pass


def sample_simplex_weights(n: int, d: int, seed: int) -> list[np.ndarray]:
    """``n`` seeded flat-Dirichlet weights on the ``d``-simplex."""
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    rng = np.random.default_rng(seed)
    if n == 0:
        return []
    return [validate_weight(w / w.sum()) for w in rng.dirichlet(np.ones(d), size=n)]


def simplex_sweep(n: int) -> list[np.ndarray]:
    """``n`` evenly spaced weights on the 2-simplex edge, endpoints included."""
    return [validate_weight((1.0 - x, x)) for x in np.linspace(0.0, 1.0, n)]


def simplex_lattice(d: int, resolution: int) -> list[np.ndarray]:
    """All weights whose components are multiples of ``1 / resolution``."""
    out = []
    for combo in itertools.combinations(range(resolution + d - 1), d - 1):
        parts = np.diff(np.r_[-1, combo, resolution + d - 1]) - 1
        out.append(parts / resolution)
    return out


# ---------------------------------------------------------------- reports


@dataclass
class EvaluationReport:
    weights: np.ndarray  # (n, d)
    v_smp: np.ndarray
    v_gpi: np.ndarray
    v_star: np.ndarray
    hypervolume: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def gap_smp(self) -> np.ndarray:
        return self.v_star - self.v_smp

    @property
    def gap_gpi(self) -> np.ndarray:
        return self.v_star - self.v_gpi

    def __len__(self) -> int:
        return len(self.v_star)

    def aggregates(self) -> dict:
        if len(self) == 0:
            return {"num_weights": 0}
        return {
            "num_weights": len(self),
            "mean_v_smp": float(self.v_smp.mean()),
            "mean_v_gpi": float(self.v_gpi.mean()),
            "mean_v_star": float(self.v_star.mean()),
            "max_gap_smp": float(self.gap_smp.max()),
            "max_gap_gpi": float(self.gap_gpi.max()),
            "mean_gap_gpi": float(self.gap_gpi.mean()),
        }

    def check(self, tol: float = REPORT_TOL) -> list[str]:
        """Violations of ``v_smp <= v_gpi <= v_star`` (empty when consistent)."""
        bad = []
        for i in range(len(self)):
            if self.v_smp[i] > self.v_gpi[i] + tol:
                bad.append(f"row {i}: v_smp {self.v_smp[i]:.9g} > v_gpi {self.v_gpi[i]:.9g}")
            if self.v_gpi[i] > self.v_star[i] + tol:
                bad.append(f"row {i}: v_gpi {self.v_gpi[i]:.9g} > v_star {self.v_star[i]:.9g}")
        return bad

    def header(self, d: int | None = None) -> list[str]:
        d = self.weights.shape[1] if d is None else d
        return [f"w{j}" for j in range(d)] + ["v_smp", "v_gpi", "v_star", "gap_smp", "gap_gpi"]

    def to_csv(self, seed: int | None = None, d: int | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        head = self.header(d)
        writer.writerow(head + (["seed"] if seed is not None else []))
        for i in range(len(self)):
            row = [repr(float(x)) for x in self.weights[i]]
            row += [repr(float(x)) for x in (self.v_smp[i], self.v_gpi[i], self.v_star[i], self.gap_smp[i], self.gap_gpi[i])]
            writer.writerow(row + ([seed] if seed is not None else []))
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"aggregates": self.aggregates(), "hypervolume": self.hypervolume, "metadata": self.metadata}
        return json.dumps(doc, indent=1, sort_keys=True)


def evaluate_policy_set(momdp: TabularMOMDP, psi_set: SFSet, test_weights: Sequence, tol: float = 1e-8, hv_ref=None, metadata: dict | None = None) -> EvaluationReport:
    """SMP, GPI and optimal values of ``psi_set`` at every test weight."""
    if len(psi_set) == 0:
        raise EmptySet("policy set is empty")
    d = momdp.d
    W = np.asarray(test_weights, dtype=float).reshape(-1, d)
    v_smp = np.array([smp_value(psi_set, w)[0] for w in W])
    v_gpi = np.array([evaluate_gpi_policy(momdp, psi_set, w, tol) for w in W])
    v_star = np.array([planner.optimal_value(momdp, w, tol) for w in W])
    hv = hypervolume(psi_set.vectors, hv_ref) if hv_ref is not None else None
    meta = {"num_policies": len(psi_set)}
    meta.update(metadata or {})
    return EvaluationReport(W, v_smp, v_gpi, v_star, hv, meta)


def iteration_metrics(momdp: TabularMOMDP, test_weights: Sequence, hv_ref=None, tol: float = 1e-8, mc_seed: int = 0) -> Callable[[SFSet], dict]:
    """Callback for ``sfols_run`` logging mean SMP/GPI values and hypervolume."""
    W = [np.asarray(w, dtype=float) for w in test_weights]

    def metrics(psi_set: SFSet) -> dict:
        out = {"mean_v_smp": float(np.mean([smp_value(psi_set, w)[0] for w in W])) if W else float("nan")}
        out["mean_v_gpi"] = float(np.mean(GPIEvaluator(momdp, psi_set, tol).values(W))) if W else float("nan")
        if hv_ref is not None:
            out["hypervolume"] = hypervolume(psi_set.vectors, hv_ref, seed=mc_seed)
        return out

    return metrics


# ------------------------------------------------------------ hypervolume


def _clip(points, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float).reshape(-1)
    P = np.asarray(points, dtype=float).reshape(-1, ref.size)
    return P[np.all(P > ref, axis=1)], ref


def _hv2(P: np.ndarray, ref: np.ndarray) -> float:
    area, top = 0.0, ref[1]
    for x, y in P[np.lexsort((-P[:, 1], -P[:, 0]))]:
        if y > top:
            area += (x - ref[0]) * (y - top)
            top = y
    return area


def _hv3(P: np.ndarray, ref: np.ndarray) -> float:
    zs = np.unique(P[:, 2])[::-1]
    vol = 0.0
    for k, z in enumerate(zs):
        below = zs[k + 1] if k + 1 < len(zs) else ref[2]
        vol += _hv2(P[P[:, 2] >= z][:, :2], ref[:2]) * (z - below)
    return vol


def hypervolume_mc(points, ref, num_samples: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo hypervolume and its standard error."""
    P, ref = _clip(points, ref)
    if len(P) == 0:
        return 0.0, 0.0
    hi = P.max(axis=0)
    box = float(np.prod(hi - ref))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 50_000
    for start in range(0, num_samples, chunk):
        m = min(chunk, num_samples - start)
        X = ref + rng.random((m, ref.size)) * (hi - ref)
        dominated = np.zeros(m, dtype=bool)
        for p in P:
            dominated |= np.all(X <= p, axis=1)
        hits += int(dominated.sum())
    frac = hits / num_samples
    return box * frac, box * np.sqrt(frac * (1.0 - frac) / num_samples)


def hypervolume(points, ref, monte_carlo: bool = True, num_samples: int = 200_000, seed: int = 0) -> float:
    """Measure of the union of boxes ``[ref, p]``.

    Points not strictly above ``ref`` in every component are dropped.  Exact
    for ``d <= 3``; higher dimensions fall back to seeded Monte Carlo (use
    ``hypervolume_mc`` to also get the standard error).
    """
    P, ref = _clip(points, ref)
    d = ref.size
    if len(P) == 0:
        return 0.0
    if d == 1:
        return float(P[:, 0].max() - ref[0])
    if d == 2:
        return float(_hv2(P, ref))
    if d == 3:
        return float(_hv3(P, ref))
    if not monte_carlo:
        raise DimensionTooLarge(f"exact hypervolume supports d <= 3, got {d}")
    return hypervolume_mc(P, ref, num_samples, seed)[0]


# ----------------------------------------------------- distance-based bound


def covering_radius(grid: Sequence, resolution: int = 60) -> float:
    """Upper bound on the distance from any simplex weight to its nearest grid point.

    Exact for ``d = 2``.  For larger ``d`` the distance is maximized over a
    lattice of the given resolution and padded by the lattice's own
    covering radius ``sqrt(d) / resolution``.
    """
    G = np.asarray(grid, dtype=float)
    d = G.shape[1]
    if d == 1:
        return 0.0
    if d == 2:
        x = np.sort(np.r_[G[:, 0]])
        gaps = [x[0], 1.0 - x[-1]] + list(np.diff(x) / 2.0)
        return float(np.sqrt(2.0) * max(gaps))
    probes = np.asarray(simplex_lattice(d, resolution))
    dist = np.sqrt(((probes[:, None, :] - G[None, :, :]) ** 2).sum(-1)).min(axis=1)
    return float(dist.max() + np.sqrt(d) / resolution)


def max_min_distance(grid: Sequence, source_weights: Sequence) -> float:
    G = np.asarray(grid, dtype=float)
    Wsrc = np.asarray(source_weights, dtype=float)
    return float(np.sqrt(((G[:, None, :] - Wsrc[None, :, :]) ** 2).sum(-1)).min(axis=1).max())


@dataclass
class GapBoundAudit:
    observed_gap: float
    bound: float
    distance_bound: float
    eps1: float
    grid_distance: float
    covering_radius: float
    phi_max: float

    @property
    def holds(self) -> bool:
        return self.observed_gap <= self.bound + 1e-6


def gap_bound_audit(psi_set: SFSet, momdp: TabularMOMDP, test_weights: Sequence, grid: Sequence | None = None, source_weights: Sequence | None = None, tol: float = 1e-8, check: bool = True) -> GapBoundAudit:
    """Compare the observed GPI gap with its distance-based bound.

    The bound is ``min(eps1, 2 / (1 - gamma) * phi_max * D)`` where ``eps1`` is
    the largest SMP gap on the test weights and ``D`` is the max-min distance
    from the grid to the source weights plus the grid's covering radius.

    Args:
        source_weights: weights whose exact optimal policies are in
            ``psi_set``; defaults to each entry's own source weight.

    Raises:
        PreconditionViolated: if some entry was not produced by the planner.
        BoundViolation: if ``check`` and the observed gap exceeds the bound.
    """
    if any(e.solver_tag != "planner" for e in psi_set):
        raise PreconditionViolated("every policy must come from the exact planner")
    if len(psi_set) == 0:
        raise EmptySet("policy set is empty")
    report = evaluate_policy_set(momdp, psi_set, test_weights, tol)
    grid = test_weights if grid is None else grid
    sources = [e.source_weight for e in psi_set] if source_weights is None else source_weights
    dist = max_min_distance(grid, sources)
    cover = covering_radius(grid)
    phi_max = momdp.phi_max
    dist_bound = 2.0 / (1.0 - momdp.gamma) * phi_max * (dist + cover)
    eps1 = float(report.gap_smp.max()) if len(report) else 0.0
    audit = GapBoundAudit(float(report.gap_gpi.max()) if len(report) else 0.0, min(eps1, dist_bound), dist_bound, eps1, dist, cover, phi_max)
    if check and not audit.holds:
        raise BoundViolation(f"observed gap {audit.observed_gap:.6g} exceeds bound {audit.bound:.6g}")
    return audit


# --------------------------------------------------------------- lifelong


@dataclass
class PhaseRecord:
    phase: int
    weight: np.ndarray
    mean_return: float
    stderr: float
    num_episodes: int
    v_gpi_exact: float


def _rollouts(momdp: TabularMOMDP, policy: np.ndarray, w, steps: int, rng: np.random.Generator, max_episode_steps: int) -> list[float]:
    """Discounted episodic returns collected within ``steps`` environment steps."""
    ns = momdp.next_states
    cum_p = np.cumsum(momdp.probs, axis=2)
    r = momdp.features @ np.asarray(w, dtype=float)  # (S, A, K)
    mu_cdf = np.cumsum(momdp.initial_dist)
    gamma = momdp.gamma
    terminal = momdp.terminal
    u = rng.random(steps)
    starts = rng.random(steps)
    S, K = momdp.num_states, ns.shape[2]
    done, partial = [], []
    s = min(int(np.searchsorted(mu_cdf, starts[0], side="right")), S - 1)
    ret, disc, length = 0.0, 1.0, 0
    for t in range(steps):
        a = int(policy[s])
        k = 0 if K == 1 else min(int(np.searchsorted(cum_p[s, a], u[t], side="right")), K - 1)
        ret += disc * float(r[s, a, k])
        disc *= gamma
        length += 1
        s = int(ns[s, a, k])
        if terminal[s] or length >= max_episode_steps:
            (done if terminal[s] else partial).append(ret)
            s = min(int(np.searchsorted(mu_cdf, starts[t], side="right")), S - 1)
            ret, disc, length = 0.0, 1.0, 0
    return done if done else partial


def lifelong_eval(momdp: TabularMOMDP, psi_set: SFSet, num_phases: int, steps_per_phase: int = 10_000, seed: int = 0, max_episode_steps: int = 1_000, tol: float = 1e-8) -> list[PhaseRecord]:
    """Zero-shot GPI rollouts on a fresh random task every phase.

    The weight schedule and the environment noise use separate streams, so
    the schedule depends only on ``seed`` and ``num_phases``.
    """
    if len(psi_set) == 0:
        raise EmptySet("policy set is empty")
    weight_seq, env_seq = np.random.SeedSequence(seed).spawn(2)
    weights = sample_simplex_weights(num_phases, momdp.d, int(weight_seq.generate_state(1)[0]))
    env_rng = np.random.default_rng(env_seq)
    out = []
    for k, w in enumerate(weights):
        pol = gpi_policy(psi_set, w)
        rets = np.asarray(_rollouts(momdp, pol, w, steps_per_phase, env_rng, max_episode_steps))
        n = len(rets)
        se = float(rets.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        out.append(PhaseRecord(k + 1, w, float(rets.mean()) if n else float("nan"), se, n, planner.policy_value(momdp, pol, w, tol)))
    return out


# ------------------------------------------------------- vertex discovery


@dataclass
class VertexReport:
    num_policies: int
    oracle: list[np.ndarray]
    found: list[np.ndarray]
    found_vertices: list[np.ndarray]

    @property
    def equal(self) -> bool:
        return same_vector_sets(self.oracle, self.found)

    @property
    def vertices_equal(self) -> bool:
        return same_vector_sets(self.oracle, self.found_vertices)


def enumerate_policy_sfs(momdp: TabularMOMDP, tol: float = 1e-10) -> list[np.ndarray]:
    """Expected SFs of every deterministic stationary policy."""
    S, A = momdp.num_states, momdp.num_actions
    if A ** S > BRUTE_FORCE_LIMIT:
        raise TooLargeForBruteForce(f"{A}^{S} policies exceed the limit of {BRUTE_FORCE_LIMIT}")
    out = []
    for pol in itertools.product(range(A), repeat=S):
        pol = np.array(pol, dtype=np.int64)
        table = planner.policy_sf_evaluation(momdp, pol, tol)
        out.append(planner.expected_sf(momdp, table, pol))
    return out


def vertex_discovery_check(momdp: TabularMOMDP, psi_set: SFSet, tol: float = 1e-10) -> VertexReport:
    """Compare ``psi_set`` with the vertices of the brute-force value set.

    Vertices are vectors that are the unique maximizer at some simplex weight.
    """
    sfs = enumerate_policy_sfs(momdp, tol)
    oracle = prune_to_ccs(sfs, strict=True)
    found = [np.asarray(v, dtype=float) for v in psi_set.vectors]
    return VertexReport(len(sfs), oracle, found, prune_to_ccs(found, strict=True) if found else [])
