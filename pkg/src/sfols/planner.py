"""Exact dynamic-programming solvers on a ``TabularMOMDP``.

Every sweep is synchronous.  Iteration stops once successive iterates differ
by at most ``tol * (1 - gamma) / (2 * gamma)`` in the infinity norm, which keeps
the returned values within ``tol`` of the fixed point.
"""

from __future__ import annotations

import numpy as np

from .momdp import TabularMOMDP

TIE_TOL = 1e-9
MAX_SWEEPS = 100_000


class NonConvergence(RuntimeError):
    pass


def _stop_threshold(gamma: float, tol: float) -> float:
    if gamma == 0.0:
        return np.inf
    return tol * (1.0 - gamma) / (2.0 * gamma)


def greedy(q: np.ndarray) -> np.ndarray:
    """Greedy actions of an ``(S, A)`` table, lowest index among near-ties."""
    best = q.max(axis=1, keepdims=True)
    slack = TIE_TOL * np.maximum(1.0, np.abs(best))
    return np.argmax(q >= best - slack, axis=1)


def scalar_rewards(momdp: TabularMOMDP, w) -> np.ndarray:
    """Expected one-step scalar reward ``E[phi . w | s, a]``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (momdp.d,):
        raise ValueError(f"weight has dimension {w.shape}, model has d={momdp.d}")
    return np.einsum("sak,sak->sa", momdp.probs, momdp.features @ w)


def value_iteration(momdp: TabularMOMDP, w, tol: float = 1e-8, max_sweeps: int = MAX_SWEEPS):
    """Optimal action values for the task ``r = phi . w``.

    Returns:
        ``(q, policy)`` where ``q`` has shape ``(S, A)`` and ``policy`` is greedy
        in ``q``.
    """
    r = scalar_rewards(momdp, w)
    cont = momdp.continuation()
    ns = momdp.next_states
    thr = _stop_threshold(momdp.gamma, tol)
    v = np.zeros(momdp.num_states)
    for _ in range(max_sweeps):
        q = r + np.einsum("sak,sak->sa", cont, v[ns])
        v_new = q.max(axis=1)
        delta = np.abs(v_new - v).max(initial=0.0)
        v = v_new
        if delta <= thr:
            q = r + np.einsum("sak,sak->sa", cont, v[ns])
            return q, greedy(q)
    raise NonConvergence(f"value iteration did not converge in {max_sweeps} sweeps")


def policy_evaluation(momdp: TabularMOMDP, policy, w, tol: float = 1e-8, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Scalar action values ``q^pi_w`` of a deterministic policy, shape ``(S, A)``."""
    policy = np.asarray(policy, dtype=np.int64)
    r = scalar_rewards(momdp, w)
    cont = momdp.continuation()
    ns = momdp.next_states
    thr = _stop_threshold(momdp.gamma, tol)
    states = np.arange(momdp.num_states)
    v = np.zeros(momdp.num_states)
    for _ in range(max_sweeps):
        v_new = r[states, policy] + np.einsum("sk,sk->s", cont[states, policy], v[ns[states, policy]])
        delta = np.abs(v_new - v).max(initial=0.0)
        v = v_new
        if delta <= thr:
            return r + np.einsum("sak,sak->sa", cont, v[ns])
    raise NonConvergence(f"policy evaluation did not converge in {max_sweeps} sweeps")


def policy_sf_evaluation(momdp: TabularMOMDP, policy, tol: float = 1e-8, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Successor features ``psi^pi(s, a)`` of a deterministic policy, shape ``(S, A, d)``."""
    policy = np.asarray(policy, dtype=np.int64)
    if policy.shape != (momdp.num_states,):
        raise ValueError("policy must assign one action per state")
    phi = momdp.expected_features()
    cont = momdp.continuation()
    ns = momdp.next_states
    thr = _stop_threshold(momdp.gamma, tol)
    states = np.arange(momdp.num_states)
    psi_s = np.zeros((momdp.num_states, momdp.d))  # psi(s, pi(s))
    for _ in range(max_sweeps):
        new = phi[states, policy] + np.einsum("sk,skd->sd", cont[states, policy], psi_s[ns[states, policy]])
        delta = np.abs(new - psi_s).max(initial=0.0)
        psi_s = new
        if delta <= thr:
            return phi + np.einsum("sak,sakd->sad", cont, psi_s[ns])
    raise NonConvergence(f"SF evaluation did not converge in {max_sweeps} sweeps")


def expected_sf(momdp: TabularMOMDP, sf_table: np.ndarray, policy) -> np.ndarray:
    """``sum_s mu(s) psi(s, pi(s))``."""
    policy = np.asarray(policy, dtype=np.int64)
    states = np.arange(momdp.num_states)
    return momdp.initial_dist @ sf_table[states, policy]


def state_values(momdp: TabularMOMDP, q: np.ndarray, policy) -> np.ndarray:
    return q[np.arange(momdp.num_states), np.asarray(policy)]


def policy_value(momdp: TabularMOMDP, policy, w, tol: float = 1e-8) -> float:
    """Scalar value of ``policy`` under ``mu`` for the task ``w``."""
    q = policy_evaluation(momdp, policy, w, tol)
    return float(momdp.initial_dist @ state_values(momdp, q, policy))


def optimal_value(momdp: TabularMOMDP, w, tol: float = 1e-8) -> float:
    q, policy = value_iteration(momdp, w, tol)
    return float(momdp.initial_dist @ state_values(momdp, q, policy))


def solve_task(momdp: TabularMOMDP, w, tol: float = 1e-8):
    """Optimal policy for ``w`` with its exact SF table and expected SF."""
    _, policy = value_iteration(momdp, w, tol)
    table = policy_sf_evaluation(momdp, policy, tol)
    return policy, table, expected_sf(momdp, table, policy)
