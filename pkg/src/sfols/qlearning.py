"""Tabular successor-feature Q-learning with a GPI behaviour policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gpi import PolicyEntry
from .momdp import TabularMOMDP
from .planner import TIE_TOL, greedy


@dataclass(frozen=True)
class QLearnConfig:
    learning_rate: float = 0.3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int | None = None  # None -> num_steps
    num_steps: int = 100_000
    max_episode_steps: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        for eps in (self.epsilon_start, self.epsilon_end):
            if not 0.0 <= eps <= 1.0:
                raise ValueError("epsilon must lie in [0, 1]")
        if self.num_steps < 1 or self.max_episode_steps < 1:
            raise ValueError("num_steps and max_episode_steps must be positive")

    def epsilon_schedule(self) -> np.ndarray:
        horizon = self.epsilon_decay_steps or self.num_steps
        frac = np.minimum(np.arange(self.num_steps) / max(horizon, 1), 1.0)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


def _argmax_first(values: list[float]) -> int:
    best = max(values)
    slack = TIE_TOL * max(1.0, abs(best))
    for a, v in enumerate(values):
        if v >= best - slack:
            return a
    return 0


def learn_sf_qlearning(momdp: TabularMOMDP, w, previous: list[PolicyEntry], cfg: QLearnConfig = QLearnConfig()):
    """Learn successor features for task ``w`` from sampled transitions.

    The new table starts as a copy of the previous table whose expected SF
    scores best on ``w`` (zeros when ``previous`` is empty).  Actions follow
    epsilon-greedy GPI over ``previous`` plus the table being learned.  Only
    feature vectors are observed; ``w`` is used solely for action selection.

    Returns:
        ``(policy, sf_table)`` with ``policy`` greedy in ``sf_table . w``.
    """
    w = np.asarray(w, dtype=float)
    S, A, d = momdp.num_states, momdp.num_actions, momdp.d
    if previous:
        best = int(np.argmax([e.expected_sf @ w for e in previous]))
        psi = np.array(previous[best].sf_table, dtype=float)
        q_prev = np.stack([e.sf_table @ w for e in previous]).max(axis=0)
    else:
        psi = np.zeros((S, A, d))
        q_prev = np.full((S, A), -np.inf)
    q_new = psi @ w  # kept in sync with psi

    root = np.random.SeedSequence(cfg.seed)
    explore_rng, env_rng = (np.random.default_rng(s) for s in root.spawn(2))
    n = cfg.num_steps
    eps = cfg.epsilon_schedule()
    coin = explore_rng.random(n)
    rand_action = explore_rng.integers(A, size=n)
    env_u = env_rng.random(n)
    start_u = env_rng.random(n)

    # plain-Python views for the per-step loop
    qp = q_prev.tolist()
    qn = q_new.tolist()
    ns = momdp.next_states
    cum_p = np.cumsum(momdp.probs, axis=2)
    K = ns.shape[2]
    terminal = momdp.terminal.tolist()
    mu_cdf = np.cumsum(momdp.initial_dist)
    alpha, gamma = cfg.learning_rate, momdp.gamma
    features = momdp.features

    def gpi(s: int) -> int:
        return _argmax_first([max(x, y) for x, y in zip(qp[s], qn[s])])

    new_episode = True
    s = 0
    ep_len = 0
    for t in range(n):
        if new_episode:
            s = int(np.searchsorted(mu_cdf, start_u[t], side="right"))
            s = min(s, S - 1)
            new_episode = False
            ep_len = 0
        a = gpi(s) if coin[t] >= eps[t] else int(rand_action[t])
        if K == 1:
            k = 0
        else:
            k = min(int(np.searchsorted(cum_p[s, a], env_u[t], side="right")), K - 1)
        s2 = int(ns[s, a, k])
        phi = features[s, a, k]
        ep_len += 1
        if terminal[s2]:
            delta = phi - psi[s, a]
            new_episode = True
        else:
            a2 = gpi(s2)
            delta = phi + gamma * psi[s2, a2] - psi[s, a]
        step = alpha * delta
        psi[s, a] += step
        qn[s][a] += float(step @ w)
        if ep_len >= cfg.max_episode_steps:
            new_episode = True
        s = s2

    return greedy(psi @ w), psi
