"""Tabular multi-objective MDP model, weight handling and scalarization.

Transitions are stored in a padded successor layout: for every ``(s, a)`` pair
there are ``K`` successor slots holding the next-state index, its probability
and the reward-feature vector emitted on that transition.  Deterministic grid
worlds use ``K = 1``; dense random models use ``K = num_states``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

SIMPLEX_TOL = 1e-9


class WeightError(ValueError):
    """Raised when a vector is not a valid point of the weight simplex."""

    def __init__(self, message: str, vector):
        super().__init__(f"{message}: {list(np.asarray(vector, dtype=float))}")
        self.vector = np.asarray(vector, dtype=float)


class NegativeComponent(WeightError):
    pass


class SumNotOne(WeightError):
    pass


class ModelError(ValueError):
    """Raised when a MOMDP violates one of its structural invariants."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def validate_weight(v) -> np.ndarray:
    """Return ``v`` as a read-only simplex weight.

    Raises:
        NegativeComponent: if any component is below ``-SIMPLEX_TOL``.
        SumNotOne: if the components do not sum to one within ``SIMPLEX_TOL``.
    """
    w = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(w)):
        raise WeightError("non-finite weight", w)
    if np.any(w < -SIMPLEX_TOL):
        raise NegativeComponent("negative weight component", w)
    if abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise SumNotOne("weight does not sum to one", w)
    return _frozen(w)


def raw_weight(v) -> np.ndarray:
    """Unconstrained weight (e.g. SIP training weights); only finiteness is checked."""
    w = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(w)):
        raise WeightError("non-finite weight", w)
    return _frozen(w)


def is_simplex_weight(w) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(np.all(w >= -SIMPLEX_TOL) and abs(w.sum() - 1.0) <= SIMPLEX_TOL)


def simplex_extrema(d: int) -> list[np.ndarray]:
    return [_frozen(np.eye(d)[i]) for i in range(d)]


@dataclass(frozen=True, eq=False)
class TabularMOMDP:
    """Finite MOMDP with vector reward features.

    Attributes:
        next_states: int array ``(S, A, K)`` of successor indices.
        probs: array ``(S, A, K)``; each ``(s, a)`` row sums to one.
        features: array ``(S, A, K, d)``; ``features[s, a, k]`` is the feature
            vector emitted when ``(s, a)`` leads to ``next_states[s, a, k]``.
        initial_dist: start-state distribution ``mu``.
        gamma: discount factor in ``[0, 1)``.
        terminal: boolean mask of absorbing terminal states.
    """

    next_states: np.ndarray
    probs: np.ndarray
    features: np.ndarray
    initial_dist: np.ndarray
    gamma: float
    terminal: np.ndarray

    def __post_init__(self):
        ns = np.asarray(self.next_states, dtype=np.int64)
        p = np.asarray(self.probs, dtype=float)
        phi = np.asarray(self.features, dtype=float)
        mu = np.asarray(self.initial_dist, dtype=float)
        term = np.asarray(self.terminal, dtype=bool)
        if ns.ndim != 3 or p.shape != ns.shape or phi.ndim != 4 or phi.shape[:3] != ns.shape:
            raise ModelError("inconsistent successor array shapes")
        S = ns.shape[0]
        if mu.shape != (S,) or term.shape != (S,):
            raise ModelError("initial_dist and terminal must have one entry per state")
        if not 0.0 <= float(self.gamma) < 1.0:
            raise ModelError(f"gamma must lie in [0, 1), got {self.gamma}")
        if np.any(ns < 0) or np.any(ns >= S):
            raise ModelError("successor index out of range")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=2) - 1.0) > 1e-9):
            raise ModelError("transition rows must be non-negative and sum to 1")
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-9:
            raise ModelError("initial distribution must sum to 1")
        if not np.all(np.isfinite(phi)):
            raise ModelError("features must be finite")
        for s in np.flatnonzero(term):
            mass_home = np.where(ns[s] == s, p[s], 0.0).sum(axis=1)
            if np.any(np.abs(mass_home - 1.0) > 1e-9):
                raise ModelError(f"terminal state {s} is not absorbing")
            if np.any(np.abs(phi[s][p[s] > 0]) > 0):
                raise ModelError(f"terminal state {s} emits non-zero features")
        object.__setattr__(self, "next_states", _frozen(ns))
        object.__setattr__(self, "probs", _frozen(p))
        object.__setattr__(self, "features", _frozen(phi))
        object.__setattr__(self, "initial_dist", _frozen(mu))
        object.__setattr__(self, "terminal", _frozen(term))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def num_states(self) -> int:
        return self.next_states.shape[0]

    @property
    def num_actions(self) -> int:
        return self.next_states.shape[1]

    @property
    def d(self) -> int:
        return self.features.shape[3]

    @property
    def phi_max(self) -> float:
        """Largest Euclidean feature norm over all reachable ``(s, a, s')`` slots."""
        norms = np.linalg.norm(self.features, axis=-1)
        norms = np.where(self.probs > 0, norms, 0.0)
        return float(norms.max()) if norms.size else 0.0

    def expected_features(self) -> np.ndarray:
        """``E[phi | s, a]`` as an ``(S, A, d)`` array."""
        return np.einsum("sak,sakd->sad", self.probs, self.features)

    def continuation(self) -> np.ndarray:
        """Discounted probability of continuing into each successor slot.

        Terminal successors contribute nothing to the future.
        """
        alive = ~self.terminal[self.next_states]
        return self.gamma * self.probs * alive

    @classmethod
    def from_dense(cls, transition, features, initial_dist, gamma, terminal=None) -> "TabularMOMDP":
        """Build from a dense ``(S, A, S)`` kernel and ``(S, A, S, d)`` features."""
        P = np.asarray(transition, dtype=float)
        phi = np.asarray(features, dtype=float)
        S, A, _ = P.shape
        if phi.ndim == 3:
            phi = phi[..., None]
        ns = np.broadcast_to(np.arange(S), (S, A, S))
        if terminal is None:
            terminal = np.zeros(S, dtype=bool)
        return cls(ns, P, phi, initial_dist, gamma, terminal)

    def dense_transition(self) -> np.ndarray:
        S, A, K = self.next_states.shape
        P = np.zeros((S, A, S))
        s_idx, a_idx = np.meshgrid(np.arange(S), np.arange(A), indexing="ij")
        for k in range(K):
            np.add.at(P, (s_idx, a_idx, self.next_states[:, :, k]), self.probs[:, :, k])
        return P

    def dense_features(self) -> np.ndarray:
        """Dense ``(S, A, S, d)`` features (successor slots are assumed distinct)."""
        S, A, K = self.next_states.shape
        out = np.zeros((S, A, S, self.d))
        s_idx, a_idx = np.meshgrid(np.arange(S), np.arange(A), indexing="ij")
        for k in range(K):
            out[s_idx, a_idx, self.next_states[:, :, k]] = self.features[:, :, k]
        return out

    def to_dict(self) -> dict[str, Any]:
        S, A, K = self.next_states.shape
        return {
            "num_states": S,
            "num_actions": A,
            "num_successors": K,
            "d": self.d,
            "gamma": self.gamma,
            "initial_dist": self.initial_dist.tolist(),
            "terminal": self.terminal.astype(int).tolist(),
            "next_states": self.next_states.reshape(-1).tolist(),
            "probs": self.probs.reshape(-1).tolist(),
            "features": self.features.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TabularMOMDP":
        S, A, K, d = doc["num_states"], doc["num_actions"], doc["num_successors"], doc["d"]
        return cls(
            next_states=np.asarray(doc["next_states"], dtype=np.int64).reshape(S, A, K),
            probs=np.asarray(doc["probs"], dtype=float).reshape(S, A, K),
            features=np.asarray(doc["features"], dtype=float).reshape(S, A, K, d),
            initial_dist=np.asarray(doc["initial_dist"], dtype=float),
            gamma=doc["gamma"],
            terminal=np.asarray(doc["terminal"], dtype=bool),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TabularMOMDP":
        return cls.from_dict(json.loads(text))


def scalarize_reward(momdp: TabularMOMDP, w, s: int, a: int, s_next: int) -> float:
    """Linear reward ``phi(s, a, s') . w``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (momdp.d,):
        raise ValueError(f"weight has dimension {w.shape}, model has d={momdp.d}")
    slots = np.flatnonzero(momdp.next_states[s, a] == s_next)
    if slots.size == 0:
        raise ValueError(f"{s_next} is not a successor of ({s}, {a})")
    return float(momdp.features[s, a, slots[0]] @ w)


def one_hot_wrap(momdp: TabularMOMDP) -> TabularMOMDP:
    """Replace features by the indicator of the successor state.

    Expected SFs of the wrapped model are successor representations
    (unnormalized discounted occupancies counted from ``t = 1``).  Terminal
    self-loops keep zero features.
    """
    S = momdp.num_states
    phi = np.eye(S)[momdp.next_states]
    phi[momdp.terminal] = 0.0
    return TabularMOMDP(momdp.next_states, momdp.probs, phi, momdp.initial_dist, momdp.gamma, momdp.terminal)
