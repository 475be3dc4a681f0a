"""Small hand-checkable models shared by the unit tests."""

import numpy as np

from sfols.momdp import TabularMOMDP


def self_loop(phi=(1.0, 0.0), gamma=0.5) -> TabularMOMDP:
    """One non-terminal state, one action looping on itself."""
    return TabularMOMDP(
        np.zeros((1, 1, 1), dtype=np.int64),
        np.ones((1, 1, 1)),
        np.asarray(phi, dtype=float).reshape(1, 1, 1, -1),
        np.array([1.0]),
        gamma,
        np.array([False]),
    )


def two_state_chain(gamma=0.9) -> TabularMOMDP:
    """s0 --a0--> s1 (phi=(1,0)), s0 --a1--> s0 (phi=(0,1)); s1 terminal."""
    ns = np.array([[[1], [0]], [[1], [1]]])
    phi = np.zeros((2, 2, 1, 2))
    phi[0, 0, 0] = (1.0, 0.0)
    phi[0, 1, 0] = (0.0, 1.0)
    return TabularMOMDP(ns, np.ones((2, 2, 1)), phi, np.array([1.0, 0.0]), gamma, np.array([False, True]))
