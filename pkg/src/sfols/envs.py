"""Benchmark MOMDP constructors.

Grid actions are ordered up, down, left, right.  A move that would leave the
grid (or enter a wall/rock) leaves the agent where it is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .momdp import TabularMOMDP

MOVES = np.array([(-1, 0), (1, 0), (0, -1), (0, 1)])


class EnvConfigError(ValueError):
    pass


class EmptyTreasureMap(EnvConfigError):
    pass


class OutOfGrid(EnvConfigError):
    pass


class LayoutOverlap(EnvConfigError):
    pass


# Treasure values of the convex DST variant; step counts from the start cell
# are 1, 3, 5, 7, 8, 9, 13, 14, 17, 19 so every treasure is on the CCS at gamma=0.99.
DST_TREASURES = (
    (1, 0, 0.7),
    (2, 1, 8.2),
    (3, 2, 11.5),
    (4, 3, 14.0),
    (4, 4, 15.1),
    (4, 5, 16.1),
    (7, 6, 19.6),
    (7, 7, 20.3),
    (9, 8, 22.4),
    (9, 10, 23.7),
)


def _seabed(rows: int, cols: int, treasures) -> tuple[tuple[int, int], ...]:
    """Rock cells below each treasure column, as in the classic map."""
    depth = {}
    for r, c, _ in treasures:
        depth[c] = max(depth.get(c, -1), r)
    return tuple((r, c) for c, top in sorted(depth.items()) for r in range(top + 1, rows))


@dataclass(frozen=True)
class DSTConfig:
    rows: int = 10
    cols: int = 11
    treasures: tuple = DST_TREASURES
    gamma: float = 0.99
    time_penalty: float = -1.0
    start: tuple[int, int] = (0, 0)
    rocks: tuple | None = None  # None -> seabed under the treasures

    def rock_cells(self) -> tuple[tuple[int, int], ...]:
        if self.rocks is None:
            return _seabed(self.rows, self.cols, self.treasures)
        return tuple((int(r), int(c)) for r, c in self.rocks)


def _inside(r: int, c: int, rows: int, cols: int) -> bool:
    return 0 <= r < rows and 0 <= c < cols


def build_dst(cfg: DSTConfig = DSTConfig()) -> TabularMOMDP:
    """Deep Sea Treasure with features ``(treasure value, time penalty)``."""
    if len(cfg.treasures) == 0:
        raise EmptyTreasureMap("DST needs at least one treasure")
    rows, cols = cfg.rows, cfg.cols
    value = {}
    for r, c, v in cfg.treasures:
        if not _inside(r, c, rows, cols):
            raise OutOfGrid(f"treasure at ({r}, {c}) lies outside a {rows}x{cols} grid")
        if not np.isfinite(v):
            raise EnvConfigError(f"treasure value at ({r}, {c}) is not finite")
        value[(int(r), int(c))] = float(v)
    rocks = set(cfg.rock_cells())
    for r, c in rocks:
        if not _inside(r, c, rows, cols):
            raise OutOfGrid(f"rock at ({r}, {c}) lies outside the grid")
    if rocks & set(value):
        raise LayoutOverlap("a treasure sits on a rock cell")
    sr, sc = cfg.start
    if not _inside(sr, sc, rows, cols) or (sr, sc) in rocks or (sr, sc) in value:
        raise EnvConfigError(f"invalid start cell {cfg.start}")

    S, A = rows * cols, 4
    ns = np.zeros((S, A, 1), dtype=np.int64)
    phi = np.zeros((S, A, 1, 2))
    terminal = np.zeros(S, dtype=bool)
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if (r, c) in value or (r, c) in rocks:
                # rock cells are unreachable; making them absorbing keeps sweeps short
                terminal[s] = True
                ns[s, :, 0] = s
                continue
            for a, (dr, dc) in enumerate(MOVES):
                nr, nc = r + dr, c + dc
                if not _inside(nr, nc, rows, cols) or (nr, nc) in rocks:
                    nr, nc = r, c
                ns[s, a, 0] = nr * cols + nc
                phi[s, a, 0] = (value.get((nr, nc), 0.0), cfg.time_penalty)
    mu = np.zeros(S)
    mu[sr * cols + sc] = 1.0
    return TabularMOMDP(ns, np.ones((S, A, 1)), phi, mu, cfg.gamma, terminal)


# '1'-'3' objects, 'X' wall, 'G' goal, 'S' start.  Instances are taken in
# row-major order when fewer than four per type are requested.
FOUR_ROOM_MAP = (
    "1    2X     G",
    "      X      ",
    "             ",
    "      X      ",
    "      X   3  ",
    "2    3X      ",
    "XX XXXXXX XXX",
    "      X2    3",
    "      X    1 ",
    "             ",
    " 1    X      ",
    "   3  X  1   ",
    "S     X 2    ",
)


@dataclass(frozen=True)
class FourRoomConfig:
    layout: tuple[str, ...] = FOUR_ROOM_MAP
    instances_per_type: int = 4
    gamma: float = 0.95


def _parse_layout(cfg: FourRoomConfig):
    size = len(cfg.layout)
    if any(len(row) != size for row in cfg.layout):
        raise EnvConfigError("four-room layout must be square")
    walls, objects, goal, start = set(), [], None, None
    counts = {1: 0, 2: 0, 3: 0}
    for r, row in enumerate(cfg.layout):
        for c, ch in enumerate(row):
            if ch == "X":
                walls.add((r, c))
            elif ch in "123":
                kind = int(ch)
                if counts[kind] < cfg.instances_per_type:
                    objects.append((r, c, kind - 1))
                counts[kind] += 1
            elif ch == "G":
                if goal is not None:
                    raise LayoutOverlap("more than one goal cell")
                goal = (r, c)
            elif ch == "S":
                start = (r, c)
            elif ch != " ":
                raise EnvConfigError(f"unknown layout symbol {ch!r}")
    if goal is None or start is None:
        raise EnvConfigError("layout needs a goal 'G' and a start 'S'")
    if any(n < cfg.instances_per_type for n in counts.values()):
        raise EnvConfigError(f"layout has fewer than {cfg.instances_per_type} instances of some object type")
    return size, walls, objects, goal, start


def build_four_room(cfg: FourRoomConfig = FourRoomConfig()) -> TabularMOMDP:
    """Four-room pickup world; state = (row, col, collected-object bitmask)."""
    if cfg.instances_per_type < 0:
        raise EnvConfigError("instances_per_type must be non-negative")
    size, walls, objects, goal, start = _parse_layout(cfg)
    cells = [(r, c) for r, c, _ in objects]
    if len(set(cells)) != len(cells) or set(cells) & (walls | {goal, start}) or goal in walls or start in walls:
        raise LayoutOverlap("objects, walls, goal and start must occupy distinct cells")

    n_obj = len(objects)
    n_masks = 1 << n_obj
    n_cells = size * size
    S = n_cells * n_masks
    obj_at = np.full(n_cells, -1, dtype=np.int64)
    obj_kind = np.zeros(n_obj, dtype=np.int64)
    for i, (r, c, kind) in enumerate(objects):
        obj_at[r * size + c] = i
        obj_kind[i] = kind
    blocked = np.zeros(n_cells, dtype=bool)
    for r, c in walls:
        blocked[r * size + c] = True
    goal_cell = goal[0] * size + goal[1]

    rr, cc = np.divmod(np.arange(n_cells), size)
    masks = np.arange(n_masks)
    ns = np.zeros((S, 4), dtype=np.int64)
    phi = np.zeros((S, 4, 3))
    for a, (dr, dc) in enumerate(MOVES):
        nr, nc = rr + dr, cc + dc
        ok = (nr >= 0) & (nr < size) & (nc >= 0) & (nc < size)
        dest = np.where(ok, nr * size + nc, np.arange(n_cells))
        dest = np.where(blocked[np.clip(dest, 0, n_cells - 1)], np.arange(n_cells), dest)
        dest = np.where(blocked, np.arange(n_cells), dest)  # wall states are inert
        obj = obj_at[dest]  # (cells,)
        has_obj = obj >= 0
        bit = np.where(has_obj, 1 << np.maximum(obj, 0), 0)
        fresh = has_obj[:, None] & ((masks[None, :] & bit[:, None]) == 0)  # (cells, masks)
        new_mask = masks[None, :] | np.where(fresh, bit[:, None], 0)
        ns[:, a] = (dest[:, None] * n_masks + new_mask).reshape(-1)
        feat = np.zeros((n_cells, n_masks, 3))
        kinds = obj_kind[np.maximum(obj, 0)]
        ci, mi = np.nonzero(fresh)
        feat[ci, mi, kinds[ci]] = 1.0
        feat[dest == goal_cell] = 1.0
        phi[:, a] = feat.reshape(S, 3)

    terminal = np.zeros(S, dtype=bool)
    terminal[goal_cell * n_masks:(goal_cell + 1) * n_masks] = True
    term_idx = np.flatnonzero(terminal)
    ns[term_idx] = term_idx[:, None]
    phi[term_idx] = 0.0
    mu = np.zeros(S)
    mu[(start[0] * size + start[1]) * n_masks] = 1.0
    return TabularMOMDP(ns[..., None], np.ones((S, 4, 1)), phi[:, :, None, :], mu, cfg.gamma, terminal)


def build_random_momdp(seed: int, num_states: int, num_actions: int, d: int, terminal_prob: float = 0.0, gamma: float = 0.9) -> TabularMOMDP:
    """Seeded random MOMDP: flat-Dirichlet rows, uniform [0, 1) features.

    Each state is terminal independently with probability ``terminal_prob``;
    ``mu`` is uniform over all states.
    """
    if num_states < 1 or num_actions < 1 or d < 1:
        raise EnvConfigError("sizes must be positive")
    rng = np.random.default_rng(seed)
    S, A = num_states, num_actions
    P = rng.dirichlet(np.ones(S), size=(S, A))
    phi = rng.random((S, A, S, d))
    terminal = rng.random(S) < terminal_prob
    for s in np.flatnonzero(terminal):
        P[s] = 0.0
        P[s, :, s] = 1.0
        phi[s] = 0.0
    return TabularMOMDP.from_dense(P, phi, np.full(S, 1.0 / S), gamma, terminal)


def build_continuing_mdp(seed: int, num_states: int, num_actions: int, gamma: float = 0.5, deterministic: bool = True) -> TabularMOMDP:
    """Reward-free controlled Markov process (features are placeholders).

    Intended for ``one_hot_wrap``; deterministic transitions by default.
    """
    rng = np.random.default_rng(seed)
    S, A = num_states, num_actions
    if deterministic:
        P = np.zeros((S, A, S))
        P[np.arange(S)[:, None], np.arange(A)[None, :], rng.integers(S, size=(S, A))] = 1.0
    else:
        P = rng.dirichlet(np.ones(S), size=(S, A))
    mu = np.zeros(S)
    mu[0] = 1.0
    return TabularMOMDP.from_dense(P, np.zeros((S, A, S, 1)), mu, gamma)


def build_toy3() -> TabularMOMDP:
    """One decision, three actions with features (1,0), (0,1), (0.75,0.75)."""
    ns = np.array([[[1], [1], [1]], [[1], [1], [1]]])
    phi = np.zeros((2, 3, 1, 2))
    phi[0, :, 0] = [(1.0, 0.0), (0.0, 1.0), (0.75, 0.75)]
    return TabularMOMDP(ns, np.ones((2, 3, 1)), phi, np.array([1.0, 0.0]), 0.0, np.array([False, True]))
