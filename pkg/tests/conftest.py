import time

import numpy as np
import pytest

from _acceptance_log import LINES
from sfols import planner
from sfols.envs import build_dst, build_toy3
from sfols.evaluation import simplex_sweep
from sfols.gpi import dedup_vectors, prune_to_ccs
from sfols.ols import SFOLSConfig, sfols_run


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(LINES):
            terminalreporter.write_line(LINES[num])


@pytest.fixture(scope="session")
def dst():
    return build_dst()


@pytest.fixture(scope="session")
def toy():
    return build_toy3()


@pytest.fixture(scope="session")
def dst_run(dst):
    start = time.perf_counter()
    result = sfols_run(dst, SFOLSConfig())
    return result, time.perf_counter() - start


@pytest.fixture(scope="session")
def dst_sweep(dst):
    """Dense 1,001-point sweep: weights, optimal values and the pruned oracle CCS."""
    weights = simplex_sweep(1001)
    v_star, sfs = [], []
    for w in weights:
        policy, table, psi = planner.solve_task(dst, w)
        v_star.append(planner.optimal_value(dst, w))
        sfs.append(psi)
    ccs = prune_to_ccs(dedup_vectors(sfs))
    return np.asarray(weights), np.asarray(v_star), ccs
