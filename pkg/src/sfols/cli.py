"""Command-line front end: ``sfols run | eval | lifelong``.

Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, baselines, evaluation, planner
from .config import ConfigError, RunConfig, load_config, sub_seed
from .gpi import SFSet, make_entry
from .ols import RunResult, sfols_run

log = logging.getLogger("sfols")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class InputError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return repr(x) if np.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _hv_ref(cfg: RunConfig, momdp):
    ref = cfg.raw["evaluation"]["hypervolume_ref"]
    if ref is None:
        return None
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (momdp.d,):
        raise ConfigError(f"evaluation.hypervolume_ref needs {momdp.d} components")
    return ref


def execute(cfg: RunConfig, momdp) -> RunResult:
    solver = cfg.solver_config()
    a = cfg.raw["algorithm"]
    alg_seed = sub_seed(cfg.seed, "solver")
    if cfg.algorithm == "sfols":
        return sfols_run(momdp, solver)
    if cfg.algorithm == "wcpi":
        return baselines.wcpi_run(momdp, solver, int(a["max_iters"]), alg_seed)
    if cfg.algorithm == "sip":
        return baselines.sip_run(momdp, solver, float(a["negative"]))
    return baselines.random_weights_run(momdp, solver, int(a["num_iters"]), alg_seed)


def iterations_table(result: RunResult, momdp, test_weights, hv_ref, seed: int, tol: float) -> str:
    d = momdp.d
    metrics = evaluation.iteration_metrics(momdp, test_weights, hv_ref, tol)
    header = ["iteration"] + [f"w{j}" for j in range(d)] + ["num_policies", "mean_v_smp", "mean_v_gpi", "hypervolume", "max_queue_priority", "seed"]
    rows = []
    cache: dict[int, dict] = {}
    for rec in result.iterations:
        n = rec.num_policies
        if n not in cache:
            cache[n] = metrics(result.psi_set.prefix(n)) if n else {}
        m = cache[n]
        rows.append([rec.iteration] + [_fmt(x) for x in rec.weight] + [n, _fmt(m.get("mean_v_smp")), _fmt(m.get("mean_v_gpi")), _fmt(m.get("hypervolume")), _fmt(rec.max_priority), seed])
    return _csv(header, rows)


def cmd_run(cfg: RunConfig) -> int:
    momdp = cfg.build_env()
    result = execute(cfg, momdp)
    test_weights = evaluation.sample_simplex_weights(cfg.raw["evaluation"]["num_weights"], momdp.d, sub_seed(cfg.seed, "eval"))
    tol = float(cfg.raw["solver"]["tol"])
    out = cfg.out_dir
    manifest = {
        "config": cfg.raw,
        "seed": cfg.seed,
        "versions": {"sfols": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "algorithm": result.algorithm,
        "stop_reason": result.stop_reason,
        "num_tasks": len(result.iterations),
        "num_policies": len(result.psi_set),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    _write(out / "iterations.csv", iterations_table(result, momdp, test_weights, _hv_ref(cfg, momdp), cfg.seed, tol))
    ccs = {"seed": cfg.seed, "env": cfg.raw["env"], "d": momdp.d, "entries": result.psi_set.dump(cfg.raw["output"]["include_sf_tables"])}
    _write(out / "ccs.json", json.dumps(ccs, sort_keys=True) + "\n")
    log.info("%s solved %d tasks, |Psi| = %d (%s)", result.algorithm, len(result.iterations), len(result.psi_set), result.stop_reason)
    return EXIT_OK


def load_policy_set(path, momdp, tol: float = 1e-8) -> SFSet:
    """Rebuild a policy set from ``ccs.json`` with exactly evaluated SFs.

    Policies come from the stored action list, else greedily from the stored
    SF table at the source weight, else by re-solving the source weight.
    """
    try:
        doc = json.loads(Path(path).read_text())
        entries = doc["entries"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read policy set {path}: {exc}") from exc
    if not entries:
        raise InputError("policy set is empty")
    psi_set = SFSet()
    for e in entries:
        w = np.asarray(e["source_weight"], dtype=float)
        if w.shape != (momdp.d,):
            raise InputError("stored weights do not match the environment's feature dimension")
        if "policy" in e:
            pol = np.asarray(e["policy"], dtype=np.int64)
        elif "sf_table" in e:
            pol = planner.greedy(np.asarray(e["sf_table"], dtype=float) @ w)
        else:
            pol = planner.solve_task(momdp, w, tol)[0]
        if pol.shape != (momdp.num_states,) or pol.min() < 0 or pol.max() >= momdp.num_actions:
            raise InputError("stored policy does not fit the environment")
        psi_set.add(make_entry(momdp, pol, w, e.get("solver_tag", "planner"), tol))
    return psi_set


def cmd_eval(cfg: RunConfig, ccs_path, num_weights: int | None) -> int:
    momdp = cfg.build_env()
    tol = float(cfg.raw["solver"]["tol"])
    psi_set = load_policy_set(ccs_path, momdp, tol)
    n = cfg.raw["evaluation"]["num_weights"] if num_weights is None else num_weights
    if n < 0:
        raise ConfigError("number of weights must be non-negative")
    weights = evaluation.sample_simplex_weights(n, momdp.d, sub_seed(cfg.seed, "eval"))
    report = evaluation.evaluate_policy_set(momdp, psi_set, weights, tol)
    bad = report.check()
    if bad:
        log.warning("report inconsistencies: %s", "; ".join(bad[:5]))
    _write(cfg.out_dir / "eval.csv", report.to_csv(seed=cfg.seed, d=momdp.d))
    return EXIT_OK


def cmd_lifelong(cfg: RunConfig, ccs_path, phases: int | None) -> int:
    momdp = cfg.build_env()
    tol = float(cfg.raw["solver"]["tol"])
    psi_set = load_policy_set(ccs_path, momdp, tol)
    ll = cfg.raw["lifelong"]
    n = int(ll["phases"] if phases is None else phases)
    if n < 0:
        raise ConfigError("number of phases must be non-negative")
    trace = evaluation.lifelong_eval(momdp, psi_set, n, int(ll["steps_per_phase"]), sub_seed(cfg.seed, "lifelong"), int(ll["max_episode_steps"]), tol)
    header = ["phase"] + [f"w{j}" for j in range(momdp.d)] + ["mean_return", "stderr", "num_episodes", "v_gpi_exact", "seed"]
    rows = [[p.phase] + [_fmt(x) for x in p.weight] + [_fmt(p.mean_return), _fmt(p.stderr), p.num_episodes, _fmt(p.v_gpi_exact), cfg.seed] for p in trace]
    _write(cfg.out_dir / "lifelong.csv", _csv(header, rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfols", description="Successor-feature policy sets for linear multi-objective tasks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "eval", "lifelong"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="global seed (overrides the config)")
        if name != "run":
            sp.add_argument("--ccs", required=True, help="ccs.json written by 'sfols run'")
        if name == "eval":
            sp.add_argument("--num-weights", type=int)
        if name == "lifelong":
            sp.add_argument("--phases", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.seed, args.out)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.ccs, args.num_weights)
        return cmd_lifelong(cfg, args.ccs, args.phases)
    except (ConfigError, InputError) as exc:
        print(f"sfols: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"sfols: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
