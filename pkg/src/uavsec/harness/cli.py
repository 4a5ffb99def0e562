"""Command-line entry point: ``uavsec {run,bench,sweep,mobility,selftest}``."""

from __future__ import annotations

import argparse
import logging
import math
import statistics
import sys

from .. import __version__
from ..beamforming import InfeasibleError
from ..channel import draw_large_scale
from ..numerics import NumericalError, make_rng
from ..rl.dqn import DivergenceError, dqn_train
from ..rl.search import grid_search
from . import pipeline
from .config import ConfigError, load_config
from .output import emit_results

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("uavsec")


def sign_test_p(wins: int, losses: int) -> float:
    """One-sided binomial sign test, ties dropped."""
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, i) for i in range(wins, n + 1)) / 2.0**n


def episode_rows(records):
    return [(r.episode, r.cumulative_reward, r.loss_mse, r.loss_mae, r.epsilon) for r in records]


EPISODE_COLUMNS = ["episode", "cumulative_reward", "loss_mse", "loss_mae", "epsilon"]


def cmd_run(cfg, args):
    scheme = args.scheme or cfg.get("run", "scheme").strip()
    if scheme not in pipeline.SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {', '.join(pipeline.SCHEMES)}")
    art = pipeline.run_pipeline(cfg, args.seed, schemes=(scheme,), episodes=args.episodes)
    result = art.results[0]
    series = {
        "reward": (EPISODE_COLUMNS, episode_rows(art.training_log)),
        "secrecy_trace": (["slot", "c_total"], list(enumerate(result.per_slot, start=1))),
        "trajectory": (["slot", "x", "y", "z", "relay_budget"],
                       [[t + 1, *p] for t, p in enumerate(result.trajectory)]),
    }
    log.info("%s seed %d: total secrecy %.4f bits/s/Hz", scheme, args.seed, result.total_secrecy)
    return [result], series


def cmd_bench(cfg, args):
    n_seeds = cfg.int("bench", "seeds")
    episodes = args.episodes or cfg.int("bench", "episodes")
    seeds = [args.seed + i for i in range(n_seeds)]
    counts = [int(v) for v in cfg.floats("bench", "user_counts")]
    n_centers = len(cfg.points("users", "centers", 2))
    rows, curve, report = [], [], []
    for per_cluster in counts:
        k = per_cluster * n_centers
        totals = {s: [] for s in pipeline.SCHEMES}
        for seed in seeds:
            users = cfg.draw_users(seed, per_cluster)
            for r in pipeline.run_benchmarks(cfg, seed, episodes=episodes, users=users):
                totals[r.scheme].append(r.total_secrecy)
                rows.append((len(users), seed, r.scheme, r.total_secrecy, r.c_sec_b, r.c_sec_r))
            log.info("bench K=%d seed %d done", len(users), seed)
        medians = {s: statistics.median(v) for s, v in totals.items()}
        for s in pipeline.SCHEMES:
            curve.append((k, s, medians[s]))
        first, last = totals["Proposed"], totals["NoUAV_NoBF"]
        wins = sum(a > b for a, b in zip(first, last))
        losses = sum(a < b for a, b in zip(first, last))
        report.append({"users": k, "seeds": seeds, "median_total_secrecy": medians,
                       "per_seed": totals, "sign_test_p_proposed_vs_nouav_nobf": sign_test_p(wins, losses)})
    series = {
        "bench": (["users", "seed", "scheme", "total_secrecy", "c_sec_b", "c_sec_r"], rows),
        "secrecy_vs_users": (["users", "scheme", "median_total_secrecy"], curve),
    }
    return report, series


def cmd_sweep(cfg, args):
    seed = args.seed
    scenario = cfg.scenario(seed)
    large_scale = draw_large_scale(scenario, make_rng(seed, pipeline.LARGE_SCALE))
    scenario, _ = pipeline.assign_clusters(cfg, scenario, large_scale)
    base = cfg.hyperparams(episodes=args.episodes or cfg.int("sweep", "episodes"))
    cells = grid_search(lambda: pipeline.make_env(cfg, scenario, large_scale),
                        cfg.floats("sweep", "gammas"), cfg.floats("sweep", "learning_rates"),
                        base, seed, trainer=dqn_train)
    ranked = [{"gamma": c.hyperparams.gamma, "learning_rate": c.hyperparams.learning_rate, "score": c.score}
              for c in cells]
    curves = [(c.hyperparams.gamma, c.hyperparams.learning_rate, *row)
              for c in cells for row in episode_rows(c.log)]
    series = {
        "sweep": (["gamma", "learning_rate", "score"], [(r["gamma"], r["learning_rate"], r["score"]) for r in ranked]),
        "sweep_curves": (["gamma", "learning_rate", *EPISODE_COLUMNS], curves),
    }
    return ranked, series


def cmd_mobility(cfg, args):
    run = pipeline.run_mobility(cfg, args.seed)
    rows = [(x, r.total_secrecy, r.c_sec_b, r.c_sec_r) for x, r in zip(run.center_x, run.results)]
    report = {"center_x": run.center_x, "total_secrecy": run.totals(), "partial": run.partial,
              "eavesdropper_x": run.eve_x, "results": run.results}
    series = {
        "mobility": (["center_x", "total_secrecy", "c_sec_b", "c_sec_r"], rows),
        "reward": (EPISODE_COLUMNS, episode_rows(run.training_log)),
    }
    return report, series


def cmd_selftest(cfg, args):
    from .selftest import run_selftest
    checks = run_selftest(args.seed)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return [{"check": n, "passed": ok, "detail": d} for n, ok, d in checks], {}


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "sweep": cmd_sweep, "mobility": cmd_mobility,
            "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavsec", description="Secure UAV-relay simulator")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file layered over the built-in defaults")
    common.add_argument("--seed", type=int, default=None, help="master seed (default: [run] seed)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--scheme", help="scheme for 'run'")
    common.add_argument("--episodes", type=int, help="override the training episode count")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.int("run", "seed")
        if args.episodes is not None and args.episodes < 1:
            raise ConfigError("--episodes must be positive")
        payload, series = COMMANDS[args.command](cfg, args)
        meta = {"command": args.command, "seed": args.seed, "config_source": cfg.source,
                "config": cfg.as_dict(), "package_version": __version__,
                "defaults_note": "scenario defaults are desk-scale choices of this simulator, "
                                 "not published system parameters"}
        emit_results(payload, args.out, series, meta)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, NumericalError, DivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command == "selftest" and not all(p["passed"] for p in payload):
        return EXIT_FAIL
    return EXIT_OK
