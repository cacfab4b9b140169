"""Command-line experiment runner.

Subcommands: solve, transform, check, table, order, transfer-demo.  Every
subcommand honors --seed, --trials, --tol, and --out; unknown flags fail
fast with exit 2 (argparse's convention).  Exit codes: 0 success, 1
directory-table diff, 2 input or configuration error, 3 numerical failure.

All randomness flows from the single experiment seed via per-trial derived
seeds, so verdict output is a pure function of (config, inputs).  Reports
split into a deterministic verdict document and a run report that adds
wall-clock timings, the tool version, and input digests; only the latter
varies between runs.  RIL_THREADS caps the table runner's worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .errors import ContractError, ConvergenceError, MdpFormatError
from .hasse import build_refinement_order, order_to_dot, render_order
from .invariance import (
    STATUS_COUNTEREXAMPLE,
    CheckConfig,
    check_invariance,
    search_counterexample,
)
from .mdp import Mdp, load_mdp, make_mdp, mdp_to_obj, with_reward
from .micro import transfer_mdp, transfer_target
from .objects import KIND_TAGS, Resolution
from .sampling import SamplerConfig
from .solvers import (
    SolverParams,
    boltzmann_rational_policy,
    maximally_supportive_optimal_policy,
    mce_policy,
    optimal_action_sets,
    optimal_q,
    policy_q,
    policy_value,
    soft_q,
    uniform_policy,
)
from .table import (
    default_thread_count,
    render_table,
    reproduce_directory_table,
    table_check_config,
)
from .transforms import (
    CLASS_TAGS,
    TransferTarget,
    apply_transform,
    sample_transform,
    transfer_redistribution,
    transform_from_obj,
    transform_to_obj,
)

DEFAULT_SEED = 20250817


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully-resolved settings for the experiment subcommands."""

    check: CheckConfig
    kinds: tuple[str, ...] = KIND_TAGS
    classes: tuple[str, ...] = CLASS_TAGS
    out_dir: str | None = None
    threads: int | None = None

    def __post_init__(self):
        bad = [k for k in self.kinds if k not in KIND_TAGS]
        bad += [c for c in self.classes if c not in CLASS_TAGS]
        if bad:
            raise ContractError(f"unknown roster entries: {bad}")
        if not self.kinds or not self.classes:
            raise ContractError("rosters must be non-empty")

    def echo(self) -> dict:
        c = self.check
        s = c.sampler
        r = c.resolution
        return {
            "seed": c.seed,
            "trials": c.trials,
            "budget": c.budget,
            "refine_trials": c.refine_trials,
            "tol_rel": c.tol_rel,
            "magnitude": c.magnitude,
            "beta": c.params.beta,
            "resolution": {
                "max_fragment_len": r.max_fragment_len,
                "lasso_prefix_cap": r.lasso_prefix_cap,
                "lasso_cycle_cap": r.lasso_cycle_cap,
            },
            "sampler": {
                "n_states": list(s.n_states),
                "n_actions": list(s.n_actions),
                "gammas": list(s.gammas),
                "sparsity": s.sparsity,
                "orphan_prob": s.orphan_prob,
                "reward_low": s.reward_low,
                "reward_high": s.reward_high,
                "min_initial_states": s.min_initial_states,
                "max_initial_states": s.max_initial_states,
            },
            "kinds": list(self.kinds),
            "classes": list(self.classes),
        }


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_out(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _input_digests(paths: dict[str, str | None]) -> dict:
    return {name: _digest(p) for name, p in paths.items() if p is not None}


def _run_report(config_echo: dict, verdicts: dict, timings: dict, digests: dict) -> dict:
    return {
        "config": config_echo,
        "verdicts": verdicts,
        "timings": timings,
        "version": __version__,
        "input_digests": digests,
    }


def experiment_config(args, base: CheckConfig | None = None) -> ExperimentConfig:
    """Merge config-file settings and command-line overrides over defaults."""
    cfg = base if base is not None else CheckConfig(seed=DEFAULT_SEED)
    kinds = KIND_TAGS
    classes = CLASS_TAGS
    out_dir = None
    threads = None

    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = _load_json(args.config)
        if not isinstance(file_cfg, dict):
            raise ContractError("config file must hold a JSON object")
    unknown = set(file_cfg) - {
        "seed", "trials", "budget", "refine_trials", "tol_rel", "magnitude", "beta",
        "resolution", "sampler", "kinds", "classes", "out_dir", "threads",
    }
    if unknown:
        raise ContractError(f"unknown config keys: {sorted(unknown)}")

    res = cfg.resolution
    if "resolution" in file_cfg:
        r = file_cfg["resolution"]
        res = Resolution(
            max_fragment_len=int(r.get("max_fragment_len", res.max_fragment_len)),
            lasso_prefix_cap=int(r.get("lasso_prefix_cap", res.lasso_prefix_cap)),
            lasso_cycle_cap=int(r.get("lasso_cycle_cap", res.lasso_cycle_cap)),
            enumeration_cap=int(r.get("enumeration_cap", res.enumeration_cap)),
        )
    smp = cfg.sampler
    if "sampler" in file_cfg:
        s = file_cfg["sampler"]
        unknown = set(s) - {
            "n_states", "n_actions", "gammas", "sparsity", "orphan_prob",
            "reward_low", "reward_high", "min_initial_states", "max_initial_states",
        }
        if unknown:
            raise ContractError(f"unknown sampler keys: {sorted(unknown)}")
        smp = SamplerConfig(
            n_states=tuple(s.get("n_states", smp.n_states)),
            n_actions=tuple(s.get("n_actions", smp.n_actions)),
            gammas=tuple(s.get("gammas", smp.gammas)),
            sparsity=float(s.get("sparsity", smp.sparsity)),
            orphan_prob=float(s.get("orphan_prob", smp.orphan_prob)),
            reward_low=float(s.get("reward_low", smp.reward_low)),
            reward_high=float(s.get("reward_high", smp.reward_high)),
            min_initial_states=int(s.get("min_initial_states", smp.min_initial_states)),
            max_initial_states=(
                None if s.get("max_initial_states") is None else int(s["max_initial_states"])
            ),
        )
    params = cfg.params
    if "beta" in file_cfg:
        params = SolverParams(
            beta=float(file_cfg["beta"]), epsilon=params.epsilon, max_iters=params.max_iters
        )
    cfg = CheckConfig(
        seed=int(file_cfg.get("seed", cfg.seed)),
        trials=int(file_cfg.get("trials", cfg.trials)),
        budget=int(file_cfg.get("budget", cfg.budget)),
        refine_trials=int(file_cfg.get("refine_trials", cfg.refine_trials)),
        tol_rel=float(file_cfg.get("tol_rel", cfg.tol_rel)),
        magnitude=float(file_cfg.get("magnitude", cfg.magnitude)),
        resolution=res,
        params=params,
        sampler=smp,
    )
    if "kinds" in file_cfg:
        kinds = tuple(file_cfg["kinds"])
    if "classes" in file_cfg:
        classes = tuple(file_cfg["classes"])
    out_dir = file_cfg.get("out_dir")
    threads = file_cfg.get("threads")

    # Command-line flags override the config file.
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        cfg = replace(cfg, trials=args.trials)
    if getattr(args, "budget", None) is not None:
        cfg = replace(cfg, budget=args.budget)
    if getattr(args, "tol", None) is not None:
        cfg = replace(cfg, tol_rel=args.tol)
    if getattr(args, "kinds", None):
        kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    if getattr(args, "out", None) is not None:
        out_dir = args.out
    if getattr(args, "threads", None) is not None:
        threads = args.threads
    if threads is not None:
        threads = int(threads)
        if threads < 1:
            raise ContractError("threads must be at least 1")
    return ExperimentConfig(
        check=cfg, kinds=kinds, classes=classes, out_dir=out_dir, threads=threads
    )


# ---------------------------------------------------------------------------
# Subcommands


def _policy_obj(policy) -> list:
    return np.asarray(policy.probs, dtype=float).tolist()


def cmd_solve(args) -> int:
    m = load_mdp(args.mdp)
    params = SolverParams(
        beta=args.beta,
        epsilon=args.tol if args.tol is not None else 1e-11,
        max_iters=args.max_iters,
    )
    uniform = uniform_policy(m)
    t_uniform = policy_q(m, uniform)
    t_star = optimal_q(m, params)
    t_soft = soft_q(m, params)
    pi_boltzmann = boltzmann_rational_policy(m, params)
    pi_mce = mce_policy(m, params)
    pi_support = maximally_supportive_optimal_policy(m, params)
    sets = optimal_action_sets(m, params)
    out = {
        "states": list(m.states),
        "actions": list(m.actions),
        "gamma": m.gamma,
        "beta": params.beta,
        "q_uniform": t_uniform.q.tolist(),
        "v_uniform": t_uniform.v.tolist(),
        "q_star": t_star.q.tolist(),
        "v_star": t_star.v.tolist(),
        "advantage_star": t_star.adv.tolist(),
        "q_soft": t_soft.q.tolist(),
        "v_soft": t_soft.v.tolist(),
        "policies": {
            "uniform": _policy_obj(uniform),
            "boltzmann_rational": _policy_obj(pi_boltzmann),
            "mce": _policy_obj(pi_mce),
            "maximally_supportive_optimal": _policy_obj(pi_support),
        },
        "optimal_action_sets": [[m.actions[a] for a in acts] for acts in sets],
        "j": {
            "uniform": t_uniform.j,
            "optimal": t_star.j,
            "boltzmann_rational": policy_value(m, pi_boltzmann),
            "mce": policy_value(m, pi_mce),
            "maximally_supportive_optimal": policy_value(m, pi_support),
        },
    }
    text = _dump_json(out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write_out(args.out, "solve.json", text)
        print(f"wrote {os.path.join(args.out, 'solve.json')}")
    return 0


def cmd_transform(args) -> int:
    m = load_mdp(args.mdp)
    if args.transform is not None:
        t = transform_from_obj(_load_json(args.transform))
    else:
        if args.transform_class is None:
            raise ContractError("transform requires --class or --transform")
        seed = args.seed if args.seed is not None else DEFAULT_SEED
        t = sample_transform(
            args.transform_class, m, seed, magnitude=args.magnitude,
            params=SolverParams(beta=args.beta),
        )
    r2 = apply_transform(m, t)
    m2 = with_reward(m, r2)
    out = {
        "transform": transform_to_obj(t),
        "mdp": mdp_to_obj(m),
        "transformed_mdp": mdp_to_obj(m2),
    }
    text = _dump_json(out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write_out(args.out, "transform.json", text)
        print(f"wrote {os.path.join(args.out, 'transform.json')}")
    return 0


def cmd_check(args) -> int:
    exp = experiment_config(args)
    if args.kind not in KIND_TAGS:
        raise ContractError(f"unknown object kind {args.kind!r}")
    if args.transform_class not in CLASS_TAGS:
        raise ContractError(f"unknown transformation class {args.transform_class!r}")
    m = load_mdp(args.mdp) if args.mdp else None
    t0 = time.perf_counter()
    if args.search:
        verdict = search_counterexample(args.kind, args.transform_class, exp.check, mdp=m)
    else:
        verdict = check_invariance(args.kind, args.transform_class, exp.check, mdp=m)
    elapsed = time.perf_counter() - t0
    verdict_obj = verdict.to_obj()
    report = _run_report(
        exp.echo(), verdict_obj, {"check": round(elapsed, 6)},
        _input_digests({"mdp": args.mdp, "config": getattr(args, "config", None)}),
    )
    _write_out(exp.out_dir, "check_verdict.json", _dump_json(verdict_obj))
    _write_out(exp.out_dir, "report.json", _dump_json(report))
    mode = "search" if args.search else "check"
    print(
        f"{mode} {args.kind} / {args.transform_class}: {verdict.status}"
        f" ({verdict.trials_run} trials, {verdict.trials_skipped} skipped)"
    )
    if verdict.status == STATUS_COUNTEREXAMPLE:
        print(f"  largest payload deviation {verdict.witness['diff_magnitude']:.3e}")
    return 0


def cmd_table(args) -> int:
    exp = experiment_config(args, base=table_check_config())
    threads = exp.threads if exp.threads is not None else default_thread_count()
    report = reproduce_directory_table(exp.check, threads=threads)
    verdicts = report.verdicts_obj()
    run = _run_report(
        exp.echo(),
        verdicts,
        report.report_obj()["timings"],
        _input_digests({"config": getattr(args, "config", None)}),
    )
    _write_out(exp.out_dir, "verdicts.json", _dump_json(verdicts))
    _write_out(exp.out_dir, "report.json", _dump_json(run))
    rendered = render_table(report)
    _write_out(exp.out_dir, "table.txt", rendered + "\n")
    print(rendered)
    if not report.all_reproduced:
        bad = ", ".join(f"{c.kind}/{c.transform_class}" for c in report.mismatches())
        print(f"cells not reproduced: {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_order(args) -> int:
    exp = experiment_config(args)
    t0 = time.perf_counter()
    order = build_refinement_order(exp.check, kinds=exp.kinds)
    elapsed = time.perf_counter() - t0
    order_obj = order.to_obj(include_witnesses=True)
    dot = order_to_dot(order)
    run = _run_report(
        exp.echo(), order.to_obj(include_witnesses=False),
        {"order": round(elapsed, 6)},
        _input_digests({"config": getattr(args, "config", None)}),
    )
    _write_out(exp.out_dir, "order.json", _dump_json(order_obj))
    _write_out(exp.out_dir, "hasse.dot", dot + "\n")
    _write_out(exp.out_dir, "report.json", _dump_json(run))
    print(render_order(order))
    return 0


def _load_transfer_inputs(args) -> tuple[Mdp, TransferTarget]:
    if args.mdp is None and args.tau_prime is None and args.l_file is None:
        return transfer_mdp(), transfer_target()
    if args.mdp is None or args.tau_prime is None or args.l_file is None:
        raise ContractError("transfer-demo needs all of --mdp, --tau-prime, --l (or none)")
    m = load_mdp(args.mdp)
    tau_prime = np.array(_load_json(args.tau_prime), dtype=float)
    raw_l = _load_json(args.l_file)
    L = np.array(
        [[math.nan if v is None else float(v) for v in row] for row in raw_l], dtype=float
    )
    return m, TransferTarget(tau_prime=tau_prime, L=L)


def cmd_transfer_demo(args) -> int:
    m, target = _load_transfer_inputs(args)
    tol = args.tol if args.tol is not None else 1e-10
    r2 = transfer_redistribution(m, target)
    m_new_r1 = make_mdp(
        states=m.states, actions=m.actions, tau=target.tau_prime,
        mu0=m.mu0, reward=m.reward, gamma=m.gamma,
    )
    m_new_r2 = with_reward(m_new_r1, r2)

    old_exp_r1 = np.einsum("sap,sap->sa", m.tau, m.reward)
    old_exp_r2 = np.einsum("sap,sap->sa", m.tau, r2)
    new_exp_r2 = np.einsum("sap,sap->sa", np.asarray(target.tau_prime), r2)
    specified = ~np.isnan(np.asarray(target.L))
    max_keep_err = float(np.max(np.abs(old_exp_r2 - old_exp_r1)))
    max_l_err = float(
        np.max(np.abs(new_exp_r2[specified] - np.asarray(target.L)[specified]))
    ) if specified.any() else 0.0

    sets_before = optimal_action_sets(m_new_r1)
    sets_after = optimal_action_sets(m_new_r2)
    flips = [
        {
            "state": m.states[s],
            "before": [m.actions[a] for a in sets_before[s]],
            "after": [m.actions[a] for a in sets_after[s]],
        }
        for s in range(m.n_states)
        if sets_before[s] != sets_after[s]
    ]
    out = {
        "reward_original": m.reward.tolist(),
        "reward_transferred": r2.tolist(),
        "requirements": [
            [None if math.isnan(v) else v for v in row] for row in np.asarray(target.L).tolist()
        ],
        "expectation_preserved_under_old_dynamics": max_keep_err <= tol,
        "max_old_expectation_error": max_keep_err,
        "requirements_met_under_new_dynamics": max_l_err <= tol,
        "max_requirement_error": max_l_err,
        "optimal_sets_under_new_dynamics_before": [
            [m.actions[a] for a in acts] for acts in sets_before
        ],
        "optimal_sets_under_new_dynamics_after": [
            [m.actions[a] for a in acts] for acts in sets_after
        ],
        "optimal_set_flips": flips,
    }
    text = _dump_json(out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write_out(args.out, "transfer_demo.json", text)
        print(f"wrote {os.path.join(args.out, 'transfer_demo.json')}")
    if not (max_keep_err <= tol and max_l_err <= tol):
        print(
            f"expectation identities exceeded tolerance {tol}", file=sys.stderr
        )
        return 3
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="experiment seed")
    common.add_argument("--trials", type=int, default=None, help="trials per check")
    common.add_argument("--tol", type=float, default=None, help="relative tolerance")
    common.add_argument("--out", type=str, default=None, help="output directory")

    parser = argparse.ArgumentParser(
        prog="ril",
        description="Reward-object invariance experiments on finite MDPs.",
    )
    parser.add_argument("--version", action="version", version=f"ril {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve one MDP's value tables and policies")
    p.add_argument("--mdp", required=True, help="MDP JSON file")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature")
    p.add_argument("--max-iters", type=int, default=100_000, help="iteration budget")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("transform", parents=[common], help="apply or sample a reward transformation")
    p.add_argument("--mdp", required=True, help="MDP JSON file")
    p.add_argument("--class", dest="transform_class", default=None, help="transformation class tag")
    p.add_argument("--transform", default=None, help="transformation JSON file to apply")
    p.add_argument("--magnitude", type=float, default=1.0, help="sampling magnitude")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check", parents=[common], help="invariance check or counterexample search for one cell")
    p.add_argument("--kind", required=True, help="object kind tag")
    p.add_argument("--class", dest="transform_class", required=True, help="transformation class tag")
    p.add_argument("--search", action="store_true", help="directed counterexample search")
    p.add_argument("--mdp", default=None, help="fixed MDP JSON file (otherwise sampled)")
    p.add_argument("--budget", type=int, default=None, help="search budget")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("table", parents=[common], help="reproduce the invariance directory")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--budget", type=int, default=None, help="search budget per cell")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default RIL_THREADS)")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("order", parents=[common], help="build the ambiguity-refinement diagram")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--kinds", default=None, help="comma-separated kind roster")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("transfer-demo", parents=[common], help="reward transfer to changed dynamics")
    p.add_argument("--mdp", default=None, help="MDP JSON file")
    p.add_argument("--tau-prime", dest="tau_prime", default=None, help="new dynamics JSON file")
    p.add_argument("--l", dest="l_file", default=None, help="expected-reward requirements JSON file")
    p.set_defaults(func=cmd_transfer_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ContractError, MdpFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        violations = getattr(exc, "violations", None)
        if violations:
            for v in violations:
                print(f"  - {v}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
