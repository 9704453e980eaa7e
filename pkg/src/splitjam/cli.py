"""Command-line front end: validate, train, sweep, show-plan.

Every command is a pure function of its config and seeds: outputs carry no
timestamps and metric streams are JSONL with one record per episode, so
repeated runs diff clean.  ``train`` refuses to start until the validation
suite passes, unless ``--skip-validate`` is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import config as cfgio
from . import validate as val
from .agent import TrainConfig, greedy_rollout, q_baseline_train, run_random, train
from .eavesdrop import delta, expected_leakage_closed
from .env import EnvConfig, SplitEnv
from .nn.checkpoint import load_arrays, save_arrays
from .slmodel import make_model
from .topology import GenDefaults, gen_scenario

AGENT_KINDS = ("icmca", "no-icm", "no-ca", "qtable", "random")


def _env_factory_from_args(args, e_count=None, monitor_prob=None,
                           observe_eavesdroppers=None):
    e_count = e_count if e_count is not None else args.eavesdroppers
    observe = (args.observe_eavesdroppers
               if observe_eavesdroppers is None else observe_eavesdroppers)

    def factory(seed):
        if args.scenario:
            scn = cfgio.mapping_to_scenario(cfgio.read_config(args.scenario))
        else:
            defaults = (GenDefaults() if monitor_prob is None
                        else GenDefaults(monitor_prob=monitor_prob))
            scn = gen_scenario(args.scenario_seed, u_count=args.devices,
                               e_count=e_count, defaults=defaults)
        if args.model:
            model = cfgio.mapping_to_model(cfgio.read_config(args.model))
        else:
            model = make_model(args.layers, args.profile, args.scenario_seed)
        env_cfg = EnvConfig(segment_count=args.segments,
                            observe_eavesdroppers=observe)
        return SplitEnv(scn, model, env_cfg, seed,
                        record_trace=getattr(args, "trace", False))

    return factory


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        episodes=args.episodes,
        seed=seed,
        zeta=args.zeta,
        history_len=args.history,
        batch_size=args.batch_size,
        no_icm=args.agent == "no-icm",
        no_ca=args.agent == "no-ca",
    )


def _run_agent(kind: str, factory, cfg: TrainConfig):
    if kind == "qtable":
        return q_baseline_train(factory, cfg)
    if kind == "random":
        return run_random(factory, cfg)
    return train(factory, cfg)


def _write_metrics(metrics: list[dict], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        for record in metrics:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _write_reward_csv(metrics: list[dict], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("episode,reward_total,reward_extrinsic,leakage_bits\n")
        for m in metrics:
            fh.write(f"{m['episode']},{m['reward_total']!r},"
                     f"{m['reward_extrinsic']!r},{m['leakage_bits']!r}\n")


def _write_case_csv(rows: list[dict], path: str):
    if not rows:
        return
    keys = list(rows[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in keys) + "\n")


def _write_oracle_tables(report: dict, directory: str):
    os.makedirs(directory, exist_ok=True)
    by_name = {c["name"]: c for c in report["checks"]}
    leak = by_name.get("leakage_closed_form_vs_monte_carlo")
    if leak:
        _write_case_csv(leak["details"]["cases"],
                        os.path.join(directory, "leakage_oracle.csv"))
    power_rows = []
    for name in ("single_deceiver_power_closed_form",
                 "single_eavesdropper_power_closed_form"):
        if name in by_name:
            power_rows.extend(by_name[name]["details"]["cases"])
    _write_case_csv(power_rows,
                    os.path.join(directory, "power_closed_vs_grid.csv"))


def cmd_validate(args) -> int:
    report = val.run_all(seed=args.seed, mask_episodes=args.mask_episodes)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.tables:
        _write_oracle_tables(report, args.tables)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}")
    leak = next((c for c in report["checks"]
                 if c["name"] == "leakage_closed_form_vs_monte_carlo"), None)
    if leak and leak["details"].get("cases"):
        print("closed form vs Monte Carlo (bits):")
        for row in leak["details"]["cases"]:
            print(f"  case {row['case']:2d}: closed {row['closed_bits']:14.2f}"
                  f"  mc {row['mc_mean_bits']:14.2f}"
                  f" +/- {row['mc_stderr_bits']:10.2f}"
                  f"  ({row['gap_sigma']:.2f} sigma)")
    print(text if args.verbose else f"overall: "
          f"{'PASS' if report['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


def _ensure_validated(args) -> bool:
    if args.skip_validate:
        return True
    print("running validation suite first (disable with --skip-validate)")
    report = val.run_all(seed=0, mask_episodes=args.mask_episodes)
    if not report["passed"]:
        for check in report["checks"]:
            if not check["passed"]:
                print(f"validation failed: {check['name']}", file=sys.stderr)
        return False
    return True


def cmd_train(args) -> int:
    if not _ensure_validated(args):
        return 1
    os.makedirs(args.out, exist_ok=True)
    base_factory = _env_factory_from_args(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    for seed in seeds:
        created = []

        def factory(s, created=created):
            env = base_factory(s)
            created.append(env)
            return env

        cfg = _train_config(args, seed)
        agent, metrics = _run_agent(args.agent, factory, cfg)
        tag = f"{args.agent}_seed{seed}"
        _write_metrics(metrics, os.path.join(args.out, f"metrics_{tag}.jsonl"))
        _write_reward_csv(metrics, os.path.join(args.out, f"reward_{tag}.csv"))
        if args.trace and created:
            _write_metrics(created[-1].trace_log,
                           os.path.join(args.out, f"trace_{tag}.jsonl"))
        if agent is not None and hasattr(agent, "state_arrays"):
            save_arrays(agent.state_arrays(),
                        os.path.join(args.out, f"checkpoint_{tag}.bin"))
        final = metrics[-1]
        print(f"{tag}: final reward_extrinsic={final['reward_extrinsic']:.4f} "
              f"leakage_bits={final['leakage_bits']:.1f}")
    return 0


def cmd_sweep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    seeds = [int(s) for s in args.seeds.split(",")]
    if args.axis == "monitor-prob":
        points = [float(v) for v in args.values.split(",")]
    elif args.axis == "eavesdroppers":
        points = [int(v) for v in args.values.split(",")]
    elif args.axis == "hidden-eavesdroppers":
        points = [1, 0]
    else:
        raise SystemExit(f"unknown sweep axis {args.axis}")

    rows = []
    for point in points:
        finals = []
        for seed in seeds:
            if args.axis == "monitor-prob":
                factory = _env_factory_from_args(args, monitor_prob=point)
            elif args.axis == "eavesdroppers":
                factory = _env_factory_from_args(args, e_count=point)
            else:
                factory = _env_factory_from_args(
                    args, observe_eavesdroppers=bool(point))
            cfg = _train_config(args, seed)
            _, metrics = _run_agent(args.agent, factory, cfg)
            window = metrics[-min(10, len(metrics)):]
            finals.append(float(np.mean([m["leakage_bits"] for m in window])))
        rows.append((point, float(np.mean(finals)), finals))

    path = os.path.join(args.out, f"sweep_{args.axis}_{args.agent}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("point,mean_final_leakage_bits,"
                 + ",".join(f"seed{s}" for s in seeds) + "\n")
        for point, mean, finals in rows:
            fh.write(f"{point},{mean!r},"
                     + ",".join(repr(f) for f in finals) + "\n")
    for point, mean, _ in rows:
        print(f"{args.axis}={point}: mean final leakage {mean:.1f} bits")
    print(f"wrote {path}")
    return 0


def cmd_show_plan(args) -> int:
    factory = _env_factory_from_args(args)
    env = factory(args.seed)
    from .agent import ICMCAAgent
    cfg = _train_config(args, args.seed)
    agent = ICMCAAgent(env, cfg)
    agent.load_arrays(load_arrays(args.checkpoint))
    trace = greedy_rollout(agent, env)
    plan = env.last_plan
    from .slmodel import validate_plan
    print(f"plan valid: {validate_plan(plan, env.model)}")
    s = env.cfg.segment_count
    for state, action_id, outcome in trace:
        n = state.step_idx
        act = env.table.decode(action_id, n)
        hop = outcome.info["hop"]
        if hop is None:
            print(f"step {n}: trainer device {act.receiver_choice - 1} "
                  f"takes {act.cut_size} layers")
            continue
        seg_idx = n - 2 if n <= s else 2 * s - n
        report = expected_leakage_closed([(hop, plan.segments[seg_idx])],
                                         env.scn)
        print(f"step {n}: {hop.tx.kind.value}{hop.tx.index} -> "
              f"{hop.rx.kind.value}{hop.rx.index} "
              f"payload={hop.payload_bits:.0f}b p_tx={hop.tx_power}W "
              f"deceivers={[(d.node.index, d.power) for d in hop.deceivers]} "
              f"expected_leak={report.expected_bits:.1f}b")
    ledger = env.ledger()
    print(f"episode time {ledger.time_spent:.4f}s of "
          f"{env.scn.time_budget}s; energy {ledger.energy_spent:.4f}J of "
          f"{env.scn.energy_budget}J")
    return 0


def _add_env_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", help="scenario config file")
    p.add_argument("--model", help="layered-model config file")
    p.add_argument("--scenario-seed", type=int, default=0)
    p.add_argument("--devices", type=int, default=6)
    p.add_argument("--eavesdroppers", type=int, default=2)
    p.add_argument("--layers", type=int, default=6)
    p.add_argument("--profile", default="uniform",
                   choices=("uniform", "pyramid", "fullscale"))
    p.add_argument("--segments", type=int, default=4)
    p.add_argument("--observe-eavesdroppers", type=int, default=1)


def _add_train_args(p: argparse.ArgumentParser):
    p.add_argument("--agent", default="icmca", choices=AGENT_KINDS)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--seeds", default="0")
    p.add_argument("--zeta", type=float, default=0.3)
    p.add_argument("--history", type=int, default=4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--skip-validate", action="store_true")
    p.add_argument("--mask-episodes", type=int, default=10_000)
    p.add_argument("--trace", action="store_true",
                   help="emit per-step episode traces as JSONL")
    p.add_argument("--out", default=os.environ.get("SPLITJAM_OUT", "out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitjam",
        description="decoy-protected multi-hop split learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-episodes", type=int, default=10_000)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--tables", help="directory for side-by-side oracle CSVs")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("train", help="train an agent, emit metrics")
    _add_env_args(p)
    _add_train_args(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sweep", help="sweep one axis, emit a CSV table")
    _add_env_args(p)
    _add_train_args(p)
    p.add_argument("--axis", required=True,
                   choices=("monitor-prob", "eavesdroppers",
                            "hidden-eavesdroppers"))
    p.add_argument("--values", default="0.3,0.5,0.7,0.9")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("show-plan", help="greedy rollout of a checkpoint")
    _add_env_args(p)
    _add_train_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_show_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
