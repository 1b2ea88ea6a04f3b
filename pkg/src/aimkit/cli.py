"""``aimkit`` command line: generate, label, train/predict candidates, train/infer the agent, benchmarks.

Exit codes: 0 ok, 2 configuration or input error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import agent as agent_mod
from . import bench
from .baselines import ghc, mghc
from .centrality import influence_capacity, label_candidates
from .classifier import (ClassifierConfig, evaluate_classifier, load_classifier, predict_candidates,
                         save_classifier, train_classifier)
from .errors import CapacityError, ConfigError, GraphParseError, GraphValidationError, ParameterError
from .graph import assign_activation_params, generate, load_graph, save_graph

log = logging.getLogger("aimkit")


# ---- helpers ---------------------------------------------------------------------------------

def _read_config(path) -> dict:
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema", bench.SCHEMA_VERSION) != bench.SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {cfg.get('schema')!r}")
    cfg.pop("schema", None)
    return cfg


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _pool(spec: dict, seed: int, fraction: float, classifier=None):
    """Build ``[(graph, labels-or-candidates)]`` from ``graphs`` (paths) or a family x size grid."""
    graphs = []
    if spec.get("graphs"):
        graphs = [load_graph(p) for p in spec["graphs"]]
    else:
        families = spec.get("families", ["ba", "plc", "sbm"])
        sizes = spec.get("sizes", [200, 300, 400])
        per = int(spec.get("graphs_per_size", 1))
        gen = spec.get("generator_params", {})
        act = spec.get("activation", {})
        i = 0
        for fam in families:
            for n in sizes:
                for _ in range(per):
                    s = seed + 100 * i
                    g = generate(fam, int(n), s, **gen.get(fam, {}))
                    graphs.append(assign_activation_params(g, act.get("ps"), act.get("weight"), rng_seed=s + 1))
                    i += 1
    if not graphs:
        raise ConfigError("no graphs configured")
    out = []
    for g in graphs:
        if classifier is not None:
            out.append((g, predict_candidates(g, classifier, fallback_fraction=fraction)))
        else:
            out.append((g, label_candidates(influence_capacity(g), fraction)))
    return out


def _candidates_for(g, args) -> np.ndarray:
    if getattr(args, "classifier", None):
        return predict_candidates(g, load_classifier(args.classifier), fallback_fraction=args.fraction)
    return np.flatnonzero(label_candidates(influence_capacity(g), args.fraction))


# ---- subcommands -----------------------------------------------------------------------------

def cmd_generate(args, cfg):
    params = dict(cfg.get("generator_params", {}))
    if args.params:
        params.update(json.loads(args.params))
    g = generate(args.family, args.n, args.seed, **params)
    g = assign_activation_params(g, cfg.get("ps"), cfg.get("weight"), rng_seed=args.seed + 1)
    if not args.out:
        raise ConfigError("generate needs --out")
    save_graph(g, args.out)
    print(_json({"graph": str(args.out), "nodes": g.node_count, "edges": g.num_edges}), end="")


def cmd_label(args, cfg):
    g = load_graph(args.graph)
    scores = influence_capacity(g)
    labels = label_candidates(scores, args.fraction)
    lines = [f"{u} {int(labels[u])} {float(scores.capacity[u])!r}" for u in range(g.node_count)]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_train_classifier(args, cfg):
    fraction = cfg.get("fraction", args.fraction)
    train = _pool(cfg.get("train", cfg), args.seed, fraction)
    val = _pool(cfg["validation"], args.seed + 7919, fraction) if "validation" in cfg else None
    ccfg = ClassifierConfig(**{k: cfg[k] for k in ("epochs", "lr", "pos_weight") if k in cfg}, seed=args.seed)
    if args.epochs is not None:
        ccfg.epochs = args.epochs
    params = train_classifier(train, ccfg, val)
    if not args.out:
        raise ConfigError("train-classifier needs --out for the checkpoint")
    save_classifier(args.out, params, {"seed": args.seed, "epochs": ccfg.epochs})
    metrics = {}
    for name, pool in (("train", train), ("validation", val or [])):
        if pool:
            pred = np.concatenate([np.isin(np.arange(g.node_count), predict_candidates(g, params)) for g, _ in pool])
            metrics[name] = evaluate_classifier(pred, np.concatenate([l for _, l in pool]))
    print(_json(metrics), end="")


def cmd_predict(args, cfg):
    g = load_graph(args.graph)
    params = load_classifier(args.checkpoint)
    cand = predict_candidates(g, params, fallback_fraction=args.fraction)
    truth = label_candidates(influence_capacity(g), args.fraction)
    pred = np.isin(np.arange(g.node_count), cand)
    out = {"candidates": cand.tolist(), "metrics": evaluate_classifier(pred, truth)}
    _emit(_json(out), args.out)


def cmd_train_agent(args, cfg):
    agent_cfg = agent_mod.AgentConfig.from_dict(cfg.get("agent", {}))
    if args.episodes is not None:
        agent_cfg.episodes = args.episodes
    classifier = load_classifier(cfg["classifier_checkpoint"]) if cfg.get("classifier_checkpoint") else None
    fraction = cfg.get("fraction", 0.2)
    spec = cfg.get("train", {"families": ["ba", "plc"], "sizes": [200, 300, 400]})
    pool = _pool(spec, args.seed, fraction, classifier)
    if classifier is None:
        pool = [(g, np.flatnonzero(lab)) for g, lab in pool]
    params, rows = agent_mod.train_agent(pool, agent_cfg, args.seed)
    if not args.out:
        raise ConfigError("train-agent needs --out for the checkpoint")
    agent_mod.save_agent(args.out, params, {"seed": args.seed})
    if args.log:
        bench.write_csv(args.log, ["episode", "return", "epsilon", "loss1", "loss2"],
                        [{k: r[k] for k in ("episode", "return", "epsilon", "loss1", "loss2")} for r in rows])
    print(_json({"checkpoint": str(args.out), "episodes": len(rows),
                 "final_return": rows[-1]["return"] if rows else None}), end="")


def cmd_infer(args, cfg):
    g = load_graph(args.graph)
    params = agent_mod.load_agent(args.checkpoint)
    cand = _candidates_for(g, args)
    seeds = agent_mod.infer_seed_set(g, cand, params, args.budget, args.w1, args.w2)
    _emit(_json({"seeds": seeds, "intrinsic_prob": [float(g.intrinsic_prob[s]) for s in seeds]}), args.out)


def cmd_baseline(args, cfg):
    g = load_graph(args.graph)
    space = _candidates_for(g, args) if args.use_candidates else None
    algo = ghc if args.algo == "ghc" else mghc
    seeds = algo(g, args.budget, space, args.trials, args.seed)
    _emit(_json({"algo": args.algo, "seeds": seeds,
                 "intrinsic_prob": [float(g.intrinsic_prob[s]) for s in seeds]}), args.out)


def _experiment_config(args, cfg) -> bench.ExperimentConfig:
    if not args.config:
        raise ConfigError(f"{args.command} needs --config")
    d = dict(cfg, schema=bench.SCHEMA_VERSION)
    if args.out:
        d["output"] = str(args.out)
    if args.seed_given:
        d["seed"] = args.seed
    if args.include_pipeline_time:
        d["include_pipeline_time"] = True
    return bench.ExperimentConfig.from_dict(d)


def cmd_bench(args, cfg):
    ecfg = _experiment_config(args, cfg)
    records = bench.run_experiment(ecfg)
    if not ecfg.output:
        bench.write_csv("/dev/stdout", bench.ResultRecord.columns(), [r.to_row() for r in records])


def cmd_ablate(args, cfg):
    ecfg = _experiment_config(args, cfg)
    rows = bench.ablation_report(ecfg)
    if not ecfg.output:
        bench.write_csv("/dev/stdout", bench.ABLATION_COLUMNS, rows)


# ---- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed (default 0)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="aimkit", parents=[common],
                                description="Activation-aware influence maximization toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn)
        return sp

    sp = add("generate", cmd_generate, "generate a synthetic graph with activation parameters")
    sp.add_argument("--family", choices=["ba", "plc", "sbm"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--params", help="generator keyword arguments as JSON")

    sp = add("label", cmd_label, "influence-capacity candidate labels")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fraction", type=float, default=0.2)

    sp = add("train-classifier", cmd_train_classifier, "train the candidate classifier")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--fraction", type=float, default=0.2)

    sp = add("predict", cmd_predict, "predict candidate nodes of a graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--fraction", type=float, default=0.2)

    sp = add("train-agent", cmd_train_agent, "train the seed-selection agent")
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--log", help="per-episode CSV log")

    sp = add("infer", cmd_infer, "select seeds with a trained agent")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--w1", type=float, default=0.5)
    sp.add_argument("--w2", type=float, default=0.5)
    sp.add_argument("--classifier", help="classifier checkpoint (default: capacity labels)")
    sp.add_argument("--fraction", type=float, default=0.2)

    sp = add("baseline", cmd_baseline, "greedy baselines")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--algo", choices=["ghc", "mghc"], required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--use-candidates", action="store_true")
    sp.add_argument("--classifier")
    sp.add_argument("--fraction", type=float, default=0.2)

    for name, fn, help in (("bench", cmd_bench, "run a benchmark experiment"),
                           ("ablate", cmd_ablate, "candidate-filter ablation")):
        sp = add(name, fn, help)
        sp.add_argument("--include-pipeline-time", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = hasattr(args, "seed")
    for name, default in (("seed", 0), ("config", None), ("out", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _read_config(args.config)
        args.func(args, cfg)
    except CapacityError as e:
        print(f"aimkit: capacity error: {e}", file=sys.stderr)
        return 3
    except (ConfigError, ParameterError, GraphParseError, GraphValidationError, FileNotFoundError) as e:
        print(f"aimkit: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
