"""Config-driven experiment harness: factorial runs, CSV output, candidate-filter ablation."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .agent import infer_seed_set, load_agent
from .baselines import ghc, mghc
from .centrality import influence_capacity, label_candidates
from .classifier import load_classifier, predict_candidates
from .diffusion import SeedMode, expected_spread
from .errors import ConfigError
from .graph import Graph, assign_activation_params, generate

__all__ = [
    "SCHEMA_VERSION", "METHODS", "ExperimentConfig", "ResultRecord", "run_experiment",
    "summarize", "ablation_report", "write_records", "read_records", "write_csv",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("grameri", "grameri-no-candidates", "ghc", "mghc", "ghc-candidates", "mghc-candidates")
LEARNED = ("grameri", "grameri-no-candidates")


@dataclass
class ExperimentConfig:
    families: list = field(default_factory=lambda: ["plc"])
    sizes: list = field(default_factory=lambda: [1000])
    generator_params: dict = field(default_factory=dict)   # family -> kwargs for graph.generate
    activation: dict = field(default_factory=dict)         # {"ps": ..., "weight": ...}
    budgets: list = field(default_factory=lambda: [5, 10, 15, 20])
    methods: list = field(default_factory=lambda: ["grameri", "mghc"])
    agent_checkpoint: str | None = None
    classifier_checkpoint: str | None = None   # None: candidates from influence-capacity labels
    candidate_fraction: float = 0.2
    w1: float = 0.5
    w2: float = 0.5
    trials: int = 1000          # evaluation trials
    greedy_trials: int = 200    # M for ghc/mghc
    seed: int = 0
    repeats: int = 20
    include_pipeline_time: bool = False
    output: str | None = None
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {d.get('schema')!r}")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        for name in ("families", "sizes", "budgets", "methods"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a nonempty list")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.repeats < 1 or self.trials < 1 or self.greedy_trials < 1:
            raise ConfigError("repeats, trials and greedy_trials must be >= 1")
        if any(b < 1 for b in self.budgets):
            raise ConfigError("budgets must be positive")
        if self.w1 < 0 or self.w2 < 0:
            raise ConfigError("weights must be non-negative")
        if any(m in LEARNED for m in self.methods):
            if not self.agent_checkpoint or not Path(self.agent_checkpoint).is_file():
                raise ConfigError(f"agent checkpoint {self.agent_checkpoint!r} not found")
        if self.classifier_checkpoint and not Path(self.classifier_checkpoint).is_file():
            raise ConfigError(f"classifier checkpoint {self.classifier_checkpoint!r} not found")


@dataclass(frozen=True)
class ResultRecord:
    method: str
    family: str
    n: int
    budget: int
    normalized_spread: float
    mean_intrinsic_prob: float
    wall_time_ms: float
    seed: int
    run: int

    def __post_init__(self):
        if not 0.0 <= self.normalized_spread <= 1.0:
            raise ValueError(f"normalized_spread {self.normalized_spread} outside [0, 1]")
        if not 0.0 <= self.mean_intrinsic_prob <= 1.0:
            raise ValueError(f"mean_intrinsic_prob {self.mean_intrinsic_prob} outside [0, 1]")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> dict:
        return {k: repr(v) if isinstance(v, float) else v for k, v in asdict(self).items()}

    @classmethod
    def from_row(cls, row: dict) -> "ResultRecord":
        conv = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, t in conv.items():
            v = row[k]
            out[k] = int(v) if t in ("int", int) else float(v) if t in ("float", float) else str(v)
        return cls(**out)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def write_records(path, records) -> None:
    write_csv(path, ResultRecord.columns(), [r.to_row() for r in records])


def read_records(path) -> list[ResultRecord]:
    with Path(path).open(newline="") as fh:
        return [ResultRecord.from_row(r) for r in csv.DictReader(fh)]


# ---- running ---------------------------------------------------------------------------------

def _instance(cfg: ExperimentConfig, family: str, n: int, run: int) -> Graph:
    seed = cfg.seed + 1000 * run
    g = generate(family, n, seed, **cfg.generator_params.get(family, {}))
    act = cfg.activation
    return assign_activation_params(g, act.get("ps"), act.get("weight"), rng_seed=seed + 1)


def _candidates(g: Graph, cfg: ExperimentConfig, classifier) -> np.ndarray:
    if classifier is not None:
        return predict_candidates(g, classifier, fallback_fraction=cfg.candidate_fraction)
    return np.flatnonzero(label_candidates(influence_capacity(g), cfg.candidate_fraction))


def _select(method: str, g: Graph, b: int, cand, agent, cfg: ExperimentConfig, seed: int) -> list:
    everything = np.arange(g.node_count)
    if method == "grameri":
        return infer_seed_set(g, cand, agent, b, cfg.w1, cfg.w2)
    if method == "grameri-no-candidates":
        return infer_seed_set(g, everything, agent, b, cfg.w1, cfg.w2)
    space = cand if method.endswith("-candidates") else None
    if method.startswith("mghc"):
        return mghc(g, b, space, cfg.greedy_trials, seed)
    return ghc(g, b, space, cfg.greedy_trials, seed)


class _Pipeline:
    """Loaded models and per-graph candidate sets, with the time spent predicting them."""

    def __init__(self, cfg: ExperimentConfig):
        cfg.validate()
        self.cfg = cfg
        self.agent = load_agent(cfg.agent_checkpoint) if cfg.agent_checkpoint and Path(cfg.agent_checkpoint).is_file() else None
        self.classifier = load_classifier(cfg.classifier_checkpoint) if cfg.classifier_checkpoint else None

    def candidates(self, g: Graph):
        t0 = time.perf_counter()
        cand = _candidates(g, self.cfg, self.classifier)
        return cand, (time.perf_counter() - t0) * 1e3

    def run(self, method, g, b, cand, cand_ms, seed, inclusive):
        t0 = time.perf_counter()
        seeds = _select(method, g, b, cand, self.agent, self.cfg, seed)
        ms = (time.perf_counter() - t0) * 1e3
        uses_cand = method == "grameri" or method.endswith("-candidates")
        if inclusive and uses_cand:
            ms += cand_ms
        return seeds, ms

    def evaluate(self, g, seeds, seed):
        est = expected_spread(g, seeds, SeedMode.INTRINSIC, self.cfg.trials, seed)
        return est.normalized, float(np.mean(g.intrinsic_prob[list(seeds)]))


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[ResultRecord]:
    """One record per (family, size, run, budget, method); rows come out in that order."""
    pipe = _Pipeline(cfg)
    records = []
    for family in cfg.families:
        for n in cfg.sizes:
            for run in range(cfg.repeats):
                g = _instance(cfg, family, n, run)
                cand, cand_ms = pipe.candidates(g)
                seed = cfg.seed + run
                for b in cfg.budgets:
                    for method in cfg.methods:
                        seeds, ms = pipe.run(method, g, b, cand, cand_ms, seed, cfg.include_pipeline_time)
                        spread, ps = pipe.evaluate(g, seeds, seed)
                        rec = ResultRecord(method, family, int(n), int(b), spread, ps, ms, seed, run)
                        records.append(rec)
                        if progress:
                            progress(rec)
    if cfg.output:
        write_records(cfg.output, records)
        write_csv(_summary_path(cfg.output), SUMMARY_COLUMNS, summarize(records))
    return records


SUMMARY_COLUMNS = ["method", "family", "n", "budget", "runs",
                   "spread_mean", "spread_std", "intrinsic_mean", "intrinsic_std", "time_ms_mean", "time_ms_std"]


def _summary_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def summarize(records) -> list[dict]:
    """Mean and population std per (method, family, n, budget) cell, in first-seen order."""
    cells: dict = {}
    for r in records:
        cells.setdefault((r.method, r.family, r.n, r.budget), []).append(r)
    out = []
    for (method, family, n, b), rs in cells.items():
        s = np.array([r.normalized_spread for r in rs])
        p = np.array([r.mean_intrinsic_prob for r in rs])
        t = np.array([r.wall_time_ms for r in rs])
        out.append({"method": method, "family": family, "n": n, "budget": b, "runs": len(rs),
                    "spread_mean": float(s.mean()), "spread_std": float(s.std()),
                    "intrinsic_mean": float(p.mean()), "intrinsic_std": float(p.std()),
                    "time_ms_mean": float(t.mean()), "time_ms_std": float(t.std())})
    return out


ABLATION_COLUMNS = ["method", "family", "n", "budget", "run", "candidates",
                    "time_all_ms", "time_candidates_ms", "spread_all", "spread_candidates", "spread_delta_rel"]


def ablation_report(cfg: ExperimentConfig) -> list[dict]:
    """Each base method over all nodes vs over predicted candidates, timed including candidate prediction."""
    base = []
    for m in cfg.methods:
        root = "grameri" if m.startswith("grameri") else m.replace("-candidates", "")
        if root not in base:
            base.append(root)
    pipe = _Pipeline(cfg)
    rows = []
    for family in cfg.families:
        for n in cfg.sizes:
            for run in range(cfg.repeats):
                g = _instance(cfg, family, n, run)
                cand, cand_ms = pipe.candidates(g)
                seed = cfg.seed + run
                for b in cfg.budgets:
                    for root in base:
                        all_m, cand_m = ((root + "-no-candidates", root) if root == "grameri"
                                         else (root, root + "-candidates"))
                        s_all, t_all = pipe.run(all_m, g, b, cand, cand_ms, seed, True)
                        s_cand, t_cand = pipe.run(cand_m, g, b, cand, cand_ms, seed, True)
                        v_all = pipe.evaluate(g, s_all, seed)[0]
                        v_cand = pipe.evaluate(g, s_cand, seed)[0]
                        delta = (v_all - v_cand) / v_all if v_all > 0 else 0.0
                        rows.append({"method": root, "family": family, "n": n, "budget": b, "run": run,
                                     "candidates": len(cand), "time_all_ms": t_all, "time_candidates_ms": t_cand,
                                     "spread_all": v_all, "spread_candidates": v_cand, "spread_delta_rel": delta})
    if cfg.output:
        write_csv(cfg.output, ABLATION_COLUMNS, rows)
    return rows
