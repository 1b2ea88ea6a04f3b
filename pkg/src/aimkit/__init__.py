"""Activation-aware influence maximization: diffusion model, candidate filtering, a
graph-conditioned two-objective double-Q agent, and greedy baselines."""

from .errors import (AimkitError, CapacityError, ConfigError, ContractViolation, EnvError,
                     GraphParseError, GraphValidationError, ParameterError)
from .graph import (Graph, assign_activation_params, coreness, generate, generate_ba, generate_plc,
                    generate_sbm, load_graph, save_graph)
from .diffusion import SeedMode, SpreadEstimate, exact_spread, expected_spread, marginal_gain, simulate_once
from .centrality import InfluenceScores, influence_capacity, label_candidates
from .classifier import ClassifierConfig, evaluate_classifier, predict_candidates, train_classifier
from .agent import AgentConfig, AgentParams, infer_seed_set, train_agent
from .baselines import exhaustive_optimal, ghc, mghc

__version__ = "0.1.0"
