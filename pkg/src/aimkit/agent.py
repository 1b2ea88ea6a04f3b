"""Multi-objective double-Q agent for activation-aware seed selection.

Each objective k (1: marginal spread, 2: intrinsic probability of the chosen seed)
has a local and a target Q network.  A Q network is a max-aggregating GraphSAGE
encoder followed by an MLP on ``[state embedding || action embedding || graph embedding]``
where the state embedding is the max over the seeds chosen so far and the graph
embedding is the max over all nodes.  Actions are chosen by the weighted sum of the
two local Q values.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .diffusion import SeedMode, marginal_gain
from .errors import ConfigError, ContractViolation, EnvError
from .graph import Graph
from .nn import (AdamState, DenseLayer, _act, adam_step, init_dense, load_params, mlp_backward,
                 mlp_forward, mse_loss, save_params)
from .sage import (NUM_FEATURES, EmbeddingSet, SageLayer, SageParams, compute_features,
                   encode_backward, encode_forward, max_pool, max_pool_backward)

__all__ = [
    "AgentConfig", "QNetwork", "AgentParams", "Transition", "ReplayBuffer", "EnvState", "AIMEnv",
    "init_qnetwork", "node_embeddings", "q_values", "q_value", "select_action", "scalarized_select",
    "bellman_target", "train_agent", "infer_seed_set", "save_agent", "load_agent", "epsilon_schedule",
]

log = logging.getLogger(__name__)

ENCODER_WIDTHS = (64, 32, 16)
HEAD_WIDTHS = (12, 8, 1)


@dataclass
class AgentConfig:
    gamma: float = 0.99
    lr: float = 0.0008
    batch_size: int = 64
    buffer_capacity: int = 10000
    target_update_every: int = 10  # episodes
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.996
    w1: float = 0.5
    w2: float = 0.5
    reward_trials: int = 200
    budget: int = 10
    episodes: int = 1000
    plateau_window: int = 50
    plateau_patience: int | None = None
    validate_every: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown agent config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class QNetwork:
    sage: SageParams
    head: list

    def params(self) -> list[np.ndarray]:
        out = self.sage.params()
        for layer in self.head:
            out += layer.params
        return out

    def copy(self) -> "QNetwork":
        return QNetwork(self.sage.copy(), [DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
                                           for l in self.head])


@dataclass
class AgentParams:
    local: list   # [Q^L_1, Q^L_2]
    target: list  # [Q^T_1, Q^T_2]
    config: AgentConfig = field(default_factory=AgentConfig)

    def sync_targets(self) -> None:
        self.target = [q.copy() for q in self.local]


def init_qnetwork(rng: np.random.Generator, in_dim: int = NUM_FEATURES, widths=ENCODER_WIDTHS,
                  head_widths=HEAD_WIDTHS) -> QNetwork:
    sage = SageParams.init(rng, in_dim, widths, "max")
    head, d = [], 3 * widths[-1]
    for i, w in enumerate(head_widths):
        head.append(init_dense(rng, d, w, "linear" if i == len(head_widths) - 1 else "relu"))
        d = w
    return QNetwork(sage, head)


# ---- replay --------------------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    state: tuple
    action: int
    r1: float
    r2: float
    next_state: tuple
    terminal: bool
    graph_id: str

    def __post_init__(self):
        if self.action in self.state:
            raise ContractViolation(f"action {self.action} already in state")
        if tuple(self.next_state) != tuple(self.state) + (self.action,):
            raise ContractViolation("next_state must be state followed by action")


class ReplayBuffer:
    """Bounded FIFO of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int = 10000):
        self.capacity = int(capacity)
        self._items: deque = deque(maxlen=self.capacity)

    def push(self, t: Transition) -> None:
        self._items.append(t)

    def sample(self, rng: np.random.Generator, batch_size: int) -> list:
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


# ---- environment --------------------------------------------------------------------

@dataclass
class EnvState:
    graph: Graph
    solution: list
    candidates: np.ndarray
    budget: int

    @property
    def step(self) -> int:
        return len(self.solution)

    @property
    def terminal(self) -> bool:
        return len(self.solution) >= self.budget

    def feasible(self) -> np.ndarray:
        return np.setdiff1d(self.candidates, np.asarray(self.solution, dtype=np.int64))


class AIMEnv:
    """One graph with its candidate set; an episode adds seeds until the budget is reached."""

    def __init__(self, graph: Graph, candidates, budget: int, reward_trials: int = 200):
        self.graph = graph
        self.candidates = np.unique(np.asarray(candidates, dtype=np.int64))
        if len(self.candidates) < budget:
            raise ConfigError(f"{len(self.candidates)} candidates cannot fill budget {budget}")
        self.budget = int(budget)
        self.reward_trials = reward_trials
        self.state = EnvState(graph, [], self.candidates, self.budget)

    def reset(self) -> EnvState:
        self.state = EnvState(self.graph, [], self.candidates, self.budget)
        return self.state

    def rewards(self, solution, action: int, rng_seed: int) -> tuple[float, float]:
        g = self.graph
        gain = marginal_gain(g, solution, action, SeedMode.DETERMINISTIC, self.reward_trials, rng_seed)
        return gain / g.node_count, float(g.intrinsic_prob[action])

    def step(self, action: int, rng_seed: int):
        s = self.state
        if s.terminal:
            raise EnvError("episode already terminated")
        if action not in set(s.feasible().tolist()):
            raise EnvError(f"action {action} is not a feasible candidate")
        r1, r2 = self.rewards(s.solution, action, rng_seed)
        transition = Transition(tuple(s.solution), int(action), r1, r2, tuple(s.solution) + (int(action),),
                                len(s.solution) + 1 >= self.budget, self.graph.graph_id)
        self.state = EnvState(self.graph, s.solution + [int(action)], self.candidates, self.budget)
        return self.state, transition


# ---- Q evaluation ----------------------------------------------------------------------

def node_embeddings(net: QNetwork, g: Graph) -> EmbeddingSet:
    H, _ = encode_forward(g, compute_features(g), net.sage)
    return EmbeddingSet(H, net.sage.in_dim)


def _head_inputs(H: np.ndarray, state, actions) -> np.ndarray:
    s_vec, _ = max_pool(H, list(state))
    g_vec = H.max(axis=0)
    A = H[np.asarray(actions, dtype=np.int64)]
    k = len(A)
    return np.hstack([np.broadcast_to(s_vec, (k, len(s_vec))), A, np.broadcast_to(g_vec, (k, len(g_vec)))])


def q_values(net: QNetwork, emb: EmbeddingSet, state, actions) -> np.ndarray:
    """Q(state, a) for every ``a`` in ``actions`` given precomputed node embeddings."""
    if not len(actions):
        return np.zeros(0)
    if set(int(a) for a in actions) & set(int(s) for s in state):
        raise ContractViolation("an action is already part of the state")
    out, _ = mlp_forward(net.head, _head_inputs(emb.vectors, state, actions))
    return out[:, 0]


def q_value(net: QNetwork, g: Graph, emb: EmbeddingSet | None, state, action: int) -> float:
    emb = node_embeddings(net, g) if emb is None else emb
    return float(q_values(net, emb, state, [action])[0])


def select_action(q1, q2, actions, w1: float, w2: float, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy on ``w1*q1 + w2*q2``; greedy ties go to the lowest node id."""
    actions = np.asarray(actions, dtype=np.int64)
    if actions.size == 0:
        raise EnvError("no feasible action")
    explore = rng.random() < epsilon
    if explore:
        return int(actions[rng.integers(len(actions))])
    score = w1 * np.asarray(q1) + w2 * np.asarray(q2)
    best = np.flatnonzero(score == score.max())
    return int(actions[best].min())


def scalarized_select(g: Graph, embs, state, candidates, nets, w1: float, w2: float, epsilon: float,
                      rng: np.random.Generator) -> int:
    """Pick the next seed among ``candidates - state`` using the two local networks."""
    feasible = np.setdiff1d(np.asarray(candidates, dtype=np.int64), np.asarray(list(state), dtype=np.int64))
    if feasible.size == 0:
        raise EnvError("no feasible candidate left")
    if embs is None:
        embs = [node_embeddings(n, g) for n in nets]
    q1 = q_values(nets[0], embs[0], state, feasible)
    q2 = q_values(nets[1], embs[1], state, feasible)
    return select_action(q1, q2, feasible, w1, w2, epsilon, rng)


def bellman_target(transition: Transition, target_nets, local_nets, g: Graph, gamma: float, candidates,
                   w1: float = 0.5, w2: float = 0.5, local_embs=None, target_embs=None):
    """Double-Q targets ``(y1, y2, a_star)``.

    ``a_star`` maximises the scalarised *local* Q at the next state; each objective's
    target network then values that single action.  Terminal transitions return the
    raw rewards and ``a_star = None``.
    """
    if transition.terminal or gamma == 0.0:
        return transition.r1, transition.r2, None
    nxt = transition.next_state
    feasible = np.setdiff1d(np.asarray(candidates, dtype=np.int64), np.asarray(nxt, dtype=np.int64))
    if feasible.size == 0:
        return transition.r1, transition.r2, None
    local_embs = local_embs or [node_embeddings(n, g) for n in local_nets]
    q1 = q_values(local_nets[0], local_embs[0], nxt, feasible)
    q2 = q_values(local_nets[1], local_embs[1], nxt, feasible)
    score = w1 * q1 + w2 * q2
    a_star = int(feasible[np.flatnonzero(score == score.max()).min()])
    target_embs = target_embs or [node_embeddings(n, g) for n in target_nets]
    y1 = transition.r1 + gamma * q_values(target_nets[0], target_embs[0], nxt, [a_star])[0]
    y2 = transition.r2 + gamma * q_values(target_nets[1], target_embs[1], nxt, [a_star])[0]
    return float(y1), float(y2), a_star


# ---- gradients ---------------------------------------------------------------------------

def q_loss_and_grad(net: QNetwork, batch_by_graph, targets_by_graph, total: int, forwards=None):
    """MSE of Q(state, action) against fixed targets over a batch spread across graphs.

    ``batch_by_graph`` is a list of ``(graph, transitions)``; the loss is the mean over
    all ``total`` transitions.  ``forwards`` optionally maps ``id(graph)`` to an
    ``encode_forward`` result already computed with ``net``.
    """
    grads = [np.zeros_like(p) for p in net.params()]
    loss = 0.0
    for g, trans in batch_by_graph:
        y = targets_by_graph[id(g)]
        if forwards is not None and id(g) in forwards:
            H, enc_cache = forwards[id(g)]
        else:
            H, enc_cache = encode_forward(g, compute_features(g), net.sage)
        rows, winners = [], []
        g_vec = H.max(axis=0)
        g_win = np.argmax(H, axis=0)
        for t in trans:
            s_vec, s_win = max_pool(H, list(t.state))
            rows.append(np.concatenate([s_vec, H[t.action], g_vec]))
            winners.append(s_win)
        X = np.vstack(rows)
        out, head_cache = mlp_forward(net.head, X)
        part_loss, g_out = mse_loss(out[:, 0], y)
        scale = len(trans) / total
        loss += part_loss * scale
        head_grads, gX = mlp_backward(net.head, head_cache, (g_out * scale)[:, None])
        d = H.shape[1]
        gH = np.zeros_like(H)
        for i, t in enumerate(trans):
            max_pool_backward(gX[i, :d], winners[i], gH)
            gH[t.action] += gX[i, d:2 * d]
        max_pool_backward(gX[:, 2 * d:].sum(axis=0), g_win, gH)
        enc_grads, _ = encode_backward(g, net.sage, enc_cache, gH)
        flat = list(enc_grads)
        for gw, gb in head_grads:
            flat += [gw, gb]
        for acc, gr in zip(grads, flat):
            acc += gr
    return loss, grads


# ---- training ------------------------------------------------------------------------------

def epsilon_schedule(cfg: AgentConfig, episodes: int) -> np.ndarray:
    eps, out = cfg.epsilon_start, []
    for _ in range(episodes):
        out.append(eps)
        eps = max(cfg.epsilon_min, eps * cfg.epsilon_decay)
    return np.asarray(out)


def _pool_envs(graph_pool, cfg: AgentConfig):
    envs, seen = [], set()
    for g, cand in graph_pool:
        if g.graph_id in seen:
            raise ConfigError(f"duplicate graph id {g.graph_id!r} in training pool")
        seen.add(g.graph_id)
        envs.append(AIMEnv(g, cand, cfg.budget, cfg.reward_trials))
    if not envs:
        raise ConfigError("training pool is empty")
    return envs


def _greedy_return(params: AgentParams, env: AIMEnv, cfg: AgentConfig, rng_seed: int) -> float:
    seeds = infer_seed_set(env.graph, env.candidates, params, cfg.budget, cfg.w1, cfg.w2)
    total, sol = 0.0, []
    for a in seeds:
        r1, r2 = env.rewards(sol, a, rng_seed)
        total += cfg.w1 * r1 + cfg.w2 * r2
        sol.append(a)
    return total


def train_agent(graph_pool, cfg: AgentConfig | None = None, rng_seed: int = 0, validation=None,
                callback=None):
    """Train the four Q networks; returns ``(AgentParams, log_rows)``.

    ``graph_pool`` is a list of ``(graph, candidate ids)``.  Each episode samples one
    graph, starts from an empty solution whose first seed is a uniformly random
    candidate, and then follows the scalarised epsilon-greedy policy until the budget
    is filled.  Every step stores a transition and, once the buffer holds a batch,
    takes one Adam step per objective.  With ``validation`` (another pool) the
    parameters with the best greedy scalarised return are kept.
    """
    cfg = cfg or AgentConfig()
    envs = _pool_envs(graph_pool, cfg)
    by_id = {e.graph.graph_id: e for e in envs}
    val_envs = _pool_envs(validation, cfg) if validation else []
    rng = np.random.default_rng(rng_seed)
    local = [init_qnetwork(rng), init_qnetwork(rng)]
    params = AgentParams(local, [q.copy() for q in local], cfg)
    opts = [AdamState.for_params(q.params(), lr=cfg.lr) for q in params.local]
    buffer = ReplayBuffer(cfg.buffer_capacity)
    eps = cfg.epsilon_start
    rows = []
    best_val, best_params = -np.inf, None
    best_ma, since_best = -np.inf, 0
    returns = []

    for episode in range(cfg.episodes):
        env = envs[int(rng.integers(len(envs)))]
        state = env.reset()
        ep_return, losses = 0.0, []
        while not state.terminal:
            if not state.solution:
                action = int(env.candidates[rng.integers(len(env.candidates))])
            else:
                embs = [node_embeddings(q, env.graph) for q in params.local]
                action = scalarized_select(env.graph, embs, state.solution, env.candidates, params.local,
                                           cfg.w1, cfg.w2, eps, rng)
            state, tr = env.step(action, int(rng.integers(0, 2**63)))
            buffer.push(tr)
            ep_return += cfg.w1 * tr.r1 + cfg.w2 * tr.r2
            if len(buffer) >= cfg.batch_size:
                losses.append(_train_step(params, opts, buffer.sample(rng, cfg.batch_size), by_id, cfg))
        l1 = float(np.mean([l[0] for l in losses])) if losses else float("nan")
        l2 = float(np.mean([l[1] for l in losses])) if losses else float("nan")
        row = {"episode": episode, "return": ep_return, "epsilon": eps, "loss1": l1, "loss2": l2}
        eps = max(cfg.epsilon_min, eps * cfg.epsilon_decay)
        if (episode + 1) % cfg.target_update_every == 0:
            params.sync_targets()
        rows.append(row)
        if callback:
            callback(row)

        if val_envs and cfg.validate_every and (episode + 1) % cfg.validate_every == 0:
            score = float(np.mean([_greedy_return(params, e, cfg, rng_seed) for e in val_envs]))
            row["validation"] = score
            if score > best_val:
                best_val = score
                best_params = AgentParams([q.copy() for q in params.local], [q.copy() for q in params.local], cfg)

        returns.append(ep_return)
        if cfg.plateau_patience and len(returns) >= cfg.plateau_window:
            ma = float(np.mean(returns[-cfg.plateau_window:]))
            if ma > best_ma + 1e-6:
                best_ma, since_best = ma, 0
            else:
                since_best += 1
                if since_best >= cfg.plateau_patience:
                    log.info("return plateaued at episode %d", episode)
                    break

    if best_params is not None:
        return best_params, rows
    return params, rows


def _batched_targets(trans, params: AgentParams, candidates, cfg: AgentConfig, local_H, target_H):
    """``bellman_target`` for many transitions of one graph with one head pass per network."""
    y1 = np.array([t.r1 for t in trans])
    y2 = np.array([t.r2 for t in trans])
    if cfg.gamma == 0.0:
        return y1, y2
    live, blocks, feas = [], [[], []], []
    for i, t in enumerate(trans):
        if t.terminal:
            continue
        f = np.setdiff1d(candidates, np.asarray(t.next_state, dtype=np.int64))
        if f.size == 0:
            continue
        live.append(i)
        feas.append(f)
        for k in range(2):
            blocks[k].append(_head_inputs(local_H[k], t.next_state, f))
    if not live:
        return y1, y2
    q = [mlp_forward(params.local[k].head, np.vstack(blocks[k]))[0][:, 0] for k in range(2)]
    score = cfg.w1 * q[0] + cfg.w2 * q[1]
    stars, pos = [], 0
    for f in feas:
        seg = score[pos:pos + len(f)]
        stars.append(int(f[np.flatnonzero(seg == seg.max()).min()]))
        pos += len(f)
    for k, y in enumerate((y1, y2)):
        rows = np.vstack([_head_inputs(target_H[k], trans[i].next_state, [a])
                          for i, a in zip(live, stars)])
        qt = mlp_forward(params.target[k].head, rows)[0][:, 0]
        r = np.array([(trans[i].r1, trans[i].r2)[k] for i in live])
        y[live] = r + cfg.gamma * qt
    return y1, y2


def _train_step(params: AgentParams, opts, batch, by_id, cfg: AgentConfig):
    groups: dict = {}
    for t in batch:
        groups.setdefault(t.graph_id, []).append(t)
    batch_by_graph = [(by_id[gid].graph, trans) for gid, trans in sorted(groups.items())]
    targets = ({}, {})
    forwards = ({}, {})
    for g, trans in batch_by_graph:
        feats = compute_features(g)
        for k in range(2):
            forwards[k][id(g)] = encode_forward(g, feats, params.local[k].sage)
        local_H = [forwards[k][id(g)][0] for k in range(2)]
        target_H = [encode_forward(g, feats, q.sage)[0] for q in params.target]
        y1, y2 = _batched_targets(trans, params, by_id[g.graph_id].candidates, cfg, local_H, target_H)
        targets[0][id(g)], targets[1][id(g)] = y1, y2
    losses = []
    for k in range(2):
        loss, grads = q_loss_and_grad(params.local[k], batch_by_graph, targets[k], len(batch), forwards[k])
        adam_step(params.local[k].params(), grads, opts[k])
        losses.append(loss)
    return losses


# ---- inference -------------------------------------------------------------------------------

class _RolloutHead:
    """Q(state, a) for a fixed action set, updated one added seed at a time.

    The first head layer is linear in ``[state, action, graph]``, so the action and
    graph parts are computed once; each step only adds the running state max.
    """

    def __init__(self, net: QNetwork, H: np.ndarray, actions: np.ndarray):
        d = H.shape[1]
        first = net.head[0]
        self.net, self.H = net, H
        self.w_state = first.weights[:, :d]
        self.fixed = H[actions] @ first.weights[:, d:2 * d].T + (first.weights[:, 2 * d:] @ H.max(axis=0) + first.bias)
        self.s_vec = np.zeros(d)

    def add(self, node: int) -> None:
        self.s_vec = np.maximum(self.s_vec, self.H[node])

    def values(self, rows: np.ndarray) -> np.ndarray:
        x = _act(self.net.head[0].activation, self.fixed[rows] + self.w_state @ self.s_vec)
        if len(self.net.head) > 1:
            x, _ = mlp_forward(self.net.head[1:], x)
        return x[:, 0]


def infer_seed_set(g: Graph, candidates, params: AgentParams, b: int, w1: float = 0.5, w2: float = 0.5) -> list:
    """Greedy rollout of the scalarised local Q from the empty solution (forward passes only)."""
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    if len(cand) < b:
        raise ConfigError(f"{len(cand)} candidates cannot fill budget {b}")
    heads = [_RolloutHead(q, node_embeddings(q, g).vectors, cand) for q in params.local]
    free = np.ones(len(cand), dtype=bool)
    sol: list[int] = []
    rng = np.random.default_rng(0)  # unused with epsilon = 0
    for _ in range(b):
        rows = np.flatnonzero(free)
        q1, q2 = (h.values(rows) for h in heads)
        a = select_action(q1, q2, cand[rows], w1, w2, 0.0, rng)
        sol.append(a)
        free[np.searchsorted(cand, a)] = False
        for h in heads:
            h.add(a)
    return sol


# ---- checkpoints --------------------------------------------------------------------------------

def _net_tensors(prefix: str, net: QNetwork) -> dict:
    out = {}
    for i, l in enumerate(net.sage.layers):
        out[f"{prefix}.sage{i}.w_self"], out[f"{prefix}.sage{i}.w_neigh"], out[f"{prefix}.sage{i}.bias"] = \
            l.w_self, l.w_neigh, l.bias
    for i, l in enumerate(net.head):
        out[f"{prefix}.head{i}.weights"], out[f"{prefix}.head{i}.bias"] = l.weights, l.bias
    return out


def _net_from(prefix: str, t: dict, acts) -> QNetwork:
    n_sage = len([k for k in t if k.startswith(prefix + ".sage") and k.endswith(".w_self")])
    sage = SageParams([SageLayer(t[f"{prefix}.sage{i}.w_self"], t[f"{prefix}.sage{i}.w_neigh"],
                                 t[f"{prefix}.sage{i}.bias"]) for i in range(n_sage)], "max")
    head = [DenseLayer(t[f"{prefix}.head{i}.weights"], t[f"{prefix}.head{i}.bias"], a) for i, a in enumerate(acts)]
    return QNetwork(sage, head)


def save_agent(path, params: AgentParams, meta: dict | None = None) -> None:
    tensors = {}
    for k in range(2):
        tensors.update(_net_tensors(f"local{k}", params.local[k]))
        tensors.update(_net_tensors(f"target{k}", params.target[k]))
    meta = dict(meta or {})
    meta.update(kind="agent", config=asdict(params.config),
                head_activations=[l.activation for l in params.local[0].head])
    save_params(path, tensors, meta)


def load_agent(path) -> AgentParams:
    t, meta = load_params(path)
    if meta.get("kind") != "agent":
        raise ConfigError(f"{path} is not an agent checkpoint")
    acts = meta["head_activations"]
    return AgentParams([_net_from(f"local{k}", t, acts) for k in range(2)],
                       [_net_from(f"target{k}", t, acts) for k in range(2)],
                       AgentConfig.from_dict(meta["config"]))
