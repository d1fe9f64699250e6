"""Embedding algorithms.

Four families: a greedy resource-ranking baseline, a random-walk node-ranking
heuristic, a per-node policy-gradient scorer over raw or spectral features,
and a recurrent pointer agent with attention over encoded substrate nodes.
All embed functions are pure with respect to the substrate: they return an
Embedding (or None) and the caller decides whether to allocate it.
"""

import heapq

import numpy as np

from . import _kernels
from .errors import ConvergenceError, EpisodeError
from .learncore import (PolicyParameters, RewardBaseline, log_prob_grad,
                        masked_softmax, reinforce_update)
from .metrics import cost, revenue
from .netmodel import Embedding
from .routing import PathQuery, bfs_feasible_path, shortest_feasible_path, split_flow
from .spectral import (average_hop_distances, build_attribute_matrix, fuse,
                       min_tracked_gap, perturb_update, top_k_eigen)

ALGORITHMS = ("baseline", "noderank", "rl", "pointer")
LINK_STRATEGIES = ("shortest", "bfs", "split")
FEATURE_SOURCES = ("raw", "fam", "mpt")


class EmbedderConfig:
    """Closed-set algorithm knobs with the package defaults."""

    def __init__(self, algorithm="baseline", link=None, features="raw",
                 hidden=16, learning_rate=0.005, epochs=30,
                 active_search_iters=16, seed=0, r_fail=None, k=4,
                 mpt_budget=0.01, online_search=False):
        if algorithm not in ALGORITHMS:
            raise ValueError("unknown algorithm %r" % algorithm)
        if link is None:
            link = "bfs" if algorithm == "rl" else "shortest"
        if link not in LINK_STRATEGIES:
            raise ValueError("unknown link strategy %r" % link)
        if features not in FEATURE_SOURCES:
            raise ValueError("unknown feature source %r" % features)
        self.algorithm = algorithm
        self.link = link
        self.features = features
        self.hidden = int(hidden)
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.active_search_iters = int(active_search_iters)
        self.seed = int(seed)
        self.r_fail = r_fail if r_fail is None else float(r_fail)
        self.k = int(k)
        self.mpt_budget = float(mpt_budget)
        self.online_search = bool(online_search)


# -- feature providers -------------------------------------------------------

class RawFeatures:
    """Normalized per-node attribute rows, rebuilt from residuals on demand."""

    dim_name = "raw"

    def __init__(self, net, k=4):
        self._avg = average_hop_distances(net)
        self.dim = 4
        self.full_solves = 0

    def features(self, net):
        return build_attribute_matrix(net, self._avg)


class FamFeatures:
    """Spectral coordinates from a full eigendecomposition per query."""

    dim_name = "fam"

    def __init__(self, net, k=4):
        self._avg = average_hop_distances(net)
        self.k = min(k, net.num_nodes())
        self.dim = self.k
        self.full_solves = 0

    def features(self, net):
        attr = build_attribute_matrix(net, self._avg)
        S = fuse(attr, net)
        emb = top_k_eigen(S, self.k)
        self.full_solves += 1
        return emb.node_features()


class MptFeatures:
    """Spectral coordinates maintained incrementally between queries.

    Each query rebuilds the cheap similarity matrix and advances the tracked
    eigenpairs by first-order perturbation; a full eigensolve runs only when
    the single-step trigger fires or the accumulated relative change since
    the last solve exceeds the error budget.
    """

    dim_name = "mpt"

    def __init__(self, net, k=4, budget=0.01):
        self._avg = average_hop_distances(net)
        self.k = min(k, net.num_nodes())
        self.dim = self.k
        self.budget = budget
        self.full_solves = 0
        self._S = None
        self._emb = None
        self._spent = 0.0

    def features(self, net):
        attr = build_attribute_matrix(net, self._avg)
        S = fuse(attr, net)
        if self._emb is None:
            self._emb = top_k_eigen(S, self.k)
            self.full_solves += 1
            self._spent = 0.0
        else:
            gap = min_tracked_gap(self._emb.eigenvalues)
            step = float(np.linalg.norm(S - self._S))
            rel = step / gap if gap > 0 else np.inf
            if self._spent + rel > self.budget:
                self._emb = top_k_eigen(S, self.k)
                self.full_solves += 1
                self._spent = 0.0
            else:
                self._emb = perturb_update(self._emb, self._S, S)
                if self._emb.method == "full":
                    self.full_solves += 1
                    self._spent = 0.0
                else:
                    self._spent += rel
        self._S = S
        return self._emb.node_features()


def make_feature_provider(name, net, k=4, mpt_budget=0.01):
    if name == "raw":
        return RawFeatures(net, k)
    if name == "fam":
        return FamFeatures(net, k)
    if name == "mpt":
        return MptFeatures(net, k, mpt_budget)
    raise ValueError("unknown feature source %r" % name)


# -- episode bookkeeping -----------------------------------------------------

class Decision:
    """One node-mapping choice: state first, then action and probabilities,
    so policy-gradient code can index (state, action, probs) positionally."""

    __slots__ = ("state", "action", "probs", "vnode", "mask")

    def __init__(self, state, action, probs, vnode, mask):
        self.state = state
        self.action = action
        self.probs = probs
        self.vnode = vnode
        self.mask = mask

    def __getitem__(self, i):
        return (self.state, self.action, self.probs, self.vnode, self.mask)[i]


class EpisodeTrace:
    """Record of one embedding episode: decisions in processing order, the
    outcome, hop count, and the reward assigned by the caller."""

    def __init__(self, vnr_id):
        self.vnr_id = vnr_id
        self.decisions = []
        self.embedding = None
        self.failed_at = None
        self.total_hops = 0
        self.reward = None
        self.enc_inputs = None
        self.dec_inputs = None

    def add(self, vnode, state, mask, action, probs):
        self.decisions.append(Decision(state, action, probs, vnode, mask))

    @property
    def success(self):
        return self.embedding is not None

    def dump(self):
        lines = ["TRACE vnr=%r success=%d hops=%d reward=%r"
                 % (self.vnr_id, int(self.success), self.total_hops, self.reward)]
        for d in self.decisions:
            lines.append("DECISION vnode=%r action=%r p=%s feasible=%d"
                         % (d.vnode, d.action, repr(float(d.probs[d.action])),
                            int(np.count_nonzero(d.mask))))
        if self.failed_at is not None:
            lines.append("FAILED at=%r" % (self.failed_at,))
        return "\n".join(lines) + "\n"


# -- heuristic embedders -----------------------------------------------------

def h_score(net, node_id):
    """H(n) = residual CPU x sum of adjacent residual bandwidth."""
    node = net.node(node_id)
    return node.cpu_available * sum(
        l.bw_available for l in net.adjacent_links(node_id))


def baseline_rank(net):
    """Substrate ids by descending H on residual resources, ties ascending."""
    return sorted(net.node_ids(), key=lambda n: (-h_score(net, n), n))


def _order_vnodes_by_demand(vnr):
    return sorted(vnr.nodes, key=lambda n: (-vnr.nodes[n], n))


def _map_links(net, vnr, node_map, strategy):
    """Route every virtual link against a provisional availability overlay.

    Returns (link_map, failure_key); paths assigned earlier consume overlay
    bandwidth for paths assigned later, so the whole set stays jointly
    feasible and allocation cannot fail after node mapping succeeded.
    """
    avail = {(l.u, l.v): l.bw_available for l in net.links()}
    link_map = {}
    for key in sorted(vnr.links):
        demand = vnr.links[key]
        query = PathQuery(node_map[key[0]], node_map[key[1]], demand)
        if strategy == "split":
            paths = split_flow(net, query, avail=avail)
        else:
            find = bfs_feasible_path if strategy == "bfs" else shortest_feasible_path
            path = find(net, query, avail=avail)
            paths = None if path is None else [(path, demand)]
        if paths is None:
            return None, key
        for path, bw in paths:
            for a, b in zip(path, path[1:]):
                k = (a, b) if a < b else (b, a)
                avail[k] -= bw
        link_map[key] = paths
    return link_map, None


def _greedy_embed(net, vnr, substrate_order, vnode_order, link_strategy):
    node_map = {}
    used = set()
    cpu_left = {n: net.node(n).cpu_available for n in net.node_ids()}
    for vnode in vnode_order:
        demand = vnr.nodes[vnode]
        chosen = None
        for cand in substrate_order:
            if cand not in used and cpu_left[cand] >= demand:
                chosen = cand
                break
        if chosen is None:
            return None
        node_map[vnode] = chosen
        used.add(chosen)
        cpu_left[chosen] -= demand
    link_map, _ = _map_links(net, vnr, node_map, link_strategy)
    if link_map is None:
        return None
    return Embedding(vnr.id, node_map, dict(vnr.nodes), link_map)


def baseline_embed(net, vnr, link="shortest"):
    """Greedy H-ranked node mapping with min-hop link mapping."""
    return _greedy_embed(net, vnr, baseline_rank(net),
                         _order_vnodes_by_demand(vnr), link)


def _walk_scores(ids, neighbor_map, hvals, damping=0.85, tol=1e-6, max_iter=1000):
    """Damped stationary scores of the H-weighted neighbors-plus-self walk."""
    index = {nid: i for i, nid in enumerate(ids)}
    indptr = np.zeros(len(ids) + 1, dtype=np.int64)
    indices = []
    for i, nid in enumerate(ids):
        nbrs = sorted(neighbor_map[nid])
        indices.extend(index[v] for v in nbrs)
        indptr[i + 1] = len(indices)
    indices = np.array(indices, dtype=np.int64) if indices else np.zeros(0, np.int64)
    h = np.ascontiguousarray(hvals, dtype=np.float64)
    scores, iters, done, l1 = _kernels.weighted_walk_scores(
        indptr, indices, h, damping, tol, max_iter)
    if not done:
        raise ConvergenceError(
            "random-walk scores did not converge in %d iterations (L1 %.3e)"
            % (max_iter, l1), residual=float(l1))
    return scores


def noderank_scores(net):
    """Stationary importance scores of substrate nodes; sums to 1."""
    ids = net.node_ids()
    hvals = np.array([h_score(net, n) for n in ids])
    return _walk_scores(ids, {n: net.neighbors(n) for n in ids}, hvals)


def _vnr_walk_scores(vnr):
    ids = sorted(vnr.nodes)
    hvals = np.array([
        vnr.nodes[n] * sum(vnr.links[tuple(sorted((n, m)))] for m in vnr.neighbors(n))
        for n in ids])
    return ids, _walk_scores(ids, {n: vnr.neighbors(n) for n in ids}, hvals)


def noderank_embed(net, vnr, link="shortest"):
    """Both sides ranked by walk scores, then the greedy mapping skeleton."""
    ids = net.node_ids()
    s_scores = noderank_scores(net)
    substrate_order = sorted(ids, key=lambda n: (-s_scores[ids.index(n)], n))
    v_ids, v_scores = _vnr_walk_scores(vnr)
    vnode_order = sorted(v_ids, key=lambda n: (-v_scores[v_ids.index(n)], n))
    return _greedy_embed(net, vnr, substrate_order, vnode_order, link)


# -- learning agents ---------------------------------------------------------

def _gru_shapes(prefix, in_dim, hidden):
    return {
        prefix + "_Wz": (in_dim + hidden, hidden),
        prefix + "_Wr": (in_dim + hidden, hidden),
        prefix + "_Wh": (in_dim + hidden, hidden),
        prefix + "_bz": (hidden,),
        prefix + "_br": (hidden,),
        prefix + "_bh": (hidden,),
    }


def _gru_args(params, prefix):
    return (params[prefix + "_Wz"], params[prefix + "_Wr"],
            params[prefix + "_Wh"], params[prefix + "_bz"],
            params[prefix + "_br"], params[prefix + "_bh"])


def _cpu_norm(net):
    return max(net.node(n).cpu_capacity for n in net.node_ids()) or 1.0


class PolicyAgent:
    """Per-node two-layer scorer over [node features, normalized demand].

    Each virtual node (descending demand) is placed by masked-softmax over
    feasible unused substrate nodes; links are routed breadth-first by
    default. Reward convention: revenue/cost of the embedded request on
    success, -1 on failure (assigned by the training loop).
    """

    algorithm = "rl"

    def __init__(self, feature_dim, hidden=16, seed=0, params=None):
        self.feature_dim = feature_dim
        self.hidden = hidden
        if params is None:
            shapes = {
                "score_W1": (feature_dim + 1, hidden),
                "score_b1": (hidden,),
                "score_w2": (hidden,),
                "score_b2": (1,),
            }
            params = PolicyParameters.initialize(shapes, seed)
        self.params = params

    @classmethod
    def from_params(cls, params):
        w1 = params["score_W1"]
        return cls(w1.shape[0] - 1, w1.shape[1], params=params)

    def _logits(self, X):
        T = np.tanh(X @ self.params["score_W1"] + self.params["score_b1"])
        return T @ self.params["score_w2"] + self.params["score_b2"][0]

    def embed(self, net, vnr, features, rng=None, sample=False, link="bfs"):
        ids = net.node_ids()
        n = len(ids)
        if features.shape[0] != n:
            raise ValueError("feature rows %d != substrate size %d"
                             % (features.shape[0], n))
        trace = EpisodeTrace(vnr.id)
        cpu_left = np.array([net.node(i).cpu_available for i in ids])
        used = np.zeros(n, dtype=bool)
        norm = _cpu_norm(net)
        node_map = {}
        for vnode in _order_vnodes_by_demand(vnr):
            demand = vnr.nodes[vnode]
            X = np.concatenate(
                [features, np.full((n, 1), demand / norm)], axis=1)
            mask = (~used) & (cpu_left >= demand)
            if not mask.any():
                trace.failed_at = ("node", vnode)
                return None, trace
            probs = masked_softmax(self._logits(X), mask)
            if sample:
                action = int(rng.choice(n, p=probs))
            else:
                action = int(np.argmax(probs))
            trace.add(vnode, X, mask, action, probs)
            node_map[vnode] = ids[action]
            used[action] = True
            cpu_left[action] -= demand
        link_map, failed = _map_links(net, vnr, node_map, link)
        if link_map is None:
            trace.failed_at = ("link", failed)
            return None, trace
        emb = Embedding(vnr.id, node_map, dict(vnr.nodes), link_map)
        trace.embedding = emb
        trace.total_hops = emb.total_hops()
        return emb, trace

    def grad_log_prob(self, params, decisions):
        """Gradient of the summed log probability of the chosen actions."""
        dW1 = np.zeros_like(params["score_W1"])
        db1 = np.zeros_like(params["score_b1"])
        dw2 = np.zeros_like(params["score_w2"])
        db2 = np.zeros_like(params["score_b2"])
        for d in decisions:
            X = d.state
            T = np.tanh(X @ params["score_W1"] + params["score_b1"])
            dlog = log_prob_grad(d.probs, d.mask, d.action)
            dw2 += T.T @ dlog
            db2[0] += dlog.sum()
            dT = dlog[:, None] * params["score_w2"][None, :]
            dZ = dT * (1.0 - T * T)
            dW1 += X.T @ dZ
            db1 += dZ.sum(axis=0)
        return {"score_W1": dW1, "score_b1": db1, "score_w2": dw2, "score_b2": db2}

    def grad_fn(self, trace):
        return self.grad_log_prob


class PointerAgent:
    """Encoder-decoder pointer network over substrate feature rows.

    The encoder runs over the substrate rows in ascending id order; the
    decoder consumes per-virtual-node demand vectors in descending demand
    order, and attention logits point at substrate nodes. Reward convention:
    -(total hops) on success, -r_fail on failure.
    """

    algorithm = "pointer"
    DEC_DIM = 2  # [cpu demand, summed adjacent bw demand], normalized

    def __init__(self, feature_dim, hidden=16, seed=0, params=None):
        self.feature_dim = feature_dim
        self.hidden = hidden
        if params is None:
            shapes = {}
            shapes.update(_gru_shapes("enc", feature_dim, hidden))
            shapes.update(_gru_shapes("dec", self.DEC_DIM, hidden))
            shapes["att_W1"] = (hidden, hidden)
            shapes["att_W2"] = (hidden, hidden)
            shapes["att_w"] = (hidden,)
            params = PolicyParameters.initialize(shapes, seed)
        self.params = params

    @classmethod
    def from_params(cls, params):
        wz = params["enc_Wz"]
        hidden = wz.shape[1]
        return cls(wz.shape[0] - hidden, hidden, params=params)

    def _dec_inputs(self, net, vnr, order):
        cpu_norm = _cpu_norm(net)
        bw_norm = max(
            (sum(l.bw_capacity for l in net.adjacent_links(n))
             for n in net.node_ids()), default=1.0) or 1.0
        rows = []
        for vnode in order:
            adj_bw = sum(vnr.links[tuple(sorted((vnode, m)))]
                         for m in vnr.neighbors(vnode))
            rows.append([vnr.nodes[vnode] / cpu_norm, adj_bw / bw_norm])
        return np.array(rows, dtype=np.float64)

    def _forward(self, params, enc_X, dec_X):
        h0 = np.zeros(self.hidden)
        enc_run = _kernels.gru_seq_forward(
            np.ascontiguousarray(enc_X), h0, *_gru_args(params, "enc"))
        encH = enc_run[0]
        dec_run = _kernels.gru_seq_forward(
            np.ascontiguousarray(dec_X), encH[-1].copy(), *_gru_args(params, "dec"))
        decH = dec_run[0]
        steps = []
        for t in range(dec_X.shape[0]):
            logits, act = _kernels.attention_forward(
                encH[1:], decH[t + 1], params["att_W1"], params["att_W2"],
                params["att_w"])
            steps.append((logits, act))
        return enc_run, dec_run, steps

    def embed(self, net, vnr, features, rng=None, sample=False, link="shortest"):
        ids = net.node_ids()
        n = len(ids)
        if features.shape[0] != n:
            raise ValueError("feature rows %d != substrate size %d"
                             % (features.shape[0], n))
        order = _order_vnodes_by_demand(vnr)
        dec_X = self._dec_inputs(net, vnr, order)
        _, _, steps = self._forward(self.params, features, dec_X)
        trace = EpisodeTrace(vnr.id)
        trace.enc_inputs = np.array(features, dtype=np.float64)
        trace.dec_inputs = dec_X
        cpu_left = np.array([net.node(i).cpu_available for i in ids])
        used = np.zeros(n, dtype=bool)
        node_map = {}
        for t, vnode in enumerate(order):
            demand = vnr.nodes[vnode]
            mask = (~used) & (cpu_left >= demand)
            if not mask.any():
                trace.failed_at = ("node", vnode)
                return None, trace
            probs = masked_softmax(steps[t][0], mask)
            if sample:
                action = int(rng.choice(n, p=probs))
            else:
                action = int(np.argmax(probs))
            trace.add(vnode, t, mask, action, probs)
            node_map[vnode] = ids[action]
            used[action] = True
            cpu_left[action] -= demand
        link_map, failed = _map_links(net, vnr, node_map, link)
        if link_map is None:
            trace.failed_at = ("link", failed)
            return None, trace
        emb = Embedding(vnr.id, node_map, dict(vnr.nodes), link_map)
        trace.embedding = emb
        trace.total_hops = emb.total_hops()
        return emb, trace

    def reward(self, net, trace, r_fail=None):
        if trace.success:
            return -float(trace.total_hops)
        if r_fail is None:
            r_fail = 2.0 * net.num_nodes()
        return -float(r_fail)

    def grad_fn(self, trace):
        enc_X = trace.enc_inputs
        dec_X = trace.dec_inputs

        def grad(params, decisions):
            enc_run, dec_run, steps = self._forward(params, enc_X, dec_X)
            encH, encZ, encR, encC, encXH, encXRH = enc_run
            decH, decZ, decR, decC, decXH, decXRH = dec_run
            n = enc_X.shape[0]
            grads = {}
            dEnc = np.zeros((n, self.hidden))
            dW1 = np.zeros_like(params["att_W1"])
            dW2 = np.zeros_like(params["att_W2"])
            dw = np.zeros_like(params["att_w"])
            dH_dec = np.zeros((dec_X.shape[0] + 1, self.hidden))
            for d in decisions:
                t = d.state
                dlogits = log_prob_grad(d.probs, d.mask, d.action)
                dE, ddec, g1, g2, gw = _kernels.attention_backward(
                    encH[1:], decH[t + 1], params["att_W1"], params["att_W2"],
                    params["att_w"], steps[t][1], dlogits)
                dEnc += dE
                dH_dec[t + 1] += ddec
                dW1 += g1
                dW2 += g2
                dw += gw
            grads["att_W1"] = dW1
            grads["att_W2"] = dW2
            grads["att_w"] = dw
            _, dh0_dec, dWz, dWr, dWh, dbz, dbr, dbh = _kernels.gru_seq_backward(
                decH, decZ, decR, decC, decXH, decXRH,
                params["dec_Wz"], params["dec_Wr"], params["dec_Wh"], dH_dec)
            grads.update({"dec_Wz": dWz, "dec_Wr": dWr, "dec_Wh": dWh,
                          "dec_bz": dbz, "dec_br": dbr, "dec_bh": dbh})
            dH_enc = np.zeros((n + 1, self.hidden))
            dH_enc[1:] += dEnc
            dH_enc[n] += dh0_dec  # decoder start state is the encoder summary
            _, _, eWz, eWr, eWh, ebz, ebr, ebh = _kernels.gru_seq_backward(
                encH, encZ, encR, encC, encXH, encXRH,
                params["enc_Wz"], params["enc_Wr"], params["enc_Wh"], dH_enc)
            grads.update({"enc_Wz": eWz, "enc_Wr": eWr, "enc_Wh": eWh,
                          "enc_bz": ebz, "enc_br": ebr, "enc_bh": ebh})
            return grads

        return grad


def make_agent(config, feature_dim, seed=None):
    seed = config.seed if seed is None else seed
    if config.algorithm == "rl":
        return PolicyAgent(feature_dim, config.hidden, seed)
    if config.algorithm == "pointer":
        return PointerAgent(feature_dim, config.hidden, seed)
    raise ValueError("algorithm %r is not trainable" % config.algorithm)


def active_search(net, vnr, agent, features, config, rng):
    """Instance-wise refinement: sample episodes on one request, updating a
    cloned parameter set after each, and keep the best feasible embedding.

    With zero iterations this degenerates to one greedy episode. The
    persistent parameters are only advanced in online mode.
    """
    iters = config.active_search_iters
    if iters <= 0:
        emb, _ = agent.embed(net, vnr, features, sample=False, link=config.link)
        return emb
    saved = agent.params
    clone = saved.copy()
    agent.params = clone
    baseline = RewardBaseline()
    best = None
    best_reward = -np.inf
    try:
        for _ in range(iters):
            emb, trace = agent.embed(net, vnr, features, rng=rng, sample=True,
                                     link=config.link)
            reward = _episode_reward(agent, net, vnr, trace, emb, config.r_fail)
            trace.reward = reward
            if emb is not None and reward > best_reward:
                best = emb
                best_reward = reward
            if trace.decisions:
                reinforce_update(clone, trace.decisions, reward, baseline,
                                 agent.grad_fn(trace), config.learning_rate)
    finally:
        agent.params = saved
    if config.online_search:
        for name in saved.names():
            saved[name][...] = clone[name]
    return best


def _episode_reward(agent, net, vnr, trace, emb, r_fail):
    """Per-agent reward convention for one sampled episode.

    Pointer episodes score -(total hops), failures -r_fail (default twice the
    substrate size). Policy episodes score revenue/cost, failures -r_fail
    (default 1).
    """
    if agent.algorithm == "pointer":
        return agent.reward(net, trace, r_fail)
    if emb is None:
        return -(r_fail if r_fail is not None else 1.0)
    return revenue(vnr) / cost(vnr, emb)


def train_agent(substrate, requests, config):
    """Train an agent over epochs of a fixed request trace.

    Each epoch replays the trace against a fresh copy of the substrate,
    sampling actions, allocating successful embeddings, releasing them on
    departure, and applying one policy-gradient update per episode. Returns
    (agent, per-epoch mean rewards).
    """
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    init_seed = seeds[0].generate_state(1)[0]
    rng = np.random.default_rng(seeds[1])
    probe = make_feature_provider(config.features, substrate, config.k,
                                  config.mpt_budget)
    agent = make_agent(config, probe.dim, seed=init_seed)
    baseline = RewardBaseline()
    curve = []
    for _ in range(config.epochs):
        net = substrate.copy()
        provider = make_feature_provider(config.features, substrate, config.k,
                                         config.mpt_budget)
        departures = []  # heap of (time, vnr id, embedding)
        rewards = []
        for vnr in requests:
            while departures and departures[0][0] <= vnr.arrival_time:
                _, _, emb = heapq.heappop(departures)
                net.release(emb)
            features = provider.features(net)
            emb, trace = agent.embed(net, vnr, features, rng=rng, sample=True,
                                     link=config.link)
            reward = _episode_reward(agent, net, vnr, trace, emb, config.r_fail)
            trace.reward = reward
            rewards.append(reward)
            if emb is not None:
                net.allocate(emb)
                heapq.heappush(
                    departures, (vnr.arrival_time + vnr.lifetime, vnr.id, emb))
            if trace.decisions:
                reinforce_update(agent.params, trace.decisions, reward, baseline,
                                 agent.grad_fn(trace), config.learning_rate)
        mean = float(np.mean(rewards)) if rewards else 0.0
        if not np.isfinite(mean):
            raise EpisodeError(
                "training diverged: mean reward %r at epoch %d (lr=%g)"
                % (mean, len(curve), config.learning_rate))
        curve.append(mean)
    return agent, curve
