"""Scenario generation, the discrete-event loop, and run orchestration.

Arrivals follow a Poisson process, lifetimes are exponential, substrates are
Waxman random graphs, and requests are small connected Erdos-Renyi demand
graphs. Every piece of randomness flows from one seed through spawned
generator streams, so a fixed config reproduces files byte-for-byte.
"""

import heapq
import math
import os

import numpy as np

from .errors import ConfigError, FormatError, GenerationError
from .metrics import (ResultsWriter, RunningTotals, cost, link_utilization,
                      read_results, revenue)
from .netmodel import SubstrateNetwork, VirtualNetworkRequest

# name -> (type tag, default); the single flat namespace for config files
CONFIG_FIELDS = {
    "substrate_nodes": ("int", 50),
    "substrate_cpu_min": ("float", 50.0),
    "substrate_cpu_max": ("float", 100.0),
    "substrate_bw_min": ("float", 50.0),
    "substrate_bw_max": ("float", 100.0),
    "waxman_alpha": ("float", 0.2),
    "waxman_beta": ("float", 0.5),
    "request_count": ("int", 500),
    "arrival_rate": ("float", 0.05),
    "mean_lifetime": ("float", 500.0),
    "vnr_nodes_min": ("int", 2),
    "vnr_nodes_max": ("int", 6),
    "vnr_link_prob": ("float", 0.5),
    "demand_cpu_min": ("float", 1.0),
    "demand_cpu_max": ("float", 25.0),
    "demand_bw_min": ("float", 1.0),
    "demand_bw_max": ("float", 25.0),
    "seed": ("int", 0),
    "link": ("str", ""),
    "features": ("str", "raw"),
    "hidden": ("int", 16),
    "learning_rate": ("float", 0.005),
    "epochs": ("int", 30),
    "active_search_iters": ("int", 16),
    "r_fail": ("float", 0.0),
    "k": ("int", 4),
    "mpt_budget": ("float", 0.01),
    "online_search": ("bool", False),
}


class ScenarioConfig:
    """Typed view of the flat key=value config namespace."""

    def __init__(self, **overrides):
        for name, (_, default) in CONFIG_FIELDS.items():
            setattr(self, name, default)
        for name, value in overrides.items():
            if name not in CONFIG_FIELDS:
                raise ConfigError("unknown config key %r" % name)
            setattr(self, name, value)
        self.validate()

    def validate(self):
        if self.substrate_nodes < 2:
            raise ConfigError("substrate_nodes must be >= 2")
        if self.arrival_rate <= 0:
            raise ConfigError("arrival_rate must be positive")
        if self.mean_lifetime <= 0:
            raise ConfigError("mean_lifetime must be positive")
        if self.request_count < 0:
            raise ConfigError("request_count must be >= 0")
        for lo, hi in (("substrate_cpu_min", "substrate_cpu_max"),
                       ("substrate_bw_min", "substrate_bw_max"),
                       ("vnr_nodes_min", "vnr_nodes_max"),
                       ("demand_cpu_min", "demand_cpu_max"),
                       ("demand_bw_min", "demand_bw_max")):
            if getattr(self, lo) > getattr(self, hi):
                raise ConfigError("%s exceeds %s" % (lo, hi))
        if self.vnr_nodes_min < 1:
            raise ConfigError("vnr_nodes_min must be >= 1")
        if not 0.0 <= self.vnr_link_prob <= 1.0:
            raise ConfigError("vnr_link_prob must be in [0, 1]")

    def embedder_config(self, algorithm, features=None, link=None, seed=None):
        from .embedders import EmbedderConfig
        return EmbedderConfig(
            algorithm=algorithm,
            link=(link or self.link) or None,
            features=features or self.features,
            hidden=self.hidden,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            active_search_iters=self.active_search_iters,
            seed=self.seed if seed is None else seed,
            r_fail=self.r_fail if self.r_fail > 0 else None,
            k=self.k,
            mpt_budget=self.mpt_budget,
            online_search=self.online_search,
        )


def _coerce(name, raw, lineno):
    kind = CONFIG_FIELDS[name][0]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(
            "line %d: cannot parse %r as %s for key %r"
            % (lineno, raw, kind, name)) from None


def parse_config(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value, got %r" % (lineno, line))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_FIELDS:
            raise ConfigError("line %d: unknown config key %r" % (lineno, key))
        if key in values:
            raise ConfigError("line %d: duplicate config key %r" % (lineno, key))
        values[key] = _coerce(key, value, lineno)
    return ScenarioConfig(**values)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    return parse_config(text)


# -- generation --------------------------------------------------------------

def generate_substrate(cfg, rng=None):
    """Waxman random substrate, retried until connected (cap 100 draws).

    Link probability beta * exp(-dist / (alpha * maxdist)) over uniform
    positions in the unit square. A 2-node substrate always receives its
    only possible link. Node ids are 0..n-1 in draw order.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
    n = cfg.substrate_nodes
    for _ in range(100):
        positions = rng.uniform(0.0, 1.0, size=(n, 2))
        maxdist = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d = math.dist(positions[i], positions[j])
                if d > maxdist:
                    maxdist = d
        net = SubstrateNetwork()
        for i in range(n):
            cpu = rng.uniform(cfg.substrate_cpu_min, cfg.substrate_cpu_max)
            net.add_node(i, cpu, (float(positions[i][0]), float(positions[i][1])))
        for i in range(n):
            for j in range(i + 1, n):
                if n == 2:
                    take = True
                elif maxdist == 0.0:
                    take = False
                else:
                    d = math.dist(positions[i], positions[j])
                    p = cfg.waxman_beta * math.exp(-d / (cfg.waxman_alpha * maxdist))
                    take = rng.random() < p
                if take:
                    bw = rng.uniform(cfg.substrate_bw_min, cfg.substrate_bw_max)
                    net.add_link(i, j, bw)
        if net.is_connected() and net.num_links() > 0:
            return net
    raise GenerationError(
        "no connected substrate after 100 draws (n=%d, alpha=%g, beta=%g)"
        % (n, cfg.waxman_alpha, cfg.waxman_beta))


def generate_requests(cfg, rng=None):
    """Poisson arrivals of connected random demand graphs.

    Per request, in draw order: inter-arrival, lifetime, node count, the
    connected Erdos-Renyi topology (coin per pair, retried until connected),
    CPU demands in node order, bandwidth demands in link order.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    requests = []
    t = 0.0
    for vnr_id in range(cfg.request_count):
        t += rng.exponential(1.0 / cfg.arrival_rate)
        lifetime = rng.exponential(cfg.mean_lifetime)
        while lifetime <= 0.0:  # exponential draw of exactly 0 is invalid here
            lifetime = rng.exponential(cfg.mean_lifetime)
        size = int(rng.integers(cfg.vnr_nodes_min, cfg.vnr_nodes_max + 1))
        for attempt in range(1000):
            pairs = [(i, j) for i in range(size) for j in range(i + 1, size)
                     if rng.random() < cfg.vnr_link_prob]
            if _pairs_connected(size, pairs):
                break
        else:
            raise GenerationError(
                "no connected %d-node request topology after 1000 draws" % size)
        nodes = {i: rng.uniform(cfg.demand_cpu_min, cfg.demand_cpu_max)
                 for i in range(size)}
        links = {pair: rng.uniform(cfg.demand_bw_min, cfg.demand_bw_max)
                 for pair in pairs}
        requests.append(VirtualNetworkRequest(vnr_id, t, lifetime, nodes, links))
    return requests


def _pairs_connected(size, pairs):
    if size == 1:
        return True
    adj = {i: set() for i in range(size)}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    return len(seen) == size


# -- request file format ------------------------------------------------------

def format_requests(requests):
    """`REQUESTS <count>` then per request a REQUEST header with VNODE and
    VLINK lines, ascending ids; '#' starts a comment."""
    lines = ["REQUESTS %d" % len(requests)]
    for vnr in requests:
        lines.append("REQUEST %d %s %s %d %d" % (
            vnr.id, repr(vnr.arrival_time), repr(vnr.lifetime),
            len(vnr.nodes), len(vnr.links)))
        for n in sorted(vnr.nodes):
            lines.append("VNODE %d %s" % (n, repr(vnr.nodes[n])))
        for (a, b) in sorted(vnr.links):
            lines.append("VLINK %d %d %s" % (a, b, repr(vnr.links[(a, b)])))
    return "\n".join(lines) + "\n"


def parse_requests(text):
    count = None
    requests = []
    current = None  # [id, arrival, lifetime, n, m, nodes, links]

    def close(rec):
        vnr_id, arrival, lifetime, n, m, nodes, links = rec
        if len(nodes) != n or len(links) != m:
            raise FormatError(
                "request %d announces %d nodes / %d links, found %d / %d"
                % (vnr_id, n, m, len(nodes), len(links)))
        try:
            requests.append(
                VirtualNetworkRequest(vnr_id, arrival, lifetime, nodes, links))
        except ValueError as exc:
            raise FormatError("request %d: %s" % (vnr_id, exc)) from None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "REQUESTS":
                if count is not None:
                    raise FormatError("line %d: duplicate REQUESTS header" % lineno)
                count = int(parts[1])
            elif parts[0] == "REQUEST":
                if len(parts) != 6:
                    raise FormatError(
                        "line %d: REQUEST needs id, arrival, lifetime, nodes, links"
                        % lineno)
                if current is not None:
                    close(current)
                current = [int(parts[1]), float(parts[2]), float(parts[3]),
                           int(parts[4]), int(parts[5]), {}, {}]
            elif parts[0] == "VNODE":
                if current is None:
                    raise FormatError("line %d: VNODE before REQUEST" % lineno)
                current[5][int(parts[1])] = float(parts[2])
            elif parts[0] == "VLINK":
                if current is None:
                    raise FormatError("line %d: VLINK before REQUEST" % lineno)
                current[6][(int(parts[1]), int(parts[2]))] = float(parts[3])
            else:
                raise FormatError("line %d: unknown record %r" % (lineno, parts[0]))
        except (ValueError, IndexError):
            raise FormatError("line %d: malformed record %r" % (lineno, line)) from None
    if current is not None:
        close(current)
    if count is None:
        raise FormatError("missing REQUESTS header")
    if count != len(requests):
        raise FormatError(
            "header announces %d requests, file has %d" % (count, len(requests)))
    return requests


def write_requests(requests, path):
    with open(path, "w") as fh:
        fh.write(format_requests(requests))


def read_requests(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError("cannot read request file %s: %s" % (path, exc)) from None
    return parse_requests(text)


# -- event loop ---------------------------------------------------------------

DEPARTURE, ARRIVAL = 0, 1  # tie order at equal times


def audit_conservation(net, live):
    """Residuals must equal the fold of live allocations, bit-exactly.

    live maps vnr_id -> Embedding in allocation order; the per-element
    records kept by the network must match the records implied by the live
    embeddings exactly, including order.
    """
    node_records = {nid: [] for nid in net.node_ids()}
    link_records = {(l.u, l.v): [] for l in net.links()}
    for vnr_id, emb in live.items():
        for v_id in sorted(emb.node_map):
            node_records[emb.node_map[v_id]].append((vnr_id, emb.cpu_alloc[v_id]))
        for key in sorted(emb.link_map):
            for path, bw in emb.link_map[key]:
                for a, b in zip(path, path[1:]):
                    k = (a, b) if a < b else (b, a)
                    link_records[k].append((vnr_id, bw))
    for nid in net.node_ids():
        node = net.node(nid)
        if node.records != node_records[nid]:
            raise AssertionError(
                "node %r records diverge from live embeddings" % nid)
        expect = node.cpu_capacity
        for _, amount in node.records:
            expect -= amount
        if node.cpu_available != expect:
            raise AssertionError("node %r residual is not the record fold" % nid)
    for key, link in ((k.endpoints, k) for k in net.links()):
        if link.records != link_records[key]:
            raise AssertionError(
                "link %r records diverge from live embeddings" % (key,))
        expect = link.bw_capacity
        for _, amount in link.records:
            expect -= amount
        if link.bw_available != expect:
            raise AssertionError("link %r residual is not the record fold" % (key,))
    net.check_residual_bounds()


def run_simulation(net, requests, embed_fn, out_stream=None, audit_every=50):
    """Drive arrivals and departures through the substrate.

    embed_fn(net, vnr) returns an Embedding or None and must not mutate the
    network; the loop allocates on success, schedules the departure, folds
    revenue/cost into RunningTotals, and writes one CSV row per arrival.
    Departures at a given time are processed before arrivals at that time.
    All departures are drained after the last arrival.
    """
    events = []
    for vnr in requests:
        heapq.heappush(events, (vnr.arrival_time, ARRIVAL, vnr.id, vnr))
    totals = RunningTotals()
    writer = ResultsWriter(out_stream) if out_stream is not None else None
    live = {}
    processed = 0
    while events:
        time, kind, vnr_id, payload = heapq.heappop(events)
        if kind == DEPARTURE:
            net.release(payload)
            del live[vnr_id]
        else:
            vnr = payload
            emb = embed_fn(net, vnr)
            if emb is not None:
                rev = revenue(vnr)
                cst = cost(vnr, emb)
                if rev > cst:
                    raise AssertionError(
                        "revenue %r exceeds cost %r for vnr %r" % (rev, cst, vnr.id))
                net.allocate(emb)
                live[vnr.id] = emb
                heapq.heappush(events, (time + vnr.lifetime, DEPARTURE, vnr.id, emb))
                totals.record_arrival(time, True, rev, cst)
            else:
                totals.record_arrival(time, False)
            if writer is not None:
                writer.row(time, vnr.id, emb is not None,
                           rev if emb is not None else 0.0,
                           cst if emb is not None else 0.0,
                           totals, link_utilization(net))
        processed += 1
        if audit_every and processed % audit_every == 0:
            audit_conservation(net, live)
    if audit_every:
        audit_conservation(net, live)
    return totals


# -- report -------------------------------------------------------------------

def report(in_paths, out_path):
    """Aligned long_term_rc / acceptance_rate time series across runs.

    Emits one row per distinct arrival time over the union of the inputs;
    each input contributes its most recent value at or before that time
    (empty until its first row). Columns are named from the input file
    basenames, deduplicated in order.
    """
    series = []
    names = []
    for path in in_paths:
        rows = read_results(path)
        base = os.path.splitext(os.path.basename(path))[0] or "run"
        name = base
        suffix = 2
        while name in names:
            name = "%s_%d" % (base, suffix)
            suffix += 1
        names.append(name)
        series.append(rows)
    times = sorted({row["time"] for rows in series for row in rows})
    header = ["time"]
    for name in names:
        header.append("%s_long_term_rc" % name)
        header.append("%s_acceptance_rate" % name)
    out_lines = [",".join(header)]
    cursors = [0] * len(series)
    current = [(None, None)] * len(series)
    for t in times:
        for i, rows in enumerate(series):
            while cursors[i] < len(rows) and rows[cursors[i]]["time"] <= t:
                row = rows[cursors[i]]
                current[i] = (row["long_term_rc"], row["acceptance_rate"])
                cursors[i] += 1
        cells = [repr(float(t))]
        for rc, acc in current:
            cells.append("" if rc is None else repr(float(rc)))
            cells.append("" if acc is None else repr(float(acc)))
        out_lines.append(",".join(cells))
    with open(out_path, "w") as fh:
        fh.write("\n".join(out_lines) + "\n")
    return out_path
