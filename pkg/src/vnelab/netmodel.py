"""Substrate and virtual network model.

Substrate nodes and links carry live allocation records (vnr_id, amount) in
chronological order, and the cached residual is always the left fold
capacity - a1 - a2 - ... over those records. Releasing removes a request's
records and refolds, so allocate-then-release restores residuals bit-exactly
and out-of-order releases agree with a from-scratch replay of the surviving
allocations.
"""

import math

from .errors import (
    InfeasibleAllocationError,
    IncompleteEmbeddingError,
    FormatError,
    ReleaseError,
    UnknownNodeError,
)


def _canon(a, b):
    """Canonical unordered pair key."""
    if a == b:
        raise ValueError("self-loop: (%r, %r)" % (a, b))
    return (a, b) if a < b else (b, a)


def _fold(capacity, records):
    avail = capacity
    for _, amount in records:
        avail -= amount
    return avail


class SubstrateNode:
    def __init__(self, node_id, cpu_capacity, position=None):
        if cpu_capacity < 0:
            raise ValueError("negative cpu_capacity for node %r" % node_id)
        self.id = node_id
        self.cpu_capacity = float(cpu_capacity)
        self.cpu_available = float(cpu_capacity)
        self.position = position
        self.records = []  # [(vnr_id, amount)] in allocation order

    def refold(self):
        self.cpu_available = _fold(self.cpu_capacity, self.records)

    def __repr__(self):
        return "SubstrateNode(%r, cpu %g/%g)" % (
            self.id, self.cpu_available, self.cpu_capacity)


class SubstrateLink:
    def __init__(self, u, v, bw_capacity):
        if bw_capacity < 0:
            raise ValueError("negative bw_capacity for link (%r, %r)" % (u, v))
        self.u, self.v = _canon(u, v)
        self.bw_capacity = float(bw_capacity)
        self.bw_available = float(bw_capacity)
        self.records = []

    @property
    def endpoints(self):
        return (self.u, self.v)

    def refold(self):
        self.bw_available = _fold(self.bw_capacity, self.records)

    def __repr__(self):
        return "SubstrateLink(%r-%r, bw %g/%g)" % (
            self.u, self.v, self.bw_available, self.bw_capacity)


class SubstrateNetwork:
    """Undirected capacitated graph with transactional allocation."""

    def __init__(self):
        self._nodes = {}
        self._links = {}  # canonical (u, v) -> SubstrateLink
        self._adj = {}    # node id -> {neighbor id: SubstrateLink}
        self._live = set()  # vnr ids currently holding resources

    # -- construction ------------------------------------------------------

    def add_node(self, node_id, cpu_capacity, position=None):
        if node_id in self._nodes:
            raise ValueError("duplicate node id %r" % node_id)
        node = SubstrateNode(node_id, cpu_capacity, position)
        self._nodes[node_id] = node
        self._adj[node_id] = {}
        return node

    def add_link(self, u, v, bw_capacity):
        key = _canon(u, v)
        if u not in self._nodes or v not in self._nodes:
            raise UnknownNodeError("link endpoints (%r, %r) not both present" % (u, v))
        if key in self._links:
            raise ValueError("duplicate link %r" % (key,))
        link = SubstrateLink(u, v, bw_capacity)
        self._links[key] = link
        self._adj[u][v] = link
        self._adj[v][u] = link
        return link

    # -- lookup ------------------------------------------------------------

    def node(self, node_id):
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError("unknown substrate node %r" % node_id) from None

    def has_node(self, node_id):
        return node_id in self._nodes

    def link(self, u, v):
        """The link between u and v, or None. Unknown endpoints raise."""
        if u not in self._nodes:
            raise UnknownNodeError("unknown substrate node %r" % u)
        if v not in self._nodes:
            raise UnknownNodeError("unknown substrate node %r" % v)
        return self._links.get(_canon(u, v))

    def node_ids(self):
        return sorted(self._nodes)

    def nodes(self):
        return [self._nodes[i] for i in sorted(self._nodes)]

    def links(self):
        return [self._links[k] for k in sorted(self._links)]

    def neighbors(self, node_id):
        if node_id not in self._nodes:
            raise UnknownNodeError("unknown substrate node %r" % node_id)
        return sorted(self._adj[node_id])

    def degree(self, node_id):
        if node_id not in self._nodes:
            raise UnknownNodeError("unknown substrate node %r" % node_id)
        return len(self._adj[node_id])

    def num_nodes(self):
        return len(self._nodes)

    def num_links(self):
        return len(self._links)

    def adjacent_links(self, node_id):
        if node_id not in self._nodes:
            raise UnknownNodeError("unknown substrate node %r" % node_id)
        adj = self._adj[node_id]
        return [adj[n] for n in sorted(adj)]

    # -- feasibility -------------------------------------------------------

    def node_feasible(self, node_id, cpu_demand):
        return self.node(node_id).cpu_available >= cpu_demand

    def path_feasible(self, path, bw_demand):
        if len(path) < 2:
            raise ValueError("path needs at least 2 nodes, got %r" % (path,))
        for a, b in zip(path, path[1:]):
            link = self.link(a, b)
            if link is None or link.bw_available < bw_demand:
                return False
        return True

    # -- allocation --------------------------------------------------------

    def allocate(self, emb):
        """Apply an embedding's allocations, all-or-nothing.

        Feasibility of every node and every link (aggregated over all paths
        of the embedding that cross it) is checked against current residuals
        before anything is mutated.
        """
        if emb.vnr_id in self._live:
            raise InfeasibleAllocationError(
                "vnr %r is already allocated" % emb.vnr_id)
        validate_embedding(self, emb)

        node_amounts = []  # (SubstrateNode, amount)
        for v_id in sorted(emb.node_map):
            s_id = emb.node_map[v_id]
            amount = emb.cpu_alloc[v_id]
            node_amounts.append((self.node(s_id), amount))
        link_amounts = []  # (SubstrateLink, amount) in path traversal order
        for key in sorted(emb.link_map):
            for path, bw in emb.link_map[key]:
                for a, b in zip(path, path[1:]):
                    link_amounts.append((self._links[_canon(a, b)], bw))

        # check phase: fold the new amounts onto current residuals
        for node, amount in node_amounts:
            if node.cpu_available - amount < 0.0:
                raise InfeasibleAllocationError(
                    "node %r: cpu %r available, %r demanded"
                    % (node.id, node.cpu_available, amount))
        pending = {}
        for link, amount in link_amounts:
            key = (link.u, link.v)
            after = pending.get(key, link.bw_available) - amount
            if after < 0.0:
                raise InfeasibleAllocationError(
                    "link %r: bw %r available, fold went negative"
                    % (key, link.bw_available))
            pending[key] = after

        # apply phase
        for node, amount in node_amounts:
            node.records.append((emb.vnr_id, amount))
            node.cpu_available -= amount
        for link, amount in link_amounts:
            link.records.append((emb.vnr_id, amount))
            link.bw_available -= amount
        self._live.add(emb.vnr_id)
        return self

    def release(self, emb):
        """Exact inverse of allocate for a previously allocated embedding."""
        if emb.vnr_id not in self._live:
            raise ReleaseError("vnr %r is not currently allocated" % emb.vnr_id)
        vnr_id = emb.vnr_id
        for v_id in emb.node_map:
            node = self._nodes[emb.node_map[v_id]]
            node.records = [r for r in node.records if r[0] != vnr_id]
            node.refold()
        seen = set()
        for paths in emb.link_map.values():
            for path, _ in paths:
                for a, b in zip(path, path[1:]):
                    key = _canon(a, b)
                    if key in seen:
                        continue
                    seen.add(key)
                    link = self._links[key]
                    link.records = [r for r in link.records if r[0] != vnr_id]
                    link.refold()
        self._live.discard(vnr_id)
        return self

    def live_vnrs(self):
        return sorted(self._live)

    # -- whole-network helpers ----------------------------------------------

    def copy(self):
        """Independent copy carrying residuals and records bit-exactly."""
        other = SubstrateNetwork()
        for node in self.nodes():
            clone = other.add_node(node.id, node.cpu_capacity, node.position)
            clone.records = list(node.records)
            clone.cpu_available = node.cpu_available
        for link in self.links():
            clone = other.add_link(link.u, link.v, link.bw_capacity)
            clone.records = list(link.records)
            clone.bw_available = link.bw_available
        other._live = set(self._live)
        return other

    def same_state(self, other):
        """Field-for-field equality, bit-exact on reals."""
        if sorted(self._nodes) != sorted(other._nodes):
            return False
        if sorted(self._links) != sorted(other._links):
            return False
        for nid, node in self._nodes.items():
            o = other._nodes[nid]
            if (node.cpu_capacity != o.cpu_capacity
                    or node.cpu_available != o.cpu_available
                    or node.records != o.records
                    or node.position != o.position):
                return False
        for key, link in self._links.items():
            o = other._links[key]
            if (link.bw_capacity != o.bw_capacity
                    or link.bw_available != o.bw_available
                    or link.records != o.records):
                return False
        return self._live == other._live

    def check_residual_bounds(self):
        """Assert 0 <= available <= capacity everywhere; raises on violation."""
        for node in self._nodes.values():
            if not (0.0 <= node.cpu_available <= node.cpu_capacity):
                raise AssertionError(
                    "node %r residual out of bounds: %r not in [0, %r]"
                    % (node.id, node.cpu_available, node.cpu_capacity))
        for link in self._links.values():
            if not (0.0 <= link.bw_available <= link.bw_capacity):
                raise AssertionError(
                    "link %r residual out of bounds: %r not in [0, %r]"
                    % (link.endpoints, link.bw_available, link.bw_capacity))

    def is_connected(self):
        if not self._nodes:
            return True
        start = next(iter(self._nodes))
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return len(seen) == len(self._nodes)


class VirtualNetworkRequest:
    """Connected demand graph with an arrival time and a lifetime."""

    def __init__(self, vnr_id, arrival_time, lifetime, node_demands, link_demands):
        if arrival_time < 0:
            raise ValueError("negative arrival_time")
        if lifetime <= 0:
            raise ValueError("lifetime must be positive")
        self.id = vnr_id
        self.arrival_time = float(arrival_time)
        self.lifetime = float(lifetime)
        self.nodes = {}
        for n_id, demand in node_demands.items():
            if demand <= 0:
                raise ValueError("cpu_demand of node %r must be positive" % n_id)
            self.nodes[n_id] = float(demand)
        self.links = {}
        self._adj = {n: set() for n in self.nodes}
        for (a, b), demand in link_demands.items():
            key = _canon(a, b)
            if a not in self.nodes or b not in self.nodes:
                raise ValueError("link %r references missing node" % (key,))
            if key in self.links:
                raise ValueError("duplicate virtual link %r" % (key,))
            if demand <= 0:
                raise ValueError("bw_demand of link %r must be positive" % (key,))
            self.links[key] = float(demand)
            self._adj[a].add(b)
            self._adj[b].add(a)
        if not self.nodes:
            raise ValueError("request needs at least one node")
        if not self._connected():
            raise ValueError("request graph must be connected")

    def _connected(self):
        start = next(iter(self.nodes))
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return len(seen) == len(self.nodes)

    def node_ids(self):
        return sorted(self.nodes)

    def neighbors(self, n_id):
        return sorted(self._adj[n_id])

    def degree(self, n_id):
        return len(self._adj[n_id])

    def total_cpu_demand(self):
        return math.fsum(self.nodes[n] for n in sorted(self.nodes))

    def total_bw_demand(self):
        return math.fsum(self.links[k] for k in sorted(self.links))

    def __repr__(self):
        return "VirtualNetworkRequest(id=%r, |N|=%d, |L|=%d, t=%g)" % (
            self.id, len(self.nodes), len(self.links), self.lifetime)


class Embedding:
    """Injective node map plus per-virtual-link path assignments.

    cpu_alloc records the CPU amount committed on each mapped substrate node
    so that release needs no access to the originating request. link_map maps
    each canonical virtual link (a, b), a < b, to a list of
    (substrate path from node_map[a] to node_map[b], allocated bandwidth).
    """

    def __init__(self, vnr_id, node_map, cpu_alloc, link_map):
        self.vnr_id = vnr_id
        self.node_map = dict(node_map)
        self.cpu_alloc = {k: float(v) for k, v in cpu_alloc.items()}
        self.link_map = {}
        for (a, b), paths in link_map.items():
            key = _canon(a, b)
            fixed = [(tuple(p), float(bw)) for p, bw in paths]
            if key != (a, b):
                fixed = [(tuple(reversed(p)), bw) for p, bw in fixed]
            self.link_map[key] = fixed

    def substrate_nodes(self):
        return sorted(set(self.node_map.values()))

    def substrate_links(self):
        """Canonical substrate link keys carrying any of this embedding's flow."""
        keys = set()
        for paths in self.link_map.values():
            for path, _ in paths:
                for a, b in zip(path, path[1:]):
                    keys.add(_canon(a, b))
        return sorted(keys)

    def total_hops(self):
        return sum(len(path) - 1
                   for paths in self.link_map.values()
                   for path, _ in paths)

    def __repr__(self):
        return "Embedding(vnr=%r, nodes=%d, link_paths=%d)" % (
            self.vnr_id, len(self.node_map),
            sum(len(p) for p in self.link_map.values()))


def validate_embedding(net, emb, vnr=None):
    """Structural validity of emb against net (and optionally its request).

    Checks injectivity, that every path runs between its mapped endpoints
    over existing substrate links without repeating a node, and that
    allocations are positive. With vnr given, additionally checks coverage:
    node_map covers exactly the request's nodes with the demanded CPU, and
    each virtual link's allocations fold to exactly its bandwidth demand.
    Raises IncompleteEmbeddingError on any violation.
    """
    mapped = list(emb.node_map.values())
    if len(set(mapped)) != len(mapped):
        raise IncompleteEmbeddingError(
            "node_map is not injective: %r" % emb.node_map)
    for v_id, s_id in emb.node_map.items():
        if not net.has_node(s_id):
            raise IncompleteEmbeddingError(
                "virtual node %r mapped to unknown substrate node %r" % (v_id, s_id))
        if v_id not in emb.cpu_alloc:
            raise IncompleteEmbeddingError(
                "virtual node %r has no cpu allocation" % v_id)
        if emb.cpu_alloc[v_id] <= 0:
            raise IncompleteEmbeddingError(
                "virtual node %r allocation must be positive" % v_id)
    for (a, b), paths in emb.link_map.items():
        if a not in emb.node_map or b not in emb.node_map:
            raise IncompleteEmbeddingError(
                "virtual link (%r, %r) has unmapped endpoint" % (a, b))
        if not paths:
            raise IncompleteEmbeddingError(
                "virtual link (%r, %r) carries no paths" % (a, b))
        for path, bw in paths:
            if bw <= 0:
                raise IncompleteEmbeddingError(
                    "path allocation on (%r, %r) must be positive" % (a, b))
            if len(path) < 2:
                raise IncompleteEmbeddingError(
                    "degenerate path %r on (%r, %r)" % (path, a, b))
            if path[0] != emb.node_map[a] or path[-1] != emb.node_map[b]:
                raise IncompleteEmbeddingError(
                    "path %r does not join node_map[%r]=%r to node_map[%r]=%r"
                    % (path, a, emb.node_map[a], b, emb.node_map[b]))
            if len(set(path)) != len(path):
                raise IncompleteEmbeddingError("path %r repeats a node" % (path,))
            for x, y in zip(path, path[1:]):
                if net.link(x, y) is None:
                    raise IncompleteEmbeddingError(
                        "path %r uses nonexistent link (%r, %r)" % (path, x, y))
    if vnr is not None:
        if set(emb.node_map) != set(vnr.nodes):
            raise IncompleteEmbeddingError(
                "node_map does not cover the request's nodes exactly")
        for v_id, demand in vnr.nodes.items():
            if emb.cpu_alloc[v_id] != demand:
                raise IncompleteEmbeddingError(
                    "node %r allocation %r does not match demand %r"
                    % (v_id, emb.cpu_alloc[v_id], demand))
        if set(emb.link_map) != set(vnr.links):
            raise IncompleteEmbeddingError(
                "link_map does not cover the request's links exactly")
        for key, demand in vnr.links.items():
            remaining = demand
            for _, bw in emb.link_map[key]:
                remaining -= bw
            if remaining != 0.0:
                raise IncompleteEmbeddingError(
                    "allocations on %r fold to %r short of demand %r"
                    % (key, remaining, demand))
    return True


# -- substrate text format ---------------------------------------------------

def format_substrate(net):
    """Serialize to the line-oriented substrate format.

    `SUBSTRATE <n> <m>`, then one `NODE <id> <cpu> [<x> <y>]` per node in
    ascending id, then one `LINK <u> <v> <bw>` per link in ascending (u, v).
    Floats use shortest round-trip decimal form, so a fixed network always
    serializes to identical bytes.
    """
    lines = ["SUBSTRATE %d %d" % (net.num_nodes(), net.num_links())]
    for node in net.nodes():
        if node.position is not None:
            lines.append("NODE %d %s %s %s" % (
                node.id, repr(node.cpu_capacity),
                repr(float(node.position[0])), repr(float(node.position[1]))))
        else:
            lines.append("NODE %d %s" % (node.id, repr(node.cpu_capacity)))
    for link in net.links():
        lines.append("LINK %d %d %s" % (link.u, link.v, repr(link.bw_capacity)))
    return "\n".join(lines) + "\n"


def parse_substrate(text):
    net = SubstrateNetwork()
    header = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "SUBSTRATE":
                if header is not None:
                    raise FormatError("line %d: duplicate SUBSTRATE header" % lineno)
                if len(parts) != 3:
                    raise FormatError("line %d: SUBSTRATE needs 2 fields" % lineno)
                header = (int(parts[1]), int(parts[2]))
            elif tag == "NODE":
                if header is None:
                    raise FormatError("line %d: NODE before SUBSTRATE header" % lineno)
                if len(parts) not in (3, 5):
                    raise FormatError(
                        "line %d: NODE needs id, cpu and optional x y" % lineno)
                pos = (float(parts[3]), float(parts[4])) if len(parts) == 5 else None
                net.add_node(int(parts[1]), float(parts[2]), pos)
            elif tag == "LINK":
                if header is None:
                    raise FormatError("line %d: LINK before SUBSTRATE header" % lineno)
                if len(parts) != 4:
                    raise FormatError("line %d: LINK needs u, v, bw" % lineno)
                net.add_link(int(parts[1]), int(parts[2]), float(parts[3]))
            else:
                raise FormatError("line %d: unknown record %r" % (lineno, tag))
        except (ValueError, UnknownNodeError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError("line %d: %s" % (lineno, exc)) from None
    if header is None:
        raise FormatError("missing SUBSTRATE header")
    if header != (net.num_nodes(), net.num_links()):
        raise FormatError(
            "header announces %d nodes / %d links, file has %d / %d"
            % (header[0], header[1], net.num_nodes(), net.num_links()))
    return net


def write_substrate(net, path):
    with open(path, "w") as fh:
        fh.write(format_substrate(net))


def read_substrate(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError("cannot read substrate file %s: %s" % (path, exc)) from None
    return parse_substrate(text)
