"""Bandwidth-constrained path finding for virtual-link mapping.

All functions are pure: they read residuals (or a provisional availability
overlay) and never mutate the network. Every tie between minimum-hop paths is
broken by the smallest lexicographic node-id sequence, so results are fully
deterministic.
"""

from collections import namedtuple
from fractions import Fraction

PathQuery = namedtuple("PathQuery", ["source", "target", "bw_demand"])


def _availability(net, avail):
    if avail is not None:
        return avail
    return {(l.u, l.v): l.bw_available for l in net.links()}


def _adjacency(net, avail, threshold, strict):
    """Neighbor lists (ascending id) over links filtered by availability.

    strict=False keeps links with avail >= threshold, strict=True keeps
    avail > threshold (used with 0.0 to mean any positive capacity).
    """
    adj = {n: [] for n in net.node_ids()}
    for (u, v), a in avail.items():
        ok = a > threshold if strict else a >= threshold
        if ok:
            adj[u].append(v)
            adj[v].append(u)
    for n in adj:
        adj[n].sort()
    return adj


def _lex_bfs_path(adj, source, target):
    """Lexicographically smallest minimum-hop path, or None.

    Breadth-first search scanning neighbors in ascending id order with
    first-visit parents yields exactly that path on reconstruction.
    """
    if source == target:
        raise ValueError("path query with identical endpoints %r" % (source,))
    parent = {source: None}
    frontier = [source]
    while frontier and target not in parent:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in parent:
                    parent[v] = u
                    nxt.append(v)
        frontier = nxt
    if target not in parent:
        return None
    path = [target]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()
    return tuple(path)


def shortest_feasible_path(net, query, avail=None):
    """Minimum-hop path over links with availability >= bw_demand, or None.

    Implemented as backward distance labels plus a greedy smallest-id
    descent, which also realizes the lexicographic tie-break; kept
    deliberately different from bfs_feasible_path so the two act as mutual
    checks while honoring the same contract.
    """
    net.node(query.source)
    net.node(query.target)
    avail = _availability(net, avail)
    adj = _adjacency(net, avail, query.bw_demand, strict=False)
    if query.source == query.target:
        raise ValueError("path query with identical endpoints %r" % (query.source,))
    # distance-to-target labels
    dist = {query.target: 0}
    frontier = [query.target]
    d = 0
    while frontier and query.source not in dist:
        d += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    if query.source not in dist:
        return None
    path = [query.source]
    while path[-1] != query.target:
        here = dist[path[-1]]
        for v in adj[path[-1]]:  # ascending, first hit is lexicographic choice
            if dist.get(v, -1) == here - 1:
                path.append(v)
                break
    return tuple(path)


def bfs_feasible_path(net, query, avail=None):
    """Breadth-first minimum-hop path; contract identical to
    shortest_feasible_path (min-hop, same lexicographic tie-break)."""
    net.node(query.source)
    net.node(query.target)
    avail = _availability(net, avail)
    adj = _adjacency(net, avail, query.bw_demand, strict=False)
    return _lex_bfs_path(adj, query.source, query.target)


def max_flow_exact(net, source, target, avail=None):
    """Exact s-t maximum flow over residual bandwidths, as a Fraction.

    Shortest-augmenting-path computation in exact rational arithmetic; used
    by split_flow to decide routability precisely.
    """
    avail = _availability(net, avail)
    cap, flowed = _augment_to_demand(net, avail, source, target, None)
    total = Fraction(0)
    for (u, v), a in avail.items():
        fa = Fraction(a)
        net_uv = (cap[(v, u)] - cap[(u, v)]) / 2
        if u == source:
            total += net_uv
        if v == source:
            total -= net_uv
    return total


def _augment_to_demand(net, avail, source, target, demand):
    """Shortest-augmenting-path flow push in exact arithmetic.

    Pushes until demand (a Fraction) is met, or to the maximum when demand is
    None. Returns (arc residual capacities, amount pushed).
    """
    cap = {}
    adj = {n: [] for n in net.node_ids()}
    for (u, v), a in avail.items():
        f = Fraction(a)
        cap[(u, v)] = f
        cap[(v, u)] = f
        if f > 0:
            adj[u].append(v)
            adj[v].append(u)
    for n in adj:
        adj[n] = sorted(set(adj[n]))
    pushed = Fraction(0)
    while demand is None or pushed < demand:
        parent = {source: None}
        frontier = [source]
        while frontier and target not in parent:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if v not in parent and cap[(u, v)] > 0:
                        parent[v] = u
                        nxt.append(v)
            frontier = nxt
        if target not in parent:
            break
        path = [target]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        path.reverse()
        g = min(cap[(a, b)] for a, b in zip(path, path[1:]))
        if demand is not None:
            g = min(g, demand - pushed)
        for a, b in zip(path, path[1:]):
            cap[(a, b)] -= g
            cap[(b, a)] += g
        pushed += g
    return cap, pushed


def _decompose(avail, cap, source, target, demand):
    """Decompose the net flow held in arc residuals into simple s-t paths.

    Returns [(path, Fraction amount)] summing exactly to demand. Any cycles
    in the net flow are cancelled, never billed.
    """
    flow = {}
    for (u, v), a in avail.items():
        net_uv = (cap[(v, u)] - cap[(u, v)]) / 2
        if net_uv > 0:
            flow[(u, v)] = net_uv
        elif net_uv < 0:
            flow[(v, u)] = -net_uv
    out_arcs = {}
    for (u, v) in flow:
        out_arcs.setdefault(u, []).append(v)
    for u in out_arcs:
        out_arcs[u].sort()

    def next_hop(u):
        for v in out_arcs.get(u, ()):
            if flow.get((u, v), 0) > 0:
                return v
        return None

    paths = []
    carried = Fraction(0)
    while carried < demand:
        path = [source]
        seen = {source: 0}
        while path[-1] != target:
            v = next_hop(path[-1])
            if v is None:
                raise AssertionError("flow conservation violated during decomposition")
            if v in seen:
                # cancel the cycle and restart the trace
                cycle = path[seen[v]:] + [v]
                g = min(flow[(a, b)] for a, b in zip(cycle, cycle[1:]))
                for a, b in zip(cycle, cycle[1:]):
                    flow[(a, b)] -= g
                path = [source]
                seen = {source: 0}
                continue
            seen[v] = len(path)
            path.append(v)
        g = min(flow[(a, b)] for a, b in zip(path, path[1:]))
        g = min(g, demand - carried)
        for a, b in zip(path, path[1:]):
            flow[(a, b)] -= g
        paths.append((tuple(path), g))
        carried += g
    return paths


def _to_float_amounts(avail, demand, frac_paths):
    """Convert exact path amounts to floats honoring the fold discipline.

    The last amount is chosen as the residue of the sequential demand fold so
    validation's fold-to-zero check is exact; per-link availability folds are
    then verified the same way allocation will compute them. With integral
    capacities and demand every quantity here is exact. On the (float
    saturation boundary) failure of a fold check, returns None.
    """
    amounts = [float(g) for _, g in frac_paths]
    for _ in range(len(amounts)):
        residue = demand
        for a in amounts[:-1]:
            residue -= a
        if residue > 0.0:
            amounts[-1] = residue
            break
        # residue swallowed by rounding: merge the last path away
        if len(amounts) == 1:
            return None
        amounts.pop()
    else:
        return None
    paths = [p for p, _ in frac_paths[:len(amounts)]]
    for _ in range(10):
        folds = dict(avail)
        worst_key = None
        for path, amount in zip(paths, amounts):
            for a, b in zip(path, path[1:]):
                key = (a, b) if a < b else (b, a)
                folds[key] -= amount
                if folds[key] < 0.0:
                    worst_key = (key, folds[key])
        if worst_key is None:
            return list(zip(paths, amounts))
        key, deficit = worst_key
        # shave the last path crossing the offending link by the deficit
        for i in range(len(paths) - 1, -1, -1):
            on_link = any({a, b} == set(key) for a, b in zip(paths[i], paths[i][1:]))
            if on_link:
                amounts[i] += deficit  # deficit < 0
                if amounts[i] <= 0.0:
                    return None
                break
        residue = demand
        for a in amounts[:-1]:
            residue -= a
        if residue <= 0.0:
            return None
        amounts[-1] = residue
    return None


def split_flow(net, query, avail=None):
    """Multipath routing: [(path, allocated_bw)] covering bw_demand, or None.

    Greedy phase first: while the remaining demand fits on some path, route
    it there whole; otherwise take the current minimum-hop positive-capacity
    path at its bottleneck and continue. When the greedy phase strands
    residual demand, the decision falls back to an exact shortest-augmenting
    flow computation, so a result exists precisely when bw_demand is at most
    the s-t max-flow of the residual network.
    """
    net.node(query.source)
    net.node(query.target)
    if query.source == query.target:
        raise ValueError("path query with identical endpoints %r" % (query.source,))
    if query.bw_demand <= 0:
        raise ValueError("bw_demand must be positive")
    base = dict(_availability(net, avail))
    work = dict(base)
    remaining = query.bw_demand
    out = []
    while True:
        q = PathQuery(query.source, query.target, remaining)
        path = shortest_feasible_path(net, q, avail=work)
        if path is not None:
            out.append((path, remaining))
            for a, b in zip(path, path[1:]):
                key = (a, b) if a < b else (b, a)
                work[key] -= remaining
            return out
        adj = _adjacency(net, work, 0.0, strict=True)
        path = _lex_bfs_path(adj, query.source, query.target)
        if path is None:
            break
        keys = [(a, b) if a < b else (b, a) for a, b in zip(path, path[1:])]
        bottleneck = min(work[k] for k in keys)
        out.append((path, bottleneck))
        for k in keys:
            work[k] -= bottleneck
        remaining -= bottleneck

    # greedy stranded some demand: decide exactly via max-flow and rebuild
    demand = Fraction(query.bw_demand)
    cap, pushed = _augment_to_demand(net, base, query.source, query.target, demand)
    if pushed < demand:
        return None
    frac_paths = _decompose(base, cap, query.source, query.target, demand)
    return _to_float_amounts(base, query.bw_demand, frac_paths)
