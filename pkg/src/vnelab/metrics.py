"""Evaluation quantities: revenue, cost, long-term R/C, acceptance, utilization.

Revenue and cost are exact sums (math.fsum) over identically ordered term
lists whose cost terms dominate the revenue terms elementwise, so the
revenue <= cost bound survives rounding, with equality exactly when every
virtual link rides single-hop paths.
"""

import math

from .errors import IncompleteEmbeddingError


def revenue(vnr):
    """Total demanded resources: sum of CPU demands plus bandwidth demands."""
    terms = [vnr.nodes[n] for n in sorted(vnr.nodes)]
    terms += [vnr.links[k] for k in sorted(vnr.links)]
    return math.fsum(terms)


def cost(vnr, emb):
    """Total consumed resources: CPU demands plus bandwidth x path hops.

    Each path of each virtual link contributes allocated_bw times its hop
    count (the bandwidth is spent on every substrate link it crosses).
    """
    if set(emb.node_map) != set(vnr.nodes) or set(emb.link_map) != set(vnr.links):
        raise IncompleteEmbeddingError(
            "embedding does not cover request %r" % vnr.id)
    for key, demand in vnr.links.items():
        remaining = demand
        for _, bw in emb.link_map[key]:
            remaining -= bw
        if remaining != 0.0:
            raise IncompleteEmbeddingError(
                "allocations on %r do not meet demand %r" % (key, demand))
    terms = [vnr.nodes[n] for n in sorted(vnr.nodes)]
    for key in sorted(emb.link_map):
        for path, bw in emb.link_map[key]:
            terms.append(bw * (len(path) - 1))
    return math.fsum(terms)


class RunningTotals:
    """Cumulative run accounting; folds per-request values in event order."""

    def __init__(self):
        self.revenue_sum = 0.0
        self.cost_sum = 0.0
        self.arrived = 0
        self.accepted = 0
        self.horizon = 0.0

    def record_arrival(self, time, accepted, rev=0.0, cst=0.0):
        self.arrived += 1
        if accepted:
            self.accepted += 1
            self.revenue_sum += rev
            self.cost_sum += cst
        if time > self.horizon:
            self.horizon = time

    def long_term_rc(self):
        """Revenue over cost at the current horizon; None while cost is 0."""
        if self.cost_sum == 0.0:
            return None
        return self.revenue_sum / self.cost_sum

    def acceptance_rate(self):
        if self.arrived == 0:
            return None
        return self.accepted / self.arrived


def long_term_rc(totals):
    return totals.long_term_rc()


def acceptance_rate(totals):
    return totals.acceptance_rate()


def link_utilization(net):
    """Fraction of total link capacity currently allocated."""
    caps = []
    used = []
    for link in net.links():
        caps.append(link.bw_capacity)
        used.append(link.bw_capacity - link.bw_available)
    total = math.fsum(caps)
    if total == 0.0:
        return 0.0
    return math.fsum(used) / total


RESULT_COLUMNS = ("time", "vnr_id", "accepted", "revenue", "cost",
                  "cum_revenue", "cum_cost", "long_term_rc",
                  "acceptance_rate", "link_utilization")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ResultsWriter:
    """One CSV row per arrival event, in the fixed column order.

    Floats are written in shortest round-trip decimal form so identical runs
    produce byte-identical files. Rejected arrivals log zero revenue and
    cost, keeping the cumulative columns a plain fold of the rows.
    """

    def __init__(self, stream):
        self.stream = stream
        self.stream.write(",".join(RESULT_COLUMNS) + "\n")

    def row(self, time, vnr_id, accepted, rev, cst, totals, utilization):
        values = (time, vnr_id, accepted, rev, cst,
                  totals.revenue_sum, totals.cost_sum,
                  totals.long_term_rc(), totals.acceptance_rate(),
                  utilization)
        self.stream.write(",".join(_fmt(v) for v in values) + "\n")


def read_results(path):
    """Parse a results CSV back into a list of per-row dicts."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.split(",") != list(RESULT_COLUMNS):
            raise ValueError("unexpected results header in %s: %r" % (path, header))
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            row = {}
            for name, raw in zip(RESULT_COLUMNS, parts):
                if name == "vnr_id":
                    row[name] = int(raw)
                elif name == "accepted":
                    row[name] = raw == "1"
                elif raw == "":
                    row[name] = None
                else:
                    row[name] = float(raw)
            rows.append(row)
    return rows
