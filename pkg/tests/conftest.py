"""Shared test fixtures and builders."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from vnelab.netmodel import SubstrateNetwork, VirtualNetworkRequest


def random_substrate(rng, n=None, extra_links=None, cpu=(50.0, 100.0),
                     bw=(50.0, 100.0), integer=False):
    """Connected random substrate: a random spanning tree plus extra links.

    Direct construction (no Waxman draw) so oracle tests do not depend on
    the generator under test. integer=True snaps capacities to whole numbers
    for float-exact arithmetic.
    """
    if n is None:
        n = int(rng.integers(2, 9))
    net = SubstrateNetwork()

    def capacity(lo, hi):
        value = rng.uniform(lo, hi)
        return float(np.floor(value)) if integer else float(value)

    for i in range(n):
        net.add_node(i, capacity(*cpu))
    order = rng.permutation(n)
    for idx in range(1, n):
        u = int(order[idx])
        v = int(order[int(rng.integers(0, idx))])
        net.add_link(u, v, capacity(*bw))
    if extra_links is None:
        extra_links = int(rng.integers(0, n))
    tries = 0
    while extra_links > 0 and tries < 50:
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        tries += 1
        if u != v and net.link(u, v) is None:
            net.add_link(u, v, capacity(*bw))
            extra_links -= 1
    return net


def random_vnr(rng, vnr_id=0, max_nodes=4, cpu=(1.0, 25.0), bw=(1.0, 25.0),
               arrival=1.0, lifetime=100.0, integer=False):
    """Connected random request graph (path backbone plus random chords)."""
    k = int(rng.integers(2, max_nodes + 1))

    def demand(lo, hi):
        value = rng.uniform(lo, hi)
        return float(max(1.0, np.floor(value))) if integer else float(value)

    nodes = {i: demand(*cpu) for i in range(k)}
    links = {}
    perm = rng.permutation(k)
    for i in range(1, k):
        a, b = int(perm[i - 1]), int(perm[i])
        links[(min(a, b), max(a, b))] = demand(*bw)
    for a in range(k):
        for b in range(a + 1, k):
            if (a, b) not in links and rng.random() < 0.25:
                links[(a, b)] = demand(*bw)
    return VirtualNetworkRequest(vnr_id, arrival, lifetime, nodes, links)


def availability_map(net):
    return {(l.u, l.v): l.bw_available for l in net.links()}


def adjacency_map(net):
    return {nid: list(net.neighbors(nid)) for nid in net.node_ids()}


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
