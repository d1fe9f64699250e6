"""Revenue/cost accounting, running totals, results CSV round trip."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_substrate, random_vnr
from vnelab.embedders import baseline_embed
from vnelab.errors import IncompleteEmbeddingError
from vnelab.metrics import (RESULT_COLUMNS, ResultsWriter, RunningTotals,
                            cost, link_utilization, read_results, revenue)
from vnelab.netmodel import Embedding, SubstrateNetwork, VirtualNetworkRequest


def star_net(n=5, cpu=100.0, bw=100.0):
    net = SubstrateNetwork()
    for i in range(n):
        net.add_node(i, cpu)
    for i in range(1, n):
        net.add_link(0, i, bw)
    return net


class TestRevenueCost:
    def test_revenue_sums_demands(self):
        vnr = VirtualNetworkRequest(0, 0.0, 1.0, {0: 10.0, 1: 20.0},
                                    {(0, 1): 5.0})
        assert revenue(vnr) == 35.0

    def test_single_hop_cost_equals_revenue(self):
        net = star_net()
        vnr = VirtualNetworkRequest(0, 0.0, 1.0, {0: 10.0, 1: 20.0},
                                    {(0, 1): 5.0})
        emb = Embedding(0, {0: 0, 1: 1}, {0: 10.0, 1: 20.0},
                        {(0, 1): [((0, 1), 5.0)]})
        assert cost(vnr, emb) == revenue(vnr)

    def test_multi_hop_cost_exceeds_revenue(self):
        net = star_net()
        vnr = VirtualNetworkRequest(0, 0.0, 1.0, {0: 10.0, 1: 20.0},
                                    {(0, 1): 5.0})
        emb = Embedding(0, {0: 1, 1: 2}, {0: 10.0, 1: 20.0},
                        {(0, 1): [((1, 0, 2), 5.0)]})
        assert cost(vnr, emb) == revenue(vnr) + 5.0

    def test_cost_requires_full_link_coverage(self):
        vnr = VirtualNetworkRequest(0, 0.0, 1.0, {0: 10.0, 1: 20.0},
                                    {(0, 1): 5.0})
        emb = Embedding(0, {0: 0, 1: 1}, {0: 10.0, 1: 20.0}, {})
        with pytest.raises(IncompleteEmbeddingError):
            cost(vnr, emb)

    def test_cost_requires_exact_bandwidth_fold(self):
        vnr = VirtualNetworkRequest(0, 0.0, 1.0, {0: 10.0, 1: 20.0},
                                    {(0, 1): 5.0})
        emb = Embedding(0, {0: 0, 1: 1}, {0: 10.0, 1: 20.0},
                        {(0, 1): [((0, 1), 4.5)]})
        with pytest.raises(IncompleteEmbeddingError):
            cost(vnr, emb)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_revenue_never_exceeds_cost(self, seed):
        rng = np.random.default_rng(seed)
        net = random_substrate(rng)
        vnr = random_vnr(rng)
        emb = baseline_embed(net, vnr)
        if emb is None:
            return
        rev = revenue(vnr)
        cst = cost(vnr, emb)
        assert rev <= cst  # exact float comparison, no tolerance
        if emb.total_hops() == len(vnr.links):
            assert rev == cst
        else:
            assert rev < cst
        assert 0.0 < rev / cst <= 1.0


class TestRunningTotals:
    def test_empty_totals(self):
        t = RunningTotals()
        assert t.long_term_rc() is None
        assert t.acceptance_rate() is None
        assert t.revenue_sum == 0.0 and t.cost_sum == 0.0

    def test_accumulation_matches_replay_fold(self, rng):
        t = RunningTotals()
        rows = []
        for i in range(50):
            accepted = rng.random() < 0.7
            rev = float(rng.uniform(10, 100)) if accepted else 0.0
            cst = rev * float(rng.uniform(1.0, 2.0)) if accepted else 0.0
            t.record_arrival(float(i), accepted, rev, cst)
            rows.append((accepted, rev, cst))
        fold_rev = 0.0
        fold_cst = 0.0
        for _, r, c in rows:  # replay fold in event order, like the totals
            fold_rev += r
            fold_cst += c
        assert t.revenue_sum == fold_rev
        assert t.cost_sum == fold_cst
        assert t.acceptance_rate() == sum(a for a, _, _ in rows) / 50
        assert t.long_term_rc() == fold_rev / fold_cst

    def test_rejections_only(self):
        t = RunningTotals()
        t.record_arrival(1.0, False)
        assert t.arrived == 1 and t.accepted == 0
        assert t.acceptance_rate() == 0.0
        assert t.long_term_rc() is None


class TestLinkUtilization:
    def test_zero_on_fresh_substrate(self):
        assert link_utilization(star_net()) == 0.0

    def test_tracks_allocated_fraction(self):
        net = star_net(n=3, bw=10.0)  # two links, total capacity 20
        emb = Embedding(0, {0: 1, 1: 2}, {0: 1.0, 1: 1.0},
                        {(0, 1): [((1, 0, 2), 5.0)]})
        net.allocate(emb)
        assert link_utilization(net) == 10.0 / 20.0

    def test_no_links_is_zero(self):
        net = SubstrateNetwork()
        net.add_node(0, 10.0)
        assert link_utilization(net) == 0.0


class TestResultsCsv:
    def test_header_and_row_shape(self):
        buf = io.StringIO()
        w = ResultsWriter(buf)
        t = RunningTotals()
        t.record_arrival(1.5, True, 30.0, 40.0)
        w.row(1.5, 0, True, 30.0, 40.0, t, 0.25)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",".join(RESULT_COLUMNS)
        cells = lines[1].split(",")
        assert len(cells) == len(RESULT_COLUMNS)
        assert cells[2] == "1"

    def test_round_trip_including_empty_cells(self, tmp_path):
        buf = io.StringIO()
        w = ResultsWriter(buf)
        t = RunningTotals()
        t.record_arrival(1.0, False)
        w.row(1.0, 0, False, 0.0, 0.0, t, 0.0)  # long_term_rc still undefined
        t.record_arrival(2.5, True, 10.0, 12.5)
        w.row(2.5, 1, True, 10.0, 12.5, t, 0.125)
        path = tmp_path / "r.csv"
        path.write_text(buf.getvalue())
        rows = read_results(path)
        assert rows[0]["long_term_rc"] is None
        assert rows[0]["accepted"] is False
        assert rows[1]["long_term_rc"] == 0.8
        assert rows[1]["time"] == 2.5
        assert rows[1]["vnr_id"] == 1

    def test_floats_round_trip_bitwise(self, tmp_path, rng):
        buf = io.StringIO()
        w = ResultsWriter(buf)
        t = RunningTotals()
        values = []
        for i in range(20):
            rev = float(rng.uniform(0, 1)) * (10 ** int(rng.integers(-8, 9)))
            cst = rev * (1.0 + float(rng.uniform(0, 1)))
            t.record_arrival(float(i) + 0.1, True, rev, cst)
            w.row(float(i) + 0.1, i, True, rev, cst, t, float(rng.uniform(0, 1)))
            values.append((rev, cst))
        path = tmp_path / "r.csv"
        path.write_text(buf.getvalue())
        for row, (rev, cst) in zip(read_results(path), values):
            assert row["revenue"] == rev
            assert row["cost"] == cst

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,vnr\n1,2\n")
        with pytest.raises(ValueError):
            read_results(path)
