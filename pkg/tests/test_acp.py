import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acpnet.acp import PHANTOM, ProbabilityTable, select_neighbor, update_table
from acpnet.hardware import us
from acpnet.kernel import PS_PER_MS
from acpnet.topology import Topology
from acpnet.traffic import Request
from conftest import line


class FixedDraws:
    """Stands in for a generator: fixed roulette draw, sleep factor 1."""

    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u

    def uniform(self, lo, hi):
        return 1.0


def star():
    return Topology("star", ["A", "B", "C"], [("A", "B", 10), ("A", "C", 10)])


# tables --------------------------------------------------------------------

def test_uniform_table_includes_phantom_last():
    t = ProbabilityTable.uniform(["C", "B"])
    assert list(t) == ["B", "C", PHANTOM]
    assert t[PHANTOM] == pytest.approx(1 / 3)


def test_table_must_be_normalized_and_have_phantom():
    with pytest.raises(ValueError):
        ProbabilityTable({"B": 0.5, PHANTOM: 0.6})
    with pytest.raises(ValueError):
        ProbabilityTable({"B": 1.0})


def test_update_table_example():
    t = update_table(ProbabilityTable({"B": 0.3, "C": 0.3, PHANTOM: 0.4}), "A", ["A", "B"], 0.05)
    assert t["B"] == pytest.approx(0.33333, abs=1e-5)
    assert t["C"] == pytest.approx(0.28571, abs=1e-5)
    assert t[PHANTOM] == pytest.approx(0.38095, abs=1e-5)


def test_intermediate_node_rewards_both_sides():
    t = ProbabilityTable({"P2": 0.25, "P3": 0.25, "Q": 0.25, PHANTOM: 0.25})
    out = update_table(t, "A", ["P1", "P2", "A", "P3", "P4"], 0.05)
    assert out["P2"] == out["P3"] == pytest.approx(0.3 / 1.1)
    assert out["Q"] == pytest.approx(0.25 / 1.1)


def test_path_elsewhere_leaves_table_unchanged():
    t = ProbabilityTable({"B": 0.3, "C": 0.3, PHANTOM: 0.4})
    assert update_table(t, "A", ["X", "Y", "Z"], 0.05).as_dict() == t.as_dict()


tables = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8).map(
    lambda ws: ProbabilityTable({**{f"n{i}": w / sum(ws) for i, w in enumerate(ws[:-1])}, PHANTOM: ws[-1] / sum(ws)}))


@given(tables, st.floats(0.001, 0.5), st.integers(0, 6))
def test_update_keeps_table_normalized_and_raises_reward(t, delta, pick):
    nbrs = [k for k in t if k is not PHANTOM]
    x = nbrs[pick % len(nbrs)]
    out = update_table(t, "A", ["A", x], delta)
    assert abs(out.total() - 1) <= 1e-12 and min(out.as_dict().values()) >= 0
    assert out[x] > t[x]


@given(tables, st.integers(1, 40))
def test_repeated_reward_is_non_decreasing(t, rounds):
    x = next(k for k in t if k is not PHANTOM)
    prev = t[x]
    for _ in range(rounds):
        t = update_table(t, "A", ["A", x], 0.05)
        assert t[x] >= prev
        prev = t[x]


def test_roulette_intervals():
    assert select_neighbor(ProbabilityTable({"x": 1.0, PHANTOM: 0.0}), 0.999) == "x"
    half = ProbabilityTable({"x": 0.5, PHANTOM: 0.5})
    assert select_neighbor(half, 0.75) is PHANTOM
    assert select_neighbor(half, 0.25) == "x"


def test_roulette_frequencies():
    t = ProbabilityTable({"a": 0.1, "b": 0.25, "c": 0.4, PHANTOM: 0.25})
    rng = np.random.default_rng(17)
    draws = [select_neighbor(t, u) for u in rng.random(100_000)]
    for key, p in t.items():
        assert sum(d == key for d in draws) / len(draws) == pytest.approx(p, abs=0.01)


# controller transitions ----------------------------------------------------

def test_tick_at_capacity_only_sleeps(make_net):
    net = make_net(topology=star())
    ctl = net.acp["A"]
    ctl.rng = FixedDraws(0.0)
    ctl.state.counter = ctl.state.max_memory_acp
    ctl.tick()
    assert ctl.queries_sent == 0 and ctl.state.pending == {}
    assert net.timeline.pending() == 1  # the next tick


def test_tick_sends_query_and_counts_memory(make_net):
    net = make_net(topology=star())
    ctl = net.acp["A"]
    ctl.rng = FixedDraws(0.0)  # first entry: B
    ctl.state.counter = 3
    ctl.tick()
    assert ctl.state.counter == 4 and net.stats["msg:query"] == 1
    ((nbr, mem, _),) = ctl.state.pending.values()
    assert nbr == "B" and not mem.free


def test_tick_on_phantom_sends_nothing(make_net):
    net = make_net(topology=star())
    ctl = net.acp["A"]
    ctl.rng = FixedDraws(0.99)
    ctl.tick()
    assert ctl.state.counter == 0 and ctl.none_selected == 1
    assert sum(v for k, v in net.stats.items() if k.startswith("msg:")) == 0


def test_sleep_is_drawn_around_the_base(make_net):
    net = make_net(topology=star())
    ctl = net.acp["A"]
    times = []
    inner = ctl.tick
    ctl.tick = lambda: (times.append(net.now()), inner())
    ctl.start()
    net.run_until(5 * 10**12)
    gaps = np.diff([0] + times) / PS_PER_MS
    assert gaps.min() >= 5 and gaps.max() <= 15
    assert gaps.mean() == pytest.approx(10, abs=0.3)


def test_query_reply_yes_installs_rule_at_sender(make_net):
    net = make_net(topology=star())
    ctl = net.acp["A"]
    ctl.rng = FixedDraws(0.0)
    ctl.tick()
    net.run_until(us(150))  # query arrives at B
    assert net.acp["B"].state.counter == 1 and net.stats["msg:reply_yes"] == 1
    net.run_until(us(300))  # reply arrives back at A
    assert ctl.state.pending == {}
    assert [r.name for r in net.nodes["A"].rules.rules] == ["acp A-B"]


def test_query_to_a_full_node_is_refused(make_net):
    net = make_net(topology=star())
    ctl, peer = net.acp["A"], net.acp["B"]
    ctl.rng = FixedDraws(0.0)
    peer.state.counter = peer.state.max_memory_acp  # memories free, counter full
    ctl.tick()
    net.run_until(us(300))
    assert net.stats["msg:reply_no"] == 1
    assert ctl.state.counter == 0 and ctl.state.pending == {}
    assert all(m.free for m in net.nodes["A"].acp_memories)


def test_reply_after_pending_expiry_changes_nothing(make_net):
    net = make_net(topology=star(), acp_ttl_s=100e-6)
    ctl = net.acp["A"]
    ctl.rng = FixedDraws(0.0)
    ctl.tick()
    net.run_until(us(120))
    assert ctl.state.counter == 0 and ctl.state.pending == {}
    net.run_until(us(1000))
    assert net.stats["stale_replies"] == 1
    assert net.nodes["A"].rules.rules == []
    assert [c.state.counter for c in net.acp.values()] == [0, 0, 0]
    assert all(m.free for n in net.nodes.values() for m in n.memories)


def test_uniform_control_never_updates(make_net):
    net = make_net(strategy="ucp", topology=star())
    before = net.acp["A"].state.table.as_dict()
    net.acp["A"].update(["A", "B"])
    assert net.acp["A"].state.table.as_dict() == before


@pytest.mark.parametrize("n,messages", [(2, 0), (3, 1), (5, 3)])
def test_served_request_notifies_intermediate_nodes(make_net, n, messages):
    net = make_net(topology=line(n))
    start = PS_PER_MS
    rec = net.submit(Request(0, "p0", f"p{n - 1}", 0, start, start + 10**13))
    net.run_until(10**13)
    assert rec.served_at is not None
    assert net.stats["msg:path_notify"] == messages
    for node in rec.path:
        assert net.acp[node].table_updates == 1
        table = net.acp[node].state.table
        for nbr in net.neighbors(node):
            assert table[nbr] > table[PHANTOM]
