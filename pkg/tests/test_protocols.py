import numpy as np
import pytest

from acpnet import bds
from acpnet.hardware import us
from acpnet.protocols import FRESHEST, RANDOM, GenerationProtocol, check_pregenerated, run_purification, run_swapping
from acpnet.topology import two_node
from conftest import line
from helpers import reserved_pair, seed_acp_ep


def test_check_pregenerated_policies(make_net):
    net = make_net()
    rng = np.random.default_rng(0)
    assert check_pregenerated(net.registry, "0", "1", FRESHEST, rng) is None
    _, old = seed_acp_ep(net, "0", "1")
    net.run_until(us(10))
    _, new = seed_acp_ep(net, "0", "1")
    assert check_pregenerated(net.registry, "1", "0", FRESHEST, rng) is new
    new.locked = True
    assert check_pregenerated(net.registry, "0", "1", FRESHEST, rng) is old
    new.locked = False
    picks = {check_pregenerated(net.registry, "0", "1", RANDOM, np.random.default_rng(s)).id for s in range(40)}
    assert picks == {old.id, new.id}
    again = [check_pregenerated(net.registry, "0", "1", RANDOM, np.random.default_rng(3)).id for _ in range(3)]
    assert len(set(again)) == 1
    with pytest.raises(ValueError):
        check_pregenerated(net.registry, "0", "1", "oldest", rng)


def test_reuse_completes_after_one_round_trip(make_net):
    net = make_net()
    slot, ep = seed_acp_ep(net, "0", "1")
    mu, mv = reserved_pair(net, "0", "1")
    done = []
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand",
                               lambda e: done.append((net.now(), e)), reuse_policy=FRESHEST)
    proto.start()
    net.run_until(us(1000))
    assert done == [(us(300), ep)]
    assert proto.attempts == 0 and proto.reused is ep
    assert set(ep.mems.values()) == {mu, mv}
    assert slot.released
    assert all(c.state.counter == 0 for c in net.acp.values())
    assert all(m.free for n in net.nodes.values() for m in n.acp_memories)


def test_generation_without_reuse_takes_whole_attempt_cycles(make_net):
    net = make_net(strategy="odo")
    mu, mv = reserved_pair(net, "0", "1")
    done = []
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", lambda e: done.append(net.now()))
    proto.start()
    net.run_until(us(10**6))
    assert len(done) == 1
    assert done[0] == proto.attempts * proto.cycle
    assert mu.ep is mv.ep and mu.ep.state.allclose(bds.initial_link_state(0.95), atol=1e-4)


def test_mean_attempts_follow_success_probability(make_net):
    net = make_net(strategy="odo")
    mu, mv = reserved_pair(net, "0", "1")
    attempts = []
    for _ in range(3000):
        proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", lambda e: None)
        proto.start()
        net.run_until(net.now() + 10**12)
        attempts.append(proto.attempts)
        net.registry.destroy(mu.ep, "delivery")
    assert np.mean(attempts) == pytest.approx(1 / proto.p, rel=0.05)


def test_certain_success_takes_one_attempt(make_net):
    net = make_net(strategy="odo", memory_efficiency=1.0, attenuation_db_per_km=0.0,
                   detector_efficiency=1.0, bsm_success_rate=1.0)
    mu, mv = reserved_pair(net, "0", "1")
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", lambda e: None)
    proto.start()
    net.run_until(us(10**4))
    assert proto.attempts == 1


def test_claimed_candidate_survives_slot_expiry(make_net):
    net = make_net()
    slot, ep = seed_acp_ep(net, "0", "1", ttl_s=100e-6)
    mu, mv = reserved_pair(net, "0", "1")
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", lambda e: None, reuse_policy=FRESHEST)
    proto.start()
    net.run_until(us(10**6))
    assert slot.expired and proto.reused is ep and ep.alive
    assert all(c.state.counter == 0 for c in net.acp.values())


def test_falls_back_to_generation_when_candidate_vanishes(make_net):
    net = make_net()
    slot, ep = seed_acp_ep(net, "0", "1")
    mu, mv = reserved_pair(net, "0", "1")
    done = []
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", done.append, reuse_policy=FRESHEST)
    proto.start()
    net.timeline.call_at(us(100), "0", net.registry.destroy, ep, "expiry")
    net.run_until(us(10**6))
    assert proto.fallbacks == 1 and proto.reused is None and proto.attempts >= 1
    assert done and done[0] is not ep and done[0].origin == "on_demand"


def test_abort_releases_memories_and_cancels(make_net):
    net = make_net(strategy="odo")
    mu, mv = reserved_pair(net, "0", "1")
    done = []
    proto = GenerationProtocol(net, net.link("0", "1"), mu, mv, "on_demand", done.append)
    proto.start()
    assert mu.holder is proto
    proto.abort()
    net.run_until(us(10**6))
    assert done == [] and mu.free and mv.free


def _line_eps(net, fidelity):
    a, b = net.nodes["p0"], net.nodes["p1"]
    c = net.nodes["p2"]
    left = net.registry.create(a.reserved_memories[0], b.reserved_memories[0],
                               bds.BellDiagonalState(fidelity), "on_demand")
    right = net.registry.create(b.reserved_memories[1], c.reserved_memories[0],
                                bds.BellDiagonalState(fidelity), "on_demand")
    return left, right


def test_swapping_joins_ends_and_notifies_both(make_net):
    net = make_net(strategy="odo", topology=line(3), gate_fidelity=1.0, measure_fidelity=1.0)
    left, right = _line_eps(net, [0.9, 0.1, 0, 0])
    seen = []
    ep = run_swapping(net, "p1", left, right, lambda e, end: seen.append((end, net.now())))
    assert ep.nodes == ("p0", "p2") and ep.known == {"p0": False, "p2": False}
    assert ep.state.allclose([0.82, 0.18, 0, 0])
    assert not left.alive and not right.alive and left.consumed_by == "swap"
    net.run_until(us(10**3))
    assert sorted(seen) == [("p0", us(150)), ("p2", us(150))]


def test_noisy_swap_uses_gate_and_measurement_fidelity(make_net):
    net = make_net(strategy="odo", topology=line(3))
    left, right = _line_eps(net, [0.9, 0.1, 0, 0])
    ep = run_swapping(net, "p1", left, right, lambda e, end: None)
    assert ep.state.allclose([0.80307043, 0.18207907, 0.00742525, 0.00742525], atol=1e-8)


def _pair(net, fidelity, i):
    return net.registry.create(net.nodes["0"].reserved_memories[i], net.nodes["1"].reserved_memories[i],
                               bds.BellDiagonalState.werner(fidelity), "acp")


def test_purification_outcome_after_round_trip(make_net):
    net = make_net(gate_fidelity=1.0, measure_fidelity=1.0, coherence_time_s=1e9)
    results = []
    for seed in range(200):
        net = make_net(gate_fidelity=1.0, measure_fidelity=1.0, coherence_time_s=1e9, seed=seed)
        kept, meas = _pair(net, 0.8, 0), _pair(net, 0.8, 1)
        out = []
        run_purification(net, kept, meas, lambda ep, ok: out.append((net.now(), ok)))
        assert kept.locked and meas.locked
        net.run_until(us(10**3))
        (t, ok), = out
        assert t == us(300) and not meas.alive
        if ok:
            assert kept.alive and not kept.locked
            assert kept.state.fidelity == pytest.approx(0.838150289017341, abs=1e-6)
        else:
            assert not kept.alive and kept.consumed_by == "purify"
            assert net.registry.live == {}
        results.append(ok)
    assert np.mean(results) == pytest.approx(0.768889, abs=0.08)


def test_purification_rejects_mismatched_pairs(make_net):
    net = make_net(strategy="odo", topology=line(3))
    left, right = _line_eps(net, [1, 0, 0, 0])
    with pytest.raises(ValueError):
        run_purification(net, left, right)


def test_registry_refuses_double_consumption(make_net):
    net = make_net(topology=two_node())
    ep = _pair(net, 0.9, 0)
    net.registry.destroy(ep, "delivery")
    with pytest.raises(RuntimeError):
        net.registry.destroy(ep, "delivery")
    assert net.registry.audit()["double_consumption"] == 1
