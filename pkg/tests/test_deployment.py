"""Correlation deployments: minting, delivery, and session support."""

import pytest

from chorcc.deployment import (
    BrokenKeyGen, CensusKeyGen, CorrelationRace, Deployment, MissingQueue,
    ProcessInfo, apply_recv, apply_send, apply_start, deliver, dep_from_obj,
    dep_to_obj, descriptor_key, descriptor_loc, initial_deployment, keys_at,
    peek_message, session_support,
)
from chorcc.parser import Placement
from chorcc.trees import EMPTY, Path, leaf, resolve, tree_of


def two_party():
    """p at lp starts session k with a fresh q at ls0.

    Census walkthrough, receiver major with starter first: the starter's
    incoming queue from B is minted at lp where no key exists yet, so it
    is lp#0; then B's queue from A at ls0 is ls0#0."""
    dep = initial_deployment([Placement("p", "lp", tree_of({"n": 1}))])
    return apply_start(
        dep, "k", (("A", "p", "lp"), ("B", "q", "ls0")), CensusKeyGen())


def test_census_first_keys():
    dep = two_party()
    desc = resolve(dep.get("p").state, Path.of("k"))
    assert descriptor_key(desc, "B", "A") == leaf("lp#0")
    assert descriptor_key(desc, "A", "B") == leaf("ls0#0")
    assert descriptor_loc(desc, "A") == "lp"
    assert descriptor_loc(desc, "B") == "ls0"


def test_census_skips_existing_keys():
    # the census starts at the queue count and bumps past collisions
    gen = CensusKeyGen()
    assert gen.mint([], "lB") == leaf("lB#0")
    assert gen.mint([leaf("lB#0")], "lB") == leaf("lB#1")
    assert gen.mint([leaf("lB#1")], "lB") == leaf("lB#2")
    assert gen.mint([leaf("other")], "lB") == leaf("lB#1")


def test_start_spawns_with_descriptor_and_queues():
    dep = two_party()
    q = dep.get("q")
    assert q.loc == "ls0"
    assert resolve(q.state, Path.of("k")) == resolve(
        dep.get("p").state, Path.of("k"))
    assert q.queue(leaf("ls0#0")) == ()
    assert dep.get("p").queue(leaf("lp#0")) == ()


def test_session_support_after_start():
    dep = two_party()
    assert session_support(dep, "k", (("A", "p"), ("B", "q")))
    assert not session_support(dep, "nope", (("A", "p"), ("B", "q")))


def test_support_fails_on_moved_process():
    dep = two_party()
    info = dep.get("q")
    moved = dep.put("q", ProcessInfo("elsewhere", info.state, info.queues))
    assert not session_support(moved, "k", (("A", "p"), ("B", "q")))


def test_deliver_appends_to_unique_queue():
    dep = two_party()
    dep2 = deliver(dep, "ls0", leaf("ls0#0"), "m", leaf(5))
    assert dep2.get("q").queue(leaf("ls0#0")) == (("m", leaf(5)),)


def test_deliver_no_queue():
    dep = two_party()
    with pytest.raises(MissingQueue):
        deliver(dep, "ls0", leaf("absent"), "m", leaf(5))


def test_deliver_two_owners_is_a_race():
    dep = two_party()
    r = dep.get("q")
    dep = dep.put("r", ProcessInfo("ls0", EMPTY, ((leaf("ls0#0"), ()),)))
    with pytest.raises(CorrelationRace):
        deliver(dep, "ls0", leaf("ls0#0"), "m", leaf(5))


def test_send_peek_recv_round_trip():
    dep = two_party()
    dep = apply_send(dep, "p", "k", "A", "B", "m", leaf(7))
    assert peek_message(dep, "q", "k", "A", "B") == ("m", leaf(7))
    dep, got = apply_recv(dep, "q", "k", "A", "B", "x")
    assert got == ("m", leaf(7))
    assert resolve(dep.get("q").state, Path.of("x")) == leaf(7)
    assert peek_message(dep, "q", "k", "A", "B") is None


def test_duplicate_queue_key_rejected():
    with pytest.raises(ValueError):
        ProcessInfo("lA", EMPTY, ((leaf("k"), ()), (leaf("k"), ())))


def test_broken_keygen_collides():
    """Reusing a key across two starts at one location corrupts delivery."""
    dep = initial_deployment([
        Placement("p1", "lA", tree_of({"n": 1})),
        Placement("p2", "lA", tree_of({"n": 2})),
    ])
    gen = BrokenKeyGen()
    dep = apply_start(dep, "k1", (("A", "p1", "lA"), ("B", "q1", "lB")), gen)
    dep = apply_start(dep, "k2", (("A", "p2", "lA"), ("B", "q2", "lC")), gen)
    # both starter queues got key lA#0, so a reply cannot be routed
    with pytest.raises(CorrelationRace):
        deliver(dep, "lA", leaf("lA#0"), "m", leaf(1))


def test_keys_at_collects_across_processes():
    dep = two_party()
    assert leaf("lp#0") in keys_at(dep, "lp")
    assert keys_at(dep, "nowhere") == []


def test_obj_round_trip():
    dep = two_party()
    dep = apply_send(dep, "p", "k", "A", "B", "m", leaf(7))
    assert dep_from_obj(dep_to_obj(dep)) == dep
