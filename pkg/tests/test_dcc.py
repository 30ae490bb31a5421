"""Process networks: parsing, blocking, correlation delivery, spawning."""

import pytest

from chorcc.compiler import compile_network
from chorcc.dcc import (
    DccError, parse_network, print_network, run_network,
    enumerate_network, keys_at_net,
)
from chorcc.trees import canon_text, leaf


def net_of(src):
    return parse_network(src)


def test_print_parse_round_trip_hand_network():
    src = """
service at lB accept boot {
  recv boot.key {
    ping(x);
      out pong(x) to boot.who via boot.key;
  }
}

process a at lA state { peer: @lB, n: 3 } queues { "lA#0": [hi({ v: 1 })] } {
  if n < 4 {
    out ping(n) to peer via "lA#0";
  } else {
    0
  }
}
"""
    net = net_of(src)
    text = print_network(net)
    assert parse_network(text) == net
    # printing is canonical: a second round trip is byte identical
    assert print_network(parse_network(text)) == text


@pytest.mark.parametrize("name", ["ping", "ring", "file_transfer"])
def test_print_parse_round_trip_compiled(name, request):
    prog = request.getfixturevalue(name)
    net = compile_network(prog)
    text = print_network(net)
    assert parse_network(text) == net
    assert print_network(parse_network(text)) == text


def test_input_blocks_without_queue():
    net = net_of("""
process a at lA {
  recv "nope" {
    hi(x);
      0
  }
}
""")
    assert enumerate_network(net) == []
    assert run_network(net, max_steps=5).status == "stuck"


def test_input_blocks_on_unmatched_operation():
    # queue holds bye but the reception only handles hi
    net = net_of("""
process a at lA queues { "k": [bye(1)] } {
  recv "k" {
    hi(x);
      0
  }
}
""")
    assert enumerate_network(net) == []


def test_output_blocks_on_unresolved_destination():
    # peer is never bound, so the send cannot fire
    net = net_of("""
process a at lA {
  out hi(1) to peer via "k";
}
""")
    assert enumerate_network(net) == []
    assert run_network(net, max_steps=5).status == "stuck"


def test_output_blocks_on_non_location_destination():
    net = net_of("""
process a at lA state { peer: 7 } {
  out hi(1) to peer via "k";
}
""")
    assert enumerate_network(net) == []


def test_delivery_appends_to_matching_queue():
    net = net_of("""
process a at lA state { peer: @lB } {
  out hi(41 + 1) to peer via "k";
}

process b at lB queues { "k": [] } {
  recv "k" {
    hi(x);
      0
  }
}
""")
    res = run_network(net, max_steps=10)
    assert res.status == "terminated"
    assert res.effects[0][:2] == ("out", "a")
    assert res.effects[1] == ("recv", "b", "hi", '"k"', "42")
    b = res.network.get("b")
    assert canon_text(b.data.state) == '{"x":42}'


def test_delivery_missing_queue_errors():
    net = net_of("""
process a at lA state { peer: @lB } {
  out hi(1) to peer via "nope";
}

process b at lB queues { "k": [] } {
  0
}
""")
    res = run_network(net, max_steps=5)
    assert res.status == 'error: no queue "nope" at lB'


def test_delivery_race_when_two_processes_share_a_key():
    net = net_of("""
process r1 at lB queues { "k": [] } {
  recv "k" { hi(x); 0 }
}

process r2 at lB queues { "k": [] } {
  recv "k" { hi(x); 0 }
}

process s at lA state { peer: @lB } {
  out hi(1) to peer via "k";
}
""")
    res = run_network(net, max_steps=5)
    assert res.status.startswith("error:")
    assert "correlates processes" in res.status
    assert "r1" in res.status and "r2" in res.status


def test_request_spawns_named_process_at_service():
    net = net_of("""
service at lB accept boot {
  recv boot.key {
    go(x);
      0
  }
}

process a at lA {
  request lB({ key: "k", who: @lA });
}
""")
    redexes = enumerate_network(net)
    assert [r.tag for r in redexes] == ["request"]
    _, net2 = redexes[0].fire()
    spawn = net2.get("lB$1")
    assert spawn is not None
    assert spawn.data.loc == "lB"
    assert canon_text(spawn.data.state) == '{"boot":{"key":"k","who":"loc:lA"}}'
    # the accept module itself stays available for further requests
    assert net2.service_at("lB") is not None


def test_request_without_service_errors():
    net = net_of("""
process a at lA {
  request lZ(1);
}
""")
    res = run_network(net, max_steps=5)
    assert res.status == "error: no service at location 'lZ'"


def test_queue_creation_follows_the_census():
    net = net_of("""
process a at lA {
  queue slot;
}

process b at lA {
  queue slot;
}
""")
    res = run_network(net, max_steps=10)
    assert res.status == "terminated"
    keys = sorted(canon_text(k) for k in keys_at_net(res.network, "lA"))
    assert keys == ['"lA#0"', '"lA#1"']
    a = res.network.get("a")
    assert a.data.queue(leaf("lA#0")) is not None or a.data.queue(leaf("lA#1")) is not None


def test_unseeded_runs_are_deterministic(file_transfer):
    net = compile_network(file_transfer)
    r1 = run_network(net, max_steps=500)
    r2 = run_network(net, max_steps=500)
    assert r1.status == "terminated"
    assert r1.trace == r2.trace
    assert r1.effects == r2.effects


def test_seeded_runs_reproduce(file_transfer):
    net = compile_network(file_transfer)
    r1 = run_network(net, seed=42, max_steps=500)
    r2 = run_network(net, seed=42, max_steps=500)
    assert r1.status == "terminated"
    assert r1.trace == r2.trace


def test_procedure_loop_without_action_is_reported():
    net = net_of("""
process a at lA {
  def X = { X() } in
  X()
}
""")
    res = run_network(net, max_steps=5)
    assert res.status == "error: procedure 'X' loops without acting"


def test_undefined_procedure_is_reported():
    net = net_of("""
process a at lA {
  X()
}
""")
    res = run_network(net, max_steps=5)
    assert res.status == "error: call of undefined procedure 'X'"


def test_duplicate_process_names_rejected():
    from chorcc.parser import ParseError

    with pytest.raises(ParseError, match="duplicate process 'a'"):
        net_of("""
process a at lA { 0 }
process a at lB { 0 }
""")
    # the network constructor enforces it too, independent of the parser
    from chorcc.dcc import DProc, Network
    from chorcc.deployment import ProcessInfo
    from chorcc.dcc import D_ZERO
    from chorcc.trees import EMPTY

    p = DProc(ProcessInfo("lA", EMPTY), D_ZERO)
    with pytest.raises(DccError, match="duplicate process name"):
        Network((("a", p), ("a", p)), ())


def test_two_services_one_location_rejected():
    with pytest.raises(DccError, match="two services at one location"):
        net_of("""
service at lB accept x { 0 }
service at lB accept y { 0 }
""")
