"""Endpoint projection: module shapes, merging, and the pruning relation."""

import pytest

from chorcc.ast import Acc, Inact, Par, Recv, Req, ZERO, par_components
from chorcc.deployment import initial_deployment
from chorcc.epp import EppError, epp, merge_choreography, prunes
from chorcc.graphs import dep_data_canon
from chorcc.parser import parse_program, print_choreography
from chorcc.semantics import Config, run
from corpus import corpus

# hand derivation for ping: the starter keeps its two communications as a
# request module; the spawned side becomes an accepting module at lB
PING_EXPECTED = """req k: p[A] <-> lB.B;
k: p[A].msg -> B.ping;
k: B -> p[A] {
  pong(y);
    0
}
|
acc k: lB.q[B];
k: A -> q[B] {
  ping(x);
    k: q[B].x -> A.pong;
}
"""


def test_ping_projection_shape(ping):
    from chorcc.ast import Send

    req, acc = par_components(epp(ping.chor))
    assert isinstance(req, Req) and req.starter_proc == "p"
    send = req.cont
    assert isinstance(send, Send) and send.op == "ping"
    recv = send.cont
    assert isinstance(recv, Recv)
    assert [b.op for b in recv.branches] == ["pong"]
    assert isinstance(acc, Acc)
    qr = acc.cont
    assert isinstance(qr, Recv) and qr.branches[0].op == "ping"
    assert isinstance(qr.branches[0].cont, Send)


def test_ping_projection_text(ping):
    assert print_choreography(epp(ping.chor)) == PING_EXPECTED


def test_module_count(ping, ring, file_transfer):
    assert len(par_components(epp(ping.chor))) == 2
    assert len(par_components(epp(ring.chor))) == 3
    # client, store service, and one service per server role
    assert len(par_components(epp(file_transfer.chor))) == 5


def test_projection_components_are_single_owner(ping, ring, file_transfer):
    from chorcc.ast import free_processes

    for prog in (ping, ring, file_transfer):
        for comp in par_components(epp(prog.chor)):
            if isinstance(comp, Acc):
                assert free_processes(comp) == frozenset()
            else:
                assert len(free_processes(comp)) == 1


def test_projected_run_reaches_same_data(ping, ring):
    for prog in (ping, ring):
        dep = initial_deployment(prog.placements)
        src = run(Config(prog.chor, dep))
        tgt = run(Config(epp(prog.chor), dep))
        assert src.status == tgt.status == "terminated"
        assert dep_data_canon(src.config.dep) == dep_data_canon(tgt.config.dep)


def test_corpus_projects():
    for seed, prog in corpus(24):
        projected = epp(prog.chor)
        dep = initial_deployment(prog.placements)
        r = run(Config(projected, dep), max_steps=2000)
        assert r.status == "terminated", seed


def test_duplicate_located_role_claim_rejected():
    src = """
protocol P at lB roles A starter, B@lB { A -> B { m(int); end } }
deployment { p at lA state { n: 1 } }
start k1: p[A] <-> lB.q[B];
k1: p[A].n -> q[B].m(x);
start k2: p[A] <-> lB.r[B];
k2: p[A].n -> r[B].m(y);
0
"""
    prog = parse_program(src)
    with pytest.raises(EppError) as err:
        epp(prog.chor)
    assert "accepted by two modules" in str(err.value)


def test_prunes_reflexive_and_on_extra_acc(ping):
    projected = epp(ping.chor)
    assert prunes(projected, projected)
    parts = par_components(projected)
    acc = next(c for c in parts if isinstance(c, Acc))
    other = next(c for c in parts if not isinstance(c, Acc))
    assert prunes(projected, other)      # spare acc components are residue
    assert not prunes(other, projected)  # a missing module is not


def test_prunes_discards_unused_reception_branches(ping):
    projected = epp(ping.chor)
    parts = par_components(projected)
    req = next(c for c in parts if isinstance(c, Req))

    def drop_last_branch(c):
        if isinstance(c, Recv):
            return Recv(c.session, c.srole, c.receiver, c.rrole,
                        c.branches[:1])
        if hasattr(c, "cont"):
            return type(c)(**{**c.__dict__, "cont": drop_last_branch(c.cont)})
        return c

    pruned = drop_last_branch(req)
    assert prunes(req, pruned)
    assert prunes(projected, Par(pruned, parts[1]))


def test_prunes_inact_against_accs(ping):
    projected = epp(ping.chor)
    acc = next(c for c in par_components(projected) if isinstance(c, Acc))
    assert prunes(acc, ZERO)
    assert not prunes(ZERO, acc)


def test_merge_requires_compatible_branches():
    src = """
protocol P at lB roles A starter, B@lB {
  A -> B { l(int); end, r(int); end }
}
deployment { p at lA state { n: 1 } }
start k: p[A] <-> lB.q[B];
if p.(1 < 2) {
  k: p[A].n -> q[B].l(x); 0
} else {
  k: p[A].n -> q[B].r(x); 0
}
"""
    prog = parse_program(src)
    projected = epp(prog.chor)
    acc = next(c for c in par_components(projected) if isinstance(c, Acc))
    recv = acc.cont
    assert isinstance(recv, Recv)
    assert {b.op for b in recv.branches} == {"l", "r"}
