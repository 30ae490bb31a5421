"""Static judgement, runtime re-judgement, and the rejection catalogue."""

import pytest

from chorcc.ast import Inact
from chorcc.deployment import (
    ProcessInfo, initial_deployment,
)
from chorcc.epp import epp
from chorcc.graphs import build_graph
from chorcc.parser import parse_program
from chorcc.semantics import Config, normalize, run
from chorcc.trees import EMPTY, Path, Tree, leaf, resolve, replace
from chorcc.typecheck import (
    TypingError, advance_env, check_deployment, check_program, check_running,
    initial_env,
)
from corpus import corpus


def test_examples_are_well_typed(ping, ring, file_transfer):
    for prog in (ping, ring, file_transfer):
        assert check_program(prog) == []


def test_corpus_is_well_typed():
    for seed, prog in corpus(24):
        assert check_program(prog) == [], seed


def test_initial_state_passes_running_judgement(ping):
    env = initial_env(ping)
    dep = initial_deployment(ping.placements)
    assert check_running(env, ping.chor, dep) == []


def test_unplaced_process_rejected():
    prog = parse_program("deployment { p at lA state {} }\n"
                         "k: p[A].x -> q[B].m(v); 0")
    assert any("placement" in e for e in check_program(prog))


def test_unknown_protocol_rejected():
    prog = parse_program(
        "deployment { p at lA state { n: 1 } }\n"
        "start k: p[A] <-> lB.q[B];\n0")
    assert check_program(prog) != []


def test_wrong_payload_type_rejected():
    src = """
protocol P at lB roles A starter, B@lB { A -> B { m(int); end } }
deployment { p at lA state { msg: "hi" } }
start k: p[A] <-> lB.q[B];
k: p[A].msg -> q[B].m(x);
0
"""
    prog = parse_program(src)
    assert any("m" in e for e in check_program(prog))


def test_session_shadowing_while_live_rejected():
    src = """
protocol P at lB roles A starter, B@lB { A -> B { m(int); end } }
protocol Q at lC roles A starter, B@lC { A -> B { m2(int); end } }
deployment { p at lA state { n: 1 } }
start k: p[A] <-> lB.q[B];
start k: p[A] <-> lC.r[B];
k: p[A].n -> q[B].m(x);
k: p[A].n -> r[B].m2(y);
0
"""
    prog = parse_program(src)
    assert any("k" in e for e in check_program(prog))


def _step(env, cfg, pick=0):
    from chorcc.semantics import enumerate_redexes

    reds = enumerate_redexes(cfg, None)
    eff, nxt = reds[pick].fire()
    return advance_env(env, eff), Config(normalize(nxt.chor), nxt.dep)


def _after_start(ping):
    env = initial_env(ping)
    cfg = Config(normalize(ping.chor), initial_deployment(ping.placements))
    return _step(env, cfg)


def _drop_child(t: Tree, label: str) -> Tree:
    return Tree(t.value, tuple((k, v) for k, v in t.children if k != label))


# the four rejected deployments: each hits its own clause, and the
# interpreter narrates the failure the clause predicts

def test_rejects_uninitialised_variable(ping):
    env, cfg = _after_start(ping)
    p = cfg.dep.get("p")
    broken = cfg.dep.put("p", p.with_state(_drop_child(p.state, "msg")))
    errs = check_deployment(env, broken)
    assert any("p.msg does not hold a value" in e for e in errs)
    r = run(Config(cfg.chor, broken))
    assert r.status == "stuck"


def test_rejects_incompatible_descriptor(ping):
    env, cfg = _after_start(ping)
    q = cfg.dep.get("q")
    twisted = replace(q.state, Path.of("k.A.l"), leaf("lZ"))
    broken = cfg.dep.put("q", q.with_state(twisted))
    errs = check_deployment(env, broken)
    assert any("descriptor of k differs" in e for e in errs)


def test_rejects_correlation_race(ping):
    env, cfg = _after_start(ping)
    q = cfg.dep.get("q")
    key = q.queues[0][0]
    broken = cfg.dep.put("rr", ProcessInfo(q.loc, EMPTY, ((key, ()),)))
    errs = check_deployment(env, broken)
    assert any("serves both" in e for e in errs)
    r = run(Config(cfg.chor, broken))
    assert r.status.startswith("error:") and "matches queues" in r.status


def test_rejects_protocol_violation(ping):
    # walk the projected program one send deep, then corrupt the queue
    projected = epp(ping.chor)
    env = initial_env(ping)
    cfg = Config(normalize(projected), initial_deployment(ping.placements))
    env, cfg = _step(env, cfg)          # partial start
    env, cfg = _step(env, cfg)          # message send, now buffered
    assert check_running(env, cfg.chor, cfg.dep) == []
    q = cfg.dep.get("q")
    key, msgs = q.queues[0]
    assert len(msgs) == 1
    broken = cfg.dep.put("q", ProcessInfo(
        q.loc, q.state, ((key, (("bogus", msgs[0][1]),)),)))
    errs = check_deployment(env, broken)
    assert any("bogus" in e for e in errs)
    r = run(Config(cfg.chor, broken))
    assert r.status == "stuck"


def test_subject_reduction_along_every_edge(ping, ring):
    for prog in (ping, ring):
        dep = initial_deployment(prog.placements)
        g = build_graph(prog.chor, dep)
        envs = {g.initial: initial_env(prog)}
        for cfg in g.nodes:
            env = envs[cfg]
            assert check_running(env, cfg.chor, cfg.dep) == []
            for eff, nxt in g.edges.get(cfg, []):
                if nxt not in envs:
                    envs[nxt] = advance_env(env, eff)


def test_coherence_holds_mid_run(file_transfer):
    env = initial_env(file_transfer)
    cfg = Config(normalize(file_transfer.chor),
                 initial_deployment(file_transfer.placements))
    for _ in range(6):
        env, cfg = _step(env, cfg)
        assert check_running(env, cfg.chor, cfg.dep) == []
