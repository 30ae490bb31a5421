"""Choreography reduction: normalization, runs, confluence on data."""

from chorcc.ast import Com, Def, Inact, Par, ZERO, par_components
from chorcc.deployment import initial_deployment
from chorcc.expressions import Lit
from chorcc.graphs import build_graph, dep_data_canon
from chorcc.semantics import Config, effect_text, enumerate_redexes, normalize, run
from corpus import corpus


def _com(op):
    return Com("k", "p", "A", Lit(1), "q", "B", op, "v", ZERO)


def test_normalize_drops_zero_components():
    assert normalize(Par(ZERO, _com("m"))) == _com("m")
    assert normalize(Par(ZERO, ZERO)) == ZERO


def test_normalize_sorts_components():
    a, b = _com("a"), _com("b")
    assert normalize(Par(b, a)) == normalize(Par(a, b))


def test_normalize_flattens_nesting():
    a, b, c = _com("a"), _com("b"), _com("c")
    n = normalize(Par(Par(a, b), c))
    assert set(par_components(n)) == {a, b, c}


def test_normalize_erases_spent_definitions():
    d = Def("X", ("p",), _com("m"), ZERO)
    assert normalize(d) == ZERO


def test_ping_run_is_three_steps(ping):
    dep = initial_deployment(ping.placements)
    r = run(Config(ping.chor, dep))
    assert r.status == "terminated"
    assert [e[0] for e in r.effects] == ["start", "com", "com"]
    assert "ping" in effect_text(r.effects[1])


def test_seeded_runs_reproduce(file_transfer):
    dep = initial_deployment(file_transfer.placements)
    a = run(Config(file_transfer.chor, dep), seed=42, max_steps=500)
    b = run(Config(file_transfer.chor, dep), seed=42, max_steps=500)
    assert a.trace == b.trace
    assert a.status == "terminated"


def test_scripted_run_picks_redexes(file_transfer):
    dep = initial_deployment(file_transfer.placements)
    script = [0] * 500
    r = run(Config(file_transfer.chor, dep), script=script, max_steps=500)
    assert r.status == "terminated"


def test_corpus_runs_confluent_on_data():
    """All schedules end on the same located data."""
    for seed, prog in corpus(12):
        dep = initial_deployment(prog.placements)
        g = build_graph(prog.chor, dep, max_nodes=4000)
        assert not g.truncated
        finals = {dep_data_canon(c.dep)
                  for c in g.nodes if not g.edges.get(c)}
        assert len(finals) == 1, seed


def test_redexes_only_at_exposed_prefixes(ping):
    dep = initial_deployment(ping.placements)
    reds = enumerate_redexes(Config(normalize(ping.chor), dep), None)
    assert [r.tag for r in reds] == ["start"]


def test_file_transfer_two_packets(file_transfer):
    """The seeded client asks twice, so two pkt deliveries then a checksum."""
    dep = initial_deployment(file_transfer.placements)
    r = run(Config(file_transfer.chor, dep))
    ops = [e[5] for e in r.effects if e[0] == "mrecv"]
    assert ops.count("pkt") == 2
    assert ops.count("chksum") == 1
    assert ops[-1] == "saved"
