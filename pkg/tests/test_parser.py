"""Choreography surface syntax: round trips and rejection."""

import pytest

from chorcc.parser import ParseError, parse_program, print_program
from corpus import corpus


def test_examples_round_trip(ping, ring, file_transfer):
    for prog in (ping, ring, file_transfer):
        again = parse_program(print_program(prog))
        assert again.protocols == prog.protocols
        assert again.placements == prog.placements
        assert again.chor == prog.chor


def test_corpus_round_trip():
    for seed, prog in corpus(24):
        again = parse_program(print_program(prog))
        assert again.protocols == prog.protocols, seed
        assert again.chor == prog.chor, seed


def test_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_program("deployment { p at state {} }\n0")
    assert err.value.line == 1
    assert "expected" in err.value.message


def test_reserved_dollar_rejected():
    with pytest.raises(ParseError):
        parse_program('deployment { p$x at lA state {} }\n0')


def test_keyword_is_not_identifier():
    with pytest.raises(ParseError):
        parse_program("deployment { start at lA state {} }\n0")


def test_duplicate_branch_op_rejected():
    src = """
protocol P at lB roles A starter, B@lB { A -> B { m(int); end } }
deployment { p at lA state { n: 1 } }
start k: p[A] <-> lB.q[B];
k: B -> p[A] { m(x); 0, m(y); 0 }
"""
    with pytest.raises(ParseError):
        parse_program(src)


def test_call_arguments_must_match_parameters():
    src = """
deployment { p at lA state { n: 1 } }
def X(p) = { 0 } in X(q)
"""
    with pytest.raises(ParseError):
        parse_program(src)


def test_missing_semicolon_position():
    with pytest.raises(ParseError):
        parse_program("deployment { p at lA state {} }\nstart k: p[A] <-> lB.q[B]")


def test_protocol_services_sorted_by_location():
    src = """
protocol P at lC, lB roles A starter, C@lC, B@lB {
  A -> B { m(int); A -> C { m2(int); end } }
}
deployment { p at lA state { n: 1 } }
start k: p[A] <-> lC.r[C], lB.q[B];
k: p[A].n -> q[B].m;
k: p[A].n -> r[C].m2;
0
"""
    prog = parse_program(src)
    assert [loc for _, loc in prog.protocols[0].services] == ["lB", "lC"]
    assert [s.loc for s in prog.chor.services] == ["lB", "lC"]
