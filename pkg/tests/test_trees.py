"""State tree and path laws."""

import pytest
from hypothesis import given, strategies as st

from chorcc.trees import (
    EMPTY, Loc, Path, Tree, canon_text, from_obj, leaf, node, parse_canon,
    replace, resolve, surface_text, to_obj, tree_of,
)

values = st.one_of(
    st.integers(-99, 99),
    st.booleans(),
    st.text(alphabet="abxyz", max_size=4),
    st.builds(Loc, st.sampled_from(["lA", "lB"])),
)
labels = st.sampled_from(["a", "b", "c", "d"])
trees = st.recursive(
    st.one_of(st.just(EMPTY), st.builds(leaf, values)),
    lambda kids: st.dictionaries(labels, kids, min_size=1, max_size=3).map(node),
    max_leaves=12,
)
paths = st.lists(labels, min_size=1, max_size=3).map(lambda s: Path(tuple(s)))


def test_children_sorted():
    t = node({"b": leaf(1), "a": leaf(2)})
    assert [k for k, _ in t.children] == ["a", "b"]


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError):
        Tree(None, (("a", leaf(1)), ("a", leaf(2))))


def test_empty():
    assert EMPTY.is_empty()
    assert not leaf(0).is_empty()


def test_path_text_round_trip():
    p = Path.of("k.B.l")
    assert str(p) == "k.B.l"
    assert p.segments == ("k", "B", "l")
    assert str(Path.of("k").child("B")) == "k.B"


@given(trees)
def test_canon_round_trip(t):
    assert parse_canon(canon_text(t)) == t


@given(trees)
def test_obj_round_trip(t):
    assert from_obj(to_obj(t)) == t


@given(trees, paths, trees)
def test_replace_then_resolve(t, p, sub):
    assert resolve(replace(t, p, sub), p) == sub


@given(trees, paths, trees, trees)
def test_replace_overwrites(t, p, s1, s2):
    assert replace(replace(t, p, s1), p, s2) == replace(t, p, s2)


@given(trees, paths)
def test_resolve_missing_is_none_or_subtree(t, p):
    r = resolve(t, p)
    assert r is None or isinstance(r, Tree)


def test_replace_keeps_siblings():
    t = node({"a": leaf(1), "b": leaf(2)})
    t2 = replace(t, Path(("a",)), leaf(9))
    assert resolve(t2, Path(("b",))) == leaf(2)


def test_tree_of_nested():
    t = tree_of({"got": {"rem": 2}, "file": "f1"})
    assert resolve(t, Path.of("got.rem")) == leaf(2)


def test_surface_text_shapes():
    assert surface_text(leaf(True)) == "true"
    assert surface_text(leaf(3)) == "3"
    assert surface_text(leaf(Loc("lA"))) == "@lA"
    assert surface_text(leaf("hi")) == '"hi"'
    assert surface_text(node({"a": leaf(1)})) == "{a: 1}"


def test_canon_is_sorted_and_compact():
    t = node({"b": leaf(1), "a": leaf("x")})
    assert canon_text(t) == canon_text(node({"a": leaf("x"), "b": leaf(1)}))
    assert " " not in canon_text(t)


def test_bool_is_not_int():
    # canonical text must keep the two apart
    assert canon_text(leaf(True)) != canon_text(leaf(1))
