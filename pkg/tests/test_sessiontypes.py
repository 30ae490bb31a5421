"""Protocol projection, merging, and the reduction preorder on local types."""

import pytest
from hypothesis import given, strategies as st

from chorcc.sessiontypes import (
    BOOL, G_END, INT, L_END, STR, CarriedType, GBranch, GComm, GRec, GVar,
    LBranch, LEnd, LRec, LRecv, LSend, LVar, MergeError, ProjectionError,
    g_unfold, lt_equal, lt_reduct, merge_local, project, role_occurs,
    tree_has_type, type_of_tree,
)
from chorcc.trees import leaf, node, tree_of

# A -> B { go(int); B -> C { fwd(int); end }, stop(str); B -> C { fwd(int); end } }
G1 = GComm("A", "B", (
    GBranch("go", INT, GComm("B", "C", (GBranch("fwd", INT, G_END),))),
    GBranch("stop", STR, GComm("B", "C", (GBranch("fwd", INT, G_END),))),
))


def test_project_sender():
    t = project(G1, "A")
    assert isinstance(t, LSend) and t.peer == "B"
    assert [b.op for b in t.branches] == ["go", "stop"]


def test_project_receiver():
    t = project(G1, "B")
    assert isinstance(t, LRecv) and t.peer == "A"
    assert all(isinstance(b.cont, LSend) for b in t.branches)


def test_project_bystander_merges_identical_continuations():
    t = project(G1, "C")
    assert t == LRecv("B", (LBranch("fwd", INT, L_END),))


def test_unmergeable_bystander_rejected():
    g = GComm("A", "B", (
        GBranch("go", INT, GComm("B", "C", (GBranch("x", INT, G_END),))),
        GBranch("stop", STR, GComm("C", "B", (GBranch("y", INT, G_END),))),
    ))
    with pytest.raises(ProjectionError):
        project(g, "C")


def test_merge_unions_reception_branches():
    a = LRecv("A", (LBranch("x", INT, L_END),))
    b = LRecv("A", (LBranch("y", STR, L_END),))
    m = merge_local(a, b)
    assert {br.op for br in m.branches} == {"x", "y"}


def test_merge_rejects_conflicting_sends():
    a = LSend("A", (LBranch("x", INT, L_END),))
    b = LSend("A", (LBranch("y", INT, L_END),))
    with pytest.raises(MergeError):
        merge_local(a, b)


def test_merge_shared_op_requires_equal_carried():
    a = LRecv("A", (LBranch("x", INT, L_END),))
    b = LRecv("A", (LBranch("x", STR, L_END),))
    with pytest.raises(MergeError):
        merge_local(a, b)


def test_merge_idempotent():
    t = project(G1, "B")
    assert merge_local(t, t) == t


def test_rec_projection_drops_silent_role():
    g = GRec("T", GComm("A", "B", (GBranch("m", INT, GVar("T")),)))
    assert project(g, "C") == L_END
    assert isinstance(project(g, "A"), LRec)


def test_role_occurs():
    assert role_occurs(G1, "C")
    assert not role_occurs(G1, "D")


def test_unfold():
    g = GRec("T", GComm("A", "B", (GBranch("m", INT, GVar("T")),)))
    u = g_unfold(g)
    assert isinstance(u, GComm)
    assert isinstance(u.branches[0].cont, GRec)


def test_lt_reduct_allows_pruned_receptions():
    # the first argument is the committed view with branches discarded
    big = LRecv("A", (LBranch("x", INT, L_END), LBranch("y", STR, L_END)))
    small = LRecv("A", (LBranch("x", INT, L_END),))
    assert lt_reduct(small, big)
    assert not lt_reduct(big, small)


def test_lt_reduct_keeps_sends_exact():
    big = LSend("A", (LBranch("x", INT, L_END), LBranch("y", STR, L_END)))
    small = LSend("A", (LBranch("x", INT, L_END),))
    assert not lt_reduct(small, big)
    assert not lt_reduct(big, small)


def test_lt_equal_unfolds_recursion():
    t = LRec("T", LSend("A", (LBranch("m", INT, LVar("T")),)))
    u = LSend("A", (LBranch("m", INT, t),))
    assert lt_equal(t, u)


def test_width_subtyping_on_trees():
    u = CarriedType(None, (("rem", INT),))
    assert tree_has_type(tree_of({"rem": 1, "data": "x"}), u)
    assert not tree_has_type(tree_of({"data": "x"}), u)


def test_type_of_tree():
    assert type_of_tree(leaf(True)) == BOOL
    assert type_of_tree(node({"a": leaf(1)})) == CarriedType(None, (("a", INT),))


_carried = st.sampled_from([INT, STR, BOOL])


def _gtypes(depth: int = 2):
    if depth == 0:
        return st.just(G_END)
    sub = _gtypes(depth - 1)
    return st.one_of(
        st.just(G_END),
        st.builds(
            lambda s, r, ops, ts, conts: GComm(
                s, r,
                tuple(GBranch(f"m{i}", t, c)
                      for i, (t, c) in enumerate(zip(ts, conts)))),
            st.sampled_from(["A", "B"]),
            st.sampled_from(["C"]),
            st.just(None),
            st.lists(_carried, min_size=1, max_size=2),
            st.lists(sub, min_size=2, max_size=2),
        ),
    )


@given(_gtypes())
def test_projection_returns_or_rejects(g):
    """Projection either produces a local type or reports a merge clash."""
    for role in ("A", "B", "C"):
        try:
            t = project(g, role)
        except ProjectionError:
            continue
        assert isinstance(t, (LSend, LRecv, LEnd))
