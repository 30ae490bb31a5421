"""Expression evaluation: total, absent on any mismatch."""

from hypothesis import given, strategies as st

from chorcc.expressions import BIN_OPS, BinOp, Lit, PathRead, TreeExpr, evaluate
from chorcc.trees import EMPTY, Path, Tree, leaf, node, tree_of

STATE = tree_of({"n": 3, "msg": "hi", "ok": True, "box": {"v": 7}})


def test_literal():
    assert evaluate(Lit(5), EMPTY) == leaf(5)


def test_path_read():
    assert evaluate(PathRead(Path.of("box.v")), STATE) == leaf(7)
    assert evaluate(PathRead(Path.of("nope")), STATE) is None


def test_arithmetic():
    e = BinOp("+", PathRead(Path.of("n")), Lit(4))
    assert evaluate(e, STATE) == leaf(7)
    assert evaluate(BinOp("-", Lit(2), Lit(5)), EMPTY) == leaf(-3)


def test_string_concat():
    e = BinOp("+", PathRead(Path.of("msg")), Lit("!"))
    assert evaluate(e, STATE) == leaf("hi!")


def test_bool_is_not_arithmetic():
    assert evaluate(BinOp("+", Lit(True), Lit(1)), EMPTY) is None


def test_comparison():
    assert evaluate(BinOp("<", Lit(1), Lit(2)), EMPTY) == leaf(True)
    assert evaluate(BinOp("<", Lit("a"), Lit(2)), EMPTY) is None


def test_equality_on_trees():
    e = BinOp("=", PathRead(Path.of("box")), PathRead(Path.of("box")))
    assert evaluate(e, STATE) == leaf(True)
    ne = BinOp("!=", PathRead(Path.of("box")), Lit(7))
    assert evaluate(ne, STATE) == leaf(True)


def test_logic():
    assert evaluate(BinOp("and", Lit(True), PathRead(Path.of("ok"))), STATE) == leaf(True)
    assert evaluate(BinOp("or", Lit(False), Lit(False)), EMPTY) == leaf(False)
    assert evaluate(BinOp("and", Lit(1), Lit(True)), EMPTY) is None


def test_tree_expr():
    e = TreeExpr((("data", Lit("x")), ("rem", PathRead(Path.of("n")))))
    assert evaluate(e, STATE) == node({"data": leaf("x"), "rem": leaf(3)})


def test_tree_expr_absent_field_is_absent():
    e = TreeExpr((("data", PathRead(Path.of("nope"))),))
    assert evaluate(e, STATE) is None


_exprs = st.recursive(
    st.one_of(
        st.builds(Lit, st.integers(-9, 9)),
        st.builds(Lit, st.booleans()),
        st.builds(Lit, st.sampled_from(["a", "b"])),
        st.builds(PathRead, st.sampled_from(
            [Path.of("n"), Path.of("msg"), Path.of("ok"), Path.of("gone")])),
    ),
    lambda sub: st.builds(BinOp, st.sampled_from(BIN_OPS), sub, sub),
    max_leaves=8,
)


@given(_exprs)
def test_evaluate_never_raises(e):
    r = evaluate(e, STATE)
    assert r is None or isinstance(r, Tree)
