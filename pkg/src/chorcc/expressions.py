"""Expressions evaluated against a single process state.

Evaluation is total in the sense that it never raises: undefined paths and
type mismatches yield None (absent), which upstream rules read as "this
effect is not available yet".
"""

from __future__ import annotations

from dataclasses import dataclass

from .trees import Loc, Path, Tree, Value, leaf, node, resolve


@dataclass(frozen=True)
class PathRead:
    path: Path


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - < = != and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class TreeExpr:
    entries: tuple[tuple[str, "Expr"], ...]


Expr = PathRead | Lit | BinOp | TreeExpr

BIN_OPS = ("+", "-", "<", "=", "!=", "and", "or")


def _leaf_of_type(t: Tree | None, ty: type) -> Value | None:
    if t is None or t.children or t.value is None:
        return None
    if ty is int and isinstance(t.value, bool):
        return None  # bool is not an int here
    return t.value if isinstance(t.value, ty) else None


def evaluate(expr: Expr, state: Tree) -> Tree | None:
    if isinstance(expr, PathRead):
        return resolve(state, expr.path)
    if isinstance(expr, Lit):
        return leaf(expr.value)
    if isinstance(expr, TreeExpr):
        out: dict[str, Tree] = {}
        for label, sub in expr.entries:
            v = evaluate(sub, state)
            if v is None:
                return None
            out[label] = v
        return node(out)
    if isinstance(expr, BinOp):
        lv = evaluate(expr.left, state)
        rv = evaluate(expr.right, state)
        if lv is None or rv is None:
            return None
        op = expr.op
        if op in ("=", "!="):
            eq = lv == rv
            return leaf(eq if op == "=" else not eq)
        if op in ("+", "-", "<"):
            li, ri = _leaf_of_type(lv, int), _leaf_of_type(rv, int)
            if li is not None and ri is not None:
                if op == "+":
                    return leaf(li + ri)
                if op == "-":
                    return leaf(li - ri)
                return leaf(li < ri)
            if op == "+":
                ls, rs = _leaf_of_type(lv, str), _leaf_of_type(rv, str)
                if ls is not None and rs is not None and not isinstance(ls, Loc):
                    return leaf(ls + rs)
            return None
        if op in ("and", "or"):
            lb, rb = _leaf_of_type(lv, bool), _leaf_of_type(rv, bool)
            if lb is None or rb is None:
                return None
            return leaf(lb and rb if op == "and" else lb or rb)
        raise ValueError(f"unknown operator {op!r}")
    raise TypeError(f"not an expression: {expr!r}")


def surface_expr(expr: Expr) -> str:
    """Source-syntax rendering, parenthesized enough to reparse exactly."""
    from .trees import surface_text

    if isinstance(expr, PathRead):
        return str(expr.path)
    if isinstance(expr, Lit):
        return surface_text(leaf(expr.value))
    if isinstance(expr, TreeExpr):
        inner = ", ".join(f"{k}: {surface_expr(v)}" for k, v in expr.entries)
        return "{" + inner + "}"
    if isinstance(expr, BinOp):
        return f"({surface_expr(expr.left)} {expr.op} {surface_expr(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")
