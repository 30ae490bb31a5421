"""Protocol types: global types, local types, carried payload types.

Runtime global types are kept in a factored form: an ordered list of
pending receptions plus a core global type.  That makes the swap closure
on global types cheap (commutation conditions reduce to role checks on
the pending list) and keeps witness searches finite.
"""

from __future__ import annotations

from dataclasses import dataclass

from .trees import Loc, Tree


# ---------------------------------------------------------------- carried

@dataclass(frozen=True)
class CarriedType:
    """Payload tree type: optional base at the root plus named fields."""

    base: str | None = None  # int | str | bool | loc
    fields: tuple[tuple[str, "CarriedType"], ...] = ()

    def __post_init__(self) -> None:
        if self.base is not None and self.fields:
            raise ValueError("a payload type has either a base or fields")
        labels = [k for k, _ in self.fields]
        if labels != sorted(labels):
            object.__setattr__(
                self, "fields", tuple(sorted(self.fields, key=lambda kv: kv[0]))
            )


INT = CarriedType("int")
STR = CarriedType("str")
BOOL = CarriedType("bool")
LOC = CarriedType("loc")
UNIT = CarriedType()


def carried_of(obj) -> CarriedType:
    if isinstance(obj, CarriedType):
        return obj
    if isinstance(obj, str):
        return CarriedType(obj)
    if isinstance(obj, dict):
        return CarriedType(None, tuple(sorted((k, carried_of(v)) for k, v in obj.items())))
    raise TypeError(f"not a carried type: {obj!r}")


def tree_has_type(t: Tree, u: CarriedType) -> bool:
    """Width subtyping: extra children in the tree are allowed."""
    if u.base is not None:
        if t.children or t.value is None:
            return False
        v = t.value
        if u.base == "int":
            return isinstance(v, int) and not isinstance(v, bool)
        if u.base == "str":
            return isinstance(v, str)
        if u.base == "bool":
            return isinstance(v, bool)
        if u.base == "loc":
            return isinstance(v, Loc)
        return False
    if t.value is not None:
        return False
    for label, sub_u in u.fields:
        sub = t.child(label)
        if sub is None or not tree_has_type(sub, sub_u):
            return False
    return True


def type_of_tree(t: Tree) -> CarriedType:
    if t.value is not None:
        v = t.value
        if isinstance(v, bool):
            return BOOL
        if isinstance(v, Loc):
            return LOC
        if isinstance(v, int):
            return INT
        return STR
    return CarriedType(None, tuple((k, type_of_tree(sub)) for k, sub in t.children))


# ----------------------------------------------------------------- global

@dataclass(frozen=True)
class GBranch:
    op: str
    carried: CarriedType
    cont: "GlobalType"


@dataclass(frozen=True)
class GComm:
    sender: str
    receiver: str
    branches: tuple[GBranch, ...]


@dataclass(frozen=True)
class GRec:
    var: str
    body: "GlobalType"


@dataclass(frozen=True)
class GVar:
    var: str


@dataclass(frozen=True)
class GEnd:
    pass


GlobalType = GComm | GRec | GVar | GEnd
G_END = GEnd()


def roles_of(g: GlobalType) -> tuple[str, ...]:
    """Roles in first-appearance order."""
    seen: list[str] = []

    def walk(t: GlobalType) -> None:
        if isinstance(t, GComm):
            for r in (t.sender, t.receiver):
                if r not in seen:
                    seen.append(r)
            for b in t.branches:
                walk(b.cont)
        elif isinstance(t, GRec):
            walk(t.body)

    walk(g)
    return tuple(seen)


def role_occurs(g: GlobalType, role: str) -> bool:
    if isinstance(g, GComm):
        return (
            role in (g.sender, g.receiver)
            or any(role_occurs(b.cont, role) for b in g.branches)
        )
    if isinstance(g, GRec):
        return role_occurs(g.body, role)
    return False


def gsubst(g: GlobalType, var: str, repl: GlobalType) -> GlobalType:
    if isinstance(g, GComm):
        return GComm(
            g.sender, g.receiver,
            tuple(GBranch(b.op, b.carried, gsubst(b.cont, var, repl)) for b in g.branches),
        )
    if isinstance(g, GRec):
        if g.var == var:
            return g
        return GRec(g.var, gsubst(g.body, var, repl))
    if isinstance(g, GVar):
        return repl if g.var == var else g
    return g


def g_unfold(g: GlobalType) -> GlobalType:
    """Head-unfold recursion; a degenerate rec t;t collapses to end."""
    seen = set()
    while isinstance(g, GRec):
        if g.var in seen or isinstance(g.body, GVar) and g.body.var == g.var:
            return G_END
        seen.add(g.var)
        g = gsubst(g.body, g.var, g)
        if len(seen) > 64:
            return G_END
    return g


# ------------------------------------------------------------------ local

@dataclass(frozen=True)
class LBranch:
    op: str
    carried: CarriedType
    cont: "LocalType"


@dataclass(frozen=True)
class LSend:
    peer: str
    branches: tuple[LBranch, ...]


@dataclass(frozen=True)
class LRecv:
    peer: str
    branches: tuple[LBranch, ...]


@dataclass(frozen=True)
class LRec:
    var: str
    body: "LocalType"


@dataclass(frozen=True)
class LVar:
    var: str


@dataclass(frozen=True)
class LEnd:
    pass


LocalType = LSend | LRecv | LRec | LVar | LEnd
L_END = LEnd()


def lsubst(t: LocalType, var: str, repl: LocalType) -> LocalType:
    if isinstance(t, (LSend, LRecv)):
        ctor = LSend if isinstance(t, LSend) else LRecv
        return ctor(
            t.peer,
            tuple(LBranch(b.op, b.carried, lsubst(b.cont, var, repl)) for b in t.branches),
        )
    if isinstance(t, LRec):
        if t.var == var:
            return t
        return LRec(t.var, lsubst(t.body, var, repl))
    if isinstance(t, LVar):
        return repl if t.var == var else t
    return t


def lt_unfold(t: LocalType) -> LocalType:
    seen = set()
    while isinstance(t, LRec):
        if t.var in seen or (isinstance(t.body, LVar) and t.body.var == t.var):
            return L_END
        seen.add(t.var)
        t = lsubst(t.body, t.var, t)
        if len(seen) > 64:
            return L_END
    return t


def lt_equal(a: LocalType, b: LocalType, _seen: frozenset = frozenset()) -> bool:
    """Equality up to recursion unfolding (types are regular trees)."""
    if a == b:
        return True
    key = (a, b)
    if key in _seen:
        return True
    seen = _seen | {key}
    ua, ub = lt_unfold(a), lt_unfold(b)
    if type(ua) is not type(ub):
        return False
    if isinstance(ua, LEnd):
        return True
    if isinstance(ua, LVar):
        return ua == ub
    assert isinstance(ua, (LSend, LRecv)) and isinstance(ub, (LSend, LRecv))
    if ua.peer != ub.peer or len(ua.branches) != len(ub.branches):
        return False
    bs_a = sorted(ua.branches, key=lambda br: br.op)
    bs_b = sorted(ub.branches, key=lambda br: br.op)
    for x, y in zip(bs_a, bs_b):
        if x.op != y.op or x.carried != y.carried:
            return False
        if not lt_equal(x.cont, y.cont, seen):
            return False
    return True


def lt_reduct(a: LocalType, b: LocalType, _seen: frozenset = frozenset()) -> bool:
    """a equals b after discarding some reception branches.

    A role that has not yet been told which way a choice went still offers
    every branch, while a witness execution has already committed to one, so
    its projection may carry fewer reception branches.  Selections are the
    role's own choices and must match exactly.
    """
    if a == b:
        return True
    key = (a, b)
    if key in _seen:
        return True
    seen = _seen | {key}
    ua, ub = lt_unfold(a), lt_unfold(b)
    if type(ua) is not type(ub):
        return False
    if isinstance(ua, LEnd):
        return True
    if isinstance(ua, LVar):
        return ua == ub
    assert isinstance(ua, (LSend, LRecv)) and isinstance(ub, (LSend, LRecv))
    if ua.peer != ub.peer:
        return False
    by_op = {br.op: br for br in ub.branches}
    if isinstance(ua, LSend) and set(by_op) != {br.op for br in ua.branches}:
        return False
    for x in ua.branches:
        y = by_op.get(x.op)
        if y is None or x.carried != y.carried:
            return False
        if not lt_reduct(x.cont, y.cont, seen):
            return False
    return True


def terminated(t: LocalType) -> bool:
    return isinstance(lt_unfold(t), LEnd)


class ProjectionError(Exception):
    pass


class MergeError(Exception):
    pass


def merge_local(a: LocalType, b: LocalType) -> LocalType:
    """Partial merge: reception branch sets with distinct operations union;
    branches sharing an operation must carry equal payload types and merge
    recursively; everything else must agree structurally."""
    if a == b:
        return a
    if isinstance(a, LRecv) and isinstance(b, LRecv) and a.peer == b.peer:
        by_op: dict[str, LBranch] = {br.op: br for br in a.branches}
        merged: dict[str, LBranch] = dict(by_op)
        for br in b.branches:
            if br.op in by_op:
                prev = by_op[br.op]
                if prev.carried != br.carried:
                    raise MergeError(
                        f"operation {br.op!r} carries {prev.carried} vs {br.carried}"
                    )
                merged[br.op] = LBranch(br.op, br.carried, merge_local(prev.cont, br.cont))
            else:
                merged[br.op] = br
        return LRecv(a.peer, tuple(sorted(merged.values(), key=lambda br: br.op)))
    if isinstance(a, LSend) and isinstance(b, LSend) and a.peer == b.peer:
        ops_a = {br.op for br in a.branches}
        ops_b = {br.op for br in b.branches}
        if ops_a != ops_b:
            raise MergeError(f"send branches differ: {sorted(ops_a)} vs {sorted(ops_b)}")
        out = []
        bb = {br.op: br for br in b.branches}
        for br in a.branches:
            other = bb[br.op]
            if br.carried != other.carried:
                raise MergeError(f"operation {br.op!r} payload types differ")
            out.append(LBranch(br.op, br.carried, merge_local(br.cont, other.cont)))
        return LSend(a.peer, tuple(out))
    if isinstance(a, LRec) and isinstance(b, LRec) and a.var == b.var:
        return LRec(a.var, merge_local(a.body, b.body))
    raise MergeError(f"cannot merge {a} with {b}")


def project(g: GlobalType, role: str) -> LocalType:
    """Local view of a global type; bystander branches must merge."""
    if isinstance(g, GEnd):
        return L_END
    if isinstance(g, GVar):
        return LVar(g.var)
    if isinstance(g, GRec):
        if not role_occurs(g.body, role):
            return L_END
        body = project(g.body, role)
        return LRec(g.var, body)
    if isinstance(g, GComm):
        if role == g.sender:
            return LSend(
                g.receiver,
                tuple(LBranch(b.op, b.carried, project(b.cont, role)) for b in g.branches),
            )
        if role == g.receiver:
            return LRecv(
                g.sender,
                tuple(LBranch(b.op, b.carried, project(b.cont, role)) for b in g.branches),
            )
        out = project(g.branches[0].cont, role)
        for b in g.branches[1:]:
            try:
                out = merge_local(out, project(b.cont, role))
            except MergeError as exc:
                raise ProjectionError(
                    f"role {role} cannot reconcile branches of {g.sender}->{g.receiver}: {exc}"
                ) from exc
        return out
    raise TypeError(f"not a global type: {g!r}")


# --------------------------------------------------------- runtime global

@dataclass(frozen=True)
class Transit:
    """A communication whose message was sent but not yet received.

    The node stays at its position in the global type, so every action of
    the receiver that precedes the reception still comes first in the
    receiver's projection, while the sender has already moved on.
    """

    sender: str
    receiver: str
    op: str
    carried: CarriedType
    cont: "RuntimeG"


RuntimeG = Transit | GComm | GRec | GVar | GEnd

BufferType = tuple[tuple[str, CarriedType], ...]  # ordered (op, payload)


def rt_initial(g: GlobalType) -> RuntimeG:
    return g


def rt_project(rt: RuntimeG, role: str) -> LocalType:
    if isinstance(rt, Transit):
        cont = rt_project(rt.cont, role)
        if role == rt.receiver:
            return LRecv(rt.sender, (LBranch(rt.op, rt.carried, cont),))
        return cont
    if isinstance(rt, GComm):
        if role == rt.sender:
            return LSend(rt.receiver, tuple(
                LBranch(b.op, b.carried, rt_project(b.cont, role))
                for b in rt.branches
            ))
        if role == rt.receiver:
            return LRecv(rt.sender, tuple(
                LBranch(b.op, b.carried, rt_project(b.cont, role))
                for b in rt.branches
            ))
        parts = [rt_project(b.cont, role) for b in rt.branches]
        out = parts[0]
        for part in parts[1:]:
            out = merge_local(out, part)
        return out
    # below an intact recursion binder the type is still static
    return project(rt, role)


def rt_buffer(rt: RuntimeG, sender: str, receiver: str) -> BufferType:
    """In-flight messages between one ordered role pair, oldest first."""
    out: list[tuple[str, CarriedType]] = []
    while True:
        if isinstance(rt, Transit):
            if rt.sender == sender and rt.receiver == receiver:
                out.append((rt.op, rt.carried))
            rt = rt.cont
            continue
        if isinstance(rt, GComm) and len(rt.branches) == 1:
            rt = rt.branches[0].cont
            continue
        return tuple(out)


def step_global(rt: RuntimeG) -> list[tuple[tuple, RuntimeG]]:
    """Successors with labels ("send", A, B, o) / ("recv", A, B, o).

    A send fires when its sender already performed everything ahead of it:
    the sender is no pending receiver and takes part in no unfired
    communication the scan passed.  A reception fires under the same
    condition for the receiver.  The scan never enters an unresolved
    choice, so sends deeper than a branching point wait for it.
    """
    out: list[tuple[tuple, RuntimeG]] = []

    def scan(g: RuntimeG, blocked: frozenset, rebuild) -> None:
        g = g_unfold(g)
        if isinstance(g, Transit):
            if g.receiver not in blocked:
                out.append((("recv", g.sender, g.receiver, g.op), rebuild(g.cont)))

            def wrap(new_cont, g=g, rebuild=rebuild):
                return rebuild(Transit(g.sender, g.receiver, g.op, g.carried, new_cont))

            scan(g.cont, blocked | {g.receiver}, wrap)
            return
        if isinstance(g, GComm):
            if g.sender not in blocked:
                for b in g.branches:
                    new_core = rebuild(
                        Transit(g.sender, g.receiver, b.op, b.carried, b.cont)
                    )
                    out.append((("send", g.sender, g.receiver, b.op), new_core))
            if len(g.branches) == 1:
                b = g.branches[0]

                def wrap(new_cont, g=g, b=b, rebuild=rebuild):
                    return rebuild(GComm(g.sender, g.receiver,
                                         (GBranch(b.op, b.carried, new_cont),)))

                scan(b.cont, blocked | {g.sender, g.receiver}, wrap)
            return

    scan(rt, frozenset(), lambda c: c)
    return out


def rt_equiv(a: RuntimeG, b: RuntimeG, roles: tuple[str, ...]) -> bool:
    for r in roles:
        if not lt_equal(rt_project(a, r), rt_project(b, r)):
            return False
        for s in roles:
            if s != r and rt_buffer(a, s, r) != rt_buffer(b, s, r):
                return False
    return True
