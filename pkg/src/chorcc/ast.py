"""Choreography terms.

Conventions: processes, roles, sessions, operations, variables, locations,
and procedure names are plain strings; the parser enforces that the
identifier sets of distinct kinds stay disjoint.  Reception variables are
state paths (usually a single label).  A missing reception variable means
the payload is consumed without storing it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expressions import Expr


@dataclass(frozen=True)
class LocatedProc:
    loc: str
    proc: str
    role: str


@dataclass(frozen=True)
class LocatedRole:
    loc: str
    role: str


@dataclass(frozen=True)
class Inact:
    pass


@dataclass(frozen=True)
class Start:
    """Complete session start: spawns one process per listed service role."""

    session: str
    starter_proc: str
    starter_role: str
    services: tuple[LocatedProc, ...]
    cont: "Chor"


@dataclass(frozen=True)
class Req:
    """Partial start: the starter's half, synchronizes with matching accs."""

    session: str
    starter_proc: str
    starter_role: str
    services: tuple[LocatedRole, ...]
    cont: "Chor"


@dataclass(frozen=True)
class Acc:
    """Partial start: an accepting module; stays available after each use."""

    session: str
    services: tuple[LocatedProc, ...]
    cont: "Chor"


@dataclass(frozen=True)
class Com:
    """Complete communication between two processes of the choreography."""

    session: str
    sender: str
    srole: str
    expr: Expr
    receiver: str
    rrole: str
    op: str
    var: str | None
    cont: "Chor"


@dataclass(frozen=True)
class Send:
    """Partial send toward a role implemented elsewhere."""

    session: str
    sender: str
    srole: str
    expr: Expr
    rrole: str
    op: str
    cont: "Chor"


@dataclass(frozen=True)
class Branch:
    op: str
    var: str | None
    cont: "Chor"


@dataclass(frozen=True)
class Recv:
    """Partial reception: branches on the operation of the arriving message."""

    session: str
    srole: str
    receiver: str
    rrole: str
    branches: tuple[Branch, ...]


@dataclass(frozen=True)
class Cond:
    proc: str
    expr: Expr
    then: "Chor"
    els: "Chor"


@dataclass(frozen=True)
class Par:
    left: "Chor"
    right: "Chor"


@dataclass(frozen=True)
class Def:
    """Procedure definition; calls must pass exactly the formal names."""

    name: str
    params: tuple[str, ...]
    body: "Chor"
    cont: "Chor"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[str, ...]


Chor = (
    Inact | Start | Req | Acc | Com | Send | Recv | Cond | Par | Def | Call
)

ZERO = Inact()


def free_processes(c: Chor) -> frozenset[str]:
    if isinstance(c, Inact):
        return frozenset()
    if isinstance(c, Start):
        bound = {s.proc for s in c.services}
        return frozenset({c.starter_proc}) | (free_processes(c.cont) - bound)
    if isinstance(c, Req):
        return frozenset({c.starter_proc}) | free_processes(c.cont)
    if isinstance(c, Acc):
        bound = {s.proc for s in c.services}
        return free_processes(c.cont) - bound
    if isinstance(c, Com):
        return frozenset({c.sender, c.receiver}) | free_processes(c.cont)
    if isinstance(c, Send):
        return frozenset({c.sender}) | free_processes(c.cont)
    if isinstance(c, Recv):
        out = frozenset({c.receiver})
        for b in c.branches:
            out |= free_processes(b.cont)
        return out
    if isinstance(c, Cond):
        return frozenset({c.proc}) | free_processes(c.then) | free_processes(c.els)
    if isinstance(c, Par):
        return free_processes(c.left) | free_processes(c.right)
    if isinstance(c, Def):
        return (free_processes(c.body) - set(c.params)) | free_processes(c.cont)
    if isinstance(c, Call):
        return frozenset(c.args)
    raise TypeError(f"not a choreography: {c!r}")


def prefix_processes(c: Chor) -> frozenset[str]:
    """Process names syntactically occurring in a term's head action."""
    if isinstance(c, Com):
        return frozenset({c.sender, c.receiver})
    if isinstance(c, Send):
        return frozenset({c.sender})
    if isinstance(c, Recv):
        return frozenset({c.receiver})
    if isinstance(c, Cond):
        return frozenset({c.proc})
    if isinstance(c, Start):
        return frozenset({c.starter_proc}) | {s.proc for s in c.services}
    if isinstance(c, Req):
        return frozenset({c.starter_proc})
    if isinstance(c, Acc):
        return frozenset(s.proc for s in c.services)
    return frozenset()


def rename_processes(c: Chor, mapping: dict[str, str]) -> Chor:
    """Uniform process renaming; binders rename too (used with fresh targets)."""

    def r(name: str) -> str:
        return mapping.get(name, name)

    if isinstance(c, Inact):
        return c
    if isinstance(c, Start):
        return Start(
            c.session,
            r(c.starter_proc),
            c.starter_role,
            tuple(LocatedProc(s.loc, r(s.proc), s.role) for s in c.services),
            rename_processes(c.cont, mapping),
        )
    if isinstance(c, Req):
        return Req(
            c.session, r(c.starter_proc), c.starter_role, c.services,
            rename_processes(c.cont, mapping),
        )
    if isinstance(c, Acc):
        return Acc(
            c.session,
            tuple(LocatedProc(s.loc, r(s.proc), s.role) for s in c.services),
            rename_processes(c.cont, mapping),
        )
    if isinstance(c, Com):
        return Com(
            c.session, r(c.sender), c.srole, c.expr, r(c.receiver), c.rrole,
            c.op, c.var, rename_processes(c.cont, mapping),
        )
    if isinstance(c, Send):
        return Send(
            c.session, r(c.sender), c.srole, c.expr, c.rrole, c.op,
            rename_processes(c.cont, mapping),
        )
    if isinstance(c, Recv):
        return Recv(
            c.session, c.srole, r(c.receiver), c.rrole,
            tuple(Branch(b.op, b.var, rename_processes(b.cont, mapping)) for b in c.branches),
        )
    if isinstance(c, Cond):
        return Cond(
            r(c.proc), c.expr,
            rename_processes(c.then, mapping), rename_processes(c.els, mapping),
        )
    if isinstance(c, Par):
        return Par(rename_processes(c.left, mapping), rename_processes(c.right, mapping))
    if isinstance(c, Def):
        return Def(
            c.name,
            tuple(r(p) for p in c.params),
            rename_processes(c.body, mapping),
            rename_processes(c.cont, mapping),
        )
    if isinstance(c, Call):
        return Call(c.name, tuple(r(a) for a in c.args))
    raise TypeError(f"not a choreography: {c!r}")


def rename_session(c: Chor, old: str, new: str) -> Chor:
    """Rename free occurrences of a session name; stops under rebinders."""
    if isinstance(c, Inact):
        return c
    if isinstance(c, (Start, Req, Acc)):
        shadows = c.session == old
        session = new if c.session == old else c.session
        # the binder occurrence itself is not a free use; only rename uses
        cont = c.cont if shadows else rename_session(c.cont, old, new)
        if isinstance(c, Start):
            return Start(c.session, c.starter_proc, c.starter_role, c.services, cont)
        if isinstance(c, Req):
            return Req(c.session, c.starter_proc, c.starter_role, c.services, cont)
        return Acc(c.session, c.services, cont)
    if isinstance(c, Com):
        s = new if c.session == old else c.session
        return Com(
            s, c.sender, c.srole, c.expr, c.receiver, c.rrole, c.op, c.var,
            rename_session(c.cont, old, new),
        )
    if isinstance(c, Send):
        s = new if c.session == old else c.session
        return Send(s, c.sender, c.srole, c.expr, c.rrole, c.op,
                    rename_session(c.cont, old, new))
    if isinstance(c, Recv):
        s = new if c.session == old else c.session
        return Recv(
            s, c.srole, c.receiver, c.rrole,
            tuple(Branch(b.op, b.var, rename_session(b.cont, old, new)) for b in c.branches),
        )
    if isinstance(c, Cond):
        return Cond(c.proc, c.expr, rename_session(c.then, old, new),
                    rename_session(c.els, old, new))
    if isinstance(c, Par):
        return Par(rename_session(c.left, old, new), rename_session(c.right, old, new))
    if isinstance(c, Def):
        return Def(c.name, c.params, rename_session(c.body, old, new),
                   rename_session(c.cont, old, new))
    if isinstance(c, Call):
        return c
    raise TypeError(f"not a choreography: {c!r}")


def par_components(c: Chor) -> list[Chor]:
    """Flatten the parallel spine, dropping inactive units."""
    if isinstance(c, Par):
        return par_components(c.left) + par_components(c.right)
    if isinstance(c, Inact):
        return []
    return [c]


def par_of(components: list[Chor]) -> Chor:
    if not components:
        return ZERO
    out = components[0]
    for comp in components[1:]:
        out = Par(out, comp)
    return out


def accs_are_top_level(c: Chor) -> bool:
    """True when every acc sits directly on the parallel spine."""

    def no_acc_inside(term: Chor) -> bool:
        if isinstance(term, Acc):
            return False
        if isinstance(term, Inact) or isinstance(term, Call):
            return True
        if isinstance(term, (Start, Req, Com, Send)):
            return no_acc_inside(term.cont)
        if isinstance(term, Recv):
            return all(no_acc_inside(b.cont) for b in term.branches)
        if isinstance(term, Cond):
            return no_acc_inside(term.then) and no_acc_inside(term.els)
        if isinstance(term, Par):
            return no_acc_inside(term.left) and no_acc_inside(term.right)
        if isinstance(term, Def):
            return no_acc_inside(term.body) and no_acc_inside(term.cont)
        raise TypeError(f"not a choreography: {term!r}")

    for comp in par_components(c):
        if isinstance(comp, Acc):
            if not no_acc_inside(comp.cont):
                return False
        elif not no_acc_inside(comp):
            return False
    return True
