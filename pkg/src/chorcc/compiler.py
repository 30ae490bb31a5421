"""Compilation of projected choreographies into process networks.

Each free process becomes one network process; each accepting module
becomes the service of its location.  Session starts compile into an
explicit handshake driven by correlation keys alone:

  starter   creates its incoming queues, then requests one spawn per
            service role, handing over a partial descriptor (locations
            plus its own freshly minted keys);
  acceptor  creates its incoming queues, reports their keys back to the
            starter on a reserved operation, and waits;
  starter   collects the reports, assembles the complete session
            descriptor, installs it in its own state through a self
            addressed message, and broadcasts it to every acceptor.

After the broadcast every participant stores the same descriptor under
the session name and every queue of the session exists, which is exactly
the state a primitive session start establishes in one step.
"""

from __future__ import annotations

from .ast import (
    Acc, Call, Chor, Com, Cond, Def, Inact, Par, Recv, Req, Send, Start,
    free_processes, par_components,
)
from .dcc import (
    Behaviour, CQueue, DCall, DCond, DDef, DInact, DProc, DService, D_ZERO,
    InBranch, Input, Network, Output, Request,
)
from .epp import epp
from .expressions import Lit, PathRead, TreeExpr
from .parser import Program, Protocol
from .trees import Loc, Path


class CompileError(Exception):
    pass


SYNC_OP = "$sync"
GATHER = "$h"


def _find_protocol_exact(
    program: Program, starter_role: str, pairs: tuple[tuple[str, str], ...]
) -> Protocol:
    """The unique protocol whose starter and located services match exactly."""
    want = tuple(sorted(pairs))
    found = [
        proto for proto in program.protocols
        if proto.starter == starter_role
        and tuple(sorted((loc, role) for role, loc in proto.services)) == want
    ]
    if len(found) != 1:
        names = ", ".join(p.name for p in found) or "none"
        raise CompileError(
            f"start of {starter_role} with {want} matches protocols: {names}"
        )
    return found[0]


def _find_protocol_accept(
    program: Program, pairs: tuple[tuple[str, str], ...]
) -> Protocol:
    """The unique protocol offering all the accepted located roles."""
    found = []
    for proto in program.protocols:
        offered = sorted((loc, role) for role, loc in proto.services)
        take = list(pairs)
        for item in offered:
            if take and take[0] == item:
                take.pop(0)
        if not take:
            found.append(proto)
    if len(found) != 1:
        names = ", ".join(p.name for p in found) or "none"
        raise CompileError(f"accept of {sorted(pairs)} matches protocols: {names}")
    return found[0]


def _ordered_services(proto: Protocol) -> tuple[tuple[str, str], ...]:
    """(role, location) pairs of the service roles in canonical order."""
    return proto.services


def _partial_descriptor(k: str, starter_role: str, starter_loc: str,
                        services: tuple[tuple[str, str], ...]) -> TreeExpr:
    entries = [(starter_role, TreeExpr((("l", Lit(Loc(starter_loc))),)))]
    for role, loc in services:
        entries.append((role, TreeExpr((
            ("l", Lit(Loc(loc))),
            (starter_role, PathRead(Path((k, role, starter_role)))),
        ))))
    return TreeExpr(tuple(entries))


def _full_descriptor(k: str, starter_role: str, starter_loc: str,
                     services: tuple[tuple[str, str], ...]) -> TreeExpr:
    """Assembled from the starter's own mints and the gathered reports."""
    entries = []
    own = [("l", Lit(Loc(starter_loc)))]
    for role, _ in services:
        own.append((role, PathRead(Path((k, GATHER, role, starter_role, role)))))
    entries.append((starter_role, TreeExpr(tuple(own))))
    for role, loc in services:
        sub = [
            ("l", Lit(Loc(loc))),
            (starter_role, PathRead(Path((k, role, starter_role)))),
        ]
        for other, _ in services:
            if other != role:
                sub.append((other, PathRead(Path((k, GATHER, other, role, other)))))
        entries.append((role, TreeExpr(tuple(sub))))
    return TreeExpr(tuple(entries))


def _compile_req(term: Req, locs: dict[str, str], program: Program) -> Behaviour:
    p = term.starter_proc
    if p not in locs:
        raise CompileError(f"process {p!r} has no known location")
    ploc = locs[p]
    a = term.starter_role
    k = term.session
    pairs = tuple((s.loc, s.role) for s in term.services)
    proto = _find_protocol_exact(program, a, pairs)
    services = _ordered_services(proto)

    body = compile_behaviour(term.cont, locs, program)

    # read bottom-up: broadcasts, then descriptor installation, then the
    # gathering inputs, then the requests, then the starter's own queues
    for role, _ in reversed(services):
        body = Output(
            dest=PathRead(Path((k, role, "l"))),
            op=SYNC_OP,
            payload=PathRead(Path((k,))),
            key=PathRead(Path((k, a, role))),
            cont=body,
        )
    first = services[0][0]
    install_key = PathRead(Path((k, first, a)))
    body = Input(install_key, (InBranch(SYNC_OP, Path((k,)), body),))
    body = Output(
        dest=Lit(Loc(ploc)),
        op=SYNC_OP,
        payload=_full_descriptor(k, a, ploc, services),
        key=install_key,
        cont=body,
    )
    for role, _ in reversed(services):
        body = Input(
            PathRead(Path((k, role, a))),
            (InBranch(SYNC_OP, Path((k, GATHER, role)), body),),
        )
    partial = _partial_descriptor(k, a, ploc, services)
    for _, loc in reversed(services):
        body = Request(loc, partial, body)
    for role, _ in reversed(services):
        body = CQueue(Path((k, role, a)), body)
    return body


def compile_behaviour(c: Chor, locs: dict[str, str], program: Program) -> Behaviour:
    """One endpoint term, already owned by a single process, to a behaviour."""
    if isinstance(c, Inact):
        return D_ZERO
    if isinstance(c, Req):
        return _compile_req(c, locs, program)
    if isinstance(c, Send):
        k = c.session
        return Output(
            dest=PathRead(Path((k, c.rrole, "l"))),
            op=c.op,
            payload=c.expr,
            key=PathRead(Path((k, c.srole, c.rrole))),
            cont=compile_behaviour(c.cont, locs, program),
        )
    if isinstance(c, Recv):
        k = c.session
        # receptions are order free; emit the parser's canonical branch order
        branches = tuple(sorted(
            (InBranch(
                b.op,
                Path((b.var,)) if b.var is not None else None,
                compile_behaviour(b.cont, locs, program),
            )
            for b in c.branches),
            key=lambda b: b.op,
        ))
        return Input(PathRead(Path((k, c.srole, c.rrole))), branches)
    if isinstance(c, Cond):
        return DCond(
            c.expr,
            compile_behaviour(c.then, locs, program),
            compile_behaviour(c.els, locs, program),
        )
    if isinstance(c, Def):
        return DDef(
            c.name,
            compile_behaviour(c.body, locs, program),
            compile_behaviour(c.cont, locs, program),
        )
    if isinstance(c, Call):
        return DCall(c.name)
    raise CompileError(f"not an endpoint term: {type(c).__name__}")


def compile_accept(term: Acc, program: Program) -> DService:
    """A single-process accepting module as the service of its location."""
    if len(term.services) != 1:
        raise CompileError("an accepting module must bind exactly one process")
    s = term.services[0]
    proto = _find_protocol_accept(program, ((s.loc, s.role),))
    k = term.session
    b = s.role
    a = proto.starter
    others = tuple(r for r in proto.role_order if r != b)

    body = compile_behaviour(term.cont, {s.proc: s.loc}, program)
    body = Input(
        PathRead(Path((k, a, b))),
        (InBranch(SYNC_OP, Path((k,)), body),),
    )
    report = TreeExpr(tuple(
        (x, TreeExpr(((b, PathRead(Path((k, x, b)))),))) for x in others
    ))
    body = Output(
        dest=PathRead(Path((k, a, "l"))),
        op=SYNC_OP,
        payload=report,
        key=PathRead(Path((k, b, a))),
        cont=body,
    )
    for x in reversed(others):
        body = CQueue(Path((k, x, b)), body)
    return DService(s.loc, k, body)


def compile_network(program: Program) -> Network:
    """Project the choreography and compile every component."""
    projected = epp(program.chor)
    locs = {pl.proc: pl.loc for pl in program.placements}

    procs = []
    services: dict[str, DService] = {}
    for comp in par_components(projected):
        if isinstance(comp, Acc):
            svc = compile_accept(comp, program)
            if svc.loc in services:
                raise CompileError(
                    f"two accepting modules at location {svc.loc!r}; "
                    "one service per location"
                )
            services[svc.loc] = svc
            continue
        owners = sorted(free_processes(comp))
        if len(owners) != 1:
            raise CompileError("a component must belong to a single process")
        p = owners[0]
        if p not in locs:
            raise CompileError(f"process {p!r} has no placement")
        pl = next(pl for pl in program.placements if pl.proc == p)
        from .deployment import ProcessInfo

        procs.append((p, DProc(ProcessInfo(pl.loc, pl.state),
                               compile_behaviour(comp, locs, program))))
    return Network(tuple(procs), tuple(services.values()))
