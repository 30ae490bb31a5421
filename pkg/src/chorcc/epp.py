"""Endpoint projection: splitting a choreography into single-process
modules that together simulate it.

Every free process keeps exactly its own actions.  A communication
becomes a send at the sender and a unary reception at the receiver.
Processes that merely witness a choice must behave uniformly across the
alternatives, which the merge operator enforces by uniting reception
branches and requiring everything else to agree.

Service modules come out per spawned process: a complete start projects,
besides the request at the starter, one accepting module for each spawned
role, and multi-role accepting modules split the same way.  The result
may offer more reception branches and more service modules than any
single run exercises; the pruning relation says when such surplus is
harmless.
"""

from __future__ import annotations

from .ast import (
    Acc, Branch, Call, Chor, Com, Cond, Def, Inact, LocatedRole, Par, Recv,
    Req, Send, Start, ZERO, free_processes, par_components, par_of,
)


class EppError(Exception):
    pass


def proc_def_name(name: str, proc: str) -> str:
    return f"{name}${proc}"


# ----------------------------------------------------------------- merging

def merge_choreography(a: Chor, b: Chor) -> Chor:
    if a == b:
        return a
    if (
        isinstance(a, Recv) and isinstance(b, Recv)
        and (a.session, a.srole, a.receiver, a.rrole)
        == (b.session, b.srole, b.receiver, b.rrole)
    ):
        by_op: dict[str, Branch] = {br.op: br for br in a.branches}
        merged: dict[str, Branch] = dict(by_op)
        for br in b.branches:
            other = by_op.get(br.op)
            if other is None:
                merged[br.op] = br
            else:
                if other.var != br.var:
                    raise EppError(
                        f"branch {br.op!r} binds {other.var!r} on one side "
                        f"and {br.var!r} on the other"
                    )
                merged[br.op] = Branch(
                    br.op, br.var, merge_choreography(other.cont, br.cont)
                )
        branches = tuple(merged[op] for op in sorted(merged))
        return Recv(a.session, a.srole, a.receiver, a.rrole, branches)
    if type(a) is not type(b):
        raise EppError(f"cannot reconcile {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, (Com, Send, Start, Req, Acc)):
        if _headers(a) != _headers(b):
            raise EppError(f"diverging behaviour: {a!r} vs {b!r}")
        return _with_cont(a, merge_choreography(a.cont, b.cont))
    if isinstance(a, Cond):
        if (a.proc, a.expr) != (b.proc, b.expr):
            raise EppError("diverging conditionals")
        return Cond(a.proc, a.expr,
                    merge_choreography(a.then, b.then),
                    merge_choreography(a.els, b.els))
    if isinstance(a, Def):
        if (a.name, a.params) != (b.name, b.params):
            raise EppError("diverging procedure definitions")
        return Def(a.name, a.params,
                   merge_choreography(a.body, b.body),
                   merge_choreography(a.cont, b.cont))
    raise EppError(f"cannot reconcile {a!r} with {b!r}")


def _headers(c: Chor) -> tuple:
    fields = {
        k: v for k, v in c.__dict__.items() if k != "cont"
    }
    return (type(c).__name__, tuple(sorted(fields.items(), key=lambda kv: kv[0])))


def _with_cont(c: Chor, cont: Chor) -> Chor:
    return type(c)(**{**c.__dict__, "cont": cont})


# -------------------------------------------------------------- projection

def project_process(c: Chor, p: str) -> Chor:
    """The behaviour of process p inside choreography c."""
    if isinstance(c, Inact):
        return ZERO

    if isinstance(c, Start):
        if p == c.starter_proc:
            roles = tuple(LocatedRole(s.loc, s.role) for s in c.services)
            return Req(c.session, p, c.starter_role, roles,
                       project_process(c.cont, p))
        if any(s.proc == p for s in c.services):
            return ZERO  # the spawned process shadows p from here on
        return project_process(c.cont, p)

    if isinstance(c, Req):
        if p == c.starter_proc:
            return Req(c.session, p, c.starter_role, c.services,
                       project_process(c.cont, p))
        return project_process(c.cont, p)

    if isinstance(c, Acc):
        if any(s.proc == p for s in c.services):
            return ZERO
        return project_process(c.cont, p)

    if isinstance(c, Com):
        if p == c.sender and p == c.receiver:
            raise EppError(f"{p!r} communicates with itself")
        if p == c.sender:
            return Send(c.session, p, c.srole, c.expr, c.rrole, c.op,
                        project_process(c.cont, p))
        if p == c.receiver:
            br = Branch(c.op, c.var, project_process(c.cont, p))
            return Recv(c.session, c.srole, p, c.rrole, (br,))
        return project_process(c.cont, p)

    if isinstance(c, Send):
        if p == c.sender:
            return Send(c.session, p, c.srole, c.expr, c.rrole, c.op,
                        project_process(c.cont, p))
        return project_process(c.cont, p)

    if isinstance(c, Recv):
        if p == c.receiver:
            branches = tuple(
                Branch(b.op, b.var, project_process(b.cont, p))
                for b in c.branches
            )
            return Recv(c.session, c.srole, p, c.rrole, branches)
        parts = [project_process(b.cont, p) for b in c.branches]
        out = parts[0]
        for part in parts[1:]:
            out = merge_choreography(out, part)
        return out

    if isinstance(c, Cond):
        if p == c.proc:
            return Cond(p, c.expr,
                        project_process(c.then, p),
                        project_process(c.els, p))
        return merge_choreography(
            project_process(c.then, p), project_process(c.els, p)
        )

    if isinstance(c, Par):
        owners = [
            comp for comp in par_components(c)
            if p in free_processes(comp)
        ]
        if len(owners) > 1:
            raise EppError(f"{p!r} is active in two parallel components")
        if not owners:
            return ZERO
        return project_process(owners[0], p)

    if isinstance(c, Def):
        body_free = free_processes(c.body)
        if not body_free <= set(c.params):
            extra = sorted(body_free - set(c.params))
            raise EppError(
                f"procedure {c.name!r} uses {extra[0]!r} beyond its parameters"
            )
        if p in c.params:
            return Def(proc_def_name(c.name, p), (p,),
                       project_process(c.body, p),
                       project_process(c.cont, p))
        return project_process(c.cont, p)

    if isinstance(c, Call):
        if p in c.args:
            return Call(proc_def_name(c.name, p), (p,))
        return ZERO

    raise EppError(f"not a choreography term: {c!r}")


def _walk(c: Chor):
    yield c
    if isinstance(c, (Start, Req, Acc, Com, Send)):
        yield from _walk(c.cont)
    elif isinstance(c, Recv):
        for b in c.branches:
            yield from _walk(b.cont)
    elif isinstance(c, Cond):
        yield from _walk(c.then)
        yield from _walk(c.els)
    elif isinstance(c, Par):
        yield from _walk(c.left)
        yield from _walk(c.right)
    elif isinstance(c, Def):
        yield from _walk(c.body)
        yield from _walk(c.cont)


def service_accs(c: Chor) -> list[Chor]:
    """One accepting module per process spawned by a complete start."""
    out: list[Chor] = []
    for term in _walk(c):
        if isinstance(term, Start):
            for s in term.services:
                out.append(
                    Acc(term.session, (s,), project_process(term.cont, s.proc))
                )
    return out


def epp(c: Chor) -> Chor:
    """The full projection: per-process modules for every free process,
    single-role accepting modules for every spawned or accepted role."""
    parts: list[Chor] = []
    for comp in par_components(c):
        if isinstance(comp, Acc):
            if free_processes(comp):
                raise EppError("an accepting module must close over its processes")
            for s in comp.services:
                parts.append(
                    Acc(comp.session, (s,), project_process(comp.cont, s.proc))
                )
        else:
            for p in sorted(free_processes(comp)):
                parts.append(project_process(comp, p))
    parts.extend(service_accs(c))

    # acceptance is matched by located role alone, so two modules offering
    # the same located role would race for every request; modules for the
    # same session (a start duplicated into both arms of a conditional)
    # merge into one instead
    merged: dict[tuple[str, str, str, str], Acc] = {}
    out: list[Chor] = []
    for part in parts:
        if not isinstance(part, Acc):
            out.append(part)
            continue
        s = part.services[0]
        mark = (part.session, s.loc, s.proc, s.role)
        prev = merged.get(mark)
        if prev is None:
            merged[mark] = part
            out.append(part)
            continue
        try:
            joined = Acc(part.session, part.services,
                         merge_choreography(prev.cont, part.cont))
        except EppError as exc:
            raise EppError(
                f"role {s.role} at {s.loc} is accepted by two "
                f"unreconcilable modules: {exc}"
            ) from exc
        merged[mark] = joined
        out[out.index(prev)] = joined

    claims: set[tuple[str, str]] = set()
    for part in out:
        if isinstance(part, Acc):
            for s in part.services:
                if (s.loc, s.role) in claims:
                    raise EppError(
                        f"role {s.role} at {s.loc} is accepted by two modules; "
                        "give each session start its own located role"
                    )
                claims.add((s.loc, s.role))
    return par_of(out)


# ----------------------------------------------------------------- pruning

def prunes(big: Chor, small: Chor) -> bool:
    """big behaves as small up to discarding unused reception branches and
    spare top-level accepting modules."""
    if big == small:
        return True
    if isinstance(big, Par) or isinstance(small, (Par, Inact)):
        bigs = [c for c in par_components(big) if not isinstance(c, Inact)]
        smalls = [c for c in par_components(small) if not isinstance(c, Inact)]
        return _match_components(bigs, smalls)
    if type(big) is not type(small):
        return False
    if isinstance(big, Recv):
        if (big.session, big.srole, big.receiver, big.rrole) != (
            small.session, small.srole, small.receiver, small.rrole
        ):
            return False
        by_op = {b.op: b for b in big.branches}
        for br in small.branches:
            other = by_op.get(br.op)
            if other is None or other.var != br.var:
                return False
            if not prunes(other.cont, br.cont):
                return False
        return True
    if isinstance(big, (Com, Send, Start, Req, Acc)):
        return _headers(big) == _headers(small) and prunes(big.cont, small.cont)
    if isinstance(big, Cond):
        return (
            (big.proc, big.expr) == (small.proc, small.expr)
            and prunes(big.then, small.then)
            and prunes(big.els, small.els)
        )
    if isinstance(big, Def):
        return (
            (big.name, big.params) == (small.name, small.params)
            and prunes(big.body, small.body)
            and prunes(big.cont, small.cont)
        )
    return False


def _match_components(bigs: list[Chor], smalls: list[Chor]) -> bool:
    """Injective matching of every small component to a pruning big one;
    unmatched big components must be accepting modules."""
    if not smalls:
        return all(isinstance(b, Acc) for b in bigs)
    head, *rest = smalls
    for i, b in enumerate(bigs):
        if prunes(b, head) and _match_components(bigs[:i] + bigs[i + 1:], rest):
            return True
    return False
