"""Typing: choreographies against declared protocols, deployments against
typing environments, and coherence of running sessions.

The environment tracks which process owns which role of which session, the
current local type of every owned role, the declared type of every process
variable, process placements, buffered message types per directed role
pair, and the protocol each session originated from.

Static checking descends the choreography syntax-directed, splitting the
environment at parallel composition by free processes.  Procedure calls
are checked by inlining their bodies, memoized on the fragment of the
environment the body can see, which keeps recursive procedures finite.

At runtime the same environment shape is advanced along fired reductions,
so every reachable configuration can be re-judged: deployment clauses,
residual choreography, and per-session coherence, the last by searching a
bounded witness among runtime global types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
    Acc, Call, Chor, Com, Cond, Def, Inact, Par, Recv, Req, Send,
    Start, free_processes, par_components,
)
from .deployment import (
    Deployment, descriptor_key, descriptor_loc, descriptor_of,
)
from .expressions import BinOp, Expr, Lit, PathRead, TreeExpr
from .parser import Program, Protocol
from .sessiontypes import (
    BOOL, BufferType, CarriedType, INT, LBranch, LRecv, LSend, LocalType,
    LOC, MergeError, ProjectionError, RuntimeG, STR, lt_reduct, lt_unfold,
    project, rt_buffer, rt_initial, rt_project, step_global, terminated,
    tree_has_type, type_of_tree,
)
from .trees import Loc, Path, canon_text, resolve


class TypingError(Exception):
    pass


@dataclass
class Env:
    protocols: dict[str, Protocol] = field(default_factory=dict)
    placements: dict[str, str] = field(default_factory=dict)
    vars: dict[tuple[str, str], CarriedType] = field(default_factory=dict)
    own: dict[tuple[str, str], str] = field(default_factory=dict)
    locals: dict[tuple[str, str], LocalType] = field(default_factory=dict)
    buffers: dict[tuple[str, str, str], BufferType] = field(default_factory=dict)
    origin: dict[str, str] = field(default_factory=dict)
    defs: dict[str, tuple[tuple[str, ...], Chor]] = field(default_factory=dict)

    def clone(self) -> "Env":
        return Env(
            self.protocols, dict(self.placements), dict(self.vars),
            dict(self.own), dict(self.locals), dict(self.buffers),
            dict(self.origin), dict(self.defs),
        )

    def sessions(self) -> tuple[str, ...]:
        return tuple(sorted(self.origin))

    def drop_session(self, sess: str) -> None:
        self.origin.pop(sess, None)
        for key in [k for k in self.own if k[0] == sess]:
            del self.own[key]
        for key in [k for k in self.locals if k[0] == sess]:
            del self.locals[key]
        for key in [k for k in self.buffers if k[0] == sess]:
            del self.buffers[key]


def initial_env(program: Program) -> Env:
    env = Env()
    for proto in program.protocols:
        if proto.name in env.protocols:
            raise TypingError(f"protocol {proto.name!r} declared twice")
        env.protocols[proto.name] = proto
    for pl in program.placements:
        if pl.proc in env.placements:
            raise TypingError(f"process {pl.proc!r} placed twice")
        env.placements[pl.proc] = pl.loc
        for label, sub in pl.state.children:
            env.vars[(pl.proc, label)] = type_of_tree(sub)
    return env


# -------------------------------------------------------------- expressions

def type_expr(env: Env, proc: str, e: Expr) -> CarriedType:
    if isinstance(e, Lit):
        v = e.value
        if isinstance(v, bool):
            return BOOL
        if isinstance(v, Loc):
            return LOC
        if isinstance(v, int):
            return INT
        if isinstance(v, str):
            return STR
        raise TypingError(f"unsupported literal {v!r}")
    if isinstance(e, PathRead):
        segs = e.path.segments
        u = env.vars.get((proc, segs[0]))
        if u is None:
            raise TypingError(f"{proc}.{segs[0]} is not bound")
        for seg in segs[1:]:
            nxt = dict(u.fields).get(seg)
            if nxt is None:
                raise TypingError(f"{proc}.{'.'.join(segs)}: no field {seg!r}")
            u = nxt
        return u
    if isinstance(e, TreeExpr):
        fields = tuple(
            sorted((k, type_expr(env, proc, sub)) for k, sub in e.entries)
        )
        return CarriedType(None, fields)
    if isinstance(e, BinOp):
        lt = type_expr(env, proc, e.left)
        rt_ = type_expr(env, proc, e.right)
        if e.op in ("and", "or"):
            if lt == BOOL and rt_ == BOOL:
                return BOOL
            raise TypingError(f"{e.op} needs booleans")
        if e.op == "<":
            if lt == INT and rt_ == INT:
                return BOOL
            raise TypingError("< needs integers")
        if e.op in ("=", "!="):
            return BOOL
        if e.op == "+":
            if lt == INT and rt_ == INT:
                return INT
            if lt == STR and rt_ == STR:
                return STR
            raise TypingError("+ needs two integers or two strings")
        if e.op == "-":
            if lt == INT and rt_ == INT:
                return INT
            raise TypingError("- needs integers")
        raise TypingError(f"unknown operator {e.op!r}")
    raise TypingError(f"not an expression: {e!r}")


def carried_subtype(a: CarriedType, b: CarriedType) -> bool:
    """Width subtyping: a value of type a may flow where b is expected."""
    if b.base is not None:
        return a.base == b.base
    if a.base is not None:
        return False
    af = dict(a.fields)
    return all(k in af and carried_subtype(af[k], u) for k, u in b.fields)


# -------------------------------------------------------- protocol matching

def _service_pairs(proto: Protocol) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((l, r) for r, l in proto.services))


def match_protocol_exact(env: Env, starter_role: str,
                         pairs: tuple[tuple[str, str], ...]) -> Protocol:
    pairs = tuple(sorted(pairs))
    found = [
        p for p in env.protocols.values()
        if p.starter == starter_role and _service_pairs(p) == pairs
    ]
    if not found:
        raise TypingError(
            f"no protocol with starter {starter_role!r} and services {list(pairs)}"
        )
    if len(found) > 1:
        names = ", ".join(p.name for p in found)
        raise TypingError(f"ambiguous protocols: {names}")
    return found[0]


def match_protocol_accept(env: Env, pairs: tuple[tuple[str, str], ...]) -> Protocol:
    pairs = tuple(sorted(pairs))
    found = []
    for p in env.protocols.values():
        if _multisubset(pairs, _service_pairs(p)):
            found.append(p)
    if not found:
        raise TypingError(f"no protocol offers service roles {list(pairs)}")
    if len(found) > 1:
        names = ", ".join(p.name for p in found)
        raise TypingError(f"accept matches several protocols: {names}")
    return found[0]


def _multisubset(small, big) -> bool:
    pool = list(big)
    for x in small:
        if x in pool:
            pool.remove(x)
        else:
            return False
    return True


# ------------------------------------------------------- local type advance

def advance_send(t: LocalType, peer: str, op: str) -> tuple[CarriedType, LocalType]:
    u = lt_unfold(t)
    if not isinstance(u, LSend) or u.peer != peer:
        raise TypingError(f"local type expects {u}, not a send to {peer!r}")
    for b in u.branches:
        if b.op == op:
            return b.carried, b.cont
    ops = sorted(br.op for br in u.branches)
    raise TypingError(f"send operation {op!r} not among {ops}")


def advance_recv(t: LocalType, peer: str, op: str) -> tuple[CarriedType, LocalType]:
    u = lt_unfold(t)
    if not isinstance(u, LRecv) or u.peer != peer:
        raise TypingError(f"local type expects {u}, not a reception from {peer!r}")
    for b in u.branches:
        if b.op == op:
            return b.carried, b.cont
    ops = sorted(br.op for br in u.branches)
    raise TypingError(f"reception operation {op!r} not among {ops}")


def recv_branches(t: LocalType, peer: str) -> tuple[LBranch, ...]:
    u = lt_unfold(t)
    if not isinstance(u, LRecv) or u.peer != peer:
        raise TypingError(f"local type expects {u}, not a reception from {peer!r}")
    return u.branches


# ------------------------------------------------------------ static typing

def _bind_session(env: Env, sess: str) -> None:
    """A start, request, or accept binder shadows any outer session of the
    same name; shadowing a live one in the same scope is a linearity fault."""
    if sess in env.origin:
        live = [
            (k, r) for (k, r), t in env.locals.items()
            if k == sess and not terminated(t)
        ]
        if live:
            raise TypingError(f"session binder {sess!r} shadows a live session")
        env.drop_session(sess)


def _bind_process(env: Env, proc: str) -> None:
    """Service binders of start and accept shadow any outer process of the
    same name, again refusing to hide unfinished obligations."""
    live = [
        (s, r) for (s, r), p in env.own.items()
        if p == proc and not terminated(env.locals[(s, r)])
    ]
    if live:
        raise TypingError(f"process binder {proc!r} shadows a live process")
    for key in [k for k, p in env.own.items() if p == proc]:
        del env.own[key]
        del env.locals[key]
    for key in [k for k in env.vars if k[0] == proc]:
        del env.vars[key]
    env.placements.pop(proc, None)


def check_term(env: Env, c: Chor, memo: set | None = None) -> None:
    if memo is None:
        memo = set()

    if isinstance(c, Inact):
        for (sess, role), t in env.locals.items():
            if not terminated(t):
                raise TypingError(
                    f"finished component leaves {sess}[{role}] incomplete"
                )
        return

    if isinstance(c, Start):
        pairs = tuple((s.loc, s.role) for s in c.services)
        proto = match_protocol_exact(env, c.starter_role, pairs)
        if c.starter_proc not in env.placements:
            raise TypingError(f"process {c.starter_proc!r} has no placement")
        env2 = env.clone()
        _bind_session(env2, c.session)
        env2.origin[c.session] = proto.name
        env2.own[(c.session, c.starter_role)] = c.starter_proc
        env2.locals[(c.session, c.starter_role)] = project(proto.gtype, c.starter_role)
        for s in c.services:
            _bind_process(env2, s.proc)
            env2.placements[s.proc] = s.loc
            env2.own[(c.session, s.role)] = s.proc
            env2.locals[(c.session, s.role)] = project(proto.gtype, s.role)
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Req):
        pairs = tuple((s.loc, s.role) for s in c.services)
        proto = match_protocol_exact(env, c.starter_role, pairs)
        if c.starter_proc not in env.placements:
            raise TypingError(f"process {c.starter_proc!r} has no placement")
        env2 = env.clone()
        _bind_session(env2, c.session)
        env2.origin[c.session] = proto.name
        env2.own[(c.session, c.starter_role)] = c.starter_proc
        env2.locals[(c.session, c.starter_role)] = project(proto.gtype, c.starter_role)
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Acc):
        pairs = tuple((s.loc, s.role) for s in c.services)
        proto = match_protocol_accept(env, pairs)
        env2 = env.clone()
        _bind_session(env2, c.session)
        env2.origin[c.session] = proto.name
        for s in c.services:
            _bind_process(env2, s.proc)
            env2.placements[s.proc] = s.loc
            env2.own[(c.session, s.role)] = s.proc
            env2.locals[(c.session, s.role)] = project(proto.gtype, s.role)
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Com):
        if env.own.get((c.session, c.srole)) != c.sender:
            raise TypingError(
                f"{c.sender!r} does not play {c.session}[{c.srole}] here"
            )
        if env.own.get((c.session, c.rrole)) != c.receiver:
            raise TypingError(
                f"{c.receiver!r} does not play {c.session}[{c.rrole}] here"
            )
        u_send, t_send = advance_send(env.locals[(c.session, c.srole)], c.rrole, c.op)
        u_recv, t_recv = advance_recv(env.locals[(c.session, c.rrole)], c.srole, c.op)
        ue = type_expr(env, c.sender, c.expr)
        if not carried_subtype(ue, u_send):
            raise TypingError(
                f"payload of {c.op!r} has type {ue}, expected {u_send}"
            )
        env2 = env.clone()
        env2.locals[(c.session, c.srole)] = t_send
        env2.locals[(c.session, c.rrole)] = t_recv
        if c.var is not None:
            env2.vars[(c.receiver, c.var)] = u_recv
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Send):
        if env.own.get((c.session, c.srole)) != c.sender:
            raise TypingError(
                f"{c.sender!r} does not play {c.session}[{c.srole}] here"
            )
        u_send, t_send = advance_send(env.locals[(c.session, c.srole)], c.rrole, c.op)
        ue = type_expr(env, c.sender, c.expr)
        if not carried_subtype(ue, u_send):
            raise TypingError(
                f"payload of {c.op!r} has type {ue}, expected {u_send}"
            )
        env2 = env.clone()
        env2.locals[(c.session, c.srole)] = t_send
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Recv):
        if env.own.get((c.session, c.rrole)) != c.receiver:
            raise TypingError(
                f"{c.receiver!r} does not play {c.session}[{c.rrole}] here"
            )
        tbranches = recv_branches(env.locals[(c.session, c.rrole)], c.srole)
        by_op = {b.op: b for b in c.branches}
        for tb in tbranches:
            b = by_op.get(tb.op)
            if b is None:
                raise TypingError(
                    f"reception on {c.session} lacks a branch for {tb.op!r}"
                )
            env2 = env.clone()
            env2.locals[(c.session, c.rrole)] = tb.cont
            if b.var is not None:
                env2.vars[(c.receiver, b.var)] = tb.carried
            check_term(env2, b.cont, memo)
        return

    if isinstance(c, Cond):
        if type_expr(env, c.proc, c.expr) != BOOL:
            raise TypingError(f"guard of {c.proc!r} is not boolean")
        check_term(env.clone(), c.then, memo)
        check_term(env.clone(), c.els, memo)
        return

    if isinstance(c, Def):
        env2 = env.clone()
        env2.defs[c.name] = (c.params, c.body)
        check_term(env2, c.cont, memo)
        return

    if isinstance(c, Call):
        entry = env.defs.get(c.name)
        if entry is None:
            raise TypingError(f"call of undefined procedure {c.name!r}")
        params, body = entry
        if c.args != params:
            raise TypingError(
                f"{c.name} must be called with its formal parameters"
            )
        key = (c.name, body, _relevant(env, body))
        if key in memo:
            return
        memo.add(key)
        check_term(env.clone(), body, memo)
        return

    if isinstance(c, Par):
        comps = par_components(c)
        fps = [free_processes(comp) for comp in comps]
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                shared = fps[i] & fps[j]
                if shared:
                    raise TypingError(
                        f"process {sorted(shared)[0]!r} is active in two "
                        "parallel components"
                    )
        claimed = frozenset().union(*fps) if fps else frozenset()
        for (sess, role), p in env.own.items():
            if p not in claimed and not terminated(env.locals[(sess, role)]):
                raise TypingError(
                    f"{sess}[{role}] of {p!r} is dropped by the parallel split"
                )
        for comp, fp in zip(comps, fps):
            check_term(_restrict(env, fp), comp, memo)
        return

    raise TypingError(f"not a choreography term: {c!r}")


def _relevant(env: Env, body: Chor):
    procs = free_processes(body)
    own = tuple(sorted(
        ((s, r), p) for (s, r), p in env.own.items() if p in procs
    ))
    sess = {s for (s, _), p in env.own.items() if p in procs}
    locals_ = tuple(sorted(
        ((k, env.locals[k]) for k in env.locals if k[0] in sess),
        key=lambda kv: kv[0],
    ))
    vars_ = tuple(sorted(
        (k, u) for k, u in env.vars.items() if k[0] in procs
    ))
    places = tuple(sorted(
        (p, l) for p, l in env.placements.items() if p in procs
    ))
    return (own, locals_, vars_, places)


def _restrict(env: Env, procs: frozenset[str]) -> Env:
    env2 = Env(env.protocols, dict(env.placements), {}, {}, {}, {},
               dict(env.origin), dict(env.defs))
    for (p, x), u in env.vars.items():
        if p in procs:
            env2.vars[(p, x)] = u
    for (s, r), p in env.own.items():
        if p in procs:
            env2.own[(s, r)] = p
            env2.locals[(s, r)] = env.locals[(s, r)]
    return env2


# --------------------------------------------------------- whole-program API

def _walk_terms(c: Chor):
    yield c
    if isinstance(c, (Start, Req, Acc, Com, Send)):
        yield from _walk_terms(c.cont)
    elif isinstance(c, Recv):
        for b in c.branches:
            yield from _walk_terms(b.cont)
    elif isinstance(c, Cond):
        yield from _walk_terms(c.then)
        yield from _walk_terms(c.els)
    elif isinstance(c, Par):
        yield from _walk_terms(c.left)
        yield from _walk_terms(c.right)
    elif isinstance(c, Def):
        yield from _walk_terms(c.body)
        yield from _walk_terms(c.cont)


def check_program(program: Program) -> list[str]:
    """All static errors: projectability, placement coverage, typing, and
    service coverage for every requested protocol."""
    errors: list[str] = []
    try:
        env = initial_env(program)
    except TypingError as exc:
        return [str(exc)]

    for proto in program.protocols:
        for role in proto.role_order:
            try:
                project(proto.gtype, role)
            except ProjectionError as exc:
                errors.append(f"protocol {proto.name}: {exc}")

    free = free_processes(program.chor)
    placed = set(env.placements)
    for p in sorted(free - placed):
        errors.append(f"free process {p!r} has no placement")
    if errors:
        return errors

    try:
        check_term(env, program.chor)
    except TypingError as exc:
        errors.append(str(exc))

    # service coverage: each requested protocol must have every service role
    # offered by exactly one accept module
    claims: dict[str, list[tuple[str, str]]] = {}
    for comp in par_components(program.chor):
        if isinstance(comp, Acc):
            pairs = tuple((s.loc, s.role) for s in comp.services)
            try:
                proto = match_protocol_accept(env, pairs)
            except TypingError:
                continue  # already reported by the typing pass
            claims.setdefault(proto.name, [])
            for pair in pairs:
                if pair in claims[proto.name]:
                    errors.append(
                        f"protocol {proto.name}: role {pair[1]} at {pair[0]} "
                        "is accepted by two modules"
                    )
                claims[proto.name].append(pair)
    for term in _walk_terms(program.chor):
        if isinstance(term, Req):
            pairs = tuple(sorted((s.loc, s.role) for s in term.services))
            try:
                proto = match_protocol_exact(env, term.starter_role, pairs)
            except TypingError:
                continue
            have = tuple(sorted(claims.get(proto.name, [])))
            if have != pairs:
                errors.append(
                    f"request on protocol {proto.name}: accepted roles "
                    f"{list(have)} do not cover {list(pairs)}"
                )
    return errors


# ------------------------------------------------------- runtime environment

def _proto_for_participants(env: Env, participants) -> Protocol:
    starter_role = participants[0][0]
    pairs = tuple(sorted((l, r) for r, _, l in participants[1:]))
    return match_protocol_exact(env, starter_role, pairs)


def advance_env(env: Env, effect: tuple) -> Env:
    """Environment after a fired reduction; raises when the step does not
    follow the typing discipline (used to witness subject reduction)."""
    env = env.clone()
    tag = effect[0]

    if tag in ("start", "pstart"):
        _, sess, participants = effect
        proto = _proto_for_participants(env, participants)
        _bind_session(env, sess)
        env.origin[sess] = proto.name
        for role, proc, loc in participants:
            env.placements.setdefault(proc, loc)
            if env.placements[proc] != loc:
                raise TypingError(f"{proc!r} placed at two locations")
            env.own[(sess, role)] = proc
            env.locals[(sess, role)] = project(proto.gtype, role)
        roles = tuple(r for r, _, _ in participants)
        for a in roles:
            for b in roles:
                if a != b:
                    env.buffers[(sess, a, b)] = ()
        return env

    if tag == "com":
        _, sess, p, a, q, b, op, var, _payload = effect
        if env.own.get((sess, a)) != p or env.own.get((sess, b)) != q:
            raise TypingError(f"ownership mismatch on {sess}")
        if env.buffers.get((sess, a, b), ()):
            raise TypingError(
                f"complete communication on {sess}: {a}->{b} would overtake "
                "buffered messages"
            )
        _, t_send = advance_send(env.locals[(sess, a)], b, op)
        u_recv, t_recv = advance_recv(env.locals[(sess, b)], a, op)
        env.locals[(sess, a)] = t_send
        env.locals[(sess, b)] = t_recv
        if var is not None:
            env.vars[(q, var)] = u_recv
        return env

    if tag == "msend":
        _, sess, p, a, b, op, _payload = effect
        if env.own.get((sess, a)) != p:
            raise TypingError(f"ownership mismatch on {sess}[{a}]")
        u, t_send = advance_send(env.locals[(sess, a)], b, op)
        env.locals[(sess, a)] = t_send
        cur = env.buffers.get((sess, a, b), ())
        env.buffers[(sess, a, b)] = cur + ((op, u),)
        return env

    if tag == "mrecv":
        _, sess, a, q, b, op, var, _payload = effect
        if env.own.get((sess, b)) != q:
            raise TypingError(f"ownership mismatch on {sess}[{b}]")
        buf = env.buffers.get((sess, a, b), ())
        if not buf or buf[0][0] != op:
            raise TypingError(
                f"buffer for {sess}: {a}->{b} does not start with {op!r}"
            )
        env.buffers[(sess, a, b)] = buf[1:]
        u, t_recv = advance_recv(env.locals[(sess, b)], a, op)
        env.locals[(sess, b)] = t_recv
        if var is not None:
            env.vars[(q, var)] = u
        return env

    if tag == "cond":
        return env

    raise TypingError(f"unknown effect {tag!r}")


# -------------------------------------------------------- deployment checks

def check_deployment(env: Env, dep: Deployment) -> list[str]:
    errors: list[str] = []

    # distinct correlation keys per location
    seen: dict[tuple[str, str], str] = {}
    for p, info in dep.procs:
        for key, _ in info.queues:
            mark = (info.loc, canon_text(key))
            if mark in seen:
                errors.append(
                    f"key {mark[1]} at {info.loc} serves both {seen[mark]!r} and {p!r}"
                )
            seen[mark] = p

    # declared variables typed by the states
    for (p, x), u in sorted(env.vars.items()):
        info = dep.get(p)
        if info is None:
            errors.append(f"typed process {p!r} is not deployed")
            continue
        t = resolve(info.state, Path((x,)))
        if t is None or not tree_has_type(t, u):
            errors.append(f"{p}.{x} does not hold a value of its type")

    # session descriptors agree and place every member correctly
    for sess in env.sessions():
        members = sorted(
            (role, p) for (s, role), p in env.own.items() if s == sess
        )
        descs = []
        for role, p in members:
            info = dep.get(p)
            if info is None:
                errors.append(f"{sess}[{role}] owner {p!r} is not deployed")
                continue
            d = descriptor_of(dep, p, sess)
            if d is None:
                errors.append(f"{p!r} lacks the descriptor of {sess}")
                continue
            descs.append((role, p, d, info))
        if len(descs) != len(members):
            continue
        base = descs[0][2]
        for role, p, d, info in descs[1:]:
            if d != base:
                errors.append(f"descriptor of {sess} differs between members")
                break
        for role, p, d, info in descs:
            want = env.placements.get(p)
            if want is not None and want != info.loc:
                errors.append(f"{p!r} deployed at {info.loc}, typed at {want}")
            dloc = descriptor_loc(d, role)
            if dloc != info.loc:
                errors.append(
                    f"descriptor of {sess} puts {role} at {dloc}, "
                    f"but {p!r} runs at {info.loc}"
                )
            for other, _ in members:
                if other == role:
                    continue
                key = descriptor_key(d, other, role)
                if key is None or info.queue(key) is None:
                    errors.append(
                        f"{p!r} misses the queue for {other}->{role} in {sess}"
                    )

    # buffered message types match queued messages
    for (sess, a, b), buf in sorted(env.buffers.items()):
        q = env.own.get((sess, b))
        if q is None:
            continue
        info = dep.get(q)
        if info is None:
            continue
        d = descriptor_of(dep, q, sess)
        key = descriptor_key(d, a, b) if d is not None else None
        msgs = info.queue(key) if key is not None else None
        if msgs is None:
            if buf:
                errors.append(f"typed messages for {sess}: {a}->{b} have no queue")
            continue
        if len(msgs) != len(buf):
            errors.append(
                f"queue {a}->{b} in {sess} holds {len(msgs)} messages, "
                f"typing says {len(buf)}"
            )
            continue
        for (op_m, payload), (op_t, u) in zip(msgs, buf):
            if op_m != op_t or not tree_has_type(payload, u):
                errors.append(
                    f"queued message {op_m!r} in {sess}: {a}->{b} is not a {op_t}({u})"
                )
                break
    return errors


# ------------------------------------------------------------------ coherence

def pco(
    g, locals_by_role: dict[str, LocalType],
    buffers: dict[tuple[str, str], BufferType],
    max_nodes: int = 20000,
) -> bool:
    """A runtime global type reachable from the protocol whose projections
    and pending messages match the environment exactly."""
    roles = tuple(sorted(locals_by_role))

    def matches(rt: RuntimeG) -> bool:
        try:
            for r in roles:
                if not lt_reduct(rt_project(rt, r), locals_by_role[r]):
                    return False
        except (ProjectionError, MergeError):
            return False
        for a in roles:
            for b in roles:
                if a != b and rt_buffer(rt, a, b) != buffers.get((a, b), ()):
                    return False
        return True

    start = rt_initial(g)
    seen = {start}
    frontier = [start]
    count = 0
    while frontier and count < max_nodes:
        nxt: list[RuntimeG] = []
        for rt in frontier:
            count += 1
            if matches(rt):
                return True
            if count >= max_nodes:
                break
            for _label, rt2 in step_global(rt):
                if rt2 not in seen:
                    seen.add(rt2)
                    nxt.append(rt2)
        frontier = nxt
    return False


def check_coherence(env: Env, max_nodes: int = 20000) -> list[str]:
    errors = []
    for sess in env.sessions():
        proto = env.protocols[env.origin[sess]]
        locals_by_role = {
            role: env.locals[(s, role)]
            for (s, role) in env.locals if s == sess
        }
        missing = [r for r in proto.role_order if r not in locals_by_role]
        if missing:
            errors.append(f"session {sess} lacks roles {missing}")
            continue
        buffers = {
            (a, b): buf for (s, a, b), buf in env.buffers.items() if s == sess
        }
        if not pco(proto.gtype, locals_by_role, buffers, max_nodes):
            errors.append(f"session {sess} is not coherent with {proto.name}")
    return errors


def check_running(env: Env, chor: Chor, dep: Deployment) -> list[str]:
    errors = check_deployment(env, dep)
    errors.extend(check_coherence(env))
    try:
        check_term(env.clone(), chor)
    except TypingError as exc:
        errors.append(str(exc))
    return errors
