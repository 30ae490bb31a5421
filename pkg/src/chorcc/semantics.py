"""Reduction semantics of choreographies over correlation deployments.

A configuration pairs a choreography with a deployment.  Reductions are
enumerated by scanning each parallel component for exposable prefixes: a
prefix may fire even under earlier prefixes as long as the processes it
touches are disjoint from everything scanned past, and only plain
communications (complete, partial send, single-branch reception) may be
scanned past.  Session starts, conditionals, and branching receptions end
the scan for their component.

Recursion is unfolded structurally when the scan reaches a call, and
parallel composition is flattened at the top level, so structural
congruence never has to be searched separately.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .ast import (
    Acc, Branch, Call, Chor, Com, Cond, Def, Inact, Par, Recv, Req, Send,
    Start, ZERO, par_components, par_of, prefix_processes, rename_processes,
    rename_session,
)
from .deployment import (
    Deployment, DeploymentError, KeyGen, CensusKeyGen, apply_recv, apply_send,
    apply_start, peek_message, set_state,
)
from .expressions import evaluate
from .trees import Tree, canon_text

Effect = tuple  # first element is the rule tag; shape depends on the tag


@dataclass(frozen=True)
class Config:
    chor: Chor
    dep: Deployment


@dataclass
class Redex:
    tag: str
    desc: str
    fire: Callable[[], tuple[Effect, Config]]


class StuckBranch(Exception):
    """A reception whose waiting message matches no branch."""


# ------------------------------------------------------------- normal forms

def normalize(c: Chor) -> Chor:
    """Congruence-aware normal form: parallel flattened and sorted, inactive
    units dropped, definitions with an inactive scope erased."""
    if isinstance(c, Inact):
        return c
    if isinstance(c, (Start, Req, Acc, Com, Send)):
        return type(c)(**{**_fields(c), "cont": normalize(c.cont)})
    if isinstance(c, Recv):
        branches = tuple(Branch(b.op, b.var, normalize(b.cont)) for b in c.branches)
        return Recv(c.session, c.srole, c.receiver, c.rrole, branches)
    if isinstance(c, Cond):
        return Cond(c.proc, c.expr, normalize(c.then), normalize(c.els))
    if isinstance(c, Def):
        body = normalize(c.body)
        cont = normalize(c.cont)
        if cont == ZERO:
            return ZERO
        return Def(c.name, c.params, body, cont)
    if isinstance(c, Call):
        return c
    if isinstance(c, Par):
        parts = [normalize(p) for p in par_components(c)]
        parts = [p for p in parts if p != ZERO]
        parts.sort(key=_render_key)
        return par_of(parts)
    raise TypeError(f"not a choreography: {c!r}")


def _fields(c) -> dict:
    return {k: getattr(c, k) for k in c.__dataclass_fields__}


def _render_key(c: Chor) -> str:
    from .parser import print_choreography
    return print_choreography(c)


def alpha_canonical(c: Chor) -> Chor:
    """Rename bound sessions and processes in traversal order; comparison
    helper for tests, not used by the reduction graph itself."""
    counter = {"s": 0, "p": 0}

    def fresh(kind: str) -> str:
        counter[kind] += 1
        return f"${kind}{counter[kind]}"

    def walk(term: Chor) -> Chor:
        if isinstance(term, (Start, Acc)):
            term2 = rename_session(term, term.session, fresh("s"))
            mapping = {s.proc: fresh("p") for s in term2.services}
            return _shallow_walk(rename_processes(term2, mapping))
        if isinstance(term, Req):
            return _shallow_walk(rename_session(term, term.session, fresh("s")))
        return _shallow_walk(term)

    def _shallow_walk(term: Chor) -> Chor:
        if isinstance(term, (Start, Req, Acc, Com, Send)):
            return type(term)(**{**_fields(term), "cont": walk(term.cont)})
        if isinstance(term, Recv):
            branches = tuple(Branch(b.op, b.var, walk(b.cont)) for b in term.branches)
            return Recv(term.session, term.srole, term.receiver, term.rrole, branches)
        if isinstance(term, Cond):
            return Cond(term.proc, term.expr, walk(term.then), walk(term.els))
        if isinstance(term, Def):
            return Def(term.name, term.params, walk(term.body), walk(term.cont))
        if isinstance(term, Par):
            return par_of([walk(p) for p in par_components(term)])
        return term

    return normalize(walk(normalize(c)))


def is_terminated(c: Chor) -> bool:
    """Finished up to congruence once reusable accept modules are set aside."""
    live = [p for p in par_components(normalize(c)) if not isinstance(p, Acc)]
    return not live


# -------------------------------------------------------------- fresh names

def used_session_names(dep: Deployment) -> frozenset[str]:
    used = set()
    for _, info in dep.procs:
        for label, _ in info.state.children:
            used.add(label)
    return frozenset(used)


def fresh_name(base: str, used: frozenset[str] | set[str]) -> str:
    if base not in used:
        return base
    n = 1
    while f"{base}${n}" in used:
        n += 1
    return f"{base}${n}"


# ------------------------------------------------------------ redex scanning

def _with_cont(c: Chor, cont: Chor) -> Chor:
    return type(c)(**{**_fields(c), "cont": cont})


def _scan_component(
    comp: Chor,
    rebuild: Callable[[Chor], Chor],
    blocked: frozenset[str],
    penv: dict[str, Chor],
    visited: frozenset[str],
    out: list,
) -> None:
    """Collect exposable prefixes of one sequential component.

    rebuild(new) reconstructs the component with this position replaced.
    """
    if isinstance(comp, Inact):
        return
    if isinstance(comp, (Com, Send)) or (isinstance(comp, Recv) and len(comp.branches) == 1):
        procs = prefix_processes(comp)
        if not (procs & blocked):
            out.append((comp, rebuild, penv))
        cont = comp.branches[0].cont if isinstance(comp, Recv) else comp.cont
        if isinstance(comp, Recv):
            def rb(new, _c=comp, _r=rebuild):
                b = _c.branches[0]
                return _r(Recv(_c.session, _c.srole, _c.receiver, _c.rrole,
                               (Branch(b.op, b.var, new),)))
        else:
            def rb(new, _c=comp, _r=rebuild):
                return _r(_with_cont(_c, new))
        _scan_component(cont, rb, blocked | procs, penv, visited, out)
        return
    if isinstance(comp, (Start, Req, Cond)) or (isinstance(comp, Recv) and len(comp.branches) > 1):
        procs = prefix_processes(comp)
        if not (procs & blocked):
            out.append((comp, rebuild, penv))
        return
    if isinstance(comp, Def):
        penv2 = dict(penv)
        penv2[comp.name] = comp.body

        def rb(new, _c=comp, _r=rebuild):
            return _r(Def(_c.name, _c.params, _c.body, new))
        _scan_component(comp.cont, rb, blocked, penv2, visited, out)
        return
    if isinstance(comp, Call):
        body = penv.get(comp.name)
        if body is None or comp.name in visited:
            return
        # unfolding is structural: the successor keeps the unfolded body
        _scan_component(body, rebuild, blocked, penv, visited | {comp.name}, out)
        return
    if isinstance(comp, (Par, Acc)):
        # nested parallel is exposed only when the guarding prefixes fire;
        # accept modules fire jointly with a request, not on their own
        return
    raise TypeError(f"not a choreography: {comp!r}")


def enumerate_redexes(config: Config, keygen: KeyGen | None = None) -> list[Redex]:
    keygen = keygen or CensusKeyGen()
    comps = par_components(config.chor)
    redexes: list[Redex] = []

    acc_indexes = [i for i, c in enumerate(comps) if isinstance(c, Acc)]

    for idx, comp in enumerate(comps):
        def rebuild_component(new: Chor, _i=idx) -> Chor:
            parts = comps[:_i] + [new] + comps[_i + 1:]
            return par_of([p for p in parts if p != ZERO])

        found: list = []
        _scan_component(comp, rebuild_component, frozenset(), {}, frozenset(), found)
        for term, rebuild, penv in found:
            r = _redex_for(config, term, rebuild, comps, acc_indexes, keygen)
            if r is not None:
                redexes.append(r)
    return redexes


def _redex_for(config, term, rebuild, comps, acc_indexes, keygen) -> Redex | None:
    dep = config.dep

    if isinstance(term, Com):
        info = dep.get(term.sender)
        if info is None or evaluate(term.expr, info.state) is None:
            return None

        def fire(_t=term, _rb=rebuild):
            payload = evaluate(_t.expr, dep.get(_t.sender).state)
            d1 = apply_send(dep, _t.sender, _t.session, _t.srole, _t.rrole,
                            _t.op, payload)
            got = apply_recv(d1, _t.receiver, _t.session, _t.srole, _t.rrole, _t.var)
            if got is None:
                raise DeploymentError(
                    f"complete communication on {_t.session!r} could not receive"
                )
            d2, (op, tree) = got
            if op != _t.op:
                raise StuckBranch(f"queued operation {op!r} arrived before {_t.op!r}")
            eff = ("com", _t.session, _t.sender, _t.srole, _t.receiver,
                   _t.rrole, _t.op, _t.var, canon_text(tree))
            return eff, Config(_rb(_t.cont), d2)

        return Redex("com", _effect_desc_com(term), fire)

    if isinstance(term, Send):
        info = dep.get(term.sender)
        if info is None or evaluate(term.expr, info.state) is None:
            return None

        def fire(_t=term, _rb=rebuild):
            payload = evaluate(_t.expr, dep.get(_t.sender).state)
            d1 = apply_send(dep, _t.sender, _t.session, _t.srole, _t.rrole,
                            _t.op, payload)
            eff = ("msend", _t.session, _t.sender, _t.srole, _t.rrole, _t.op,
                   canon_text(payload))
            return eff, Config(_rb(_t.cont), d1)

        return Redex("send", f"{term.session}: {term.sender}[{term.srole}] -> {term.rrole}.{term.op}", fire)

    if isinstance(term, Recv):
        head = peek_message(dep, term.receiver, term.session, term.srole, term.rrole)
        if head is None:
            return None
        branch = next((b for b in term.branches if b.op == head[0]), None)
        if branch is None:
            return None

        def fire(_t=term, _b=branch, _rb=rebuild):
            got = apply_recv(dep, _t.receiver, _t.session, _t.srole, _t.rrole, _b.var)
            assert got is not None
            d1, (op, tree) = got
            eff = ("mrecv", _t.session, _t.srole, _t.receiver, _t.rrole, op,
                   _b.var, canon_text(tree))
            return eff, Config(_rb(_b.cont), d1)

        return Redex("recv", f"{term.session}: {term.srole} -> {term.receiver}[{term.rrole}].{head[0]}", fire)

    if isinstance(term, Cond):
        info = dep.get(term.proc)
        if info is None:
            return None
        guard = evaluate(term.expr, info.state)
        if guard is None or not isinstance(guard.value, bool):
            return None

        def fire(_t=term, _g=guard.value, _rb=rebuild):
            eff = ("cond", _t.proc, _g)
            return eff, Config(_rb(_t.then if _g else _t.els), dep)

        return Redex("cond", f"if {term.proc} -> {guard.value}", fire)

    if isinstance(term, Start):
        if dep.get(term.starter_proc) is None:
            return None

        def fire(_t=term, _rb=rebuild):
            used_p = set(dep.names())
            used_s = set(used_session_names(dep))
            sess = fresh_name(_t.session, used_s)
            starter_loc = dep.get(_t.starter_proc).loc
            spawned = []
            pmap = {}
            for s in _t.services:
                p2 = fresh_name(s.proc, used_p)
                used_p.add(p2)
                pmap[s.proc] = p2
                spawned.append((s.role, p2, s.loc))
            participants = ((_t.starter_role, _t.starter_proc, starter_loc),) + tuple(spawned)
            d1 = apply_start(dep, sess, participants, keygen)
            cont = _t.cont
            if sess != _t.session:
                cont = rename_session(cont, _t.session, sess)
            if pmap:
                cont = rename_processes(cont, pmap)
            eff = ("start", sess, participants)
            return eff, Config(_rb(cont), d1)

        return Redex("start", f"start {term.session} by {term.starter_proc}", fire)

    if isinstance(term, Req):
        covers = _acc_covers(term, comps, acc_indexes)
        if not covers:
            return None
        cover = covers[0]

        def fire(_t=term, _cover=cover, _rb=rebuild):
            return _fire_pstart(config, _t, _rb, comps, _cover, keygen)

        return Redex("pstart", f"req {term.session} by {term.starter_proc}", fire)

    return None


def _effect_desc_com(term: Com) -> str:
    return (f"{term.session}: {term.sender}[{term.srole}] -> "
            f"{term.receiver}[{term.rrole}].{term.op}")


def _acc_covers(req: Req, comps, acc_indexes) -> list[tuple[int, ...]]:
    """Index sets of accept components that exactly cover the requested
    located roles, in deterministic order."""
    want = sorted((s.loc, s.role) for s in req.services)

    offers = []
    for i in acc_indexes:
        acc = comps[i]
        offers.append((i, sorted((s.loc, s.role) for s in acc.services)))

    results: list[tuple[int, ...]] = []

    def search(remaining, chosen, start):
        if len(results) >= 8:
            return
        if not remaining:
            results.append(tuple(chosen))
            return
        for j in range(start, len(offers)):
            i, roles = offers[j]
            if all(r in remaining for r in roles) and _multisubset(roles, remaining):
                rest = list(remaining)
                for r in roles:
                    rest.remove(r)
                search(rest, chosen + [i], j + 1)

    search(list(want), [], 0)
    return results


def _multisubset(small, big) -> bool:
    pool = list(big)
    for x in small:
        if x in pool:
            pool.remove(x)
        else:
            return False
    return True


def _fire_pstart(config, req: Req, rebuild, comps, cover: tuple[int, ...], keygen):
    dep = config.dep
    if dep.get(req.starter_proc) is None:
        raise DeploymentError(f"unknown starter process {req.starter_proc!r}")
    used_p = set(dep.names())
    used_s = set(used_session_names(dep))
    sess = fresh_name(req.session, used_s)
    starter_loc = dep.get(req.starter_proc).loc

    spawned: list[tuple[str, str, str]] = []
    copies: list[Chor] = []
    for i in cover:
        acc: Acc = comps[i]
        pmap = {}
        for s in acc.services:
            p2 = fresh_name(s.proc, used_p)
            used_p.add(p2)
            pmap[s.proc] = p2
            spawned.append((s.role, p2, s.loc))
        copy = acc.cont
        if acc.session != sess:
            copy = rename_session(copy, acc.session, sess)
        copy = rename_processes(copy, pmap)
        copies.append(copy)

    spawned.sort(key=lambda rpl: (rpl[2], rpl[0]))
    participants = ((req.starter_role, req.starter_proc, starter_loc),) + tuple(spawned)
    d1 = apply_start(dep, sess, participants, keygen)

    cont = req.cont
    if sess != req.session:
        cont = rename_session(cont, req.session, sess)

    new_chor = par_of(
        [p for p in par_components(rebuild(cont)) if p != ZERO] + copies
    )
    eff = ("pstart", sess, participants)
    return eff, Config(new_chor, d1)


# ------------------------------------------------------------------ running

def effect_text(eff: Effect) -> str:
    tag = eff[0]
    if tag in ("start", "pstart"):
        _, sess, participants = eff
        body = ", ".join(f"{p}[{r}]@{l}" for r, p, l in participants)
        return f"{tag} {sess} {body}"
    if tag == "com":
        _, sess, p, a, q, b, op, _var, payload = eff
        return f"{sess}: {p}[{a}] -> {q}[{b}].{op} {payload}"
    if tag == "msend":
        _, sess, p, a, b, op, payload = eff
        return f"{sess}: {p}[{a}] -> {b}.{op} {payload}"
    if tag == "mrecv":
        _, sess, a, q, b, op, _var, payload = eff
        return f"{sess}: {a} -> {q}[{b}].{op} {payload}"
    if tag == "cond":
        _, p, guard = eff
        return f"if {p} -> {str(guard).lower()}"
    return repr(eff)


@dataclass
class RunResult:
    config: Config
    trace: list[str]
    status: str  # terminated | stuck | max-steps | error: <msg>
    effects: list[Effect]


def run(
    config: Config,
    seed: int | None = None,
    max_steps: int = 1000,
    script: list[int] | None = None,
    keygen: KeyGen | None = None,
) -> RunResult:
    rng = random.Random(seed)
    trace: list[str] = []
    effects: list[Effect] = []
    cur = config
    for n in range(max_steps):
        redexes = enumerate_redexes(cur, keygen)
        if not redexes:
            status = "terminated" if is_terminated(cur.chor) else "stuck"
            return RunResult(cur, trace, status, effects)
        if script is not None:
            if n >= len(script):
                return RunResult(cur, trace, "max-steps", effects)
            pick = redexes[script[n] % len(redexes)]
        elif seed is None:
            pick = redexes[0]
        else:
            pick = rng.choice(redexes)
        try:
            eff, cur = pick.fire()
        except (DeploymentError, StuckBranch) as exc:
            trace.append(f"step {n} rule={pick.tag} error={exc}")
            return RunResult(cur, trace, f"error: {exc}", effects)
        effects.append(eff)
        trace.append(f"step {n} rule={pick.tag} effect={effect_text(eff)}")
    return RunResult(cur, trace, "max-steps", effects)
