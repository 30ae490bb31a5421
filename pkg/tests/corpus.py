"""Seeded generator of small well-typed programs.

Each program opens one or two sessions with complete starts, runs a
handful of communications, and may branch on a conditional whose
outcome is announced to a peer through distinct operations.  Branch
continuations share their tail, so every program projects and merges
without surprises.  Service locations are pairwise distinct so each
program also compiles to a network with one service per location.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from chorcc.ast import Chor, Com, Cond, LocatedProc, Start, ZERO
from chorcc.expressions import BinOp, Expr, Lit, PathRead, TreeExpr
from chorcc.parser import Placement, Program, Protocol
from chorcc.sessiontypes import (
    BOOL, INT, STR, CarriedType, G_END, GBranch, GComm, GlobalType,
)
from chorcc.trees import Path, tree_of

WORDS = ["ack", "blob", "left", "right", "go", "halt", "sum", "key"]


@dataclass
class _Proc:
    name: str
    loc: str
    vars: dict[str, CarriedType] = field(default_factory=dict)
    fresh: int = 0

    def new_var(self) -> str:
        self.fresh += 1
        return f"v{self.fresh}"


def _payload(rng: random.Random, p: _Proc) -> tuple[Expr, CarriedType]:
    """An expression over p's known variables together with its type."""
    typed = list(p.vars.items())
    roll = rng.random()
    if typed and roll < 0.55:
        var, t = rng.choice(typed)
        if t == INT and rng.random() < 0.4:
            return BinOp("+", PathRead(Path((var,))), Lit(rng.randint(1, 3))), INT
        return PathRead(Path((var,))), t
    if roll < 0.7:
        return Lit(rng.randint(0, 9)), INT
    if roll < 0.9:
        return Lit(rng.choice(WORDS)), STR
    inner, t = Lit(rng.choice(WORDS)), STR
    return TreeExpr((("data", inner),)), CarriedType(None, (("data", t),))


def _guard(rng: random.Random, p: _Proc) -> Expr:
    bools = [v for v, t in p.vars.items() if t == BOOL]
    if bools and rng.random() < 0.4:
        return PathRead(Path((rng.choice(bools),)))
    a, b = rng.randint(0, 5), rng.randint(0, 5)
    if rng.random() < 0.5:
        return BinOp("<", Lit(a), Lit(b))
    return BinOp("=", Lit(a), Lit(b))


@dataclass
class _Session:
    name: str
    protocol: str
    starter: _Proc
    starter_role: str
    services: list[tuple[_Proc, str]]  # (process, role)
    items: list = field(default_factory=list)
    gtype: GlobalType = G_END

    @property
    def parts(self) -> list[tuple[_Proc, str]]:
        return [(self.starter, self.starter_role)] + self.services


def _gen_items(rng: random.Random, sess: _Session, n_comms: int,
               conds: int, ops: list[int]) -> list:
    """Plan a conversation forward so every read has a prior binding."""
    items = []
    for _ in range(n_comms):
        parts = sess.parts
        if conds > 0 and rng.random() < 0.35:
            chooser, crole = rng.choice(parts)
            peer, prole = rng.choice(
                [pr for pr in parts if pr[0] is not chooser])
            ops[0] += 1
            base = f"m{ops[0]}"
            payload, t = _payload(rng, chooser)
            var = peer.new_var()
            peer.vars[var] = t
            items.append(("branch", chooser, crole, _guard(rng, chooser),
                          peer, prole, base, payload, t, var))
            conds -= 1
        else:
            sender, srole = rng.choice(parts)
            receiver, rrole = rng.choice(
                [pr for pr in parts if pr[0] is not sender])
            ops[0] += 1
            op = f"m{ops[0]}"
            payload, t = _payload(rng, sender)
            var = receiver.new_var()
            receiver.vars[var] = t
            items.append(("com", sender, srole, payload,
                          receiver, rrole, op, var, t))
    return items


def _fold(sess: _Session, cont: Chor) -> tuple[Chor, GlobalType]:
    """Build the session body and its global type from the planned items."""
    chor: Chor = cont
    g: GlobalType = G_END
    for item in reversed(sess.items):
        if item[0] == "com":
            _, sender, srole, payload, receiver, rrole, op, var, t = item
            chor = Com(sess.name, sender.name, srole, payload,
                       receiver.name, rrole, op, var, chor)
            g = GComm(srole, rrole, (GBranch(op, t, g),))
        else:
            (_, chooser, crole, guard, peer, prole,
             base, payload, t, var) = item
            then = Com(sess.name, chooser.name, crole, payload,
                       peer.name, prole, f"{base}yes", var, chor)
            els = Com(sess.name, chooser.name, crole, payload,
                      peer.name, prole, f"{base}no", var, chor)
            chor = Cond(chooser.name, guard, then, els)
            g = GComm(crole, prole, (
                GBranch(f"{base}yes", t, g), GBranch(f"{base}no", t, g)))
    return chor, g


def generate(seed: int) -> Program:
    rng = random.Random(seed)
    two_sessions = rng.random() < 0.45
    starter = _Proc("p", "lp", {"msg": STR, "n": INT, "ok": BOOL})
    state = tree_of({
        "msg": rng.choice(WORDS),
        "n": rng.randint(0, 9),
        "ok": rng.random() < 0.5,
    })

    svc_budget = 3
    svc_locs = iter(["ls0", "ls1", "ls2"])
    svc_names = iter(["q0", "q1", "q2"])
    roles = ["B", "C", "D"]

    def make_session(idx: int, boss: _Proc, n_services: int) -> _Session:
        services = []
        for i in range(n_services):
            proc = _Proc(next(svc_names), next(svc_locs))
            services.append((proc, roles[i]))
        services.sort(key=lambda pr: pr[0].loc)
        return _Session(f"k{idx}", f"P{idx}", boss, "A", services)

    if two_sessions:
        first_n = rng.randint(1, svc_budget - 1)
        s0 = make_session(0, starter, first_n)
        boss2 = rng.choice([starter] + [pr[0] for pr in s0.services])
        s1 = make_session(1, boss2, rng.randint(1, svc_budget - first_n))
        sessions = [s0, s1]
    else:
        sessions = [make_session(0, starter, rng.randint(1, svc_budget))]

    total_comms = rng.randint(2, 6)
    conds_total = rng.randint(0, 2)
    ops = [0]

    budgets = []
    remaining = total_comms
    for i in range(len(sessions)):
        if i == len(sessions) - 1:
            share = remaining
        else:
            share = rng.randint(1, remaining - (len(sessions) - 1 - i))
        budgets.append(share)
        remaining -= share

    for i, (sess, share) in enumerate(zip(sessions, budgets)):
        sess.items = _gen_items(rng, sess, share,
                                conds_total if i == 0 else 0, ops)

    chor: Chor = ZERO
    for sess in reversed(sessions):
        chor, g = _fold(sess, chor)
        located = tuple(sorted(
            (LocatedProc(proc.loc, proc.name, role)
             for proc, role in sess.services),
            key=lambda lp: lp.loc))
        chor = Start(sess.name, sess.starter.name, sess.starter_role,
                     located, chor)
        sess.gtype = g

    protocols = tuple(
        Protocol(
            sess.protocol, sess.starter_role,
            tuple(sorted(((role, proc.loc) for proc, role in sess.services),
                         key=lambda rl: rl[1])),
            sess.gtype,
        )
        for sess in sessions
    )
    placements = (Placement("p", "lp", state),)
    return Program(protocols, placements, chor)


def corpus(count: int = 24, start_seed: int = 0) -> list[tuple[int, Program]]:
    return [(seed, generate(seed))
            for seed in range(start_seed, start_seed + count)]
