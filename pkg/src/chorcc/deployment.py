"""Deployments: located processes with state trees and correlation queues.

A deployment maps process names to a location, a state tree, and a set of
message queues.  Each queue is identified by a correlation key, itself a
tree.  Sessions leave a descriptor in every participant's state: under the
session's path, for each role X, the location of X sits at X.l and the key
X must use to reach role Y sits at X.Y.  The queue for that key lives with
Y's process.

Delivery looks the key up among the queues at the destination location.
Exactly one queue must match; zero is a lost message and more than one is
a correlation race, reported as distinct errors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .trees import EMPTY, Loc, Path, Tree, canon_text, leaf, node, replace, resolve, to_obj, from_obj

Msg = tuple[str, Tree]  # operation, payload


class DeploymentError(Exception):
    pass


class CorrelationRace(DeploymentError):
    """A key matched more than one queue at the destination location."""


class MissingQueue(DeploymentError):
    """A key matched no queue at the destination location."""


@dataclass(frozen=True)
class ProcessInfo:
    loc: str
    state: Tree
    queues: tuple[tuple[Tree, tuple[Msg, ...]], ...] = ()

    def __post_init__(self) -> None:
        keys = [canon_text(k) for k, _ in self.queues]
        if keys != sorted(keys):
            object.__setattr__(
                self, "queues",
                tuple(sorted(self.queues, key=lambda kq: canon_text(kq[0]))),
            )
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate queue key on one process")

    def queue(self, key: Tree) -> tuple[Msg, ...] | None:
        for k, msgs in self.queues:
            if k == key:
                return msgs
        return None

    def with_queue(self, key: Tree, msgs: tuple[Msg, ...]) -> "ProcessInfo":
        rest = tuple((k, m) for k, m in self.queues if k != key)
        return ProcessInfo(self.loc, self.state, rest + ((key, msgs),))

    def with_state(self, state: Tree) -> "ProcessInfo":
        return ProcessInfo(self.loc, state, self.queues)


@dataclass(frozen=True)
class Deployment:
    procs: tuple[tuple[str, ProcessInfo], ...] = ()

    def __post_init__(self) -> None:
        names = [p for p, _ in self.procs]
        if names != sorted(names):
            object.__setattr__(
                self, "procs", tuple(sorted(self.procs, key=lambda pi: pi[0]))
            )
        if len(set(names)) != len(names):
            raise ValueError("duplicate process name in deployment")

    def get(self, proc: str) -> ProcessInfo | None:
        for p, info in self.procs:
            if p == proc:
                return info
        return None

    def names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.procs)

    def at(self, loc: str) -> tuple[tuple[str, ProcessInfo], ...]:
        return tuple((p, i) for p, i in self.procs if i.loc == loc)

    def locations(self) -> tuple[str, ...]:
        return tuple(sorted({i.loc for _, i in self.procs}))

    def put(self, proc: str, info: ProcessInfo) -> "Deployment":
        rest = tuple((p, i) for p, i in self.procs if p != proc)
        return Deployment(rest + ((proc, info),))


def initial_deployment(placements) -> Deployment:
    return Deployment(
        tuple((pl.proc, ProcessInfo(pl.loc, pl.state)) for pl in placements)
    )


# ---------------------------------------------------------------- key minting

class KeyGen:
    def mint(self, existing: list[Tree], loc: str) -> Tree:
        """A key for a new queue at loc, given the queue keys already there."""
        raise NotImplementedError


class CensusKeyGen(KeyGen):
    """Deterministic, stateless: count the queues already at the location.

    Both semantic levels mint through the same census, so runs that perform
    the same queue creations in the same order agree on every key.
    """

    def mint(self, existing: list[Tree], loc: str) -> Tree:
        taken = {canon_text(k) for k in existing}
        n = len(existing)
        while canon_text(leaf(f"{loc}#{n}")) in taken:
            n += 1
        return leaf(f"{loc}#{n}")


class BrokenKeyGen(KeyGen):
    """Always mints the same key per location; provokes correlation races."""

    def mint(self, existing: list[Tree], loc: str) -> Tree:
        return leaf(f"{loc}#0")


def keys_at(dep: Deployment, loc: str) -> list[Tree]:
    out = []
    for _, info in dep.at(loc):
        for k, _ in info.queues:
            out.append(k)
    return out


# ----------------------------------------------------------- session support

LOC_LABEL = "l"  # descriptor slot for a role's location; reserved role name


def descriptor_key(desc: Tree, sender_role: str, receiver_role: str) -> Tree | None:
    return resolve(desc, Path((sender_role, receiver_role)))


def descriptor_loc(desc: Tree, role: str) -> str | None:
    t = resolve(desc, Path((role, LOC_LABEL)))
    if t is not None and isinstance(t.value, Loc):
        return t.value.name
    return None


def descriptor_of(dep: Deployment, proc: str, session: str) -> Tree | None:
    info = dep.get(proc)
    if info is None:
        return None
    return resolve(info.state, Path((session,)))


def build_descriptor(
    roles: tuple[str, ...],
    locs: dict[str, str],
    keys: dict[tuple[str, str], Tree],
) -> Tree:
    entries: dict[str, Tree] = {}
    for x in roles:
        slots: dict[str, Tree] = {LOC_LABEL: leaf(Loc(locs[x]))}
        for y in roles:
            if y != x:
                slots[y] = keys[(x, y)]
        entries[x] = node(slots)
    return node(entries)


def apply_start(
    dep: Deployment,
    session: str,
    participants: tuple[tuple[str, str, str], ...],  # (role, proc, loc), starter first
    keygen: KeyGen,
) -> Deployment:
    """Create the session: spawn service processes, mint queues, write the
    descriptor into every participant's state under the session's path.

    Keys are minted receiver-major in the given role order, so the census
    matches a compiled network performing the same creations.
    """
    starter_role, starter_proc, _ = participants[0]
    if dep.get(starter_proc) is None:
        raise DeploymentError(f"unknown starter process {starter_proc!r}")
    work = dep
    for role, proc, loc in participants[1:]:
        if work.get(proc) is not None:
            raise DeploymentError(f"process name {proc!r} already deployed")
        work = work.put(proc, ProcessInfo(loc, EMPTY))

    roles = tuple(r for r, _, _ in participants)
    locs = {r: l for r, _, l in participants}
    by_role = {r: p for r, p, _ in participants}
    keys: dict[tuple[str, str], Tree] = {}
    for receiver in roles:
        rproc = by_role[receiver]
        for sender in roles:
            if sender == receiver:
                continue
            key = keygen.mint(keys_at(work, locs[receiver]), locs[receiver])
            keys[(sender, receiver)] = key
            info = work.get(rproc)
            assert info is not None
            if info.queue(key) is not None:
                raise CorrelationRace(
                    f"minted key {canon_text(key)} already queued at {rproc!r}"
                )
            work = work.put(rproc, info.with_queue(key, ()))

    desc = build_descriptor(roles, locs, keys)
    for role, proc, _ in participants:
        info = work.get(proc)
        assert info is not None
        work = work.put(proc, info.with_state(replace(info.state, Path((session,)), desc)))
    return work


def session_support(
    dep: Deployment,
    session: str,
    members: tuple[tuple[str, str], ...],  # (role, proc)
) -> bool:
    """All members carry the same complete descriptor, sit at the location
    the descriptor claims for their role, and own their incoming queues."""
    descs = []
    for role, proc in members:
        d = descriptor_of(dep, proc, session)
        if d is None:
            return False
        descs.append(d)
    if any(d != descs[0] for d in descs[1:]):
        return False
    desc = descs[0]
    roles = [r for r, _ in members]
    for role, proc in members:
        info = dep.get(proc)
        if info is None or descriptor_loc(desc, role) != info.loc:
            return False
        for other in roles:
            if other == role:
                continue
            key = descriptor_key(desc, other, role)
            if key is None or info.queue(key) is None:
                return False
    return True


# -------------------------------------------------------------------- effects

def deliver(dep: Deployment, loc: str, key: Tree, op: str, payload: Tree) -> Deployment:
    """Append a message to the queue matching the key at the location."""
    owners = [
        (p, info) for p, info in dep.at(loc) if info.queue(key) is not None
    ]
    if len(owners) > 1:
        names = ", ".join(p for p, _ in owners)
        raise CorrelationRace(
            f"key {canon_text(key)} matches queues of {names} at {loc}"
        )
    if not owners:
        raise MissingQueue(f"no queue for key {canon_text(key)} at {loc}")
    proc, info = owners[0]
    msgs = info.queue(key)
    assert msgs is not None
    return dep.put(proc, info.with_queue(key, msgs + ((op, payload),)))


def apply_send(
    dep: Deployment,
    sender_proc: str,
    session: str,
    sender_role: str,
    receiver_role: str,
    op: str,
    payload: Tree,
) -> Deployment:
    desc = descriptor_of(dep, sender_proc, session)
    if desc is None:
        raise MissingQueue(f"{sender_proc!r} holds no session {session!r}")
    key = descriptor_key(desc, sender_role, receiver_role)
    loc = descriptor_loc(desc, receiver_role)
    if key is None or loc is None:
        raise MissingQueue(
            f"descriptor of {session!r} at {sender_proc!r} lacks {receiver_role!r}"
        )
    return deliver(dep, loc, key, op, payload)


def peek_message(
    dep: Deployment, receiver_proc: str, session: str,
    sender_role: str, receiver_role: str,
) -> Msg | None:
    """Head of the queue the sender role writes to, if any message waits."""
    desc = descriptor_of(dep, receiver_proc, session)
    if desc is None:
        return None
    key = descriptor_key(desc, sender_role, receiver_role)
    if key is None:
        return None
    info = dep.get(receiver_proc)
    assert info is not None
    msgs = info.queue(key)
    if not msgs:
        return None
    return msgs[0]


def apply_recv(
    dep: Deployment, receiver_proc: str, session: str,
    sender_role: str, receiver_role: str, var: str | None,
) -> tuple[Deployment, Msg] | None:
    """Pop the head message and bind the payload to the variable, if present."""
    desc = descriptor_of(dep, receiver_proc, session)
    if desc is None:
        return None
    key = descriptor_key(desc, sender_role, receiver_role)
    if key is None:
        return None
    info = dep.get(receiver_proc)
    assert info is not None
    msgs = info.queue(key)
    if not msgs:
        return None
    head, rest = msgs[0], msgs[1:]
    info = info.with_queue(key, rest)
    if var is not None:
        info = info.with_state(replace(info.state, Path((var,)), head[1]))
    return dep.put(receiver_proc, info), head


def set_state(dep: Deployment, proc: str, state: Tree) -> Deployment:
    info = dep.get(proc)
    if info is None:
        raise DeploymentError(f"unknown process {proc!r}")
    return dep.put(proc, info.with_state(state))


# -------------------------------------------------------------- serialization

def dep_to_obj(dep: Deployment):
    out = {}
    for p, info in dep.procs:
        out[p] = {
            "loc": info.loc,
            "state": to_obj(info.state),
            "queues": [
                {"key": to_obj(k), "msgs": [[op, to_obj(t)] for op, t in msgs]}
                for k, msgs in info.queues
            ],
        }
    return out


def dep_from_obj(obj) -> Deployment:
    procs = []
    for p, rec in obj.items():
        queues = tuple(
            (from_obj(q["key"]), tuple((op, from_obj(t)) for op, t in q["msgs"]))
            for q in rec["queues"]
        )
        procs.append((p, ProcessInfo(rec["loc"], from_obj(rec["state"]), queues)))
    return Deployment(tuple(procs))
