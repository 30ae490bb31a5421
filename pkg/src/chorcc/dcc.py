"""Correlation-based process networks: the execution target.

A network is a set of located processes, each owning a state tree, message
queues addressed by correlation keys, and a behaviour, plus one service
per location that spawns a fresh process for every arriving request.
Nothing references a process by name at runtime: outputs find their
destination queue by location and key alone.

Behaviours are sequential: create a queue (minting its key through the
shared census), request a spawn, output to a located queue, receive from
an owned queue with branching, branch on a local expression, and loop
through named procedures.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deployment import (
    CensusKeyGen, CorrelationRace, DeploymentError, KeyGen, MissingQueue,
    Msg, ProcessInfo,
)
from .expressions import Expr, evaluate, surface_expr
from .trees import EMPTY, Loc, Path, Tree, canon_text, replace, resolve


class DccError(Exception):
    pass


# -------------------------------------------------------------- behaviours

@dataclass(frozen=True)
class DInact:
    pass


@dataclass(frozen=True)
class InBranch:
    op: str
    var: Path | None
    cont: "Behaviour"


@dataclass(frozen=True)
class Input:
    """Receive from the owned queue named by key; bind the payload."""

    key: Expr
    branches: tuple[InBranch, ...]


@dataclass(frozen=True)
class Output:
    """Send op(payload) to the queue under key at the destination."""

    dest: Expr
    op: str
    payload: Expr
    key: Expr
    cont: "Behaviour"


@dataclass(frozen=True)
class Request:
    """Ask the service at a location to spawn, handing it a payload."""

    loc: str
    payload: Expr
    cont: "Behaviour"


@dataclass(frozen=True)
class CQueue:
    """Create an owned queue with a freshly minted key, stored at path."""

    path: Path
    cont: "Behaviour"


@dataclass(frozen=True)
class DCond:
    expr: Expr
    then: "Behaviour"
    els: "Behaviour"


@dataclass(frozen=True)
class DDef:
    name: str
    body: "Behaviour"
    cont: "Behaviour"


@dataclass(frozen=True)
class DCall:
    name: str


Behaviour = DInact | Input | Output | Request | CQueue | DCond | DDef | DCall

D_ZERO = DInact()


# ----------------------------------------------------------------- network

@dataclass(frozen=True)
class DProc:
    data: ProcessInfo
    behaviour: Behaviour
    defs: tuple[tuple[str, Behaviour], ...] = ()


@dataclass(frozen=True)
class DService:
    loc: str
    var: str
    body: Behaviour


@dataclass(frozen=True)
class Network:
    procs: tuple[tuple[str, DProc], ...]
    services: tuple[DService, ...]

    def __post_init__(self):
        procs = tuple(sorted(self.procs, key=lambda kv: kv[0]))
        names = [n for n, _ in procs]
        if len(set(names)) != len(names):
            raise DccError("duplicate process name in network")
        services = tuple(sorted(self.services, key=lambda s: s.loc))
        locs = [s.loc for s in services]
        if len(set(locs)) != len(locs):
            raise DccError("two services at one location")
        object.__setattr__(self, "procs", procs)
        object.__setattr__(self, "services", services)

    def get(self, name: str) -> DProc | None:
        for n, p in self.procs:
            if n == name:
                return p
        return None

    def put(self, name: str, proc: DProc) -> "Network":
        rest = tuple((n, p) for n, p in self.procs if n != name)
        return Network(rest + ((name, proc),), self.services)

    def service_at(self, loc: str) -> DService | None:
        for s in self.services:
            if s.loc == loc:
                return s
        return None


def keys_at_net(net: Network, loc: str) -> list[Tree]:
    out = []
    for _, p in net.procs:
        if p.data.loc == loc:
            for k, _ in p.data.queues:
                out.append(k)
    return out


def _deliver_net(net: Network, loc: str, key: Tree, op: str, payload: Tree) -> Network:
    owners = [
        name for name, p in net.procs
        if p.data.loc == loc and p.data.queue(key) is not None
    ]
    if len(owners) > 1:
        raise CorrelationRace(
            f"key {canon_text(key)} at {loc} correlates processes {owners}"
        )
    if not owners:
        raise MissingQueue(f"no queue {canon_text(key)} at {loc}")
    name = owners[0]
    proc = net.get(name)
    assert proc is not None
    msgs = proc.data.queue(key)
    assert msgs is not None
    data = proc.data.with_queue(key, msgs + ((op, payload),))
    return net.put(name, DProc(data, proc.behaviour, proc.defs))


# ------------------------------------------------------------------ steps

def _lookup_def(defs: tuple[tuple[str, Behaviour], ...], name: str) -> Behaviour | None:
    for n, b in reversed(defs):
        if n == name:
            return b
    return None


def expose(b: Behaviour, defs: tuple[tuple[str, Behaviour], ...]):
    """Unfold procedure scopes and calls down to the next action."""
    steps = 0
    while True:
        if isinstance(b, DDef):
            defs = defs + ((b.name, b.body),)
            b = b.cont
        elif isinstance(b, DCall):
            body = _lookup_def(defs, b.name)
            if body is None:
                raise DccError(f"call of undefined procedure {b.name!r}")
            steps += 1
            if steps > 64:
                raise DccError(f"procedure {b.name!r} loops without acting")
            b = body
        else:
            return b, defs


@dataclass
class NetRedex:
    tag: str
    proc: str
    desc: str
    fire: "object"


def _fresh_proc_name(net: Network, loc: str) -> str:
    n = len(net.procs)
    while net.get(f"{loc}${n}") is not None:
        n += 1
    return f"{loc}${n}"


def enumerate_network(net: Network, keygen: KeyGen | None = None) -> list[NetRedex]:
    keygen = keygen or CensusKeyGen()
    out: list[NetRedex] = []
    for name, proc in net.procs:
        head, defs = expose(proc.behaviour, proc.defs)
        state = proc.data.state
        loc = proc.data.loc

        if isinstance(head, DInact):
            continue

        if isinstance(head, CQueue):
            def fire(name=name, proc=proc, head=head, defs=defs):
                key = keygen.mint(keys_at_net(net, proc.data.loc), proc.data.loc)
                if proc.data.queue(key) is not None:
                    raise DccError(
                        f"{name!r} minted key {canon_text(key)} twice"
                    )
                data = proc.data.with_queue(key, ())
                data = data.with_state(replace(data.state, head.path, key))
                eff = ("cqueue", name, proc.data.loc, canon_text(key))
                return eff, net.put(name, DProc(data, head.cont, defs))

            out.append(NetRedex("cqueue", name,
                                f"{name} creates queue at {'.'.join(head.path.segments)}",
                                fire))
            continue

        if isinstance(head, Request):
            payload = evaluate(head.payload, state)
            if payload is None:
                continue

            def fire(name=name, proc=proc, head=head, defs=defs, payload=payload):
                svc = net.service_at(head.loc)
                if svc is None:
                    raise DccError(f"no service at location {head.loc!r}")
                spawn = _fresh_proc_name(net, head.loc)
                st = replace(EMPTY, Path((svc.var,)), payload)
                child = DProc(ProcessInfo(head.loc, st), svc.body, ())
                net2 = net.put(name, DProc(proc.data, head.cont, defs))
                eff = ("request", name, head.loc, canon_text(payload))
                return eff, net2.put(spawn, child)

            out.append(NetRedex("request", name,
                                f"{name} requests a process at {head.loc}", fire))
            continue

        if isinstance(head, Output):
            dest = evaluate(head.dest, state)
            key = evaluate(head.key, state)
            payload = evaluate(head.payload, state)
            if dest is None or key is None or payload is None:
                continue
            if not isinstance(dest.value, Loc) or dest.children:
                continue
            dloc = dest.value.name

            def fire(name=name, proc=proc, head=head, defs=defs,
                     dloc=dloc, key=key, payload=payload):
                net2 = _deliver_net(net, dloc, key, head.op, payload)
                proc2 = net2.get(name)
                assert proc2 is not None
                eff = ("out", name, head.op, dloc, canon_text(key),
                       canon_text(payload))
                return eff, net2.put(name, DProc(proc2.data, head.cont, defs))

            out.append(NetRedex("out", name,
                                f"{name} sends {head.op} to {dloc}", fire))
            continue

        if isinstance(head, Input):
            key = evaluate(head.key, state)
            if key is None:
                continue
            msgs = proc.data.queue(key)
            if not msgs:
                continue
            op, payload = msgs[0]
            branch = next((b for b in head.branches if b.op == op), None)
            if branch is None:
                continue

            def fire(name=name, proc=proc, defs=defs, key=key,
                     msgs=msgs, op=op, payload=payload, branch=branch):
                data = proc.data.with_queue(key, msgs[1:])
                if branch.var is not None:
                    data = data.with_state(replace(data.state, branch.var, payload))
                eff = ("recv", name, op, canon_text(key), canon_text(payload))
                return eff, net.put(name, DProc(data, branch.cont, defs))

            out.append(NetRedex("recv", name, f"{name} receives {op}", fire))
            continue

        if isinstance(head, DCond):
            guard = evaluate(head.expr, state)
            if guard is None or guard.children or not isinstance(guard.value, bool):
                continue
            taken = head.then if guard.value else head.els

            def fire(name=name, proc=proc, defs=defs, taken=taken,
                     guard=guard):
                eff = ("cond", name, guard.value)
                return eff, net.put(name, DProc(proc.data, taken, defs))

            out.append(NetRedex("cond", name,
                                f"{name} branches on {str(guard.value).lower()}",
                                fire))
            continue

        raise DccError(f"not a behaviour: {head!r}")
    return out


def network_terminated(net: Network) -> bool:
    for _, proc in net.procs:
        head, _ = expose(proc.behaviour, proc.defs)
        if not isinstance(head, DInact):
            return False
    return True


@dataclass
class NetRunResult:
    network: Network
    trace: list[str]
    status: str  # terminated | stuck | max-steps | error: <msg>
    effects: list[tuple]


def run_network(
    net: Network,
    seed: int | None = None,
    max_steps: int = 2000,
    script: list[int] | None = None,
    keygen: KeyGen | None = None,
) -> NetRunResult:
    import random

    rng = random.Random(seed) if seed is not None else None
    trace: list[str] = []
    effects: list[tuple] = []
    for step in range(max_steps):
        try:
            redexes = enumerate_network(net, keygen)
        except DccError as exc:
            return NetRunResult(net, trace, f"error: {exc}", effects)
        if not redexes:
            status = "terminated" if network_terminated(net) else "stuck"
            return NetRunResult(net, trace, status, effects)
        if script:
            choice = redexes[script[step % len(script)] % len(redexes)]
        elif rng is not None:
            choice = rng.choice(redexes)
        else:
            choice = redexes[0]
        try:
            eff, net = choice.fire()
        except (DccError, DeploymentError) as exc:
            return NetRunResult(net, trace, f"error: {exc}", effects)
        effects.append(eff)
        trace.append(f"step {step + 1} rule={choice.tag} {choice.desc}")
    return NetRunResult(net, trace, "max-steps", effects)


# -------------------------------------------------------------- canonical

def data_canon_net(net: Network) -> tuple:
    """Location, state, and queue contents of every process, nameless."""
    rows = []
    for _, p in net.procs:
        queues = tuple(
            (canon_text(k), tuple((op, canon_text(t)) for op, t in msgs))
            for k, msgs in p.data.queues
        )
        rows.append((p.data.loc, canon_text(p.data.state), queues))
    return tuple(sorted(rows))


def network_canon(net: Network) -> tuple:
    """Full canonical form: data plus residual behaviour, nameless."""
    rows = []
    for _, p in net.procs:
        queues = tuple(
            (canon_text(k), tuple((op, canon_text(t)) for op, t in msgs))
            for k, msgs in p.data.queues
        )
        rows.append((
            p.data.loc, canon_text(p.data.state), queues,
            print_behaviour(p.behaviour),
            tuple((n, print_behaviour(b)) for n, b in p.defs),
        ))
    svc = tuple(
        (s.loc, s.var, print_behaviour(s.body)) for s in net.services
    )
    return (tuple(sorted(rows)), svc)


# ----------------------------------------------------------------- printer

def _surface_path(path: Path) -> str:
    return ".".join(path.segments)


def _print_b(b: Behaviour, indent: int) -> list[str]:
    pad = " " * indent
    if isinstance(b, DInact):
        return [pad + "0"]
    if isinstance(b, CQueue):
        return [pad + f"queue {_surface_path(b.path)};"] + _print_cont(b.cont, indent)
    if isinstance(b, Request):
        return [
            pad + f"request {b.loc}({surface_expr(b.payload)});"
        ] + _print_cont(b.cont, indent)
    if isinstance(b, Output):
        head = (
            f"out {b.op}({surface_expr(b.payload)}) "
            f"to {surface_expr(b.dest)} via {surface_expr(b.key)};"
        )
        return [pad + head] + _print_cont(b.cont, indent)
    if isinstance(b, Input):
        lines = [pad + f"recv {surface_expr(b.key)} {{"]
        for i, br in enumerate(b.branches):
            binder = _surface_path(br.var) if br.var is not None else ""
            lines.append(" " * (indent + 2) + f"{br.op}({binder});")
            body = _print_b(br.cont, indent + 4)
            if i < len(b.branches) - 1:
                body = body[:-1] + [body[-1] + ","]
            lines.extend(body)
        lines.append(pad + "}")
        return lines
    if isinstance(b, DCond):
        lines = [pad + f"if {surface_expr(b.expr)} {{"]
        lines.extend(_print_b(b.then, indent + 2))
        lines.append(pad + "} else {")
        lines.extend(_print_b(b.els, indent + 2))
        lines.append(pad + "}")
        return lines
    if isinstance(b, DDef):
        lines = [pad + f"def {b.name} = {{"]
        lines.extend(_print_b(b.body, indent + 2))
        lines.append(pad + "} in")
        lines.extend(_print_b(b.cont, indent))
        return lines
    if isinstance(b, DCall):
        return [pad + f"{b.name}()"]
    raise DccError(f"not a behaviour: {b!r}")


def _print_cont(b: Behaviour, indent: int) -> list[str]:
    if isinstance(b, DInact):
        return []
    return _print_b(b, indent)


def print_behaviour(b: Behaviour) -> str:
    return "\n".join(_print_b(b, 0))


def _surface_tree(t: Tree) -> str:
    from .trees import surface_text

    return surface_text(t)


def print_network(net: Network) -> str:
    blocks: list[str] = []
    for s in net.services:
        lines = [f"service at {s.loc} accept {s.var} {{"]
        lines.extend(_print_b(s.body, 2))
        lines.append("}")
        blocks.append("\n".join(lines))
    for name, p in net.procs:
        head = f"process {name} at {p.data.loc}"
        if not p.data.state.is_empty():
            head += f" state {_surface_tree(p.data.state)}"
        if p.data.queues:
            qparts = []
            for k, msgs in p.data.queues:
                ms = ", ".join(f"{op}({_surface_tree(t)})" for op, t in msgs)
                qparts.append(f"{_surface_tree(k)}: [{ms}]")
            head += " queues { " + ", ".join(qparts) + " }"
        lines = [head + " {"]
        body = p.behaviour
        for dn, db in p.defs:
            body = DDef(dn, db, body)
        lines.extend(_print_b(body, 2))
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


# ------------------------------------------------------------------ parser

_STMT_WORDS = {"out", "recv", "request", "queue"}


class _DccParser:
    """Recursive descent over the shared token stream.

    Statement words (out, recv, request, queue) are reserved here even
    though the tokenizer sees them as identifiers, so procedures may not
    use them as names.  Compiled procedure names carry a '$' and never
    collide.
    """

    def __init__(self, source: str):
        from .parser import ParseError, tokenize

        self._error = ParseError
        self.toks = tokenize(source, allow_reserved=True)
        self.pos = 0

    # token helpers

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str):
        t = self.peek()
        raise self._error(message, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "string"

    def eat(self, text: str):
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.peek().text!r}")
        return self.next()

    def name(self, what: str) -> str:
        t = self.peek()
        if t.kind not in ("ident", "keyword"):
            self.fail(f"expected {what}, found {t.text!r}")
        return self.next().text

    # trees and expressions

    def tree(self) -> Tree:
        from .trees import leaf, node

        t = self.peek()
        if t.text == "{":
            self.next()
            entries: dict[str, Tree] = {}
            while not self.at("}"):
                label = self.name("a label")
                self.eat(":")
                if label in entries:
                    self.fail(f"duplicate label {label!r}")
                entries[label] = self.tree()
                if not self.at("}"):
                    self.eat(",")
            self.eat("}")
            return node(entries)
        if t.kind == "int":
            self.next()
            return leaf(int(t.text))
        if t.text == "-" and t.kind == "symbol":
            self.next()
            return leaf(-int(self.next().text))
        if t.kind == "string":
            self.next()
            return leaf(t.text)
        if t.text == "true":
            self.next()
            return leaf(True)
        if t.text == "false":
            self.next()
            return leaf(False)
        if t.text == "@":
            self.next()
            return leaf(Loc(self.name("a location")))
        self.fail(f"expected a tree, found {t.text!r}")

    def path(self) -> Path:
        segs = [self.name("a path segment")]
        while self.at("."):
            self.next()
            segs.append(self.name("a path segment"))
        return Path(tuple(segs))

    def expr(self) -> Expr:
        from .expressions import BinOp

        left = self.expr_and()
        while self.at("or"):
            self.next()
            left = BinOp("or", left, self.expr_and())
        return left

    def expr_and(self) -> Expr:
        from .expressions import BinOp

        left = self.expr_cmp()
        while self.at("and"):
            self.next()
            left = BinOp("and", left, self.expr_cmp())
        return left

    def expr_cmp(self) -> Expr:
        from .expressions import BinOp

        left = self.expr_add()
        if self.at("=") or self.at("!=") or self.at("<"):
            op = self.next().text
            return BinOp(op, left, self.expr_add())
        return left

    def expr_add(self) -> Expr:
        from .expressions import BinOp

        left = self.expr_atom()
        while self.at("+") or self.at("-"):
            op = self.next().text
            left = BinOp(op, left, self.expr_atom())
        return left

    def expr_atom(self) -> Expr:
        from .expressions import Lit, PathRead, TreeExpr

        t = self.peek()
        if t.text == "(" and t.kind == "symbol":
            self.next()
            e = self.expr()
            self.eat(")")
            return e
        if t.text == "{":
            self.next()
            entries: list[tuple[str, Expr]] = []
            seen: set[str] = set()
            while not self.at("}"):
                label = self.name("a label")
                self.eat(":")
                if label in seen:
                    self.fail(f"duplicate label {label!r}")
                seen.add(label)
                entries.append((label, self.expr()))
                if not self.at("}"):
                    self.eat(",")
            self.eat("}")
            return TreeExpr(tuple(entries))
        if t.kind == "int":
            self.next()
            return Lit(int(t.text))
        if t.text == "-" and t.kind == "symbol":
            self.next()
            return Lit(-int(self.next().text))
        if t.kind == "string":
            self.next()
            return Lit(t.text)
        if t.text == "true":
            self.next()
            return Lit(True)
        if t.text == "false":
            self.next()
            return Lit(False)
        if t.text == "@":
            self.next()
            return Lit(Loc(self.name("a location")))
        if t.kind in ("ident", "keyword"):
            return PathRead(self.path())
        self.fail(f"expected an expression, found {t.text!r}")

    # behaviours

    def cont(self) -> Behaviour:
        t = self.peek()
        if t.text in ("}", ",") or t.kind == "eof":
            return D_ZERO
        return self.behaviour()

    def behaviour(self) -> Behaviour:
        t = self.peek()
        if t.kind == "int" and t.text == "0":
            self.next()
            return D_ZERO
        if self.at("queue"):
            self.next()
            path = self.path()
            self.eat(";")
            return CQueue(path, self.cont())
        if self.at("request"):
            self.next()
            loc = self.name("a location")
            self.eat("(")
            payload = self.expr()
            self.eat(")")
            self.eat(";")
            return Request(loc, payload, self.cont())
        if self.at("out"):
            self.next()
            op = self.name("an operation")
            self.eat("(")
            payload = self.expr()
            self.eat(")")
            self.eat("to")
            dest = self.expr()
            self.eat("via")
            key = self.expr()
            self.eat(";")
            return Output(dest, op, payload, key, self.cont())
        if self.at("recv"):
            self.next()
            key = self.expr()
            self.eat("{")
            branches: list[InBranch] = []
            while not self.at("}"):
                op = self.name("an operation")
                self.eat("(")
                var = None if self.at(")") else self.path()
                self.eat(")")
                self.eat(";")
                branches.append(InBranch(op, var, self.cont()))
                if not self.at("}"):
                    self.eat(",")
            self.eat("}")
            if not branches:
                self.fail("a reception needs at least one branch")
            ops = [b.op for b in branches]
            if len(set(ops)) != len(ops):
                self.fail("duplicate reception operation")
            return Input(key, tuple(sorted(branches, key=lambda b: b.op)))
        if self.at("if"):
            self.next()
            guard = self.expr()
            self.eat("{")
            then = self.behaviour()
            self.eat("}")
            self.eat("else")
            self.eat("{")
            els = self.behaviour()
            self.eat("}")
            return DCond(guard, then, els)
        if self.at("def"):
            self.next()
            name = self.name("a procedure")
            self.eat("=")
            self.eat("{")
            body = self.behaviour()
            self.eat("}")
            self.eat("in")
            return DDef(name, body, self.behaviour())
        if t.kind in ("ident", "keyword"):
            name = self.name("a procedure")
            self.eat("(")
            self.eat(")")
            return DCall(name)
        self.fail(f"expected a behaviour, found {t.text!r}")

    # top level

    def network(self) -> Network:
        procs: list[tuple[str, DProc]] = []
        services: list[DService] = []
        while self.peek().kind != "eof":
            if self.at("service"):
                self.next()
                self.eat("at")
                loc = self.name("a location")
                self.eat("accept")
                var = self.name("a variable")
                self.eat("{")
                body = self.behaviour()
                self.eat("}")
                services.append(DService(loc, var, body))
            elif self.at("process"):
                self.next()
                name = self.name("a process")
                self.eat("at")
                loc = self.name("a location")
                state = EMPTY
                if self.at("state"):
                    self.next()
                    state = self.tree()
                queues: list[tuple[Tree, tuple[Msg, ...]]] = []
                if self.at("queues"):
                    self.next()
                    self.eat("{")
                    while not self.at("}"):
                        key = self.tree()
                        self.eat(":")
                        self.eat("[")
                        msgs: list[Msg] = []
                        while not self.at("]"):
                            op = self.name("an operation")
                            self.eat("(")
                            msgs.append((op, self.tree()))
                            self.eat(")")
                            if not self.at("]"):
                                self.eat(",")
                        self.eat("]")
                        queues.append((key, tuple(msgs)))
                        if not self.at("}"):
                            self.eat(",")
                    self.eat("}")
                self.eat("{")
                body = self.behaviour()
                self.eat("}")
                data = ProcessInfo(loc, state, tuple(queues))
                if any(n == name for n, _ in procs):
                    self.fail(f"duplicate process {name!r}")
                procs.append((name, DProc(data, body)))
            else:
                self.fail("expected 'service' or 'process'")
        return Network(tuple(procs), tuple(services))


def parse_network(source: str) -> Network:
    return _DccParser(source).network()
