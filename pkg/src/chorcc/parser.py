"""Surface syntax: tokenizer, parser, and printers for program files.

A program file holds protocol declarations, an optional deployment block
naming the free processes, and one choreography.  Identifier kinds
(process, role, session, operation, location, procedure, recursion
variable, protocol, variable) share one namespace table; using the same
text under two kinds is a parse error.  The `$` character is reserved for
internally minted names and rejected in user programs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    Acc, Branch, Call, Chor, Com, Cond, Def, Inact, LocatedProc, LocatedRole,
    Par, Recv, Req, Send, Start, ZERO, accs_are_top_level, par_components,
)
from .expressions import BinOp, Expr, Lit, PathRead, TreeExpr, surface_expr
from .sessiontypes import (
    CarriedType, GBranch, GComm, GEnd, GRec, GVar, GlobalType, G_END, UNIT,
)
from .trees import EMPTY, Loc, Path, Tree, leaf, node, surface_text

KEYWORDS = {
    "start", "req", "acc", "def", "in", "if", "else", "protocol", "at",
    "roles", "starter", "rec", "end", "deployment", "state", "true",
    "false", "and", "or", "int", "str", "bool", "loc",
}

SYMBOLS = [
    "<->", "->", "!=", "{", "}", "(", ")", "[", "]", ",", ";", ":", ".",
    "=", "<", "+", "-", "|", "@",
]


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | symbol | keyword | eof
    text: str
    line: int
    col: int


def tokenize(source: str, allow_reserved: bool = False) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_" or (ch == "$" and allow_reserved):
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_$"):
                j += 1
            text = source[i:j]
            if "$" in text and not allow_reserved:
                raise ParseError("'$' is reserved for internal names", line, col)
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and source[j] != '"':
                if source[j] == "\\" and j + 1 < n:
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(source[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", line, col)
            tokens.append(Token("string", "".join(buf), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("symbol", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class Protocol:
    """A declared global type with its located roles.

    Role order is canonical everywhere: starter first, then service roles
    sorted lexicographically by their location.
    """

    name: str
    starter: str
    services: tuple[tuple[str, str], ...]  # (role, location), sorted by location
    gtype: GlobalType

    @property
    def locations(self) -> tuple[str, ...]:
        return tuple(sorted({loc for _, loc in self.services}))

    @property
    def role_order(self) -> tuple[str, ...]:
        return (self.starter,) + tuple(r for r, _ in self.services)

    def location_of(self, role: str) -> str | None:
        for r, l in self.services:
            if r == role:
                return l
        return None


@dataclass
class Placement:
    proc: str
    loc: str
    state: Tree


@dataclass
class Program:
    protocols: tuple[Protocol, ...]
    placements: tuple[Placement, ...]
    chor: Chor


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.kinds: dict[str, str] = {}

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def at(self, kind: str, text: str | None = None, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def ident(self, kind_tag: str) -> str:
        t = self.expect("ident")
        self.tag(t.text, kind_tag, t)
        return t.text

    def tag(self, text: str, kind_tag: str, t: Token) -> None:
        if kind_tag == "role" and text == "l":
            raise ParseError("role name 'l' is reserved", t.line, t.col)
        old = self.kinds.get(text)
        if old is None:
            self.kinds[text] = kind_tag
        elif old != kind_tag:
            raise ParseError(
                f"{text!r} already used as a {old}, cannot also be a {kind_tag}",
                t.line, t.col,
            )

    # -- program ----------------------------------------------------------

    def program(self) -> Program:
        protocols: list[Protocol] = []
        placements: list[Placement] = []
        while True:
            if self.at("keyword", "protocol"):
                protocols.append(self.protocol())
            elif self.at("keyword", "deployment"):
                placements.extend(self.deployment())
            else:
                break
        chor = self.par_chor()
        self.expect("eof")
        if not accs_are_top_level(chor):
            raise ParseError("acc terms must sit at the top level", 0, 0)
        return Program(tuple(protocols), tuple(placements), chor)

    def protocol(self) -> Protocol:
        self.expect("keyword", "protocol")
        name = self.ident("protocol")
        self.expect("keyword", "at")
        locs = [self.ident("location")]
        while self.at("symbol", ","):
            self.next()
            locs.append(self.ident("location"))
        self.expect("keyword", "roles")
        starter: str | None = None
        services: list[tuple[str, str]] = []
        while True:
            role = self.ident("role")
            if self.at("keyword", "starter"):
                self.next()
                if starter is not None:
                    t = self.peek()
                    raise ParseError("two starter roles", t.line, t.col)
                starter = role
            else:
                self.expect("symbol", "@")
                loc = self.ident("location")
                if loc not in locs:
                    t = self.peek()
                    raise ParseError(f"location {loc!r} not declared", t.line, t.col)
                services.append((role, loc))
            if self.at("symbol", ","):
                self.next()
                continue
            break
        if starter is None:
            t = self.peek()
            raise ParseError("protocol needs a starter role", t.line, t.col)
        self.expect("symbol", "{")
        g = self.gtype()
        self.expect("symbol", "}")
        services.sort(key=lambda rl: (rl[1], rl[0]))
        return Protocol(name, starter, tuple(services), g)

    def gtype(self) -> GlobalType:
        if self.at("keyword", "end"):
            self.next()
            return G_END
        if self.at("keyword", "rec"):
            self.next()
            var = self.ident("recursion variable")
            self.expect("symbol", ";")
            return GRec(var, self.gtype())
        sender_t = self.expect("ident")
        if self.at("symbol", "->"):
            self.tag(sender_t.text, "role", sender_t)
            self.next()
            receiver = self.ident("role")
            self.expect("symbol", "{")
            branches = [self.gbranch()]
            while self.at("symbol", ","):
                self.next()
                branches.append(self.gbranch())
            self.expect("symbol", "}")
            ops = [b.op for b in branches]
            if len(set(ops)) != len(ops):
                raise ParseError("duplicate operation in branches", sender_t.line, sender_t.col)
            return GComm(sender_t.text, receiver, tuple(branches))
        # bare identifier: recursion variable reference
        self.tag(sender_t.text, "recursion variable", sender_t)
        return GVar(sender_t.text)

    def gbranch(self) -> GBranch:
        op = self.ident("operation")
        self.expect("symbol", "(")
        if self.at("symbol", ")"):
            carried = UNIT
        else:
            carried = self.carried()
        self.expect("symbol", ")")
        if self.at("symbol", ";"):
            self.next()
            cont = self.gtype()
        else:
            cont = G_END
        return GBranch(op, carried, cont)

    def carried(self) -> CarriedType:
        if self.at("keyword"):
            t = self.peek()
            if t.text in ("int", "str", "bool", "loc"):
                self.next()
                return CarriedType(t.text)
        if self.at("symbol", "{"):
            self.next()
            fields: list[tuple[str, CarriedType]] = []
            if not self.at("symbol", "}"):
                while True:
                    label = self.expect("ident").text
                    self.expect("symbol", ":")
                    fields.append((label, self.carried()))
                    if self.at("symbol", ","):
                        self.next()
                        continue
                    break
            self.expect("symbol", "}")
            return CarriedType(None, tuple(sorted(fields)))
        t = self.peek()
        raise ParseError(f"expected a payload type, found {t.text!r}", t.line, t.col)

    def deployment(self) -> list[Placement]:
        self.expect("keyword", "deployment")
        self.expect("symbol", "{")
        out: list[Placement] = []
        while not self.at("symbol", "}"):
            proc = self.ident("process")
            self.expect("keyword", "at")
            loc = self.ident("location")
            state = EMPTY
            if self.at("keyword", "state"):
                self.next()
                state = self.tree_literal()
            out.append(Placement(proc, loc, state))
        self.expect("symbol", "}")
        return out

    def tree_literal(self) -> Tree:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return leaf(int(t.text))
        if t.kind == "string":
            self.next()
            return leaf(t.text)
        if self.at("keyword", "true") or self.at("keyword", "false"):
            self.next()
            return leaf(t.text == "true")
        if self.at("symbol", "@"):
            self.next()
            return leaf(Loc(self.ident("location")))
        if self.at("symbol", "{"):
            self.next()
            entries: dict[str, Tree] = {}
            if not self.at("symbol", "}"):
                while True:
                    label = self.expect("ident").text
                    self.expect("symbol", ":")
                    entries[label] = self.tree_literal()
                    if self.at("symbol", ","):
                        self.next()
                        continue
                    break
            self.expect("symbol", "}")
            return node(entries)
        raise ParseError(f"expected a tree literal, found {t.text!r}", t.line, t.col)

    # -- choreography -----------------------------------------------------

    def par_chor(self) -> Chor:
        parts = [self.seq_chor()]
        while self.at("symbol", "|"):
            self.next()
            parts.append(self.seq_chor())
        out = parts[0]
        for p in parts[1:]:
            out = Par(out, p)
        return out

    def _opt_cont(self) -> Chor:
        """A continuation after ';' may be omitted before }, ',', '|', eof."""
        if self.at("symbol", "}") or self.at("symbol", ",") or self.at("symbol", "|"):
            return ZERO
        if self.at("eof"):
            return ZERO
        return self.seq_chor()

    def seq_chor(self) -> Chor:
        t = self.peek()
        if t.kind == "int" and t.text == "0":
            self.next()
            return ZERO
        if self.at("keyword", "start") or self.at("keyword", "req"):
            return self.start_or_req()
        if self.at("keyword", "acc"):
            return self.acc()
        if self.at("keyword", "def"):
            return self.definition()
        if self.at("keyword", "if"):
            return self.cond()
        if t.kind == "ident" and self.at("symbol", "(", 1):
            name = self.ident("procedure")
            self.expect("symbol", "(")
            args = []
            if not self.at("symbol", ")"):
                while True:
                    args.append(self.ident("process"))
                    if self.at("symbol", ","):
                        self.next()
                        continue
                    break
            self.expect("symbol", ")")
            return Call(name, tuple(args))
        if t.kind == "ident" and self.at("symbol", ":", 1):
            return self.interaction()
        raise ParseError(f"expected a choreography term, found {t.text!r}", t.line, t.col)

    def start_or_req(self) -> Chor:
        kw = self.next().text
        session = self.ident("session")
        self.expect("symbol", ":")
        proc = self.ident("process")
        self.expect("symbol", "[")
        role = self.ident("role")
        self.expect("symbol", "]")
        self.expect("symbol", "<->")
        if kw == "start":
            services = [self.located_proc()]
            while self.at("symbol", ","):
                self.next()
                services.append(self.located_proc())
            services.sort(key=lambda s: (s.loc, s.role))
            self.expect("symbol", ";")
            return Start(session, proc, role, tuple(services), self._opt_cont())
        services_r = [self.located_role()]
        while self.at("symbol", ","):
            self.next()
            services_r.append(self.located_role())
        services_r.sort(key=lambda s: (s.loc, s.role))
        self.expect("symbol", ";")
        return Req(session, proc, role, tuple(services_r), self._opt_cont())

    def located_proc(self) -> LocatedProc:
        loc = self.ident("location")
        self.expect("symbol", ".")
        proc = self.ident("process")
        self.expect("symbol", "[")
        role = self.ident("role")
        self.expect("symbol", "]")
        return LocatedProc(loc, proc, role)

    def located_role(self) -> LocatedRole:
        loc = self.ident("location")
        self.expect("symbol", ".")
        role = self.ident("role")
        return LocatedRole(loc, role)

    def acc(self) -> Chor:
        self.expect("keyword", "acc")
        session = self.ident("session")
        self.expect("symbol", ":")
        services = [self.located_proc()]
        while self.at("symbol", ","):
            self.next()
            services.append(self.located_proc())
        services.sort(key=lambda s: (s.loc, s.role))
        self.expect("symbol", ";")
        return Acc(session, tuple(services), self._opt_cont())

    def definition(self) -> Chor:
        self.expect("keyword", "def")
        name = self.ident("procedure")
        self.expect("symbol", "(")
        params = []
        if not self.at("symbol", ")"):
            while True:
                params.append(self.ident("process"))
                if self.at("symbol", ","):
                    self.next()
                    continue
                break
        self.expect("symbol", ")")
        self.expect("symbol", "=")
        self.expect("symbol", "{")
        body = self.par_chor()
        self.expect("symbol", "}")
        self.expect("keyword", "in")
        cont = self.seq_chor()
        chk = (_check_calls(body, name, tuple(params))
               or _check_calls(cont, name, tuple(params)))
        if chk is not None:
            t = self.peek()
            raise ParseError(chk, t.line, t.col)
        return Def(name, tuple(params), body, cont)

    def cond(self) -> Chor:
        self.expect("keyword", "if")
        proc = self.ident("process")
        self.expect("symbol", ".")
        expr = self.expr()
        self.expect("symbol", "{")
        then = self.par_chor()
        self.expect("symbol", "}")
        self.expect("keyword", "else")
        self.expect("symbol", "{")
        els = self.par_chor()
        self.expect("symbol", "}")
        return Cond(proc, expr, then, els)

    def interaction(self) -> Chor:
        session = self.ident("session")
        self.expect("symbol", ":")
        first = self.expect("ident")
        if self.at("symbol", "["):
            # sender side: proc[Role].expr -> ...
            self.tag(first.text, "process", first)
            self.expect("symbol", "[")
            srole = self.ident("role")
            self.expect("symbol", "]")
            self.expect("symbol", ".")
            expr = self.expr()
            self.expect("symbol", "->")
            target = self.expect("ident")
            if self.at("symbol", "["):
                self.tag(target.text, "process", target)
                self.expect("symbol", "[")
                rrole = self.ident("role")
                self.expect("symbol", "]")
                self.expect("symbol", ".")
                op = self.ident("operation")
                var = self.opt_var()
                self.expect("symbol", ";")
                return Com(session, first.text, srole, expr, target.text, rrole,
                           op, var, self._opt_cont())
            self.tag(target.text, "role", target)
            self.expect("symbol", ".")
            op = self.ident("operation")
            self.expect("symbol", ";")
            return Send(session, first.text, srole, expr, target.text, op,
                        self._opt_cont())
        # receiver side: Role -> proc[Role] { branches } or .op(var)
        self.tag(first.text, "role", first)
        self.expect("symbol", "->")
        proc = self.ident("process")
        self.expect("symbol", "[")
        rrole = self.ident("role")
        self.expect("symbol", "]")
        if self.at("symbol", "."):
            self.next()
            op = self.ident("operation")
            var = self.opt_var()
            self.expect("symbol", ";")
            return Recv(session, first.text, proc, rrole,
                        (Branch(op, var, self._opt_cont()),))
        self.expect("symbol", "{")
        branches = [self.rbranch()]
        while self.at("symbol", ","):
            self.next()
            branches.append(self.rbranch())
        self.expect("symbol", "}")
        ops = [b.op for b in branches]
        if len(set(ops)) != len(ops):
            raise ParseError("duplicate operation in branches", first.line, first.col)
        return Recv(session, first.text, proc, rrole, tuple(branches))

    def opt_var(self) -> str | None:
        if self.at("symbol", "("):
            self.next()
            var = None
            if not self.at("symbol", ")"):
                var = self.ident("variable")
            self.expect("symbol", ")")
            return var
        return None

    def rbranch(self) -> Branch:
        op = self.ident("operation")
        var = self.opt_var()
        if self.at("symbol", ";"):
            self.next()
            cont = self._opt_cont()
        else:
            cont = ZERO
        return Branch(op, var, cont)

    # -- expressions --------------------------------------------------------

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        out = self.and_expr()
        while self.at("keyword", "or"):
            self.next()
            out = BinOp("or", out, self.and_expr())
        return out

    def and_expr(self) -> Expr:
        out = self.cmp_expr()
        while self.at("keyword", "and"):
            self.next()
            out = BinOp("and", out, self.cmp_expr())
        return out

    def cmp_expr(self) -> Expr:
        out = self.add_expr()
        for sym in ("=", "!=", "<"):
            if self.at("symbol", sym):
                self.next()
                return BinOp(sym, out, self.add_expr())
        return out

    def add_expr(self) -> Expr:
        out = self.atom()
        while self.at("symbol", "+") or self.at("symbol", "-"):
            op = self.next().text
            out = BinOp(op, out, self.atom())
        return out

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Lit(int(t.text))
        if t.kind == "string":
            self.next()
            return Lit(t.text)
        if self.at("keyword", "true") or self.at("keyword", "false"):
            self.next()
            return Lit(t.text == "true")
        if self.at("symbol", "@"):
            self.next()
            return Lit(Loc(self.ident("location")))
        if self.at("symbol", "("):
            self.next()
            e = self.expr()
            self.expect("symbol", ")")
            return e
        if self.at("symbol", "{"):
            self.next()
            entries: list[tuple[str, Expr]] = []
            if not self.at("symbol", "}"):
                while True:
                    label = self.expect("ident").text
                    self.expect("symbol", ":")
                    entries.append((label, self.expr()))
                    if self.at("symbol", ","):
                        self.next()
                        continue
                    break
            self.expect("symbol", "}")
            return TreeExpr(tuple(entries))
        if t.kind == "ident":
            segs = [self.next().text]
            while self.at("symbol", ".") and self.peek(1).kind == "ident":
                self.next()
                segs.append(self.expect("ident").text)
            return PathRead(Path(tuple(segs)))
        raise ParseError(f"expected an expression, found {t.text!r}", t.line, t.col)


def _check_calls(body: Chor, name: str, params: tuple[str, ...]) -> str | None:
    """Calls must pass the formal names; the target calculus cannot pass args."""
    if isinstance(body, Call):
        if body.name == name and body.args != params:
            return (
                f"call {body.name}({', '.join(body.args)}) must use the formal "
                f"parameters ({', '.join(params)})"
            )
        return None
    if isinstance(body, (Start, Req, Acc, Com, Send)):
        return _check_calls(body.cont, name, params)
    if isinstance(body, Recv):
        for b in body.branches:
            msg = _check_calls(b.cont, name, params)
            if msg:
                return msg
        return None
    if isinstance(body, Cond):
        return _check_calls(body.then, name, params) or _check_calls(body.els, name, params)
    if isinstance(body, Par):
        return _check_calls(body.left, name, params) or _check_calls(body.right, name, params)
    if isinstance(body, Def):
        return _check_calls(body.body, name, params) or _check_calls(body.cont, name, params)
    return None


def parse_program(source: str) -> Program:
    return _Parser(tokenize(source)).program()


def parse_choreography(source: str) -> Chor:
    p = _Parser(tokenize(source))
    c = p.par_chor()
    p.expect("eof")
    return c


# -------------------------------------------------------------- printers

def surface_carried(u: CarriedType) -> str:
    if u.base is not None:
        return u.base
    inner = ", ".join(f"{k}: {surface_carried(v)}" for k, v in u.fields)
    return "{" + inner + "}"


def surface_global(g: GlobalType, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(g, GEnd):
        return pad + "end"
    if isinstance(g, GVar):
        return pad + g.var
    if isinstance(g, GRec):
        return pad + f"rec {g.var};\n" + surface_global(g.body, indent)
    assert isinstance(g, GComm)
    lines = [pad + f"{g.sender} -> {g.receiver} {{"]
    for i, b in enumerate(g.branches):
        cont = surface_global(b.cont, indent + 1)
        sep = "," if i + 1 < len(g.branches) else ""
        lines.append("  " * (indent + 1) + f"{b.op}({surface_carried(b.carried)});")
        lines.append(cont + sep)
    lines.append(pad + "}")
    return "\n".join(lines)


def _print_seq(c: Chor, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(c, Inact):
        return [pad + "0"]
    if isinstance(c, Start):
        svc = ", ".join(f"{s.loc}.{s.proc}[{s.role}]" for s in c.services)
        head = f"{pad}start {c.session}: {c.starter_proc}[{c.starter_role}] <-> {svc};"
        return [head] + _print_cont(c.cont, indent)
    if isinstance(c, Req):
        svc = ", ".join(f"{s.loc}.{s.role}" for s in c.services)
        head = f"{pad}req {c.session}: {c.starter_proc}[{c.starter_role}] <-> {svc};"
        return [head] + _print_cont(c.cont, indent)
    if isinstance(c, Acc):
        svc = ", ".join(f"{s.loc}.{s.proc}[{s.role}]" for s in c.services)
        return [f"{pad}acc {c.session}: {svc};"] + _print_cont(c.cont, indent)
    if isinstance(c, Com):
        var = f"({c.var})" if c.var else "()"
        head = (
            f"{pad}{c.session}: {c.sender}[{c.srole}].{surface_expr(c.expr)} -> "
            f"{c.receiver}[{c.rrole}].{c.op}{var};"
        )
        return [head] + _print_cont(c.cont, indent)
    if isinstance(c, Send):
        head = (
            f"{pad}{c.session}: {c.sender}[{c.srole}].{surface_expr(c.expr)} -> "
            f"{c.rrole}.{c.op};"
        )
        return [head] + _print_cont(c.cont, indent)
    if isinstance(c, Recv):
        lines = [f"{pad}{c.session}: {c.srole} -> {c.receiver}[{c.rrole}] {{"]
        for i, b in enumerate(c.branches):
            var = f"({b.var})" if b.var else "()"
            lines.append(f"{pad}  {b.op}{var};")
            body = _print_cont(b.cont, indent + 2)
            if not body:
                body = ["  " * (indent + 2) + "0"]
            if i + 1 < len(c.branches):
                body = body[:-1] + [body[-1] + ","]
            lines.extend(body)
        lines.append(pad + "}")
        return lines
    if isinstance(c, Cond):
        lines = [f"{pad}if {c.proc}.{surface_expr(c.expr)} {{"]
        lines.extend(_print_block(c.then, indent + 1))
        lines.append(pad + "} else {")
        lines.extend(_print_block(c.els, indent + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(c, Par):
        parts = par_components(c) or [ZERO]
        lines: list[str] = []
        for i, p in enumerate(parts):
            if i:
                lines.append(pad + "|")
            lines.extend(_print_seq(p, indent))
        return lines
    if isinstance(c, Def):
        lines = [f"{pad}def {c.name}({', '.join(c.params)}) = {{"]
        lines.extend(_print_block(c.body, indent + 1))
        lines.append(pad + "} in")
        lines.extend(_print_seq(c.cont, indent))
        return lines
    if isinstance(c, Call):
        return [f"{pad}{c.name}({', '.join(c.args)})"]
    raise TypeError(f"not a choreography: {c!r}")


def _print_cont(c: Chor, indent: int) -> list[str]:
    """Continuation lines; trailing inaction is left implicit."""
    if isinstance(c, Inact):
        return []
    return _print_seq(c, indent)


def _print_block(c: Chor, indent: int) -> list[str]:
    lines = _print_seq(c, indent)
    return lines


def print_choreography(c: Chor) -> str:
    return "\n".join(_print_seq(c, 0)) + "\n"


def print_program(p: Program) -> str:
    chunks: list[str] = []
    for proto in p.protocols:
        roles = [f"{proto.starter} starter"] + [f"{r}@{l}" for r, l in proto.services]
        head = (
            f"protocol {proto.name} at {', '.join(proto.locations)} "
            f"roles {', '.join(roles)} {{"
        )
        chunks.append(head + "\n" + surface_global(proto.gtype, 1) + "\n}")
    if p.placements:
        lines = ["deployment {"]
        for pl in p.placements:
            entry = f"  {pl.proc} at {pl.loc}"
            if not pl.state.is_empty():
                entry += f" state {surface_text(pl.state)}"
            lines.append(entry)
        lines.append("}")
        chunks.append("\n".join(lines))
    chunks.append(print_choreography(p.chor).rstrip("\n"))
    return "\n\n".join(chunks) + "\n"
