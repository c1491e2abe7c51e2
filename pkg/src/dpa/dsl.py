"""Textual model format and pattern-descriptor files.

A ``.net`` file declares integer constants, channels over finite integer
fields, helper functions, parametrised process definitions, component
schemas (atoms, parametrised by the implicit variable ``id``) and their
instantiations.  Example::

    version 1
    const N = 3
    channel pickup : {0..N-1}.{0..N-1}
    fun next(i) = (i + 1) % N

    Fork(id) = [] i : {id, prev(id)} @ pickup.i.id -> putdown.i.id -> Fork(id)

    atom ForkC = alphabet {| pickup.id.id, pickup.prev(id).id |}
                 behaviour Fork(id)
    instance Fork = ForkC {0..N-1}

Process-expression operators, loosest binding first: ``|~|``, ``[]``,
``/\\``, ``;``, guard ``&``, prefix ``->``; hiding ``\\ {...}`` and
renaming ``[[a <- b, ...]]`` are postfix; ``STOP``, ``SKIP``, ``DIV``,
calls, ``(...)`` and the indexed choices ``[] x : {set} @ P`` /
``|~| x : {set} @ P`` are primary.  Channel transfers use ``ch!expr``
(output a value) and ``ch?x`` (input: an external choice over the field's
range, binding ``x``).  Comments run from ``--`` to end of line.

Pattern descriptors are JSON documents (one object per pattern kind) that
are resolved and validated against an elaborated network before use.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .events import EVENTS, event
from .network import Component, Network
from .patterns import (
    AdDescriptor,
    CsDescriptor,
    RaDescriptor,
    UnknownComponent,
)
from .terms import (
    BinOp,
    Call,
    DefEnv,
    Definition,
    EventTemplate,
    ExtChoice,
    FunCall,
    Guard,
    Hide,
    IntChoice,
    Interrupt,
    Lit,
    Prefix,
    Rename,
    Seq,
    SKIP,
    STOP,
    DIV,
    Term,
    UnOp,
    Var,
    eval_expr,
    fmt_expr,
    pretty,
)

SCHEMA_VERSION = 1


@dataclass
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class ElaborationError(Exception):
    pass


class UnknownChannel(ElaborationError):
    pass


class RangeOverflow(ElaborationError):
    pass


class DuplicateComponentName(ElaborationError):
    pass


class NonGroundAlphabet(ElaborationError):
    pass


class DescriptorError(Exception):
    pass


class UnknownEvent(DescriptorError):
    pass


class NonTotalMap(DescriptorError):
    pass


class DuplicateInSchedule(DescriptorError):
    pass


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>--[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+)
  | (?P<op>\[\[|\]\]|\{\||\|\}|\|~\||\[\]|->|<-|/\\|\.\.|==|!=|<=|>=|[()\{\}=<>+\-*/%,:@;.&!?\\|])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "version",
    "const",
    "channel",
    "fun",
    "atom",
    "instance",
    "alphabet",
    "behaviour",
    "STOP",
    "SKIP",
    "DIV",
    "and",
    "or",
    "not",
}


@dataclass
class Token:
    kind: str  # 'num' | 'ident' | 'op' | 'kw' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    diagnostics = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diagnostics.append(Diagnostic(line, col, f"stray character {text[pos]!r}"))
            pos += 1
            col += 1
            continue
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(tok)
        else:
            k = kind
            if kind == "ident" and tok in KEYWORDS:
                k = "kw"
            tokens.append(Token(k, tok, line, col))
            col += len(tok)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    if diagnostics:
        raise ParseError(diagnostics)
    return tokens


# ---------------------------------------------------------------------------
# declaration AST


@dataclass
class ChannelDecl:
    name: str
    fields: list  # list of lists of int-exprs (value sets) or (lo, hi) ranges


@dataclass
class AtomDecl:
    name: str
    alphabet: list  # list of EventTemplate (extension semantics)
    behaviour: Term


@dataclass
class InstanceDecl:
    name: str
    atom: str
    ids: list | None  # list of int exprs, or None for a singleton


@dataclass
class NetworkDecl:
    version: int = SCHEMA_VERSION
    constants: list = field(default_factory=list)  # (name, expr)
    channels: list = field(default_factory=list)
    functions: list = field(default_factory=list)  # (name, params, expr)
    process_defs: list = field(default_factory=list)  # Definition
    atoms: list = field(default_factory=list)
    instances: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# parser


class Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics = []

    # -- machinery --

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind, text=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if self.at(kind, text):
            return self.next()
        want = text or kind
        raise _Bail(Diagnostic(tok.line, tok.col, f"expected {want!r}, found {tok.text!r}"))

    # -- declarations --

    def parse_network(self) -> NetworkDecl:
        decl = NetworkDecl()
        while not self.at("eof"):
            try:
                self.declaration(decl)
            except _Bail as bail:
                self.diagnostics.append(bail.diagnostic)
                self.recover()
        if self.diagnostics:
            raise ParseError(self.diagnostics)
        return decl

    def recover(self):
        """Skip to the next plausible declaration start."""
        while not self.at("eof"):
            tok = self.peek()
            if tok.kind == "kw" and tok.text in (
                "version", "const", "channel", "fun", "atom", "instance",
            ):
                return
            if tok.kind == "ident" and self.peek(1).text in ("(", "="):
                return
            self.next()

    def declaration(self, decl: NetworkDecl):
        tok = self.peek()
        if self.accept("kw", "version"):
            v = int(self.expect("num").text)
            if v != SCHEMA_VERSION:
                raise _Bail(Diagnostic(tok.line, tok.col, f"unsupported version {v}"))
            decl.version = v
        elif self.accept("kw", "const"):
            name = self.expect("ident").text
            self.expect("op", "=")
            decl.constants.append((name, self.int_expr()))
        elif self.accept("kw", "channel"):
            name = self.expect("ident").text
            fields = []
            if self.accept("op", ":"):
                fields.append(self.field_set())
                while self.accept("op", "."):
                    fields.append(self.field_set())
            decl.channels.append(ChannelDecl(name, fields))
        elif self.accept("kw", "fun"):
            name = self.expect("ident").text
            self.expect("op", "(")
            params = [self.expect("ident").text]
            while self.accept("op", ","):
                params.append(self.expect("ident").text)
            self.expect("op", ")")
            self.expect("op", "=")
            decl.functions.append((name, params, self.int_expr()))
        elif self.accept("kw", "atom"):
            name = self.expect("ident").text
            self.expect("op", "=")
            self.expect("kw", "alphabet")
            alphabet = self.alphabet_expr()
            self.expect("kw", "behaviour")
            behaviour = self.process()
            decl.atoms.append(AtomDecl(name, alphabet, behaviour))
        elif self.accept("kw", "instance"):
            name = self.instance_name()
            self.expect("op", "=")
            atom = self.expect("ident").text
            ids = None
            if self.accept("op", "{"):
                ids = self.id_set_tail()
            decl.instances.append(InstanceDecl(name, atom, ids))
        elif tok.kind == "ident":
            name = self.next().text
            params = []
            if self.accept("op", "("):
                params.append(self.expect("ident").text)
                while self.accept("op", ","):
                    params.append(self.expect("ident").text)
                self.expect("op", ")")
            self.expect("op", "=")
            body = self.process()
            decl.process_defs.append(Definition(name, tuple(params), body))
        else:
            raise _Bail(
                Diagnostic(tok.line, tok.col, f"expected a declaration, found {tok.text!r}")
            )

    def instance_name(self) -> str:
        parts = [self.expect("ident").text]
        while self.at("op", ".") and self.peek(1).kind in ("ident", "num"):
            self.next()
            parts.append(self.next().text)
        return ".".join(parts)

    def field_set(self):
        """A channel field domain: {lo..hi} or {v1, v2, ...} of constants."""
        self.expect("op", "{")
        first = self.int_expr()
        if self.accept("op", ".."):
            hi = self.int_expr()
            self.expect("op", "}")
            return ("range", first, hi)
        values = [first]
        while self.accept("op", ","):
            values.append(self.int_expr())
        self.expect("op", "}")
        return ("set", values)

    def alphabet_expr(self):
        """A {| e1, e2 |} extension list or a { e1, e2 } exact event list."""
        if self.accept("op", "{|"):
            items = [self.event_template()]
            while self.accept("op", ","):
                items.append(self.event_template())
            self.expect("op", "|}")
            return [("extend", t) for t in items]
        self.expect("op", "{")
        items = [self.event_template()]
        while self.accept("op", ","):
            items.append(self.event_template())
        self.expect("op", "}")
        return [("exact", t) for t in items]

    # -- integer / boolean expressions --

    def int_expr(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.accept("kw", "or"):
            left = BinOp("or", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.accept("kw", "and"):
            left = BinOp("and", left, self.not_expr())
        return left

    def not_expr(self):
        if self.accept("kw", "not"):
            return UnOp("not", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.add_expr()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.at("op", op):
                self.next()
                return BinOp(op, left, self.add_expr())
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.next().text
            left = BinOp(op, left, self.mul_expr())
        return left

    def mul_expr(self):
        left = self.unary_expr()
        while self.at("op", "*") or self.at("op", "/") or self.at("op", "%"):
            op = self.next().text
            left = BinOp(op, left, self.unary_expr())
        return left

    def unary_expr(self):
        if self.accept("op", "-"):
            return UnOp("-", self.unary_expr())
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Lit(int(tok.text))
        if tok.kind == "ident":
            name = self.next().text
            if self.accept("op", "("):
                args = [self.int_expr()]
                while self.accept("op", ","):
                    args.append(self.int_expr())
                self.expect("op", ")")
                return FunCall(name, tuple(args))
            return Var(name)
        if self.accept("op", "("):
            inner = self.int_expr()
            self.expect("op", ")")
            return inner
        raise _Bail(Diagnostic(tok.line, tok.col, f"expected an expression, found {tok.text!r}"))

    # -- events --

    def event_template(self, binders=False):
        """Dotted event; with binders=True, '?x' and '!e' field forms are
        allowed and returned as ('in', x) / ('out', expr) markers."""
        head = self.expect("ident").text
        fields = []
        while True:
            if self.accept("op", "."):
                fields.append(self.event_field())
            elif binders and self.accept("op", "!"):
                fields.append(("out", self.event_field_expr()))
            elif binders and self.accept("op", "?"):
                fields.append(("in", self.expect("ident").text))
            else:
                break
        if binders:
            return head, fields
        plain = []
        for f in fields:
            if isinstance(f, tuple) and f and f[0] in ("in", "out"):
                raise _Bail(
                    Diagnostic(self.peek().line, self.peek().col,
                               "channel transfer forms are not allowed here")
                )
            plain.append(f)
        return EventTemplate(head, tuple(plain))

    def event_field(self):
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Lit(int(tok.text))
        if tok.kind == "ident":
            name = self.next().text
            if self.accept("op", "("):
                args = [self.int_expr()]
                while self.accept("op", ","):
                    args.append(self.int_expr())
                self.expect("op", ")")
                return FunCall(name, tuple(args))
            return Var(name)
        if self.accept("op", "("):
            inner = self.int_expr()
            self.expect("op", ")")
            return inner
        raise _Bail(Diagnostic(tok.line, tok.col, f"expected an event field, found {tok.text!r}"))

    def event_field_expr(self):
        tok = self.peek()
        if self.accept("op", "("):
            inner = self.int_expr()
            self.expect("op", ")")
            return inner
        if tok.kind == "num":
            self.next()
            return Lit(int(tok.text))
        if tok.kind == "ident":
            name = self.next().text
            if self.accept("op", "("):
                args = [self.int_expr()]
                while self.accept("op", ","):
                    args.append(self.int_expr())
                self.expect("op", ")")
                return FunCall(name, tuple(args))
            return Var(name)
        raise _Bail(Diagnostic(tok.line, tok.col, f"expected a value, found {tok.text!r}"))

    # -- processes (precedence climbing, loosest first) --

    def process(self) -> Term:
        return self.p_intchoice()

    def p_intchoice(self):
        left = self.p_extchoice()
        items = [left]
        while self.accept("op", "|~|"):
            items.append(self.p_extchoice())
        return items[0] if len(items) == 1 else IntChoice(tuple(items))

    def p_extchoice(self):
        items = [self.p_interrupt()]
        while self.accept("op", "[]"):
            items.append(self.p_interrupt())
        return items[0] if len(items) == 1 else ExtChoice(tuple(items))

    def p_interrupt(self):
        left = self.p_seq()
        while self.accept("op", "/\\"):
            left = Interrupt(left, self.p_seq())
        return left

    def p_seq(self):
        left = self.p_guarded()
        while self.accept("op", ";"):
            left = Seq(left, self.p_guarded())
        return left

    def p_guarded(self):
        """Either `boolexpr & proc` or a prefix chain; resolved by trying the
        guard form first and backtracking."""
        save = self.pos
        try:
            cond = self.int_expr()
            if self.accept("op", "&"):
                return Guard(cond, self.p_guarded())
        except _Bail:
            pass
        self.pos = save
        return self.p_prefix()

    def p_prefix(self):
        """`event -> P` chains, channel transfer sugar included."""
        tok = self.peek()
        if tok.kind == "ident" and self._looks_like_prefix():
            head, fields = self.event_template(binders=True)
            self.expect("op", "->")
            cont = self.p_guarded()
            return _desugar_prefix(head, fields, cont, tok)
        return self.p_postfix()

    def _looks_like_prefix(self) -> bool:
        """Scan forward over a dotted/transfer event to see if '->' follows."""
        toks = self.tokens

        def skip_parens(i):
            if toks[i].kind == "op" and toks[i].text == "(":
                depth = 1
                i += 1
                while depth and toks[i].kind != "eof":
                    if toks[i].text == "(":
                        depth += 1
                    elif toks[i].text == ")":
                        depth -= 1
                    i += 1
            return i

        def skip_field(i):
            """One field after '.', '!' or '?': value, name, call or group."""
            if toks[i].kind in ("num", "ident"):
                return skip_parens(i + 1)
            if toks[i].kind == "op" and toks[i].text == "(":
                return skip_parens(i)
            return None

        i = self.pos + 1
        while toks[i].kind == "op" and toks[i].text in (".", "!", "?"):
            nxt = skip_field(i + 1)
            if nxt is None:
                return False
            i = nxt
        return toks[i].kind == "op" and toks[i].text == "->"

    def p_postfix(self):
        term = self.p_primary()
        while True:
            if self.accept("op", "\\"):
                self.expect("op", "{")
                evs = [self.event_template()]
                while self.accept("op", ","):
                    evs.append(self.event_template())
                self.expect("op", "}")
                term = Hide(term, tuple(evs))
            elif self.accept("op", "[["):
                pairs = [self.rename_pair()]
                while self.accept("op", ","):
                    pairs.append(self.rename_pair())
                self.expect("op", "]]")
                term = Rename(term, tuple(pairs))
            else:
                return term

    def rename_pair(self):
        a = self.event_template()
        self.expect("op", "<-")
        b = self.event_template()
        return (a, b)

    def p_primary(self):
        tok = self.peek()
        if self.accept("kw", "STOP"):
            return STOP
        if self.accept("kw", "SKIP"):
            return SKIP
        if self.accept("kw", "DIV"):
            return DIV
        if self.at("op", "[]") or self.at("op", "|~|"):
            # indexed choice: [] x : {set} @ P
            op = self.next().text
            var = self.expect("ident").text
            self.expect("op", ":")
            self.expect("op", "{")
            items = self.id_set_tail()
            self.expect("op", "@")
            body = self.p_guarded()
            return _IndexedChoice(op, var, items, body)
        if self.accept("op", "("):
            inner = self.process()
            self.expect("op", ")")
            return inner
        if tok.kind == "ident":
            name = self.next().text
            args = []
            if self.accept("op", "("):
                args.append(self.int_expr())
                while self.accept("op", ","):
                    args.append(self.int_expr())
                self.expect("op", ")")
            return Call(name, tuple(args))
        raise _Bail(Diagnostic(tok.line, tok.col, f"expected a process, found {tok.text!r}"))

    def id_set_tail(self):
        """Contents of a '{...}' id set, '{' already consumed."""
        first = self.int_expr()
        if self.accept("op", ".."):
            hi = self.int_expr()
            self.expect("op", "}")
            return [("range", first, hi)]
        items = [("value", first)]
        while self.accept("op", ","):
            items.append(("value", self.int_expr()))
        self.expect("op", "}")
        return items


class _Bail(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


@dataclass(frozen=True, eq=False)
class _IndexedChoice(Term):
    """Replicated choice over a finite id set; the set may mention
    definition parameters, so expansion happens when the term is bound."""

    op: str
    var: str
    items: tuple
    body: Term

    def __post_init__(self):
        object.__setattr__(
            self, "_h", hash(("_Indexed", self.op, self.var, tuple(map(tuple, self.items)), self.body))
        )

    def __eq__(self, other):
        return (
            isinstance(other, _IndexedChoice)
            and (self.op, self.var, self.items, self.body)
            == (other.op, other.var, other.items, other.body)
        )

    def __hash__(self):
        return self._h

    def bind_hook(self, bindings, env):
        from .terms import EmptyChoiceList, bind

        values = []
        for item in self.items:
            if item[0] == "range":
                lo = eval_expr(item[1], bindings, env)
                hi = eval_expr(item[2], bindings, env)
                values.extend(range(lo, hi + 1))
            else:
                values.append(eval_expr(item[1], bindings, env))
        branches = tuple(
            bind(_substitute_var(self.body, self.var, Lit(v)), bindings, env)
            for v in dict.fromkeys(values)
        )
        if not branches:
            raise EmptyChoiceList(
                f"indexed choice over an empty set (variable '{self.var}')"
            )
        if len(branches) == 1:
            return branches[0]
        return ExtChoice(branches) if self.op == "[]" else IntChoice(branches)

    def pretty_hook(self):
        items = []
        for item in self.items:
            if item[0] == "range":
                items.append(f"{fmt_expr(item[1])}..{fmt_expr(item[2])}")
            else:
                items.append(fmt_expr(item[1]))
        return (
            f"{self.op} {self.var} : {{{', '.join(items)}}} @ {pretty(self.body)}"
        )


def _desugar_prefix(head, fields, cont, tok):
    """Build Prefix/ExtChoice from a dotted event with transfer markers.

    '?x' markers require the channel's field domain, which is only known at
    elaboration; they are recorded as a parse-time marker node.
    """
    has_input = any(isinstance(f, tuple) and f and f[0] == "in" for f in fields)
    if not has_input:
        plain = tuple(f[1] if isinstance(f, tuple) and f and f[0] == "out" else f for f in fields)
        return Prefix(EventTemplate(head, plain), cont)
    return _InputPrefix(head, tuple(fields), cont)


@dataclass(frozen=True, eq=False)
class _InputPrefix(Term):
    head: str
    fields: tuple
    cont: Term

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("_InPrefix", self.head, self.fields, self.cont)))

    def __eq__(self, other):
        return (
            isinstance(other, _InputPrefix)
            and (self.head, self.fields, self.cont)
            == (other.head, other.fields, other.cont)
        )

    def __hash__(self):
        return self._h


def parse_network(text: str) -> NetworkDecl:
    """Full parse or a non-empty diagnostic list, never both."""
    return Parser(tokenize(text)).parse_network()


# ---------------------------------------------------------------------------
# elaboration


def _field_values(spec, env):
    if spec[0] == "range":
        lo = eval_expr(spec[1], {}, env)
        hi = eval_expr(spec[2], {}, env)
        if hi - lo > 4096:
            raise RangeOverflow(f"field range {lo}..{hi} is too large")
        return list(range(lo, hi + 1))
    return [eval_expr(e, {}, env) for e in spec[1]]


class _Channels:
    def __init__(self):
        self.domains = {}  # name -> list of field value lists

    def declare(self, decl: ChannelDecl, env):
        self.domains[decl.name] = [_field_values(f, env) for f in decl.fields]

    def events_of(self, name):
        if name not in self.domains:
            raise UnknownChannel(f"undeclared channel '{name}'")
        out = [name]
        for values in self.domains[name]:
            out = [f"{prefix}.{v}" for prefix in out for v in values]
        return [event(e) for e in out]

    def sigma(self):
        evs = set()
        for name in self.domains:
            evs.update(self.events_of(name))
        return frozenset(evs)

    def completions(self, head, given_fields):
        """All events extending head with the given leading field values."""
        if head not in self.domains:
            raise UnknownChannel(f"undeclared channel '{head}'")
        domains = self.domains[head]
        if len(given_fields) > len(domains):
            raise RangeOverflow(
                f"channel '{head}' has {len(domains)} fields, got {len(given_fields)}"
            )
        prefixes = [".".join([head] + [str(v) for v in given_fields])]
        for values in domains[len(given_fields):]:
            prefixes = [f"{p}.{v}" for p in prefixes for v in values]
        return [event(e) for e in prefixes]

    def field_domain(self, head, position):
        domains = self.domains.get(head)
        if domains is None:
            raise UnknownChannel(f"undeclared channel '{head}'")
        if position >= len(domains):
            raise RangeOverflow(f"channel '{head}' has no field {position}")
        return domains[position]


def _expand_sugar(term, channels: _Channels):
    """Replace parse-time nodes (input prefixes, indexed choices) by core
    terms; runs before binding so the result is a plain source term."""
    t = type(term)
    if t is _InputPrefix:
        cont = _expand_sugar(term.cont, channels)
        return _expand_input(term.head, list(term.fields), cont, channels)
    if t is _IndexedChoice:
        body = _expand_sugar(term.body, channels)
        branches = []
        for item in term.items:
            if item[0] == "range":
                branches.append(("range", item[1], item[2]))
            else:
                branches.append(item)
        return _IndexedChoice(term.op, term.var, tuple(branches), body)
    if t is Prefix:
        return Prefix(term.event, _expand_sugar(term.cont, channels))
    if t is ExtChoice:
        return ExtChoice(tuple(_expand_sugar(i, channels) for i in term.items))
    if t is IntChoice:
        return IntChoice(tuple(_expand_sugar(i, channels) for i in term.items))
    if t is Guard:
        return Guard(term.cond, _expand_sugar(term.body, channels))
    if t is Seq:
        return Seq(_expand_sugar(term.first, channels), _expand_sugar(term.second, channels))
    if t is Hide:
        return Hide(_expand_sugar(term.body, channels), term.events)
    if t is Rename:
        return Rename(_expand_sugar(term.body, channels), term.pairs)
    if t is Interrupt:
        return Interrupt(
            _expand_sugar(term.body, channels), _expand_sugar(term.handler, channels)
        )
    return term


def _expand_input(head, fields, cont, channels: _Channels):
    """Desugar the first '?x' marker into an indexed external choice over
    the channel field's domain; recurse for any further markers."""
    for pos, f in enumerate(fields):
        if isinstance(f, tuple) and f and f[0] == "in":
            var = f[1]
            domain = channels.field_domain(head, pos)
            branches = []
            for v in domain:
                new_fields = list(fields)
                new_fields[pos] = Lit(v)
                sub = _substitute_var(cont, var, Lit(v))
                branches.append(_expand_input(head, new_fields, sub, channels))
            if len(branches) == 1:
                return branches[0]
            return ExtChoice(tuple(branches))
    plain = tuple(f[1] if isinstance(f, tuple) and f and f[0] == "out" else f for f in fields)
    return Prefix(EventTemplate(head, plain), cont)


def _substitute_var(term, var, value):
    """Substitute an integer expression for a variable in a source term."""

    def in_expr(e):
        if isinstance(e, Var):
            return value if e.name == var else e
        if isinstance(e, Lit):
            return e
        if isinstance(e, BinOp):
            return BinOp(e.op, in_expr(e.left), in_expr(e.right))
        if isinstance(e, UnOp):
            return UnOp(e.op, in_expr(e.operand))
        if isinstance(e, FunCall):
            return FunCall(e.name, tuple(in_expr(a) for a in e.args))
        return e

    def in_template(ev):
        if isinstance(ev, EventTemplate):
            return EventTemplate(ev.head, tuple(in_expr(f) for f in ev.fields))
        return ev

    t = type(term)
    if t is Prefix:
        return Prefix(in_template(term.event), _substitute_var(term.cont, var, value))
    if t is _InputPrefix:
        fields = []
        shadowed = False
        for f in term.fields:
            if isinstance(f, tuple) and f and f[0] == "in":
                fields.append(f)
                if f[1] == var:
                    shadowed = True
            elif isinstance(f, tuple) and f and f[0] == "out":
                fields.append(("out", in_expr(f[1])))
            else:
                fields.append(in_expr(f))
        cont = term.cont if shadowed else _substitute_var(term.cont, var, value)
        return _InputPrefix(term.head, tuple(fields), cont)
    if t is _IndexedChoice:
        items = []
        for item in term.items:
            if item[0] == "range":
                items.append(("range", in_expr(item[1]), in_expr(item[2])))
            else:
                items.append(("value", in_expr(item[1])))
        body = term.body if term.var == var else _substitute_var(term.body, var, value)
        return _IndexedChoice(term.op, term.var, tuple(items), body)
    if t is ExtChoice:
        return ExtChoice(tuple(_substitute_var(i, var, value) for i in term.items))
    if t is IntChoice:
        return IntChoice(tuple(_substitute_var(i, var, value) for i in term.items))
    if t is Guard:
        return Guard(in_expr_deep(term.cond, var, value), _substitute_var(term.body, var, value))
    if t is Seq:
        return Seq(
            _substitute_var(term.first, var, value),
            _substitute_var(term.second, var, value),
        )
    if t is Hide:
        evs = term.events
        if isinstance(evs, tuple):
            evs = tuple(in_template(e) for e in evs)
        return Hide(_substitute_var(term.body, var, value), evs)
    if t is Rename:
        pairs = term.pairs
        if pairs and isinstance(pairs[0][0], EventTemplate):
            pairs = tuple((in_template(a), in_template(b)) for a, b in pairs)
        return Rename(_substitute_var(term.body, var, value), pairs)
    if t is Interrupt:
        return Interrupt(
            _substitute_var(term.body, var, value),
            _substitute_var(term.handler, var, value),
        )
    if t is Call:
        return Call(term.name, tuple(in_expr(a) for a in term.args))
    return term


def in_expr_deep(e, var, value):
    if isinstance(e, Var):
        return value if e.name == var else e
    if isinstance(e, BinOp):
        return BinOp(e.op, in_expr_deep(e.left, var, value), in_expr_deep(e.right, var, value))
    if isinstance(e, UnOp):
        return UnOp(e.op, in_expr_deep(e.operand, var, value))
    if isinstance(e, FunCall):
        return FunCall(e.name, tuple(in_expr_deep(a, var, value) for a in e.args))
    return e


def elaborate(decl: NetworkDecl) -> Network:
    """Evaluate constants, expand channels and sugar, and instantiate atoms
    into concrete components."""
    env = DefEnv()
    for name, expr in decl.constants:
        env.constants[name] = eval_expr(expr, {}, env)
    for name, params, body in decl.functions:
        env.def_fun(name, params, body)
    channels = _Channels()
    for ch in decl.channels:
        channels.declare(ch, env)
    for d in decl.process_defs:
        env.define(Definition(d.name, d.params, _expand_sugar(d.body, channels)))
    atoms = {a.name: a for a in decl.atoms}
    components = []
    warnings = []
    seen = set()
    for inst in decl.instances:
        atom = atoms.get(inst.atom)
        if atom is None:
            raise ElaborationError(f"unknown atom '{inst.atom}'")
        if inst.ids is None:
            ids = [0]
            names = [inst.name]
        else:
            ids = []
            for item in inst.ids:
                if item[0] == "range":
                    lo = eval_expr(item[1], {}, env)
                    hi = eval_expr(item[2], {}, env)
                    ids.extend(range(lo, hi + 1))
                else:
                    ids.append(eval_expr(item[1], {}, env))
            names = [f"{inst.name}.{v}" for v in ids]
        if not ids:
            warnings.append(f"instance '{inst.name}' has an empty id set")
            continue
        for value, name in zip(ids, names):
            if name in seen:
                raise DuplicateComponentName(name)
            seen.add(name)
            alphabet = set()
            for mode, template in atom.alphabet:
                try:
                    fields = [
                        eval_expr(in_expr_deep(f, "id", Lit(value)), {}, env)
                        for f in template.fields
                    ]
                except Exception as exc:
                    raise NonGroundAlphabet(
                        f"alphabet of '{name}': {exc}"
                    ) from exc
                if mode == "extend":
                    alphabet.update(channels.completions(template.head, fields))
                else:
                    if template.head not in channels.domains:
                        raise UnknownChannel(f"undeclared channel '{template.head}'")
                    if len(fields) != len(channels.domains[template.head]):
                        raise NonGroundAlphabet(
                            f"event {template.head} needs all fields in exact form"
                        )
                    alphabet.add(event(".".join([template.head] + [str(v) for v in fields])))
            behaviour = _substitute_var(
                _expand_sugar(atom.behaviour, channels), "id", Lit(value)
            )
            components.append(
                Component(name, frozenset(alphabet), behaviour, env)
            )
    net = Network(components, sigma=channels.sigma())
    net.warnings = tuple(warnings)
    return net


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return elaborate(parse_network(fh.read()))


# ---------------------------------------------------------------------------
# descriptor files


def _resolve_component(net: Network, name):
    try:
        net.index_of(name)
    except KeyError:
        raise UnknownComponent(f"unknown component '{name}'")
    return name


def _resolve_event(net: Network, name):
    eid = event(name)
    if eid not in net.sigma:
        raise UnknownEvent(f"event '{name}' is not part of the network alphabet")
    return eid


def parse_descriptor(doc, net: Network):
    """Resolve a JSON descriptor document against an elaborated network."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise DescriptorError(f"unsupported descriptor schema {schema}")
    pattern = doc.get("pattern")
    if pattern == "resource-allocation":
        return _parse_ra(doc, net)
    if pattern == "client-server":
        return _parse_cs(doc, net)
    if pattern == "async-dynamic":
        return _parse_ad(doc, net)
    raise DescriptorError(f"unknown pattern {pattern!r}")


def load_descriptor(path, net: Network):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_descriptor(json.load(fh), net)


def _parse_ra(doc, net) -> RaDescriptor:
    connections = []
    acquire = {}
    release = {}
    for conn in doc.get("connections", []):
        u = _resolve_component(net, conn["user"])
        r = _resolve_component(net, conn["resource"])
        connections.append((u, r))
        acquire[(u, r)] = _resolve_event(net, conn["acquire"])
        release[(u, r)] = _resolve_event(net, conn["release"])
    order = {}
    for u, seq in doc.get("order", {}).items():
        order[_resolve_component(net, u)] = tuple(seq)
    desc = RaDescriptor(
        tuple(connections), acquire, release, order, tuple(doc.get("resource_order", []))
    )
    for u in desc.users:
        if u not in order:
            raise NonTotalMap(f"no acquisition order for user '{u}'")
        for r in order[u]:
            if (u, r) not in acquire:
                raise NonTotalMap(f"order of '{u}' mentions unconnected '{r}'")
        if set(order[u]) != set(desc.resources_of(u)):
            raise NonTotalMap(
                f"order of '{u}' must cover exactly its connected resources"
            )
    for r in desc.resources:
        if r not in desc.ra_order:
            raise NonTotalMap(f"resource order does not rank '{r}'")
    return desc


def _parse_cs(doc, net) -> CsDescriptor:
    connections = []
    requests = {}
    for conn in doc.get("connections", []):
        c = _resolve_component(net, conn["client"])
        s = _resolve_component(net, conn["server"])
        connections.append((c, s))
        requests[(c, s)] = frozenset(
            _resolve_event(net, e) for e in conn["requests"]
        )
        if not requests[(c, s)]:
            raise NonTotalMap(f"connection {c}->{s} declares no request events")
    responses = {}
    for ev_name, resp in doc.get("responses", {}).items():
        responses[_resolve_event(net, ev_name)] = frozenset(
            _resolve_event(net, e) for e in resp
        )
    all_requests = set()
    for evs in requests.values():
        all_requests |= evs
    for e in all_requests:
        responses.setdefault(e, frozenset())
    return CsDescriptor(
        tuple(connections),
        requests,
        responses,
        tuple(doc.get("component_order", [])),
    )


def _parse_ad(doc, net) -> AdDescriptor:
    connections = []
    link, send, receive, on, off, timeout = {}, {}, {}, {}, {}, {}
    seen_links = {}
    for conn in doc.get("connections", []):
        i = _resolve_component(net, conn["from"])
        j = _resolve_component(net, conn["to"])
        connections.append((i, j))
        k = _resolve_component(net, conn["transport"])
        if k in seen_links:
            raise DescriptorError(
                f"transport '{k}' linked to both {seen_links[k]} and {(i, j)}"
            )
        seen_links[k] = (i, j)
        link[(i, j)] = k
        send[(i, j)] = tuple(_resolve_event(net, e) for e in conn["send"])
        receive[(i, j)] = tuple(_resolve_event(net, e) for e in conn["receive"])
        if len(send[(i, j)]) != len(receive[(i, j)]):
            raise NonTotalMap(
                f"send/receive lists of {i}->{j} must pair up (same length)"
            )
        if not send[(i, j)]:
            raise NonTotalMap(f"connection {i}->{j} declares no data events")
        on[(i, j)] = _resolve_event(net, conn["on"])
        off[(i, j)] = _resolve_event(net, conn["off"])
        timeout[(i, j)] = _resolve_event(net, conn["timeout"])
    schedule = {}
    for p, seq in doc.get("schedule", {}).items():
        p = _resolve_component(net, p)
        peers = tuple(_resolve_component(net, q) for q in seq)
        if len(set(peers)) != len(peers):
            raise DuplicateInSchedule(f"schedule of '{p}' repeats a peer")
        schedule[p] = peers
    desc = AdDescriptor(
        tuple(connections), link, send, receive, on, off, timeout, schedule
    )
    for p in desc.participants:
        if p not in schedule:
            raise NonTotalMap(f"no schedule for participant '{p}'")
    return desc


def descriptor_echo(desc) -> str:
    """Readable role listing for review, in the style of a worked example."""
    lines = [f"pattern: {desc.pattern}"]
    if isinstance(desc, RaDescriptor):
        lines.append(f"  users     = {desc.users}")
        lines.append(f"  resources = {desc.resources}")
        for (u, r) in desc.connections:
            lines.append(
                f"  acquire({u},{r}) = {EVENTS.name(desc.acquire[(u, r)])}, "
                f"release({u},{r}) = {EVENTS.name(desc.release[(u, r)])}"
            )
        for u in desc.users:
            lines.append(f"  order({u}) = {list(desc.order[u])}")
        lines.append(f"  resource order (greatest first) = {list(desc.ra_order)}")
    elif isinstance(desc, CsDescriptor):
        for (c, s) in desc.connections:
            lines.append(
                f"  {c} -> {s}: requests {EVENTS.names(desc.requests[(c, s)])}"
            )
        for e, resp in sorted(desc.responses.items()):
            lines.append(f"  responses({EVENTS.name(e)}) = {EVENTS.names(resp)}")
        lines.append(f"  component order (greatest first) = {list(desc.cs_order)}")
    elif isinstance(desc, AdDescriptor):
        for (i, j) in desc.connections:
            lines.append(
                f"  {i} -> {j} via {desc.link[(i, j)]}: "
                f"send {EVENTS.names(desc.send[(i, j)])}, "
                f"receive {EVENTS.names(desc.receive[(i, j)])}"
            )
        for p, seq in sorted(desc.schedule.items()):
            lines.append(f"  schedule({p}) = {list(seq)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# network emission (round-tripping)


def emit_network(net: Network, decl_env: DefEnv | None = None) -> str:
    """Print an elaborated network back as a parseable model; definitions
    come out symbolically, components as singleton instances with exact
    alphabets."""
    env = decl_env
    if env is None:
        for c in net.components:
            if c.env is not None:
                env = c.env
                break
    lines = [f"version {SCHEMA_VERSION}"]
    if env is not None:
        for name, value in sorted(env.constants.items()):
            lines.append(f"const {name} = {value}")
    by_channel = {}
    for e in sorted(net.sigma):
        parts = EVENTS.name(e).split(".")
        head = parts[0]
        fields = tuple(int(p) for p in parts[1:])
        by_channel.setdefault((head, len(fields)), set()).add(fields)
    for (head, arity), combos in sorted(by_channel.items()):
        if arity == 0:
            lines.append(f"channel {head}")
            continue
        domains = [sorted({c[i] for c in combos}) for i in range(arity)]
        rendered = ".".join("{" + ", ".join(str(v) for v in d) + "}" for d in domains)
        lines.append(f"channel {head} : {rendered}")
    if env is not None:
        for name, (params, body) in sorted(env.functions.items()):
            lines.append(f"fun {name}({', '.join(params)}) = {fmt_expr(body)}")
        for (name, _arity), d in sorted(env.definitions.items()):
            params = f"({', '.join(d.params)})" if d.params else ""
            lines.append(f"{name}{params} = {pretty(d.body)}")
    for idx, comp in enumerate(net.components):
        if comp.term is None:
            raise ValueError(f"component '{comp.name}' has no term to print")
        atom = f"C{idx}"
        alpha = ", ".join(EVENTS.names(comp.alphabet))
        lines.append(
            f"atom {atom} = alphabet {{ {alpha} }} behaviour {pretty(comp.term)}"
        )
        lines.append(f"instance {comp.name} = {atom}")
    return "\n".join(lines) + "\n"
