"""Process-term syntax.

The term language covers the sequential fragment needed to describe network
components: STOP/SKIP/div, event prefixing, external and internal choice,
boolean guards, sequential composition, hiding, relational renaming,
interrupt, and calls to named (possibly recursive, integer-parametrised)
definitions.  Parallel composition lives at the LTS level, not here.

Terms come in two flavours sharing the same node classes:

* *source* terms, as produced by the parser or spec generators, may contain
  integer expressions over definition parameters inside events, guards and
  call arguments;
* *ground* terms, produced by :func:`bind`, contain only interned event ids
  and evaluated call arguments.  Ground terms are hashable canonical forms;
  the compiler memoises on them.

Guards disappear during binding: a true guard yields its body, a false one
yields STOP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .events import EVENTS


class DslValueError(Exception):
    pass


class GuardNotClosed(DslValueError):
    pass


class UnboundCall(DslValueError):
    pass


class EmptyChoiceList(DslValueError):
    pass


# ---------------------------------------------------------------------------
# integer / boolean expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class FunCall(Expr):
    name: str
    args: tuple


def eval_expr(expr, bindings, env):
    """Evaluate a closed expression to an int (booleans are 0/1)."""
    if isinstance(expr, int):
        return expr
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        if expr.name in bindings:
            return bindings[expr.name]
        if env is not None and expr.name in env.constants:
            return env.constants[expr.name]
        raise GuardNotClosed(f"unbound variable '{expr.name}'")
    if isinstance(expr, UnOp):
        v = eval_expr(expr.operand, bindings, env)
        if expr.op == "-":
            return -v
        if expr.op == "not":
            return 0 if v else 1
        raise DslValueError(f"unknown unary operator {expr.op}")
    if isinstance(expr, BinOp):
        op = expr.op
        l = eval_expr(expr.left, bindings, env)
        if op == "and":
            return eval_expr(expr.right, bindings, env) if l else 0
        if op == "or":
            return l if l else eval_expr(expr.right, bindings, env)
        r = eval_expr(expr.right, bindings, env)
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        if op == "/":
            return l // r
        if op == "%":
            # mathematical modulo: result has the sign of the divisor
            return l % r
        if op == "==":
            return 1 if l == r else 0
        if op == "!=":
            return 1 if l != r else 0
        if op == "<":
            return 1 if l < r else 0
        if op == "<=":
            return 1 if l <= r else 0
        if op == ">":
            return 1 if l > r else 0
        if op == ">=":
            return 1 if l >= r else 0
        raise DslValueError(f"unknown operator {op}")
    if isinstance(expr, FunCall):
        if env is None or expr.name not in env.functions:
            raise UnboundCall(f"unknown function '{expr.name}'")
        params, body = env.functions[expr.name]
        if len(params) != len(expr.args):
            raise UnboundCall(f"function '{expr.name}' expects {len(params)} arguments")
        inner = dict(zip(params, (eval_expr(a, bindings, env) for a in expr.args)))
        return eval_expr(body, inner, env)
    raise DslValueError(f"cannot evaluate {expr!r}")


# ---------------------------------------------------------------------------
# events inside terms


@dataclass(frozen=True)
class EventTemplate:
    """A dotted event whose fields may be expressions over parameters."""

    head: str
    fields: tuple = ()

    def resolve(self, bindings, env) -> int:
        if not self.fields:
            return EVENTS.intern(self.head)
        parts = [self.head]
        for f in self.fields:
            parts.append(str(eval_expr(f, bindings, env)))
        return EVENTS.intern(".".join(parts))


# ---------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()

    def __str__(self):
        return pretty(self)


def _cached_hash(obj, key):
    object.__setattr__(obj, "_h", hash(key))


@dataclass(frozen=True, eq=False)
class Stop(Term):
    def __post_init__(self):
        _cached_hash(self, ("Stop",))

    def __eq__(self, other):
        return isinstance(other, Stop)

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Skip(Term):
    def __post_init__(self):
        _cached_hash(self, ("Skip",))

    def __eq__(self, other):
        return isinstance(other, Skip)

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Div(Term):
    def __post_init__(self):
        _cached_hash(self, ("Div",))

    def __eq__(self, other):
        return isinstance(other, Div)

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Omega(Term):
    """Terminated process: the target of a tick transition."""

    def __post_init__(self):
        _cached_hash(self, ("Omega",))

    def __eq__(self, other):
        return isinstance(other, Omega)

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Prefix(Term):
    event: object  # int when ground, EventTemplate otherwise
    cont: Term

    def __post_init__(self):
        _cached_hash(self, ("Prefix", self.event, self.cont))

    def __eq__(self, other):
        return (
            isinstance(other, Prefix)
            and self.event == other.event
            and self.cont == other.cont
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class ExtChoice(Term):
    items: tuple

    def __post_init__(self):
        _cached_hash(self, ("Ext", self.items))

    def __eq__(self, other):
        return isinstance(other, ExtChoice) and self.items == other.items

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class IntChoice(Term):
    items: tuple

    def __post_init__(self):
        _cached_hash(self, ("Int", self.items))

    def __eq__(self, other):
        return isinstance(other, IntChoice) and self.items == other.items

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Guard(Term):
    cond: Expr
    body: Term

    def __post_init__(self):
        _cached_hash(self, ("Guard", self.cond, self.body))

    def __eq__(self, other):
        return (
            isinstance(other, Guard)
            and self.cond == other.cond
            and self.body == other.body
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Seq(Term):
    first: Term
    second: Term

    def __post_init__(self):
        _cached_hash(self, ("Seq", self.first, self.second))

    def __eq__(self, other):
        return (
            isinstance(other, Seq)
            and self.first == other.first
            and self.second == other.second
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Hide(Term):
    body: Term
    events: object  # frozenset[int] when ground, tuple[EventTemplate] otherwise

    def __post_init__(self):
        _cached_hash(self, ("Hide", self.body, self.events))

    def __eq__(self, other):
        return (
            isinstance(other, Hide)
            and self.body == other.body
            and self.events == other.events
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Rename(Term):
    body: Term
    # ground: sorted tuple of (from_id, to_id) pairs; the relation may be
    # one-to-many.  source form: tuple of (EventTemplate, EventTemplate).
    pairs: tuple

    def __post_init__(self):
        _cached_hash(self, ("Rename", self.body, self.pairs))

    def __eq__(self, other):
        return (
            isinstance(other, Rename)
            and self.body == other.body
            and self.pairs == other.pairs
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Interrupt(Term):
    body: Term
    handler: Term

    def __post_init__(self):
        _cached_hash(self, ("Interrupt", self.body, self.handler))

    def __eq__(self, other):
        return (
            isinstance(other, Interrupt)
            and self.body == other.body
            and self.handler == other.handler
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True, eq=False)
class Call(Term):
    name: str
    args: tuple = ()

    def __post_init__(self):
        _cached_hash(self, ("Call", self.name, self.args))

    def __eq__(self, other):
        return (
            isinstance(other, Call)
            and self.name == other.name
            and self.args == other.args
        )

    def __hash__(self):
        return self._h


STOP = Stop()
SKIP = Skip()
DIV = Div()
OMEGA = Omega()


# ---------------------------------------------------------------------------
# definition environments


@dataclass
class Definition:
    name: str
    params: tuple
    body: Term


class DefEnv:
    """Named process definitions plus integer constants and helper functions.

    Definitions are keyed by (name, arity); recursion and mutual recursion
    are expressed through :class:`Call` nodes.
    """

    def __init__(self, definitions=(), constants=None, functions=None):
        self.definitions: dict[tuple, Definition] = {}
        self.constants: dict[str, int] = dict(constants or {})
        self.functions: dict[str, tuple] = dict(functions or {})
        for d in definitions:
            self.define(d)
        self._expand_cache: dict[tuple, Term] = {}

    def define(self, definition: Definition):
        self.definitions[(definition.name, len(definition.params))] = definition

    def def_fun(self, name, params, body):
        self.functions[name] = (tuple(params), body)

    def lookup(self, name, arity) -> Definition:
        d = self.definitions.get((name, arity))
        if d is None:
            raise UnboundCall(f"no definition for {name}/{arity}")
        return d

    def expand(self, name, args) -> Term:
        """Ground body of a call, memoised per (name, evaluated args)."""
        key = (name, args)
        cached = self._expand_cache.get(key)
        if cached is None:
            d = self.lookup(name, len(args))
            cached = bind(d.body, dict(zip(d.params, args)), self)
            self._expand_cache[key] = cached
        return cached


EMPTY_ENV = DefEnv()


# ---------------------------------------------------------------------------
# canonicalising constructors

# Recursion under hiding or renaming would otherwise wrap ever-deeper
# contexts around each unfolding; fusing nested occurrences keeps such
# definitions finite-control.


def hide_of(body: Term, events: frozenset) -> Term:
    if isinstance(body, Hide) and isinstance(body.events, frozenset):
        return Hide(body.body, body.events | events)
    return Hide(body, events)


def rename_of(body: Term, pairs: tuple) -> Term:
    if isinstance(body, Rename) and body.pairs and isinstance(body.pairs[0][0], int):
        outer = {}
        for a, b in pairs:
            outer.setdefault(a, set()).add(b)

        def outer_img(e):
            return outer.get(e, {e})

        composed = set()
        inner_domain = {a for (a, _b) in body.pairs}
        for a, b in body.pairs:
            for c in outer_img(b):
                composed.add((a, c))
        for a in outer:
            if a not in inner_domain:
                for c in outer[a]:
                    composed.add((a, c))
        return Rename(body.body, tuple(sorted(composed)))
    return Rename(body, pairs)


# ---------------------------------------------------------------------------
# binding: source term + variable bindings -> ground term


def bind(term: Term, bindings: dict, env: DefEnv) -> Term:
    """Close a term: evaluate guards, event fields, hide/rename sets and
    call arguments under ``bindings``.  The result contains only interned
    event ids and is suitable for compilation."""
    t = type(term)
    if t in (Stop, Skip, Div, Omega):
        return term
    if t is Prefix:
        ev = term.event
        if not isinstance(ev, int):
            ev = ev.resolve(bindings, env)
        return Prefix(ev, bind(term.cont, bindings, env))
    if t is ExtChoice:
        if not term.items:
            raise EmptyChoiceList("external choice over an empty list")
        return ExtChoice(tuple(bind(i, bindings, env) for i in term.items))
    if t is IntChoice:
        if not term.items:
            raise EmptyChoiceList("internal choice over an empty list")
        return IntChoice(tuple(bind(i, bindings, env) for i in term.items))
    if t is Guard:
        if eval_expr(term.cond, bindings, env):
            return bind(term.body, bindings, env)
        return STOP
    if t is Seq:
        return Seq(bind(term.first, bindings, env), bind(term.second, bindings, env))
    if t is Hide:
        evs = term.events
        if not isinstance(evs, frozenset):
            evs = frozenset(e.resolve(bindings, env) for e in evs)
        return hide_of(bind(term.body, bindings, env), evs)
    if t is Rename:
        pairs = term.pairs
        if pairs and not isinstance(pairs[0][0], int):
            pairs = tuple(
                sorted(
                    (a.resolve(bindings, env), b.resolve(bindings, env))
                    for a, b in pairs
                )
            )
        return rename_of(bind(term.body, bindings, env), pairs)
    if t is Interrupt:
        return Interrupt(
            bind(term.body, bindings, env), bind(term.handler, bindings, env)
        )
    if t is Call:
        args = tuple(eval_expr(a, bindings, env) for a in term.args)
        env.lookup(term.name, len(args))  # fail early on unbound calls
        return Call(term.name, args)
    hook = getattr(term, "bind_hook", None)
    if hook is not None:
        return hook(bindings, env)
    raise DslValueError(f"cannot bind {term!r}")


# ---------------------------------------------------------------------------
# pretty printing (diagnostics and network round-tripping)


def _fmt_event(ev) -> str:
    if isinstance(ev, int):
        return EVENTS.name(ev)
    parts = [ev.head] + [fmt_expr(f) for f in ev.fields]
    return ".".join(parts)


def fmt_expr(expr) -> str:
    if isinstance(expr, int):
        return str(expr)
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, UnOp):
        if expr.op == "not":
            return f"not {fmt_expr(expr.operand)}"
        return f"-{fmt_expr(expr.operand)}"
    if isinstance(expr, BinOp):
        return f"({fmt_expr(expr.left)} {expr.op} {fmt_expr(expr.right)})"
    if isinstance(expr, FunCall):
        return f"{expr.name}({', '.join(fmt_expr(a) for a in expr.args)})"
    return repr(expr)


def pretty(term: Term) -> str:
    hook = getattr(term, "pretty_hook", None)
    if hook is not None:
        return hook()
    t = type(term)
    if t is Stop:
        return "STOP"
    if t is Skip:
        return "SKIP"
    if t is Div:
        return "DIV"
    if t is Omega:
        return "OMEGA"
    if t is Prefix:
        return f"{_fmt_event(term.event)} -> {_paren(term.cont, Prefix)}"
    if t is ExtChoice:
        return " [] ".join(_paren(i, ExtChoice) for i in term.items)
    if t is IntChoice:
        return " |~| ".join(_paren(i, IntChoice) for i in term.items)
    if t is Guard:
        return f"{fmt_expr(term.cond)} & {_paren(term.body, Guard)}"
    if t is Seq:
        return f"{_paren(term.first, Seq)} ; {_paren(term.second, Seq)}"
    if t is Hide:
        evs = term.events
        names = (
            sorted(EVENTS.name(e) for e in evs)
            if isinstance(evs, frozenset)
            else [_fmt_event(e) for e in evs]
        )
        return f"{_paren(term.body, Hide)} \\ {{{', '.join(names)}}}"
    if t is Rename:
        ps = term.pairs
        if ps and isinstance(ps[0][0], int):
            body = ", ".join(f"{EVENTS.name(a)} <- {EVENTS.name(b)}" for a, b in ps)
        else:
            body = ", ".join(f"{_fmt_event(a)} <- {_fmt_event(b)}" for a, b in ps)
        return f"{_paren(term.body, Rename)} [[{body}]]"
    if t is Interrupt:
        return f"{_paren(term.body, Interrupt)} /\\ {_paren(term.handler, Interrupt)}"
    if t is Call:
        if not term.args:
            return term.name
        return f"{term.name}({', '.join(fmt_expr(a) for a in term.args)})"
    return repr(term)


_ATOMIC = (Stop, Skip, Div, Omega, Call)


def _paren(term, parent):
    s = pretty(term)
    if isinstance(term, _ATOMIC) or type(term) is parent is Prefix:
        return s
    if isinstance(term, Prefix) and parent in (Prefix, Guard):
        return s
    return f"({s})"
