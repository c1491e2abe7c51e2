"""Labelled transition systems and the operational semantics.

:func:`compile_term` explores the canonical ground terms reachable from a
start term.  Recursion is handled by memoising on the canonical term itself
(calls stay folded), so any finite-control process yields a finite LTS
without a syntactic unfolding bound.  A state-count limit guards against
genuinely infinite-state terms.

:func:`parallel_lts` is the alphabetised parallel product used both for the
pairwise conflict contexts and for tests; the global n-way product lives in
the oracle module.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .events import TAU, TICK, EVENTS
from .terms import (
    Call,
    DefEnv,
    Div,
    ExtChoice,
    Hide,
    IntChoice,
    Interrupt,
    Omega,
    Prefix,
    Rename,
    Seq,
    Skip,
    Stop,
    Term,
    DIV,
    OMEGA,
    bind,
    hide_of,
    pretty,
    rename_of,
)

DEFAULT_STATE_LIMIT = 1_000_000


class StateLimitExceeded(Exception):
    def __init__(self, limit, note=""):
        message = f"state limit of {limit} states exceeded"
        if note:
            message += f" ({note})"
        super().__init__(message)
        self.limit = limit


class AlphabetViolation(Exception):
    pass


@dataclass
class Lts:
    """Immutable transition system over interned labels.

    ``trans[s]`` is a tuple of (label, target) pairs sorted by label then
    target; TICK (-2) and TAU (-1) therefore sort before all visible events,
    which keeps every traversal in this package deterministic.
    """

    initial: int
    trans: tuple
    state_names: tuple | None = None

    @property
    def n_states(self) -> int:
        return len(self.trans)

    def taus(self, s):
        return [t for (l, t) in self.trans[s] if l == TAU]

    def is_stable(self, s) -> bool:
        return all(l != TAU for (l, _) in self.trans[s])

    def has_tick(self, s) -> bool:
        return any(l == TICK for (l, _) in self.trans[s])

    def visible_initials(self, s) -> frozenset:
        return frozenset(l for (l, _) in self.trans[s] if l >= 0)

    def visible_events(self) -> frozenset:
        return frozenset(
            l for row in self.trans for (l, _) in row if l >= 0
        )

    def successors(self, s, label):
        return [t for (l, t) in self.trans[s] if l == label]

    def state_name(self, s) -> str:
        if self.state_names is not None:
            return self.state_names[s]
        return f"s{s}"


def _step(term: Term, env: DefEnv, visiting=()):
    """Outgoing transitions of a canonical ground term.

    An unguarded recursive call (a call cycle with no intervening event) is
    treated as divergence, matching the least-fixed-point reading of such
    definitions.
    """
    t = type(term)
    if t in (Stop, Omega):
        return ()
    if t is Skip:
        return ((TICK, OMEGA),)
    if t is Div:
        return ((TAU, DIV),)
    if t is Prefix:
        return ((term.event, term.cont),)
    if t is ExtChoice:
        out = []
        items = term.items
        for i, p in enumerate(items):
            for l, tgt in _step(p, env, visiting):
                if l == TAU:
                    out.append((TAU, ExtChoice(items[:i] + (tgt,) + items[i + 1 :])))
                else:
                    out.append((l, tgt))
        return out
    if t is IntChoice:
        return tuple((TAU, p) for p in term.items)
    if t is Seq:
        out = []
        for l, tgt in _step(term.first, env, visiting):
            if l == TICK:
                out.append((TAU, term.second))
            else:
                out.append((l, Seq(tgt, term.second)))
        return out
    if t is Hide:
        evs = term.events
        out = []
        for l, tgt in _step(term.body, env, visiting):
            nl = TAU if (l >= 0 and l in evs) else l
            out.append((nl, hide_of(tgt, evs) if l != TICK else OMEGA))
        return out
    if t is Rename:
        image = {}
        for a, b in term.pairs:
            image.setdefault(a, []).append(b)
        out = []
        for l, tgt in _step(term.body, env, visiting):
            nt = rename_of(tgt, term.pairs) if l != TICK else OMEGA
            if l >= 0:
                for b in image.get(l, (l,)):
                    out.append((b, nt))
            else:
                out.append((l, nt))
        return out
    if t is Interrupt:
        out = []
        for l, tgt in _step(term.body, env, visiting):
            if l == TICK:
                out.append((TICK, OMEGA))
            else:
                out.append((l, Interrupt(tgt, term.handler)))
        for l, tgt in _step(term.handler, env, visiting):
            if l == TAU:
                out.append((TAU, Interrupt(term.body, tgt)))
            elif l == TICK:
                out.append((TICK, OMEGA))
            else:
                out.append((l, tgt))
        return out
    if t is Call:
        key = (term.name, term.args)
        if key in visiting:
            return _step(DIV, env)
        return _step(env.expand(term.name, term.args), env, visiting + (key,))
    raise TypeError(f"cannot step {term!r}")


def compile_term(
    env: DefEnv,
    term: Term,
    limit: int = DEFAULT_STATE_LIMIT,
    bindings: dict | None = None,
    keep_terms: bool = True,
) -> Lts:
    """Compile a term (closed under ``env``) to its reachable LTS."""
    start = bind(term, bindings or {}, env)
    ids: dict[Term, int] = {start: 0}
    order: list[Term] = [start]
    trans: list[tuple] = []
    queue = deque([start])
    try:
        while queue:
            cur = queue.popleft()
            row = []
            for label, tgt in _step(cur, env):
                sid = ids.get(tgt)
                if sid is None:
                    sid = len(order)
                    if sid >= limit:
                        raise StateLimitExceeded(limit)
                    ids[tgt] = sid
                    order.append(tgt)
                    queue.append(tgt)
                row.append((label, sid))
            row.sort()
            trans.append(tuple(dict.fromkeys(row)))
    except RecursionError:
        # ever-growing canonical terms (recursion re-wrapped in sequence or
        # interrupt contexts) blow the interpreter stack before the count cap
        raise StateLimitExceeded(
            limit, "canonical terms grow without bound; the process has no "
            "finite control structure"
        ) from None
    names = tuple(pretty(t) for t in order) if keep_terms else None
    return Lts(0, tuple(trans), names)


def hide_lts(lts: Lts, hidden: frozenset) -> Lts:
    """Relabel the given visible events as internal transitions."""
    trans = []
    for row in lts.trans:
        new = sorted(
            dict.fromkeys(
                (TAU if (l >= 0 and l in hidden) else l, t) for (l, t) in row
            )
        )
        trans.append(tuple(new))
    return Lts(lts.initial, tuple(trans), lts.state_names)


def rename_lts(lts: Lts, relation: dict) -> Lts:
    """Apply a (possibly one-to-many) renaming relation: event id -> tuple of
    event ids.  Events outside the relation's domain are unchanged."""
    trans = []
    for row in lts.trans:
        new = []
        for l, t in row:
            if l >= 0:
                for b in relation.get(l, (l,)):
                    new.append((b, t))
            else:
                new.append((l, t))
        trans.append(tuple(dict.fromkeys(sorted(new))))
    return Lts(lts.initial, tuple(trans), lts.state_names)


def check_alphabet(lts: Lts, alphabet: frozenset):
    extra = lts.visible_events() - alphabet
    if extra:
        raise AlphabetViolation(
            "transitions outside the declared alphabet: "
            + ", ".join(sorted(EVENTS.name(e) for e in extra))
        )


def parallel_lts(
    a: Lts,
    alpha_a: frozenset,
    b: Lts,
    alpha_b: frozenset,
    limit: int = DEFAULT_STATE_LIMIT,
) -> Lts:
    """Alphabetised parallel product.

    Events in both alphabets synchronise, events in exactly one interleave,
    internal moves always interleave, and termination is distributed (both
    sides must be able to tick).
    """
    check_alphabet(a, alpha_a)
    check_alphabet(b, alpha_b)
    shared = alpha_a & alpha_b
    ids = {(a.initial, b.initial): 0}
    order = [(a.initial, b.initial)]
    trans = []
    queue = deque(order)

    def state_id(pair):
        sid = ids.get(pair)
        if sid is None:
            sid = len(order)
            if sid >= limit:
                raise StateLimitExceeded(limit)
            ids[pair] = sid
            order.append(pair)
            queue.append(pair)
        return sid

    while queue:
        sa, sb = queue.popleft()
        row = []
        ticks_a = [t for (l, t) in a.trans[sa] if l == TICK]
        ticks_b = [t for (l, t) in b.trans[sb] if l == TICK]
        for ta in ticks_a:
            for tb in ticks_b:
                row.append((TICK, state_id((ta, tb))))
        for l, t in a.trans[sa]:
            if l == TAU:
                row.append((TAU, state_id((t, sb))))
            elif l >= 0 and l not in shared:
                row.append((l, state_id((t, sb))))
        for l, t in b.trans[sb]:
            if l == TAU:
                row.append((TAU, state_id((sa, t))))
            elif l >= 0 and l not in shared:
                row.append((l, state_id((sa, t))))
        for l, t in a.trans[sa]:
            if l in shared:
                for l2, t2 in b.trans[sb]:
                    if l2 == l:
                        row.append((l, state_id((t, t2))))
        trans.append(tuple(dict.fromkeys(sorted(row))))
    names = None
    if a.state_names is not None and b.state_names is not None:
        names = tuple(
            f"({a.state_names[sa]} || {b.state_names[sb]})" for (sa, sb) in order
        )
    return Lts(0, tuple(trans), names)
