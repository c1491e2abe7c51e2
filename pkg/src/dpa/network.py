"""Networks of components, liveness checks and the communication graph.

A component pairs an alphabet with a behaviour (a term closed under a
definition environment, or a precompiled LTS for synthetic inputs).  The
network's vocabulary is the union of pairwise alphabet intersections: the
events some other component must cooperate on.  Everything outside the
vocabulary is a private action and gets hidden by :func:`abs_lts`, the
abstraction all local behavioural checks run against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .events import EVENTS
from .lts import DEFAULT_STATE_LIMIT, Lts, check_alphabet, compile_term, hide_lts
from .semantics import (
    component_deadlocks,
    first_tick_trace,
    stable_behaviours,
)
from .terms import DefEnv, EMPTY_ENV, Term


class CompileFailure(Exception):
    def __init__(self, component, cause):
        super().__init__(f"component '{component}' failed to compile: {cause}")
        self.component = component
        self.cause = cause


class NotLive(Exception):
    def __init__(self, report):
        super().__init__("network is not live:\n" + report.summary())
        self.report = report


@dataclass
class Component:
    name: str
    alphabet: frozenset
    term: Term | None = None
    env: DefEnv = field(default_factory=lambda: EMPTY_ENV)
    lts: Lts | None = None  # precompiled behaviour (tests, abstractions)
    _compiled: Lts | None = field(default=None, repr=False)

    def compiled(self, limit: int = DEFAULT_STATE_LIMIT) -> Lts:
        if self._compiled is None:
            if self.lts is not None:
                self._compiled = self.lts
            else:
                try:
                    self._compiled = compile_term(self.env, self.term, limit)
                except Exception as exc:
                    raise CompileFailure(self.name, exc) from exc
            check_alphabet(self._compiled, self.alphabet)
        return self._compiled


class Network:
    """Ordered sequence of components with the derived event universe."""

    def __init__(self, components, sigma=None):
        self.components: tuple = tuple(components)
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise ValueError("duplicate component names")
        alpha_union = frozenset().union(*(c.alphabet for c in self.components)) if self.components else frozenset()
        self.sigma: frozenset = frozenset(sigma) if sigma is not None else alpha_union
        if not alpha_union <= self.sigma:
            raise ValueError("component alphabets must lie inside sigma")
        voc = set()
        for a, b in combinations(self.components, 2):
            voc |= a.alphabet & b.alphabet
        self.voc: frozenset = frozenset(voc)
        self.warnings: tuple = ()
        self._index = {c.name: i for i, c in enumerate(self.components)}

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i) -> Component:
        return self.components[i]

    def index_of(self, name: str) -> int:
        if name not in self._index:
            raise KeyError(f"unknown component '{name}'")
        return self._index[name]

    def names(self):
        return [c.name for c in self.components]


@dataclass
class SectionResult:
    name: str
    ok: bool
    trace: tuple | None = None
    detail: str = ""


@dataclass
class LivenessReport:
    busy: list
    non_terminating: list
    triple_disjoint: SectionResult

    @property
    def live(self) -> bool:
        return (
            all(r.ok for r in self.busy)
            and all(r.ok for r in self.non_terminating)
            and self.triple_disjoint.ok
        )

    def summary(self) -> str:
        lines = []
        for r in self.busy:
            lines.append(f"  busy {r.name}: {'ok' if r.ok else 'DEADLOCKS ' + _tr(r.trace)}")
        for r in self.non_terminating:
            lines.append(
                f"  non-terminating {r.name}: {'ok' if r.ok else 'TICKS after ' + _tr(r.trace)}"
            )
        t = self.triple_disjoint
        lines.append(
            f"  triple-disjoint: {'ok' if t.ok else 'VIOLATED ' + t.detail}"
        )
        return "\n".join(lines)

    def to_json(self):
        return {
            "live": self.live,
            "busy": [
                {"component": r.name, "ok": r.ok,
                 **({"trace": [EVENTS.name(e) for e in r.trace]} if r.trace is not None else {})}
                for r in self.busy
            ],
            "non_terminating": [
                {"component": r.name, "ok": r.ok,
                 **({"trace": [EVENTS.name(e) for e in r.trace]} if r.trace is not None else {})}
                for r in self.non_terminating
            ],
            "triple_disjoint": {"ok": self.triple_disjoint.ok,
                                "detail": self.triple_disjoint.detail},
        }


def _tr(trace):
    if trace is None:
        return ""
    return "<" + ", ".join(EVENTS.name(e) for e in trace) + ">"


def check_live(net: Network, limit: int = DEFAULT_STATE_LIMIT) -> LivenessReport:
    """Busy + non-terminating + triple-disjoint, with witnesses on failure."""
    busy = []
    non_term = []
    for comp in net.components:
        lts = comp.compiled(limit)
        dtrace = component_deadlocks(lts)
        busy.append(SectionResult(comp.name, dtrace is None, dtrace))
        ttrace = first_tick_trace(lts)
        non_term.append(SectionResult(comp.name, ttrace is None, ttrace))
    owners = {}
    td = SectionResult("triple-disjoint", True)
    for i, comp in enumerate(net.components):
        for e in comp.alphabet:
            owners.setdefault(e, []).append(i)
    for e, idx in sorted(owners.items()):
        if len(idx) > 2:
            who = ", ".join(net.components[i].name for i in idx)
            td = SectionResult(
                "triple-disjoint",
                False,
                detail=f"event {EVENTS.name(e)} shared by {who}",
            )
            break
    return LivenessReport(busy, non_term, td)


def abs_lts(net: Network, i: int, limit: int = DEFAULT_STATE_LIMIT) -> Lts:
    """Component behaviour with every non-vocabulary event hidden."""
    lts = net[i].compiled(limit)
    return hide_lts(lts, net[i].alphabet - net.voc)


def abs_divergent(net: Network, i: int, limit: int = DEFAULT_STATE_LIMIT) -> bool:
    """True when hiding private events introduced divergence, which makes
    stable checks on this abstraction vacuous."""
    info = stable_behaviours(abs_lts(net, i, limit))
    return any(info.divergent)


@dataclass
class CommGraph:
    n: int
    names: list
    edges: dict  # (i, j) with i < j -> shared event set

    def neighbours(self, i):
        out = []
        for (a, b) in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def adjacency(self):
        adj = {i: [] for i in range(self.n)}
        for (a, b) in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for v in adj.values():
            v.sort()
        return adj


def communication_graph(net: Network) -> CommGraph:
    edges = {}
    for i, j in combinations(range(len(net)), 2):
        shared = net[i].alphabet & net[j].alphabet
        if shared:
            edges[(i, j)] = shared
    return CommGraph(len(net), net.names(), edges)
