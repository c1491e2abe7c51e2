"""Topology-based decomposition: remove conflict-free bridges, split into
essential subnetworks.

A bridge of the communication graph may be removed when the two components
on it can never reach a mutual ungranted request.  That is decided by a
revivals refinement: the pair is abstracted, each shared-event offer is
doubled with a fresh ``req`` offer, the two sides are composed in parallel,
and the result must refine a specification that permits every behaviour
except "offers req while refusing every shared event" before the first
req, and never deadlocks before it either.

A failed refinement does not demonstrate a real conflict (abstraction can
introduce spurious ones), hence the verdict name ``possible-conflict``.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .events import EVENTS
from .lts import DEFAULT_STATE_LIMIT, Lts, compile_term, parallel_lts, rename_lts
from .network import CommGraph, Network, NotLive, abs_lts, check_live, communication_graph
from .semantics import (
    Counterexample,
    NormalSpec,
    REVIVALS,
    normalize,
    refines,
    stable_behaviours,
)
from .terms import (
    Call,
    DefEnv,
    Definition,
    ExtChoice,
    IntChoice,
    Prefix,
    SKIP,
    STOP,
)

CONFLICT_FREE = "conflict-free"
POSSIBLE_CONFLICT = "possible-conflict"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("DPA_WORKERS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Deterministically ordered map over a bounded worker pool."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# bridges


def bridges(g: CommGraph) -> frozenset:
    """All disconnecting edges, via the low-link bridge algorithm,
    implemented iteratively (linear in nodes + edges)."""
    adj = g.adjacency()
    pre = {v: -1 for v in range(g.n)}
    low = {}
    counter = 0
    out = set()
    for root in range(g.n):
        if pre[root] != -1:
            continue
        stack = [(root, -1, iter(adj[root]))]
        pre[root] = counter
        low[root] = counter
        counter += 1
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if pre[w] == -1:
                    pre[w] = counter
                    low[w] = counter
                    counter += 1
                    stack.append((w, v, iter(adj[w])))
                    advanced = True
                    break
                elif w != parent:
                    # back or cross edge within the component (the graph is
                    # simple, so skipping every parent occurrence is sound)
                    low[v] = min(low[v], pre[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > pre[u]:
                        out.add((min(u, v), max(u, v)))
    return frozenset(out)


def bridges_reference(g: CommGraph) -> frozenset:
    """Quadratic remove-and-count reference used to validate :func:`bridges`."""

    def n_components(skip_edge):
        seen = set()
        count = 0
        adj = {i: [] for i in range(g.n)}
        for e in g.edges:
            if e == skip_edge:
                continue
            adj[e[0]].append(e[1])
            adj[e[1]].append(e[0])
        for s in range(g.n):
            if s in seen:
                continue
            count += 1
            stack = [s]
            seen.add(s)
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
        return count

    base = n_components(None)
    return frozenset(e for e in g.edges if n_components(e) > base)


# ---------------------------------------------------------------------------
# conflict freedom


def fresh_req(net: Network) -> int:
    return EVENTS.fresh("req", net.sigma)


def build_context(
    net: Network, i: int, j: int, limit: int = DEFAULT_STATE_LIMIT, req: int | None = None
) -> Lts:
    """Parallel composition of the two abstracted components, where every
    shared-event offer additionally offers the fresh request event."""
    shared = net[i].alphabet & net[j].alphabet
    if not shared:
        raise ValueError(
            f"components {net[i].name} and {net[j].name} share no event"
        )
    if req is None:
        req = fresh_req(net)
    ext_i = rename_lts(abs_lts(net, i, limit), {e: (e, req) for e in shared})
    ext_j = rename_lts(abs_lts(net, j, limit), {e: (e, req) for e in shared})
    return parallel_lts(
        ext_i,
        net[i].alphabet | {req},
        ext_j,
        net[j].alphabet | {req},
        limit,
    )


def conflict_free_spec_term(union_events, shared_events, req: int):
    """The characteristic process: recurring offers over the union alphabet,
    with req available exactly alongside a (nondeterministically chosen)
    shared event, and unconstrained chaos once a req has been taken."""
    env = DefEnv()
    chaos_events = sorted(union_events | {req})
    env.define(
        Definition(
            "CHAOS",
            (),
            IntChoice(
                (SKIP, STOP)
                + tuple(Prefix(e, Call("CHAOS")) for e in chaos_events)
            ),
        )
    )
    shared_branch = IntChoice(
        tuple(Prefix(e, Call("CF")) for e in sorted(shared_events))
    )
    guarded = ExtChoice((shared_branch, Prefix(req, Call("CHAOS"))))
    any_branch = IntChoice(tuple(Prefix(e, Call("CF")) for e in sorted(union_events)))
    env.define(Definition("CF", (), IntChoice((guarded, any_branch))))
    return env, Call("CF")


def build_conflict_free_spec(
    net: Network, i: int, j: int, req: int | None = None
) -> NormalSpec:
    if req is None:
        req = fresh_req(net)
    union = net[i].alphabet | net[j].alphabet
    shared = net[i].alphabet & net[j].alphabet
    env, term = conflict_free_spec_term(union, shared, req)
    lts = compile_term(env, term)
    return normalize(lts, universe=union | {req})


@dataclass
class ConflictCheck:
    edge: tuple  # (i, j) indices
    names: tuple  # component names
    verdict: str  # CONFLICT_FREE or POSSIBLE_CONFLICT
    counterexample: Counterexample | None
    context_states: int
    divergent_abstractions: tuple = ()  # names whose abstraction diverges

    def to_json(self):
        data = {
            "edge": list(self.names),
            "verdict": self.verdict,
            "context_states": self.context_states,
        }
        if self.counterexample is not None:
            data["counterexample"] = self.counterexample.to_json()
        if self.divergent_abstractions:
            data["divergence_warnings"] = list(self.divergent_abstractions)
        return data


def check_conflict_free(
    net: Network, i: int, j: int, limit: int = DEFAULT_STATE_LIMIT
) -> ConflictCheck:
    req = fresh_req(net)
    context = build_context(net, i, j, limit, req)
    spec = build_conflict_free_spec(net, i, j, req)
    ce = refines(spec, context, REVIVALS)
    warn = []
    for k in (i, j):
        info = stable_behaviours(abs_lts(net, k, limit))
        if any(info.divergent):
            warn.append(net[k].name)
    return ConflictCheck(
        edge=(i, j),
        names=(net[i].name, net[j].name),
        verdict=CONFLICT_FREE if ce is None else POSSIBLE_CONFLICT,
        counterexample=ce,
        context_states=context.n_states,
        divergent_abstractions=tuple(warn),
    )


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class DecompositionResult:
    graph: CommGraph
    bridge_edges: frozenset
    checks: list
    removed_edges: frozenset
    subnetworks: list  # sorted lists of component indices
    all_singular: bool

    def residual_graph(self) -> CommGraph:
        """The communication graph after removing the conflict-free bridges;
        its connected components are the essential subnetworks."""
        edges = {
            e: shared
            for e, shared in self.graph.edges.items()
            if e not in self.removed_edges
        }
        return CommGraph(self.graph.n, self.graph.names, edges)

    def subnetwork_names(self, net: Network):
        return [[net[i].name for i in sub] for sub in self.subnetworks]

    def to_json(self, net: Network):
        return {
            "bridges": [[net[i].name, net[j].name] for (i, j) in sorted(self.bridge_edges)],
            "checks": [c.to_json() for c in self.checks],
            "removed_edges": [
                [net[i].name, net[j].name] for (i, j) in sorted(self.removed_edges)
            ],
            "subnetworks": self.subnetwork_names(net),
            "all_singular": self.all_singular,
        }


def decompose(
    net: Network,
    limit: int = DEFAULT_STATE_LIMIT,
    precheck_live: bool = True,
    timings: dict | None = None,
) -> DecompositionResult:
    """Remove conflict-free bridges and split the communication graph into
    essential subnetworks.  Refuses to run on a network that is not live."""
    if precheck_live:
        report = check_live(net, limit)
        if not report.live:
            raise NotLive(report)
    t0 = time.perf_counter()
    graph = communication_graph(net)
    bridge_edges = bridges(graph)
    if timings is not None:
        timings["bridges"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    checks = parallel_map(
        lambda e: check_conflict_free(net, e[0], e[1], limit), sorted(bridge_edges)
    )
    if timings is not None:
        timings["conflicts"] = time.perf_counter() - t0
    removed = frozenset(c.edge for c in checks if c.verdict == CONFLICT_FREE)
    adj = {i: set() for i in range(graph.n)}
    for e in graph.edges:
        if e not in removed:
            adj[e[0]].add(e[1])
            adj[e[1]].add(e[0])
    seen = set()
    subnetworks = []
    for s in range(graph.n):
        if s in seen:
            continue
        comp = {s}
        seen.add(s)
        stack = [s]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        subnetworks.append(sorted(comp))
    subnetworks.sort(key=lambda sub: sub[0])
    return DecompositionResult(
        graph=graph,
        bridge_edges=bridge_edges,
        checks=checks,
        removed_edges=removed,
        subnetworks=subnetworks,
        all_singular=all(len(sub) == 1 for sub in subnetworks),
    )
