"""Ground-truth exploration of the full synchronised product.

This is the complete-but-exponential method the local analysis is measured
against: a breadth-first search over tuples of per-component LTS states,
synchronising shared events, with shortest-witness deadlock detection.  It
also builds snapshot graphs of ungranted requests at stable states; on any
deadlocked state those must contain a cycle, which the test-suite uses as a
standing sanity check on both the oracle and the theory.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .events import EVENTS, TAU, TICK
from .lts import DEFAULT_STATE_LIMIT
from .network import Network


class UnstableState(Exception):
    pass


@dataclass
class GlobalState:
    locals: tuple
    stable: bool
    trace: tuple

    def to_json(self, net: Network):
        return {
            "trace": [EVENTS.name(e) for e in self.trace],
            "locals": {
                net[i].name: net[i].compiled().state_name(s)
                for i, s in enumerate(self.locals)
            },
            "stable": self.stable,
        }


@dataclass
class DeadlockFree:
    states_explored: int

    def to_json(self, net=None):
        return {"result": "deadlock-free", "states_explored": self.states_explored}


@dataclass
class DeadlockWitness:
    trace: tuple
    state: GlobalState
    cycle: tuple = ()
    states_explored: int = 0

    def to_json(self, net: Network):
        data = {
            "result": "deadlock",
            "witness": self.state.to_json(net),
            "states_explored": self.states_explored,
        }
        if self.cycle:
            data["cycle"] = [net[i].name for i in self.cycle]
        return data


@dataclass
class LimitReached:
    states_explored: int
    frontier: int

    def to_json(self, net=None):
        return {
            "result": "limit-reached",
            "states_explored": self.states_explored,
            "frontier": self.frontier,
        }


class _Product:
    """Precomputed per-component transition tables for the n-way product.

    The exploration limit bounds the product space only; components are
    compiled under the default cap."""

    def __init__(self, net: Network, limit: int):
        self.net = net
        self.ltss = [
            c.compiled(max(limit, DEFAULT_STATE_LIMIT)) for c in net.components
        ]
        self.taus = []
        self.vis = []
        self.tick = []
        for lts in self.ltss:
            comp_taus = []
            comp_vis = []
            comp_tick = []
            for s in range(lts.n_states):
                comp_taus.append(tuple(t for (l, t) in lts.trans[s] if l == TAU))
                vmap = {}
                for l, t in lts.trans[s]:
                    if l >= 0:
                        vmap.setdefault(l, []).append(t)
                comp_vis.append(vmap)
                comp_tick.append(any(l == TICK for (l, _) in lts.trans[s]))
            self.taus.append(comp_taus)
            self.vis.append(comp_vis)
            self.tick.append(comp_tick)
        owners = {}
        for i, c in enumerate(net.components):
            for e in c.alphabet:
                owners.setdefault(e, []).append(i)
        self.owners = owners
        self.initial = tuple(lts.initial for lts in self.ltss)

    def tau_moves(self, state):
        for i, s in enumerate(state):
            for t in self.taus[i][s]:
                yield i, t

    def enabled_events(self, state):
        """Visible events all owners currently enable, in ascending order."""
        out = []
        for e, owners in self.owners.items():
            if all(e in self.vis[i][state[i]] for i in owners):
                out.append(e)
        out.sort()
        return out

    def event_successors(self, state, e):
        """All successor tuples for one synchronised event, deterministic
        order (owners ascend, local targets ascend)."""
        owners = self.owners[e]
        succs = [list(state)]
        for i in owners:
            expanded = []
            for base in succs:
                for t in self.vis[i][state[i]][e]:
                    nxt = list(base)
                    nxt[i] = t
                    expanded.append(nxt)
            succs = expanded
        return [tuple(s) for s in succs]

    def is_stable(self, state):
        return all(not self.taus[i][s] for i, s in enumerate(state))

    def all_tick(self, state):
        return all(self.tick[i][s] for i, s in enumerate(state))


def explore_global(net: Network, state_limit: int = DEFAULT_STATE_LIMIT):
    """BFS the synchronised product; first deadlock found has a shortest
    trace.  A deadlock is a stable state with no enabled visible event that
    cannot terminate either."""
    prod = _Product(net, state_limit)
    start = prod.initial
    parents = {start: None}
    queue = deque([start])
    explored = 0
    while queue:
        state = queue.popleft()
        explored += 1
        moves = []
        for i, t in prod.tau_moves(state):
            nxt = list(state)
            nxt[i] = t
            moves.append((None, tuple(nxt)))
        enabled = prod.enabled_events(state)
        for e in enabled:
            moves.extend((e, s) for s in prod.event_successors(state, e))
        if prod.is_stable(state) and not enabled and not prod.all_tick(state):
            trace = _trace_to(parents, state)
            gs = GlobalState(state, True, trace)
            return DeadlockWitness(trace, gs, states_explored=explored)
        for e, nxt in moves:
            if nxt not in parents:
                if len(parents) >= state_limit:
                    return LimitReached(explored, len(queue))
                parents[nxt] = (state, e)
                queue.append(nxt)
    return DeadlockFree(explored)


def _trace_to(parents, state):
    trace = []
    while parents[state] is not None:
        state, e = parents[state]
        if e is not None:
            trace.append(e)
    trace.reverse()
    return tuple(trace)


def iter_reachable(net: Network, state_limit: int = DEFAULT_STATE_LIMIT):
    """Yield reachable global states (with traces) up to the limit."""
    prod = _Product(net, state_limit)
    start = prod.initial
    seen = {start: ()}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        trace = seen[state]
        yield GlobalState(state, prod.is_stable(state), trace)
        succs = []
        for i, t in prod.tau_moves(state):
            nxt = list(state)
            nxt[i] = t
            succs.append((None, tuple(nxt)))
        for e in prod.enabled_events(state):
            succs.extend((e, s) for s in prod.event_successors(state, e))
        for e, nxt in succs:
            if nxt not in seen:
                if len(seen) >= state_limit:
                    return
                seen[nxt] = trace if e is None else trace + (e,)
                queue.append(nxt)


@dataclass
class SnapshotGraph:
    n: int
    names: list
    arcs: dict  # (i, j) -> frozenset of events i offers to j

    def to_json(self):
        return {
            "arcs": [
                {"from": self.names[i], "to": self.names[j],
                 "offers": EVENTS.names(evs)}
                for (i, j), evs in sorted(self.arcs.items())
            ]
        }


def snapshot_graph(net: Network, state: GlobalState) -> SnapshotGraph:
    """Directed graph of ungranted requests at one stable state: i requests
    from j, they cannot agree, and everything both offer needs cooperation."""
    if not state.stable:
        raise UnstableState("snapshot graphs are defined on stable states only")
    ltss = [c.compiled() for c in net.components]
    offers = [
        ltss[i].visible_initials(state.locals[i]) for i in range(len(net))
    ]
    arcs = {}
    for i in range(len(net)):
        for j in range(len(net)):
            if i == j:
                continue
            request = offers[i] & net[j].alphabet
            if not request:
                continue
            if offers[i] & offers[j]:
                continue
            if not (offers[i] | offers[j]) <= net.voc:
                continue
            arcs[(i, j)] = frozenset(request)
    return SnapshotGraph(len(net), net.names(), arcs)


def find_ungranted_cycle(g: SnapshotGraph):
    """Some directed cycle of the snapshot graph (DFS back edge), or None."""
    adj = {i: [] for i in range(g.n)}
    for (i, j) in sorted(g.arcs):
        adj[i].append(j)
    color = {i: 0 for i in range(g.n)}
    parent = {}
    for root in range(g.n):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                if color[w] == 0:
                    color[w] = 1
                    parent[w] = v
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
                if color[w] == 1:
                    cycle = [v]
                    cur = v
                    while cur != w:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return tuple(cycle)
            if not advanced:
                color[v] = 2
                stack.pop()
    return None
