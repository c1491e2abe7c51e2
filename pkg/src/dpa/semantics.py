"""Stable-failures / stable-revivals semantics and refinement checking.

The observable content of a stable LTS state (no internal transition
enabled) is summarised by its *acceptance*: the set of visible labels it
offers, possibly together with the termination signal.  Maximal refusals
are complements of acceptances, so acceptance sets are the compact
representation used throughout:

* failures mode: termination is urgent, so *any* state that can tick --
  stable or not -- refuses every visible event but never the termination
  signal; its acceptance for refusal purposes collapses to ``{TICK}``;
* revivals mode: a stable state contributes a revival for each visible
  event it offers, *unless* it can terminate, in which case it contributes
  neither revivals nor a deadlock (only its traces matter).

Both models are divergence-blind: internal-transition cycles are reported
via :class:`StableInfo` divergence flags, never as violations.

Refinement runs breadth-first over pairs of (normalised spec state,
implementation state), expanding transitions in ascending label order, so
the first violation found has a shortest, deterministic witness trace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .events import TAU, TICK, EVENTS, fmt_events
from .lts import Lts

FAILURES = "failures"
REVIVALS = "revivals"


class SpecDivergence(Exception):
    def __init__(self, trace):
        super().__init__(
            "specification diverges after " + _fmt_trace(trace)
        )
        self.trace = trace


def _fmt_trace(trace):
    if not trace:
        return "<>"
    return "<" + ", ".join(EVENTS.name(e) for e in trace) + ">"


# ---------------------------------------------------------------------------
# stable behaviours of an LTS


@dataclass
class StableInfo:
    tau_closure: list
    stable: list
    acceptance: list  # visible initials + TICK for stable states, else None
    divergent: list  # state lies on an internal-transition cycle

    def stable_members(self, s):
        return [m for m in self.tau_closure[s] if self.stable[m]]


def stable_behaviours(lts: Lts) -> StableInfo:
    """Tau-closures, stable acceptances and divergence flags, per state.

    Quadratic in the worst case; intended for component-sized systems
    (specifications, individual components, snapshot states), not for raw
    product spaces.
    """
    n = lts.n_states
    tau_succ = [lts.taus(s) for s in range(n)]
    stable = [not tau_succ[s] for s in range(n)]
    closures = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            cur = stack.pop()
            for t in tau_succ[cur]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        closures.append(frozenset(seen))
    divergent = []
    for s in range(n):
        divergent.append(any(s in closures[t] for t in tau_succ[s]))
    acceptance = []
    for s in range(n):
        if stable[s]:
            acc = set(lts.visible_initials(s))
            if lts.has_tick(s):
                acc.add(TICK)
            acceptance.append(frozenset(acc))
        else:
            acceptance.append(None)
    return StableInfo(closures, stable, acceptance, divergent)


def component_deadlocks(lts: Lts):
    """Shortest trace to a state that offers nothing at all, or None."""
    queue = deque([lts.initial])
    parents = {lts.initial: None}
    while queue:
        s = queue.popleft()
        if not lts.trans[s]:
            return _reconstruct(parents, s)
        for l, t in lts.trans[s]:
            if t not in parents:
                parents[t] = (s, l)
                queue.append(t)
    return None


def first_tick_trace(lts: Lts):
    """Shortest visible trace leading to an enabled termination, or None."""
    queue = deque([lts.initial])
    parents = {lts.initial: None}
    while queue:
        s = queue.popleft()
        for l, t in lts.trans[s]:
            if l == TICK:
                return _reconstruct(parents, s)
            if t not in parents:
                parents[t] = (s, l)
                queue.append(t)
    return None


def _reconstruct(parents, s):
    trace = []
    while parents[s] is not None:
        s, l = parents[s]
        if l >= 0:
            trace.append(l)
    trace.reverse()
    return tuple(trace)


# ---------------------------------------------------------------------------
# normalisation


@dataclass
class NormalState:
    members: frozenset
    min_acceptances: tuple  # antichain of minimal acceptances (may hold TICK)
    acceptances: tuple  # full family from non-terminating stable members
    deadlock_allowed: bool
    tick_allowed: bool


@dataclass
class NormalSpec:
    """Determinised specification automaton annotated with acceptance data.

    ``universe`` is the visible-event universe the spec constrains; refusal
    sets in counterexamples are reported relative to it.
    """

    universe: frozenset
    states: list
    trans: list  # per state: dict visible label -> state id
    initial: int = 0

    @property
    def n_states(self):
        return len(self.states)


def _min_antichain(sets):
    out = []
    for s in sorted(sets, key=len):
        if not any(m <= s for m in out):
            out.append(s)
    return tuple(out)


def normalize(spec: Lts, universe: frozenset | None = None) -> NormalSpec:
    """Subset-construct the deterministic automaton of a specification.

    Divergence anywhere in the explored subsets is an error: a divergent
    specification would make the stable checks vacuous, which is never what
    a specification author means.
    """
    info = stable_behaviours(spec)
    if universe is None:
        universe = spec.visible_events()
    initial = info.tau_closure[spec.initial]
    ids = {initial: 0}
    order = [initial]
    states: list[NormalState] = []
    trans: list[dict] = []
    queue = deque([(initial, ())])
    while queue:
        members, trace = queue.popleft()
        for m in members:
            if info.divergent[m]:
                raise SpecDivergence(trace)
        stable_accs = [info.acceptance[m] for m in members if info.stable[m]]
        tick_allowed = any(
            l == TICK for m in members for (l, _) in spec.trans[m]
        )
        # termination is urgent: a tick-enabled member (stable or not) lets
        # the spec refuse all of sigma, i.e. grants the acceptance {TICK}
        fail_accs = [acc for acc in stable_accs if TICK not in acc]
        if tick_allowed:
            fail_accs.append(frozenset({TICK}))
        rev_accs = sorted(
            {acc for acc in stable_accs if TICK not in acc}, key=sorted
        )
        states.append(
            NormalState(
                members=members,
                min_acceptances=_min_antichain(fail_accs),
                acceptances=tuple(rev_accs),
                deadlock_allowed=any(acc == frozenset() for acc in stable_accs),
                tick_allowed=tick_allowed,
            )
        )
        row = {}
        labels = sorted(
            {l for m in members for (l, _) in spec.trans[m] if l >= 0}
        )
        for l in labels:
            targets = set()
            for m in members:
                for t in spec.successors(m, l):
                    targets |= info.tau_closure[t]
            tgt = frozenset(targets)
            sid = ids.get(tgt)
            if sid is None:
                sid = len(order)
                ids[tgt] = sid
                order.append(tgt)
                queue.append((tgt, trace + (l,)))
            row[l] = sid
        trans.append(row)
    return NormalSpec(universe, states, trans)


# ---------------------------------------------------------------------------
# counterexamples


TRACE_VIOLATION = "trace"
REFUSAL_VIOLATION = "refusal"
REVIVAL_VIOLATION = "revival"
DEADLOCK_VIOLATION = "deadlock"


@dataclass
class Counterexample:
    kind: str
    trace: tuple  # visible events leading to the witnessing configuration
    event: int | None = None  # offending event (trace/revival kinds)
    acceptance: frozenset | None = None  # impl acceptance at the witness
    refusal: frozenset | None = None  # reported refusal set (vs universe)

    def describe(self) -> str:
        t = _fmt_trace(self.trace)
        if self.kind == TRACE_VIOLATION:
            ev = "tick" if self.event == TICK else EVENTS.name(self.event)
            return f"trace violation: after {t} the implementation performs {ev}"
        if self.kind == REFUSAL_VIOLATION:
            return (
                f"refusal violation: after {t} the implementation accepts only "
                f"{_fmt_acc(self.acceptance)}"
            )
        if self.kind == REVIVAL_VIOLATION:
            return (
                f"revival violation: after {t} the implementation offers "
                f"{EVENTS.name(self.event)} while refusing {fmt_events(self.refusal)}"
            )
        return f"deadlock violation: after {t} the implementation deadlocks"

    def to_json(self):
        data = {
            "kind": self.kind,
            "trace": [EVENTS.name(e) for e in self.trace],
        }
        if self.event is not None:
            data["event"] = "tick" if self.event == TICK else EVENTS.name(self.event)
        if self.acceptance is not None:
            data["acceptance"] = EVENTS.names(e for e in self.acceptance if e >= 0)
            if TICK in self.acceptance:
                data["acceptance"].append("tick")
        if self.refusal is not None:
            data["refusal"] = EVENTS.names(self.refusal)
        return data


def _fmt_acc(acc):
    parts = sorted(EVENTS.name(e) for e in acc if e >= 0)
    if TICK in acc:
        parts.append("tick")
    return "{" + ", ".join(parts) + "}"


# ---------------------------------------------------------------------------
# refinement


def refines(spec: NormalSpec, impl: Lts, model: str) -> Counterexample | None:
    """Check ``spec [F= impl`` or ``spec [V= impl``; None means it holds.

    Violations are detected in breadth-first order with transitions taken
    in ascending interned-label order, so the returned counterexample is a
    shortest one and identical across runs.
    """
    if model not in (FAILURES, REVIVALS):
        raise ValueError(f"unknown model {model!r}")
    start = (spec.initial, impl.initial)
    visited = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        ns, is_ = pair
        nstate = spec.states[ns]
        row = impl.trans[is_]
        stable = all(l != TAU for (l, _) in row)
        has_tick = any(l == TICK for (l, _) in row)
        initials = frozenset(l for (l, _) in row if l >= 0)
        # trace escapes first: the event itself is the evidence
        for l, _t in row:
            if l == TICK and not nstate.tick_allowed:
                return Counterexample(
                    TRACE_VIOLATION, _pair_trace(visited, pair), event=TICK
                )
            if l >= 0 and l not in spec.trans[ns]:
                return Counterexample(
                    TRACE_VIOLATION, _pair_trace(visited, pair), event=l
                )
        if model == FAILURES:
            # tick-enabled states refuse all visibles (termination urgency),
            # whether or not they are stable
            acc = None
            if has_tick:
                acc = frozenset({TICK})
            elif stable:
                acc = initials
            if acc is not None and not any(
                a <= acc for a in nstate.min_acceptances
            ):
                return Counterexample(
                    REFUSAL_VIOLATION,
                    _pair_trace(visited, pair),
                    acceptance=acc,
                    refusal=spec.universe - acc,
                )
        else:
            if stable and not has_tick:
                if not initials:
                    if not nstate.deadlock_allowed:
                        return Counterexample(
                            DEADLOCK_VIOLATION,
                            _pair_trace(visited, pair),
                            acceptance=frozenset(),
                            refusal=spec.universe,
                        )
                else:
                    for a in sorted(initials):
                        if not any(
                            a in acc and acc <= initials
                            for acc in nstate.acceptances
                        ):
                            return Counterexample(
                                REVIVAL_VIOLATION,
                                _pair_trace(visited, pair),
                                event=a,
                                acceptance=initials,
                                refusal=spec.universe - initials,
                            )
        for l, t in row:
            if l == TAU:
                nxt = (ns, t)
            elif l == TICK:
                continue  # nothing is observable beyond termination
            else:
                nxt = (spec.trans[ns][l], t)
            if nxt not in visited:
                visited[nxt] = (pair, l)
                queue.append(nxt)
    return None


def _pair_trace(visited, pair):
    trace = []
    while visited[pair] is not None:
        pair, l = visited[pair]
        if l >= 0:
            trace.append(l)
    trace.reverse()
    return tuple(trace)


# ---------------------------------------------------------------------------
# counterexample replay


def replay(impl: Lts, ce: Counterexample) -> bool:
    """Re-execute a counterexample trace on the implementation and confirm it
    reaches a configuration witnessing the reported violation."""
    current = _closure(impl, {impl.initial})
    for e in ce.trace:
        nxt = set()
        for s in current:
            nxt.update(impl.successors(s, e))
        if not nxt:
            return False
        current = _closure(impl, nxt)
    if ce.kind == TRACE_VIOLATION:
        if ce.event == TICK:
            return any(impl.has_tick(s) for s in current)
        return any(ce.event in impl.visible_initials(s) for s in current)
    for s in current:
        acc = impl.visible_initials(s)
        tick = impl.has_tick(s)
        if ce.kind == REFUSAL_VIOLATION and tick and ce.acceptance == {TICK}:
            return True
        if not impl.is_stable(s):
            continue
        if ce.kind == DEADLOCK_VIOLATION and not acc and not tick:
            return True
        if ce.kind == REFUSAL_VIOLATION and not tick and acc == ce.acceptance:
            return True
        if ce.kind == REVIVAL_VIOLATION and not tick:
            if ce.event in acc and acc == ce.acceptance:
                return True
    return False


def _closure(lts, states):
    seen = set(states)
    stack = list(states)
    while stack:
        s = stack.pop()
        for t in lts.taus(s):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen
