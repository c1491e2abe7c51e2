"""Behavioural patterns: resource-allocation, client/server, async-dynamic.

Each pattern couples a descriptor (who plays which role, over which
events) with two kinds of obligations:

* structural predicates: pure alphabet arithmetic against the network's
  vocabulary, no behaviour involved;
* behavioural compliance: a generated characteristic process per component,
  refined against the component's abstraction in the model the pattern
  calls for (revivals for the all-server-requests-offered condition,
  failures everywhere else), plus the order side conditions (acquisition
  sequences descending under the resource order, duplicate-free schedules).

A verdict of adherent, together with liveness, discharges deadlock freedom
for the subnetwork the descriptor covers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .events import EVENTS
from .lts import DEFAULT_STATE_LIMIT, compile_term
from .network import Network, abs_lts, abs_divergent
from .semantics import Counterexample, FAILURES, REVIVALS, normalize, refines
from .decomposition import parallel_map
from .terms import (
    BinOp,
    Call,
    DefEnv,
    Definition,
    ExtChoice,
    Guard,
    IntChoice,
    Interrupt,
    Lit,
    Prefix,
    Seq,
    SKIP,
    STOP,
    Term,
    Var,
)

RESOURCE_ALLOCATION = "resource-allocation"
CLIENT_SERVER = "client-server"
ASYNC_DYNAMIC = "async-dynamic"


class UnknownComponent(Exception):
    pass


class UnknownElement(Exception):
    pass


class EmptyRoleSet(Exception):
    pass


# ---------------------------------------------------------------------------
# descriptors


@dataclass
class RaDescriptor:
    """Users acquire resources through per-connection acquire/release events,
    each user in a fixed sequence; the resource order lists resources from
    greatest to least."""

    connections: tuple  # (user name, resource name)
    acquire: dict  # (user, resource) -> event id
    release: dict  # (user, resource) -> event id
    order: dict  # user -> tuple of resource names (acquisition sequence)
    ra_order: tuple  # resource names, greatest first

    pattern = RESOURCE_ALLOCATION

    @property
    def users(self):
        return sorted({u for (u, _r) in self.connections})

    @property
    def resources(self):
        return sorted({r for (_u, r) in self.connections})

    def resources_of(self, user):
        return sorted({r for (u, r) in self.connections if u == user})

    def users_of(self, resource):
        return sorted({u for (u, r) in self.connections if r == resource})

    def components(self):
        return frozenset(self.users) | frozenset(self.resources)


@dataclass
class CsDescriptor:
    """Clients send request events to servers and wait for the associated
    responses; the component order lists components from greatest to least
    and every connection must point strictly downwards."""

    connections: tuple  # (client name, server name)
    requests: dict  # (client, server) -> frozenset of event ids
    responses: dict  # request event id -> frozenset of event ids
    cs_order: tuple  # component names, greatest first

    pattern = CLIENT_SERVER

    def client_requests(self, name):
        out = set()
        for (c, s) in self.connections:
            if c == name:
                out |= self.requests[(c, s)]
        return frozenset(out)

    def server_requests(self, name):
        out = set()
        for (c, s) in self.connections:
            if s == name:
                out |= self.requests[(c, s)]
        return frozenset(out)

    def responses_of(self, events):
        out = set()
        for e in events:
            out |= self.responses.get(e, frozenset())
        return frozenset(out)

    def components(self):
        return frozenset(c for (c, _s) in self.connections) | frozenset(
            s for (_c, s) in self.connections
        )


@dataclass
class AdDescriptor:
    """Participants exchange data through one-directional transport
    entities; send/receive event lists are index-aligned (the k-th send
    carries the same datum as the k-th receive)."""

    connections: tuple  # (sender name, receiver name)
    link: dict  # (sender, receiver) -> transport component name
    send: dict  # (sender, receiver) -> tuple of event ids
    receive: dict  # (sender, receiver) -> tuple of event ids
    on: dict  # (sender, receiver) -> event id
    off: dict  # (sender, receiver) -> event id
    timeout: dict  # (sender, receiver) -> event id
    schedule: dict  # participant -> tuple of peer names

    pattern = ASYNC_DYNAMIC

    @property
    def participants(self):
        out = set()
        for (i, j) in self.connections:
            out.add(i)
            out.add(j)
        return sorted(out)

    @property
    def transport_entities(self):
        return sorted(self.link.values())

    def source(self, k):
        for conn, name in self.link.items():
            if name == k:
                return conn[0]
        raise UnknownComponent(k)

    def target(self, k):
        for conn, name in self.link.items():
            if name == k:
                return conn[1]
        raise UnknownComponent(k)

    def components(self):
        return frozenset(self.participants) | frozenset(self.transport_entities)


# ---------------------------------------------------------------------------
# order side conditions


def respects_order(seq, order) -> bool:
    """True when consecutive elements are strictly descending under the
    order given as a greatest-first sequence."""
    rank = {x: i for i, x in enumerate(order)}
    for x in seq:
        if x not in rank:
            raise UnknownElement(f"'{x}' is not ranked by the order")
    return all(rank[seq[i]] < rank[seq[i + 1]] for i in range(len(seq) - 1))


# ---------------------------------------------------------------------------
# structural predicates


@dataclass
class PredicateResult:
    name: str
    ok: bool
    witness: str = ""

    def to_json(self):
        data = {"predicate": self.name, "ok": self.ok}
        if self.witness:
            data["witness"] = self.witness
        return data


def _alpha(net, name):
    try:
        return net[net.index_of(name)].alphabet
    except KeyError as exc:
        raise UnknownComponent(str(exc)) from exc


def _controlled(net, name, expected, predicate):
    actual = _alpha(net, name) & net.voc
    if actual == expected:
        return PredicateResult(predicate, True)
    diff = (actual ^ expected)
    return PredicateResult(
        predicate,
        False,
        witness=f"{name}: mismatch on {EVENTS.names(diff)}",
    )


def check_structural(desc, net: Network, scope) -> list:
    """Evaluate the pattern's structural predicates over the given component
    scope (a set of component names)."""
    scope = frozenset(scope)
    for name in desc.components():
        if name not in scope:
            raise UnknownComponent(
                f"descriptor references '{name}' outside the checked scope"
            )
        net.index_of(name)
    if isinstance(desc, RaDescriptor):
        return _ra_structural(desc, net, scope)
    if isinstance(desc, CsDescriptor):
        return _cs_structural(desc, net, scope)
    if isinstance(desc, AdDescriptor):
        return _ad_structural(desc, net, scope)
    raise TypeError(f"unknown descriptor {desc!r}")


def _partitioned(scope, left, right, name):
    users, resources = frozenset(left), frozenset(right)
    if users & resources:
        return PredicateResult(
            name, False, witness=f"both roles: {sorted(users & resources)}"
        )
    if users | resources != scope:
        missing = sorted(scope - (users | resources))
        return PredicateResult(name, False, witness=f"unassigned: {missing}")
    return PredicateResult(name, True)


def _ra_structural(desc: RaDescriptor, net, scope):
    out = [_partitioned(scope, desc.users, desc.resources, "partitioned")]
    acq = set(desc.acquire.values())
    rel = set(desc.release.values())
    clash = acq & rel
    out.append(
        PredicateResult(
            "mutually_disjoint_events",
            not clash,
            witness="" if not clash else f"acquire = release on {EVENTS.names(clash)}",
        )
    )
    for u in desc.users:
        expected = frozenset(
            desc.acquire[(u, r)] for r in desc.resources_of(u)
        ) | frozenset(desc.release[(u, r)] for r in desc.resources_of(u))
        out.append(_controlled(net, u, expected, "controlled_alpha_users"))
    for r in desc.resources:
        expected = frozenset(
            desc.acquire[(u, r)] for u in desc.users_of(r)
        ) | frozenset(desc.release[(u, r)] for u in desc.users_of(r))
        out.append(_controlled(net, r, expected, "controlled_alpha_resources"))
    return out


def _cs_structural(desc: CsDescriptor, net, scope):
    out = []
    all_requests = set()
    for evs in desc.requests.values():
        all_requests |= evs
    all_responses = set()
    for evs in desc.responses.values():
        all_responses |= evs
    clash = all_requests & all_responses
    out.append(
        PredicateResult(
            "disjoint_events",
            not clash,
            witness="" if not clash else EVENTS.names(clash).__str__(),
        )
    )
    for name in sorted(scope):
        sreq = desc.server_requests(name)
        creq = desc.client_requests(name)
        expected = sreq | creq | desc.responses_of(sreq) | desc.responses_of(creq)
        out.append(_controlled(net, name, expected, "controlled_alpha"))
    rank = {x: i for i, x in enumerate(desc.cs_order)}
    bad = [
        (c, s)
        for (c, s) in desc.connections
        if c not in rank or s not in rank or not rank[c] < rank[s]
    ]
    out.append(
        PredicateResult(
            "ordered",
            not bad,
            witness="" if not bad else f"connections against the order: {bad}",
        )
    )
    return out


def _ad_structural(desc: AdDescriptor, net, scope):
    out = [
        _partitioned(scope, desc.participants, desc.transport_entities, "partitioned")
    ]
    families = {
        "send": set().union(*desc.send.values()) if desc.send else set(),
        "receive": set().union(*desc.receive.values()) if desc.receive else set(),
        "on": set(desc.on.values()),
        "off": set(desc.off.values()),
        "timeout": set(desc.timeout.values()),
    }
    clash = ""
    fam = sorted(families)
    for i in range(len(fam)):
        for j in range(i + 1, len(fam)):
            inter = families[fam[i]] & families[fam[j]]
            if inter:
                clash = f"{fam[i]}/{fam[j]} overlap on {EVENTS.names(inter)}"
    out.append(PredicateResult("mutually_disjoint_events", not clash, witness=clash))
    for p in desc.participants:
        expected = set()
        for (i, j) in desc.connections:
            if i == p:
                expected |= set(desc.send[(i, j)])
                expected.add(desc.on[(i, j)])
                expected.add(desc.off[(i, j)])
            if j == p:
                expected |= set(desc.receive[(i, j)])
                expected.add(desc.timeout[(i, j)])
        out.append(
            _controlled(net, p, frozenset(expected), "controlled_alpha_participant")
        )
    for conn, k in sorted(desc.link.items()):
        expected = (
            frozenset(desc.send[conn])
            | frozenset(desc.receive[conn])
            | {desc.on[conn], desc.off[conn], desc.timeout[conn]}
        )
        out.append(
            _controlled(net, k, expected, "controlled_alpha_transport_entity")
        )
    return out


# ---------------------------------------------------------------------------
# characteristic processes


def generate_spec(desc, role: str, name: str, net: Network | None = None):
    """Characteristic process for one component in one role.

    Returns (env, term); the pair compiles to the specification the
    component's abstraction must refine.  The server-requests role needs
    the network (the choice of non-server events ranges over the whole
    component alphabet).
    """
    if isinstance(desc, RaDescriptor):
        if role == "user":
            return _user_spec(desc, name)
        if role == "resource":
            return _resource_spec(desc, name)
    if isinstance(desc, CsDescriptor):
        if role == "serverRequests":
            if net is None:
                raise ValueError("the server-requests role needs the network")
            return server_requests_spec(desc, net, name)
        if role == "requestsResponses":
            return _requests_responses_spec(desc, name)
    if isinstance(desc, AdDescriptor):
        if role == "transport":
            return _transport_spec(desc, name)
        if role == "participant":
            return _participant_spec(desc, name)
    raise ValueError(f"role {role!r} is not valid for {desc.pattern}")


def _chain(events, tail: Term) -> Term:
    term = tail
    for e in reversed(events):
        term = Prefix(e, term)
    return term


def _user_spec(desc: RaDescriptor, name):
    seq = desc.order.get(name)
    if seq is None:
        raise UnknownComponent(f"no acquisition order for user '{name}'")
    acquires = [desc.acquire[(name, r)] for r in seq]
    releases = [desc.release[(name, r)] for r in seq]
    env = DefEnv()
    env.define(Definition("User", (), _chain(acquires + releases, Call("User"))))
    return env, Call("User")


def _resource_spec(desc: RaDescriptor, name):
    branches = tuple(
        Prefix(
            desc.acquire[(u, name)],
            Prefix(desc.release[(u, name)], Call("Resource")),
        )
        for u in desc.users_of(name)
    )
    if not branches:
        raise EmptyRoleSet(f"resource '{name}' has no users")
    env = DefEnv()
    env.define(
        Definition(
            "Resource",
            (),
            branches[0] if len(branches) == 1 else ExtChoice(branches),
        )
    )
    return env, Call("Resource")


def _int_choice_prefixes(events, cont) -> Term | None:
    items = tuple(Prefix(e, cont) for e in sorted(events))
    if not items:
        return None
    return items[0] if len(items) == 1 else IntChoice(items)


def _ext_choice_prefixes(events, cont) -> Term:
    items = tuple(Prefix(e, cont) for e in sorted(events))
    if not items:
        return STOP  # an empty replicated external choice offers nothing
    return items[0] if len(items) == 1 else ExtChoice(items)


def _requests_responses_spec(desc: CsDescriptor, name):
    c_evts = desc.client_requests(name)
    s_evts = desc.server_requests(name)
    env = DefEnv()

    def round_term(events, external_responses):
        branches = []
        for e in sorted(events):
            resp = desc.responses.get(e, frozenset())
            if not resp:
                cont = SKIP
            elif external_responses:
                cont = _ext_choice_prefixes(resp, SKIP)
            else:
                cont = _int_choice_prefixes(resp, SKIP)
            branches.append(Prefix(e, cont))
        if len(branches) == 1:
            return branches[0]
        return IntChoice(tuple(branches))

    if not c_evts and not s_evts:
        # the stated definition degenerates to STOP, which can never be
        # refined by a busy component
        raise EmptyRoleSet(
            f"'{name}' has no request events in either role; its "
            "request-response process is STOP and violates busyness"
        )
    rounds = []
    if c_evts:
        rounds.append(round_term(c_evts, external_responses=True))
    if s_evts:
        rounds.append(round_term(s_evts, external_responses=False))
    body = rounds[0] if len(rounds) == 1 else IntChoice(tuple(rounds))
    env.define(Definition("CS", (), Seq(body, Call("CS"))))
    return env, Call("CS")


def _transport_spec(desc: AdDescriptor, name):
    conn = None
    for c, k in desc.link.items():
        if k == name:
            conn = c
    if conn is None:
        raise UnknownComponent(f"'{name}' is not a transport entity")
    sends = desc.send[conn]
    recvs = desc.receive[conn]
    on, off, timeout = desc.on[conn], desc.off[conn], desc.timeout[conn]
    env = DefEnv()
    env.define(
        Definition(
            "Off",
            (),
            ExtChoice((Prefix(on, Call("On")), Prefix(timeout, Call("Off")))),
        )
    )
    env.define(
        Definition(
            "On",
            (),
            ExtChoice(
                (Prefix(off, Call("Off")),)
                + tuple(Prefix(s, Call("Full", (k,))) for k, s in enumerate(sends))
            ),
        )
    )
    # the full buffer relays the datum it stores: the emit branch is gated
    # on the slot value (false guards vanish, STOP in a choice is inert)
    full_branches = (
        (Prefix(off, Call("Off")),)
        + tuple(Prefix(s, Call("Full", (k,))) for k, s in enumerate(sends))
        + tuple(
            Guard(BinOp("==", Var("d"), Lit(k)), Prefix(recvs[k], Call("On")))
            for k in range(len(recvs))
        )
    )
    env.define(Definition("Full", ("d",), ExtChoice(full_branches)))
    return env, Call("Off")


def _participant_spec(desc: AdDescriptor, name):
    sched = desc.schedule.get(name)
    if sched is None:
        raise UnknownComponent(f"no schedule for participant '{name}'")
    outgoing = [p for p in sched if (name, p) in desc.link]
    incoming = [p for p in sched if (p, name) in desc.link]
    env = DefEnv()
    send_receive: Term = Call("SR")
    for p in reversed(incoming):
        conn = (p, name)
        offer = _ext_choice_prefixes(
            tuple(desc.receive[conn]) + (desc.timeout[conn],), SKIP
        )
        send_receive = Seq(offer, send_receive)
    for p in reversed(outgoing):
        conn = (name, p)
        pick = _int_choice_prefixes(desc.send[conn], SKIP)
        if pick is None:
            raise EmptyRoleSet(f"connection {conn} has no send events")
        send_receive = Seq(pick, send_receive)
    env.define(Definition("SR", (), send_receive))
    on_detect = _chain([desc.on[(name, p)] for p in outgoing], SKIP)
    off_detect = _chain([desc.off[(name, p)] for p in outgoing], SKIP)
    body = Seq(
        on_detect,
        Seq(
            Interrupt(Call("SR"), IntChoice((SKIP, STOP))),
            Seq(off_detect, Call("Participant")),
        ),
    )
    env.define(Definition("Participant", (), body))
    return env, Call("Participant")


# server-requests needs the component alphabet, so it takes the network too


def server_requests_spec(desc: CsDescriptor, net: Network, name: str):
    s_evts = desc.server_requests(name)
    other = _alpha(net, name) - s_evts
    env = DefEnv()
    if not other:
        if not s_evts:
            raise EmptyRoleSet(f"'{name}' has neither server events nor others")
        env.define(
            Definition("Run", (), _ext_choice_prefixes(s_evts, Call("Run")))
        )
        return env, Call("Run")
    branches = [_int_choice_prefixes(other, SKIP)]
    branches.append(_ext_choice_prefixes(s_evts, SKIP))
    env.define(
        Definition("Server", (), Seq(IntChoice(tuple(branches)), Call("Server")))
    )
    return env, Call("Server")


# ---------------------------------------------------------------------------
# behavioural compliance


@dataclass
class BehaviouralResult:
    component: str
    spec_name: str
    model: str
    ok: bool
    counterexample: Counterexample | None = None
    note: str = ""

    def to_json(self):
        data = {
            "component": self.component,
            "spec": self.spec_name,
            "model": self.model,
            "ok": self.ok,
        }
        if self.counterexample is not None:
            data["counterexample"] = self.counterexample.to_json()
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class PatternVerdict:
    pattern: str
    structural: list
    behavioural: list
    adherent: bool
    warnings: tuple = ()

    def failures(self):
        out = [p for p in self.structural if not p.ok]
        out += [b for b in self.behavioural if not b.ok]
        return out

    def to_json(self):
        return {
            "pattern": self.pattern,
            "structural": [p.to_json() for p in self.structural],
            "behavioural": [b.to_json() for b in self.behavioural],
            "adherent": self.adherent,
            "warnings": list(self.warnings),
        }


def _refine_against(net, name, spec_env, spec_term, model, limit, spec_name):
    idx = net.index_of(name)
    spec_lts = compile_term(spec_env, spec_term, limit)
    nspec = normalize(spec_lts, universe=net.sigma)
    impl = abs_lts(net, idx, limit)
    ce = refines(nspec, impl, model)
    return BehaviouralResult(name, spec_name, model, ce is None, ce)


def check_behavioural(desc, net: Network, scope, limit=DEFAULT_STATE_LIMIT) -> list:
    """Run every behavioural obligation of the pattern over the scope."""
    scope = frozenset(scope)
    jobs = []
    if isinstance(desc, RaDescriptor):
        for u in desc.users:
            env, term = generate_spec(desc, "user", u)
            jobs.append((u, env, term, FAILURES, "UserSpec"))
        for r in desc.resources:
            env, term = generate_spec(desc, "resource", r)
            jobs.append((r, env, term, FAILURES, "ResourceSpec"))
        results = parallel_map(
            lambda j: _refine_against(net, j[0], j[1], j[2], j[3], limit, j[4]), jobs
        )
        for u in desc.users:
            try:
                ok = respects_order(desc.order[u], desc.ra_order)
                note = "" if ok else (
                    f"acquisition order {list(desc.order[u])} is not descending "
                    f"under the resource order"
                )
            except UnknownElement as exc:
                ok, note = False, str(exc)
            results.append(
                BehaviouralResult(u, "acquisition-order", "structural", ok, note=note)
            )
        return results
    if isinstance(desc, CsDescriptor):
        degenerate = []
        for name in sorted(scope):
            env, term = server_requests_spec(desc, net, name)
            jobs.append((name, env, term, REVIVALS, "ServerRequestsSpec"))
            try:
                env2, term2 = generate_spec(desc, "requestsResponses", name)
            except EmptyRoleSet as exc:
                degenerate.append(
                    BehaviouralResult(
                        name, "RequestsResponsesSpec", FAILURES, False, note=str(exc)
                    )
                )
            else:
                jobs.append((name, env2, term2, FAILURES, "RequestsResponsesSpec"))
        results = parallel_map(
            lambda j: _refine_against(net, j[0], j[1], j[2], j[3], limit, j[4]), jobs
        )
        return results + degenerate
    if isinstance(desc, AdDescriptor):
        for k in desc.transport_entities:
            env, term = generate_spec(desc, "transport", k)
            jobs.append((k, env, term, FAILURES, "TransportSpec"))
        for p in desc.participants:
            env, term = generate_spec(desc, "participant", p)
            jobs.append((p, env, term, FAILURES, "ParticipantSpec"))
        results = parallel_map(
            lambda j: _refine_against(net, j[0], j[1], j[2], j[3], limit, j[4]), jobs
        )
        for p in desc.participants:
            sched = desc.schedule.get(p, ())
            dup = len(sched) != len(set(sched))
            results.append(
                BehaviouralResult(
                    p,
                    "schedule",
                    "structural",
                    not dup,
                    note="" if not dup else f"schedule {list(sched)} repeats a peer",
                )
            )
        return results
    raise TypeError(f"unknown descriptor {desc!r}")


def check_pattern(desc, net: Network, scope, limit=DEFAULT_STATE_LIMIT) -> PatternVerdict:
    """Structural predicates first; behavioural compliance only on a clean
    structure (its verdicts are meaningless otherwise)."""
    structural = check_structural(desc, net, scope)
    warnings = []
    for name in sorted(desc.components()):
        if abs_divergent(net, net.index_of(name), limit):
            warnings.append(
                f"abstraction of {name} diverges; its stable checks are vacuous"
            )
    if not all(p.ok for p in structural):
        return PatternVerdict(desc.pattern, structural, [], False, tuple(warnings))
    behavioural = check_behavioural(desc, net, scope, limit)
    adherent = all(b.ok for b in behavioural)
    return PatternVerdict(desc.pattern, structural, behavioural, adherent, tuple(warnings))
