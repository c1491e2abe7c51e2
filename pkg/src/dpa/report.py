"""Full method orchestration and report emission.

``run_dpa`` executes the two phases -- decompose, then prove pattern
adherence for each non-singular essential subnetwork -- and assembles a
machine-readable report.  The overall verdict is ``proven`` exactly when
liveness holds and every essential subnetwork is either singular or covered
by an adherent pattern descriptor; anything else is ``inconclusive``, with
reasons.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from .decomposition import DecompositionResult, decompose
from .events import EVENTS
from .lts import DEFAULT_STATE_LIMIT
from .network import CommGraph, LivenessReport, Network, check_live
from .oracle import (
    DeadlockFree,
    DeadlockWitness,
    explore_global,
    find_ungranted_cycle,
    snapshot_graph,
)
from .patterns import PatternVerdict, check_pattern
from .oracle import SnapshotGraph

REPORT_SCHEMA = 1

PROVEN = "proven"
INCONCLUSIVE = "inconclusive"


class InputError(Exception):
    """User-fixable problems: bad bindings, ambiguous descriptors."""


@dataclass
class SubnetworkOutcome:
    components: list  # names
    pattern: str | None
    verdict: PatternVerdict | None

    @property
    def discharged(self):
        if len(self.components) == 1:
            return True
        return self.verdict is not None and self.verdict.adherent

    def to_json(self):
        data = {"components": self.components, "singular": len(self.components) == 1}
        if self.pattern is not None:
            data["pattern"] = self.pattern
        if self.verdict is not None:
            data["verdict"] = self.verdict.to_json()
        data["discharged"] = self.discharged
        return data


@dataclass
class DpaReport:
    model: str
    liveness: LivenessReport
    decomposition: DecompositionResult | None
    subnetworks: list  # SubnetworkOutcome
    overall: str
    reasons: list
    timings: dict
    oracle: object | None = None
    oracle_cycle: tuple = ()
    bench: dict | None = None

    def to_json(self, net: Network):
        data = {
            "schema": REPORT_SCHEMA,
            "model": self.model,
            "overall": self.overall,
            "reasons": self.reasons,
            "liveness": self.liveness.to_json(),
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }
        if self.decomposition is not None:
            data["decomposition"] = self.decomposition.to_json(net)
        data["subnetworks"] = [s.to_json() for s in self.subnetworks]
        if self.oracle is not None:
            data["oracle"] = self.oracle.to_json(net)
        if self.bench is not None:
            data["bench"] = self.bench
        return data

    def summary(self) -> str:
        lines = [f"model: {self.model}"]
        lines.append(f"liveness: {'ok' if self.liveness.live else 'FAILED'}")
        if self.decomposition is not None:
            d = self.decomposition
            lines.append(
                f"decomposition: {len(d.bridge_edges)} bridge(s), "
                f"{len(d.removed_edges)} removed, "
                f"{len(d.subnetworks)} essential subnetwork(s)"
            )
            for c in d.checks:
                note = ""
                if c.divergent_abstractions:
                    note = f"  [divergent abstraction: {', '.join(c.divergent_abstractions)}]"
                lines.append(
                    f"  edge {c.names[0]} -- {c.names[1]}: {c.verdict}{note}"
                )
        for sub in self.subnetworks:
            if len(sub.components) == 1:
                continue
            tag = "no descriptor" if sub.verdict is None else (
                f"{sub.pattern}: {'adherent' if sub.verdict.adherent else 'NOT adherent'}"
            )
            lines.append(f"subnetwork {sub.components}: {tag}")
            if sub.verdict is not None:
                for fail in sub.verdict.failures():
                    name = getattr(fail, "name", None) or getattr(fail, "spec_name", "?")
                    who = getattr(fail, "component", "")
                    note = getattr(fail, "witness", "") or getattr(fail, "note", "")
                    ce = getattr(fail, "counterexample", None)
                    detail = note or (ce.describe() if ce is not None else "")
                    lines.append(f"    FAIL {who} {name}: {detail}")
                for warn in sub.verdict.warnings:
                    lines.append(f"    warning: {warn}")
        if self.oracle is not None:
            if isinstance(self.oracle, DeadlockFree):
                lines.append(
                    f"oracle: deadlock free ({self.oracle.states_explored} states)"
                )
            elif isinstance(self.oracle, DeadlockWitness):
                tr = ", ".join(EVENTS.name(e) for e in self.oracle.trace)
                lines.append(f"oracle: DEADLOCK after <{tr}>")
                if self.oracle_cycle:
                    lines.append(
                        "  ungranted-request cycle: "
                        + " -> ".join(str(c) for c in self.oracle_cycle)
                    )
            else:
                lines.append(
                    f"oracle: state limit reached ({self.oracle.states_explored} states)"
                )
        lines.append(f"overall: {self.overall.upper()}")
        for r in self.reasons:
            lines.append(f"  reason: {r}")
        return "\n".join(lines)


def _bind_descriptors(net: Network, subnetworks, descriptors):
    """Match descriptors to subnetworks by component-name-set equality."""
    outcome = {}
    for desc in descriptors:
        key = frozenset(desc.components())
        if key in outcome:
            raise InputError(
                f"two descriptors cover the same component set {sorted(key)}"
            )
        outcome[key] = desc
    bound = {}
    used = set()
    for sub in subnetworks:
        names = frozenset(net[i].name for i in sub)
        if names in outcome:
            bound[tuple(sorted(sub))] = outcome[names]
            used.add(names)
    for key in outcome:
        if key not in used:
            raise InputError(
                f"descriptor over {sorted(key)} matches no essential subnetwork"
            )
    return bound


def run_dpa(
    net: Network,
    descriptors=(),
    state_limit: int = DEFAULT_STATE_LIMIT,
    with_oracle: bool = False,
    oracle_limit: int | None = None,
    model_name: str = "<network>",
) -> DpaReport:
    timings = {}
    reasons = []
    t0 = time.perf_counter()
    liveness = check_live(net, state_limit)
    timings["liveness"] = time.perf_counter() - t0
    decomposition = None
    subnetworks = []
    if not liveness.live:
        reasons.append("network is not live; nothing can be concluded")
        overall = INCONCLUSIVE
        timings.update(bridges=0.0, conflicts=0.0, patterns=0.0)
    else:
        decomposition = decompose(net, state_limit, precheck_live=False, timings=timings)
        binding = _bind_descriptors(net, decomposition.subnetworks, descriptors)
        t0 = time.perf_counter()
        for sub in decomposition.subnetworks:
            names = [net[i].name for i in sub]
            desc = binding.get(tuple(sorted(sub)))
            verdict = None
            if len(sub) > 1 and desc is not None:
                verdict = check_pattern(desc, net, names, state_limit)
            subnetworks.append(
                SubnetworkOutcome(
                    names,
                    desc.pattern if desc is not None else None,
                    verdict,
                )
            )
        timings["patterns"] = time.perf_counter() - t0
        undischarged = [s for s in subnetworks if not s.discharged]
        if not undischarged:
            overall = PROVEN
        else:
            overall = INCONCLUSIVE
            for s in undischarged:
                if s.verdict is None:
                    reasons.append(
                        f"subnetwork {s.components} has no pattern descriptor"
                    )
                else:
                    for fail in s.verdict.failures():
                        who = getattr(fail, "component", "")
                        what = getattr(fail, "name", None) or getattr(
                            fail, "spec_name", "?"
                        )
                        note = getattr(fail, "witness", "") or getattr(fail, "note", "")
                        ce = getattr(fail, "counterexample", None)
                        detail = note or (ce.describe() if ce is not None else "")
                        reasons.append(
                            f"subnetwork {s.components}: {who} fails {what}"
                            + (f" ({detail})" if detail else "")
                        )
    oracle_result = None
    oracle_cycle = ()
    if with_oracle:
        t0 = time.perf_counter()
        oracle_result = explore_global(net, oracle_limit or state_limit)
        timings["oracle"] = time.perf_counter() - t0
        if isinstance(oracle_result, DeadlockWitness):
            snap = snapshot_graph(net, oracle_result.state)
            cycle = find_ungranted_cycle(snap)
            oracle_result.cycle = cycle or ()
            oracle_cycle = tuple(net[i].name for i in (cycle or ()))
            reasons.append(
                "oracle found a deadlock after <"
                + ", ".join(EVENTS.name(e) for e in oracle_result.trace)
                + ">"
            )
    # the overall verdict is the method's own; the oracle result sits beside
    # it so a disagreement (which would be a soundness bug) stays visible
    return DpaReport(
        model=model_name,
        liveness=liveness,
        decomposition=decomposition,
        subnetworks=subnetworks,
        overall=overall,
        reasons=reasons,
        timings=timings,
        oracle=oracle_result,
        oracle_cycle=oracle_cycle,
    )


# ---------------------------------------------------------------------------
# DOT emission


def _dot_escape(name):
    return '"' + name.replace('"', '\\"') + '"'


def emit_dot(g) -> str:
    """Graphviz text for a communication graph (undirected) or snapshot
    graph (directed); node order follows component order."""
    if isinstance(g, CommGraph):
        lines = ["graph communication {"]
        for name in g.names:
            lines.append(f"  {_dot_escape(name)};")
        for (i, j), shared in sorted(g.edges.items()):
            label = ", ".join(EVENTS.names(shared)[:4])
            if len(shared) > 4:
                label += ", ..."
            lines.append(
                f"  {_dot_escape(g.names[i])} -- {_dot_escape(g.names[j])}"
                f" [label=\"{label}\"];"
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(g, SnapshotGraph):
        lines = ["digraph snapshot {"]
        for name in g.names:
            lines.append(f"  {_dot_escape(name)};")
        for (i, j), offers in sorted(g.arcs.items()):
            label = ", ".join(EVENTS.names(offers)[:4])
            lines.append(
                f"  {_dot_escape(g.names[i])} -> {_dot_escape(g.names[j])}"
                f" [label=\"{label}\"];"
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot render {g!r}")


def emit_report_json(report: DpaReport, net: Network) -> str:
    return json.dumps(report.to_json(net), indent=2)
