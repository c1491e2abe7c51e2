"""Scaling benchmark over the bundled model families.

Runs the local method (and optionally the global oracle) across a size
sweep of one family and reports wall-clock times together with
deterministic work measures (oracle states explored), which is what the
trend assertions in the test-suite key on.
"""

from __future__ import annotations

import time

from . import models
from .dsl import elaborate, parse_descriptor, parse_network
from .network import check_live
from .decomposition import decompose
from .patterns import check_pattern
from .oracle import explore_global

FAMILIES = ("philosophers", "ringbuffer", "leadership")


def build_family(family: str, size: int):
    """Network + descriptors for one instance of a benchmark family."""
    if family == "philosophers":
        net = elaborate(parse_network(models.philosophers_source(size)))
        descs = [parse_descriptor(models.philosophers_descriptor(size), net)]
    elif family == "ringbuffer":
        net = elaborate(parse_network(models.ring_buffer_source(size)))
        descs = []
    elif family == "leadership":
        net = elaborate(parse_network(models.leadership_source(size)))
        descs = [parse_descriptor(models.leadership_descriptor(size), net)]
    else:
        raise ValueError(f"unknown family {family!r}; pick one of {FAMILIES}")
    return net, descs


def run_bench(family: str, sizes, oracle_sizes=(), state_limit=1_000_000) -> dict:
    rows = []
    for size in sizes:
        net, descs = build_family(family, size)
        t0 = time.perf_counter()
        live = check_live(net, state_limit).live
        dec = decompose(net, state_limit, precheck_live=False)
        proven = live and dec.all_singular
        if live and not dec.all_singular and descs:
            ok = True
            for sub in dec.subnetworks:
                if len(sub) == 1:
                    continue
                names = [net[i].name for i in sub]
                scoped = [d for d in descs if frozenset(d.components()) == frozenset(names)]
                if not scoped:
                    ok = False
                    continue
                verdict = check_pattern(scoped[0], net, names, state_limit)
                ok = ok and verdict.adherent
            proven = ok
        dpa_time = time.perf_counter() - t0
        row = {
            "size": size,
            "components": len(net),
            "dpa_seconds": round(dpa_time, 4),
            "proven": proven,
        }
        if size in oracle_sizes:
            t0 = time.perf_counter()
            result = explore_global(net, state_limit)
            row["oracle_seconds"] = round(time.perf_counter() - t0, 4)
            row["oracle_states"] = result.states_explored
            row["oracle_result"] = type(result).__name__
        rows.append(row)
    return {"family": family, "rows": rows}


def parse_bench_spec(spec: str):
    """'family:3,5,10[:oracle=3,4]' -> (family, sizes, oracle_sizes)."""
    parts = spec.split(":")
    family = parts[0]
    if len(parts) < 2:
        raise ValueError("bench spec needs sizes, e.g. philosophers:3,5,10")
    sizes = [int(s) for s in parts[1].split(",") if s]
    oracle_sizes = []
    if len(parts) > 2:
        tail = parts[2]
        if tail.startswith("oracle="):
            tail = tail[len("oracle="):]
        oracle_sizes = [int(s) for s in tail.split(",") if s]
    return family, sizes, oracle_sizes
