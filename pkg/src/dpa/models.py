"""Builders for the bundled example models and their pattern descriptors.

Each builder returns model text in the ``.net`` format (so the same files
drive the CLI, the test-suite and the benchmark harness) together with the
matching descriptor documents where a pattern applies.  The static files
under ``models/`` are generated from these builders at their default sizes.
"""

from __future__ import annotations

import json


def ring_buffer_source(ncells: int = 3) -> str:
    """Central controller plus ``ncells`` one-place storage cells holding
    binary values; acyclic (star) topology."""
    return f"""\
version 1
-- ring buffer: a controller manages cyclic writes/reads over storage cells
const NCELLS = {ncells}
const N = NCELLS + 1          -- capacity: the cells plus one cache slot

channel input  : {{0..1}}
channel output : {{0..1}}
channel read   : {{0..NCELLS-1}}.{{0..1}}
channel write  : {{0..NCELLS-1}}.{{0..1}}

Controller(cache, size, top, bot) =
    size < N & Input(cache, size, top, bot)
    [] size > 0 & Output(cache, size, top, bot)

Input(cache, size, top, bot) =
    input?x ->
      ( size == 0 & Controller(x, 1, top, bot)
        [] size > 0 & write.top!x -> Controller(cache, size + 1, (top + 1) % NCELLS, bot) )

Output(cache, size, top, bot) =
    output!cache ->
      ( size > 1 & read.bot?x -> Controller(x, size - 1, top, (bot + 1) % NCELLS)
        [] size == 1 & Controller(cache, 0, top, bot) )

Cell(id, val) = read.id!val -> Cell(id, val) [] write.id?x -> Cell(id, x)

atom ControllerC = alphabet {{| read, write, input, output |}} behaviour Controller(0, 0, 0, 0)
atom CellC = alphabet {{| read.id, write.id |}} behaviour Cell(id, 0)

instance Controller = ControllerC
instance Cell = CellC {{0..NCELLS-1}}
"""


def philosophers_source(n: int = 3, symmetric: bool = False) -> str:
    """Dining philosophers; the asymmetric variant turns the last one
    right-handed, which is what makes the acquisition orders consistent."""
    last = (
        "instance Phil = PhilC {0..N-1}"
        if symmetric
        else "instance Phil = PhilC {0..N-2}\ninstance APhil = APhilC {N-1}"
    )
    return f"""\
version 1
-- dining philosophers ({'symmetric: deadlocks' if symmetric else 'asymmetric: deadlock free'})
const N = {n}

channel sit     : {{0..N-1}}
channel eat     : {{0..N-1}}
channel getup   : {{0..N-1}}
channel pickup  : {{0..N-1}}.{{0..N-1}}
channel putdown : {{0..N-1}}.{{0..N-1}}

fun next(i) = (i + 1) % N
fun prev(i) = (i - 1) % N

Phil(id) =
    sit.id -> pickup.id.id -> pickup.id.next(id) -> eat.id ->
        putdown.id.id -> putdown.id.next(id) -> getup.id -> Phil(id)

APhil(id) =
    sit.id -> pickup.id.next(id) -> pickup.id.id -> eat.id ->
        putdown.id.next(id) -> putdown.id.id -> getup.id -> APhil(id)

Fork(id) = [] i : {{id, prev(id)}} @ pickup.i.id -> putdown.i.id -> Fork(id)

atom PhilC = alphabet {{| sit.id, pickup.id.id, pickup.id.next(id), eat.id,
                        putdown.id.id, putdown.id.next(id), getup.id |}}
             behaviour Phil(id)
atom APhilC = alphabet {{| sit.id, pickup.id.id, pickup.id.next(id), eat.id,
                         putdown.id.id, putdown.id.next(id), getup.id |}}
              behaviour APhil(id)
atom ForkC = alphabet {{| pickup.id.id, pickup.prev(id).id,
                        putdown.id.id, putdown.prev(id).id |}}
             behaviour Fork(id)

{last}
instance Fork = ForkC {{0..N-1}}
"""


def philosophers_descriptor(n: int = 3, symmetric: bool = False) -> dict:
    """Resource-allocation roles: philosophers are users, forks resources.

    The resource order ranks lower fork indices greater, so the ordinary
    philosophers' index-ascending acquisitions are descending under it; in
    the symmetric instance the wrap-around philosopher violates it.
    """
    connections = []
    order = {}
    for i in range(n):
        nxt = (i + 1) % n
        user = f"Phil.{i}" if (symmetric or i < n - 1) else f"APhil.{i}"
        for j in sorted({i, nxt}):
            connections.append(
                {
                    "user": user,
                    "resource": f"Fork.{j}",
                    "acquire": f"pickup.{i}.{j}",
                    "release": f"putdown.{i}.{j}",
                }
            )
        if symmetric or i < n - 1:
            order[user] = [f"Fork.{i}", f"Fork.{nxt}"]
        else:
            order[user] = [f"Fork.{nxt}", f"Fork.{i}"]  # right-handed: 0 first
    return {
        "schema": 1,
        "pattern": "resource-allocation",
        "connections": connections,
        "order": order,
        "resource_order": [f"Fork.{i}" for i in range(n)],
    }


def two_ring_source() -> str:
    """Two token-passing triangles joined by a single shared event: one
    disconnecting edge, conflict free by construction."""
    return """\
version 1
-- two deadlock-free rings connected through a single bridge event
channel e01
channel e12
channel e20
channel e34
channel e45
channel e53
channel x

C0 = e01 -> x -> e20 -> C0
C1 = e01 -> e12 -> C1
C2 = e12 -> e20 -> C2
C3 = x -> e34 -> C3Rest
C3Rest = e53 -> C3
C4 = e34 -> e45 -> C4
C5 = e45 -> e53 -> C5

atom C0A = alphabet { e01, e20, x } behaviour C0
atom C1A = alphabet { e01, e12 } behaviour C1
atom C2A = alphabet { e12, e20 } behaviour C2
atom C3A = alphabet { x, e34, e53 } behaviour C3
atom C4A = alphabet { e34, e45 } behaviour C4
atom C5A = alphabet { e45, e53 } behaviour C5

instance C0 = C0A
instance C1 = C1A
instance C2 = C2A
instance C3 = C3A
instance C4 = C4A
instance C5 = C5A
"""


def client_server_source() -> str:
    """Three components on a triangle: the top requests from both lower
    components, the middle requests from the bottom; every edge carries a
    request/response pair, so nothing is disconnecting."""
    return """\
version 1
-- layered client/server triangle
channel req21
channel res21
channel req10
channel res10
channel req20
channel res20

Top = req21 -> res21 -> req20 -> res20 -> Top
Mid = req21 -> res21 -> req10 -> res10 -> Mid
Bot = req10 -> res10 -> Bot [] req20 -> res20 -> Bot

atom TopA = alphabet { req21, res21, req20, res20 } behaviour Top
atom MidA = alphabet { req21, res21, req10, res10 } behaviour Mid
atom BotA = alphabet { req10, res10, req20, res20 } behaviour Bot

instance C2 = TopA
instance C1 = MidA
instance C0 = BotA
"""


def client_server_descriptor() -> dict:
    return {
        "schema": 1,
        "pattern": "client-server",
        "connections": [
            {"client": "C2", "server": "C1", "requests": ["req21"]},
            {"client": "C2", "server": "C0", "requests": ["req20"]},
            {"client": "C1", "server": "C0", "requests": ["req10"]},
        ],
        "responses": {
            "req21": ["res21"],
            "req20": ["res20"],
            "req10": ["res10"],
        },
        "component_order": ["C2", "C1", "C0"],
    }


def leadership_source(participants: int = 2) -> str:
    """Transport layer of a leader-election protocol: nodes broadcast their
    priority through one-place overwriting buses, detect peers timing out,
    and may leave and re-join the network."""
    n = participants
    lines = [
        "version 1",
        "-- election transport layer: nodes exchange priorities over buses",
        f"channel snd : {{0..{n-1}}}.{{0..{n-1}}}.{{0..{n-1}}}",
        f"channel rcv : {{0..{n-1}}}.{{0..{n-1}}}.{{0..{n-1}}}",
        f"channel on  : {{0..{n-1}}}.{{0..{n-1}}}",
        f"channel off : {{0..{n-1}}}.{{0..{n-1}}}",
        f"channel to  : {{0..{n-1}}}.{{0..{n-1}}}",
        "",
    ]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lines += [
                f"BusOff{i}{j} = on.{i}.{j} -> BusOn{i}{j} [] to.{i}.{j} -> BusOff{i}{j}",
                f"BusOn{i}{j} = off.{i}.{j} -> BusOff{i}{j} [] snd.{i}.{j}?d -> BusFull{i}{j}(d)",
                f"BusFull{i}{j}(d) = off.{i}.{j} -> BusOff{i}{j}"
                f" [] snd.{i}.{j}?e -> BusFull{i}{j}(e)"
                f" [] rcv.{i}.{j}!d -> BusOn{i}{j}",
            ]
    lines.append("")
    for i in range(n):
        peers = [j for j in range(n) if j != i]
        on_chain = " -> ".join(f"on.{i}.{j}" for j in peers)
        off_chain = " -> ".join(f"off.{i}.{j}" for j in peers)
        send_chain = " -> ".join(f"snd.{i}.{j}!{i}" for j in peers)
        lines.append(
            f"Node{i} = {on_chain} -> ((SR{i} /\\ (SKIP |~| STOP)) ; {off_chain} -> Node{i})"
        )
        recv = f"SR{i}"
        chain = None
        for j in reversed(peers):
            inner = chain if chain is not None else f"SR{i}"
            chain = f"(rcv.{j}.{i}?d -> {inner} [] to.{j}.{i} -> {inner})"
        lines.append(f"SR{i} = {send_chain} -> {chain}")
    lines.append("")
    for i in range(n):
        peers = [j for j in range(n) if j != i]
        alpha = []
        for j in peers:
            alpha += [f"snd.{i}.{j}", f"rcv.{j}.{i}", f"on.{i}.{j}", f"off.{i}.{j}", f"to.{j}.{i}"]
        lines.append(
            f"atom Node{i}A = alphabet {{| {', '.join(alpha)} |}} behaviour Node{i}"
        )
        lines.append(f"instance Node.{i} = Node{i}A")
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            alpha = [f"snd.{i}.{j}", f"rcv.{i}.{j}", f"on.{i}.{j}", f"off.{i}.{j}", f"to.{i}.{j}"]
            lines.append(
                f"atom Bus{i}{j}A = alphabet {{| {', '.join(alpha)} |}} behaviour BusOff{i}{j}"
            )
            lines.append(f"instance Bus.{i}.{j} = Bus{i}{j}A")
    return "\n".join(lines) + "\n"


def leadership_descriptor(participants: int = 2) -> dict:
    n = participants
    connections = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            connections.append(
                {
                    "from": f"Node.{i}",
                    "to": f"Node.{j}",
                    "transport": f"Bus.{i}.{j}",
                    "send": [f"snd.{i}.{j}.{d}" for d in range(n)],
                    "receive": [f"rcv.{i}.{j}.{d}" for d in range(n)],
                    "on": f"on.{i}.{j}",
                    "off": f"off.{i}.{j}",
                    "timeout": f"to.{i}.{j}",
                }
            )
    schedule = {
        f"Node.{i}": [f"Node.{j}" for j in range(n) if j != i] for i in range(n)
    }
    return {
        "schema": 1,
        "pattern": "async-dynamic",
        "connections": connections,
        "schedule": schedule,
    }


BUNDLED = {
    "ringbuffer.net": lambda: ring_buffer_source(3),
    "philosophers.net": lambda: philosophers_source(3),
    "philosophers_symmetric.net": lambda: philosophers_source(3, symmetric=True),
    "two_ring.net": two_ring_source,
    "client_server.net": client_server_source,
    "leadership.net": lambda: leadership_source(2),
    "philosophers.pattern.json": lambda: json.dumps(
        philosophers_descriptor(3), indent=2
    ),
    "philosophers_symmetric.pattern.json": lambda: json.dumps(
        philosophers_descriptor(3, symmetric=True), indent=2
    ),
    "client_server.pattern.json": lambda: json.dumps(
        client_server_descriptor(), indent=2
    ),
    "leadership.pattern.json": lambda: json.dumps(
        leadership_descriptor(2), indent=2
    ),
}


def write_bundled(directory):
    import os

    os.makedirs(directory, exist_ok=True)
    for name, builder in BUNDLED.items():
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            content = builder()
            fh.write(content if content.endswith("\n") else content + "\n")
