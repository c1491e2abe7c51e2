"""Shared fixtures and random-model generators for the test suite."""

import random

import pytest

from dpa.events import event
from dpa.network import Component, Network
from dpa.terms import (
    Call,
    DefEnv,
    Definition,
    DIV,
    ExtChoice,
    Hide,
    IntChoice,
    Interrupt,
    Prefix,
    Rename,
    Seq,
    SKIP,
    STOP,
)


def ev3():
    return [event("a"), event("b"), event("c")]


# ---------------------------------------------------------------------------
# random closed terms over a tiny alphabet, for oracle cross-validation


def random_env(rng: random.Random, events, n_defs=2):
    """Definitions whose bodies are prefix-guarded, so every recursive call
    consumes at least one visible event per unfolding."""
    env = DefEnv()
    names = [f"D{i}" for i in range(n_defs)]

    def body(depth):
        return Prefix(
            rng.choice(events), random_term(rng, depth, events, env, calls_ok=True)
        )

    for name in names:
        env.define(Definition(name, (), STOP))  # placeholder for call checks
    for name in names:
        env.definitions[(name, 0)] = Definition(name, (), body(2))
    return env


def random_term(rng: random.Random, depth, events, env, calls_ok=True):
    """Random closed term.

    Two generator constraints keep the comparison harness sound and finite:
    calls never sit under hiding (so the depth-limited reference semantics
    stays exact on short observations), and calls only appear in tail
    positions -- under prefixing and choices, in a sequence's second
    operand -- never inside contexts that would be re-wrapped around the
    unfolding (sequence left side, interrupt, renaming), which is what
    keeps every generated term finite-control.
    """
    leaves = ["stop", "skip", "div"]
    if calls_ok and env.definitions:
        leaves += ["call", "call"]
    if depth <= 0:
        kind = rng.choice(leaves)
    else:
        kind = rng.choice(
            ["prefix", "prefix", "ext", "int", "seq", "hide", "rename", "interrupt"]
            + leaves
        )
    if kind == "stop":
        return STOP
    if kind == "skip":
        return SKIP
    if kind == "div":
        return DIV
    if kind == "call":
        name = rng.choice(sorted(n for (n, _a) in env.definitions))
        return Call(name)
    if kind == "prefix":
        return Prefix(rng.choice(events), random_term(rng, depth - 1, events, env, calls_ok))
    if kind == "ext":
        return ExtChoice(
            tuple(
                random_term(rng, depth - 1, events, env, calls_ok)
                for _ in range(rng.randint(2, 3))
            )
        )
    if kind == "int":
        return IntChoice(
            tuple(
                random_term(rng, depth - 1, events, env, calls_ok)
                for _ in range(2)
            )
        )
    if kind == "seq":
        return Seq(
            random_term(rng, depth - 1, events, env, calls_ok=False),
            random_term(rng, depth - 1, events, env, calls_ok),
        )
    if kind == "hide":
        return Hide(
            random_term(rng, depth - 1, events, env, calls_ok=False),
            frozenset({rng.choice(events)}),
        )
    if kind == "rename":
        a = rng.choice(events)
        image = tuple(sorted({a, rng.choice(events)}))
        pairs = tuple(sorted((a, b) for b in image))
        return Rename(
            random_term(rng, depth - 1, events, env, calls_ok=False), pairs
        )
    if kind == "interrupt":
        return Interrupt(
            random_term(rng, depth - 1, events, env, calls_ok=False),
            random_term(rng, depth - 1, events, env, calls_ok=False),
        )
    raise AssertionError(kind)


def random_plain_term(rng: random.Random, depth, events):
    """Divergence-free, termination-free term (no SKIP/DIV/hide/seq), for
    the refinement-law suite."""
    if depth <= 0:
        return STOP
    kind = rng.choice(["prefix", "prefix", "prefix", "ext", "int", "stop"])
    if kind == "stop":
        return STOP
    if kind == "prefix":
        return Prefix(rng.choice(events), random_plain_term(rng, depth - 1, events))
    items = tuple(
        Prefix(rng.choice(events), random_plain_term(rng, depth - 1, events))
        for _ in range(2)
    )
    return ExtChoice(items) if kind == "ext" else IntChoice(items)


# ---------------------------------------------------------------------------
# random live networks, for the soundness fuzz harness


def random_live_network(rng: random.Random, max_components=4, max_states=5):
    """Live by construction: every component is a strongly cycling machine
    (busy, never terminates) and each shared event belongs to exactly one
    pair of components."""
    n = rng.randint(2, max_components)
    tree_bias = rng.random() < 0.5
    pairs = []
    for j in range(1, n):
        i = rng.randrange(j)
        pairs.append((i, j))
    if not tree_bias:
        extra = rng.randint(0, n - 1)
        for _ in range(extra):
            i, j = rng.randrange(n), rng.randrange(n)
            if i != j and (min(i, j), max(i, j)) not in pairs:
                pairs.append((min(i, j), max(i, j)))
    tag = rng.randrange(10**6)
    alphabets = [set() for _ in range(n)]
    for (i, j) in pairs:
        for k in range(rng.randint(1, 2)):
            e = event(f"s{tag}.{i}.{j}.{k}")
            alphabets[i].add(e)
            alphabets[j].add(e)
    for i in range(n):
        alphabets[i].add(event(f"p{tag}.{i}"))
    env = DefEnv()
    comps = []
    for c in range(n):
        events = sorted(alphabets[c])
        k = rng.randint(2, max_states)
        for s in range(k):
            branches = tuple(
                Prefix(rng.choice(events), Call(f"S{tag}_{c}_{rng.randrange(k)}"))
                for _ in range(rng.randint(1, 2))
            )
            if len(branches) == 1:
                body = branches[0]
            elif rng.random() < 0.8:
                body = ExtChoice(branches)
            else:
                body = IntChoice(branches)
            env.define(Definition(f"S{tag}_{c}_{s}", (), body))
        comps.append(
            Component(f"C{c}", frozenset(alphabets[c]), Call(f"S{tag}_{c}_0"), env)
        )
    return Network(comps)


@pytest.fixture
def rng():
    return random.Random(20240817)
