import pytest

from dpa.events import EVENTS, TAU, event
from dpa.lts import (
    AlphabetViolation,
    StateLimitExceeded,
    check_alphabet,
    compile_term,
    hide_lts,
    parallel_lts,
)
from dpa.terms import (
    BinOp,
    Call,
    DefEnv,
    Definition,
    EmptyChoiceList,
    EventTemplate,
    ExtChoice,
    FunCall,
    Guard,
    GuardNotClosed,
    IntChoice,
    Lit,
    Prefix,
    Seq,
    SKIP,
    STOP,
    UnboundCall,
    Var,
)

A, B, C = event("a"), event("b"), event("c")
ENV = DefEnv()


def trace_labels(lts):
    """Follow the unique outgoing transition from each state."""
    out = []
    s = lts.initial
    seen = set()
    while s not in seen:
        seen.add(s)
        row = lts.trans[s]
        if not row:
            break
        assert len(row) == 1
        label, s = row[0]
        out.append(label)
    return out


def test_single_prefix():
    lts = compile_term(ENV, Prefix(A, STOP))
    assert lts.n_states == 2
    assert lts.trans[0] == ((A, 1),)
    assert lts.trans[1] == ()


def test_tail_recursion_single_state():
    env = DefEnv([Definition("P", (), Prefix(A, Call("P")))])
    lts = compile_term(env, Call("P"))
    assert lts.n_states == 1
    assert lts.trans[0] == ((A, 0),)


def phil_env(n=3):
    env = DefEnv(constants={"N": n})
    env.def_fun("next", ("i",), BinOp("%", BinOp("+", Var("i"), Lit(1)), Var("N")))
    t = lambda h, *fs: EventTemplate(h, tuple(fs))
    body = Prefix(t("sit", Var("id")),
        Prefix(t("pickup", Var("id"), Var("id")),
        Prefix(t("pickup", Var("id"), FunCall("next", (Var("id"),))),
        Prefix(t("eat", Var("id")),
        Prefix(t("putdown", Var("id"), Var("id")),
        Prefix(t("putdown", Var("id"), FunCall("next", (Var("id"),))),
        Prefix(t("getup", Var("id")), Call("Phil", (Var("id"),)))))))))
    env.define(Definition("Phil", ("id",), body))
    return env


def test_philosopher_cycle():
    # one state per action in the loop; the trailing call folds back to the
    # initial state, giving a 7-state cycle
    lts = compile_term(phil_env(), Call("Phil", (Lit(0),)))
    assert lts.n_states == 7
    labels = [EVENTS.name(l) for l in trace_labels(lts)]
    assert labels == [
        "sit.0", "pickup.0.0", "pickup.0.1", "eat.0",
        "putdown.0.0", "putdown.0.1", "getup.0",
    ]


def test_guard_false_behaves_like_stop():
    term = Guard(BinOp("<", Lit(3), Lit(1)), Prefix(A, STOP))
    lts = compile_term(ENV, term)
    assert lts.n_states == 1
    assert lts.trans[0] == ()


def test_guard_requires_closed_condition():
    with pytest.raises(GuardNotClosed):
        compile_term(ENV, Guard(Var("free"), STOP))


def test_empty_choice_is_an_error():
    with pytest.raises(EmptyChoiceList):
        compile_term(ENV, ExtChoice(()))
    with pytest.raises(EmptyChoiceList):
        compile_term(ENV, IntChoice(()))


def test_unbound_call():
    with pytest.raises(UnboundCall):
        compile_term(ENV, Call("Nope"))


def test_state_limit():
    # counter process grows without bound
    env = DefEnv([
        Definition("P", ("n",), Prefix(A, Call("P", (BinOp("+", Var("n"), Lit(1)),))))
    ])
    with pytest.raises(StateLimitExceeded):
        compile_term(env, Call("P", (Lit(0),)), limit=50)


def test_unguarded_recursion_is_divergence():
    env = DefEnv([
        Definition("P", (), Call("Q")),
        Definition("Q", (), Call("P")),
    ])
    lts = compile_term(env, Call("P"))
    assert all(l == TAU for row in lts.trans for (l, _t) in row)


def test_recursion_through_hiding_and_renaming_stays_finite():
    env = DefEnv([
        Definition("H", (), Prefix(A, Prefix(B, Call("H")))),
        Definition("R", (), Prefix(A, Call("R"))),
    ])
    from dpa.terms import Hide, Rename

    hidden = compile_term(env, Hide(Call("H"), frozenset({A})))
    assert hidden.n_states <= 4
    renamed = compile_term(env, Rename(Call("R"), ((A, B),)))
    assert renamed.n_states <= 2
    assert renamed.visible_events() == {B}


def test_unbounded_sequencing_reports_state_limit():
    # recursion re-wrapped in a sequence context has no finite control
    env = DefEnv([
        Definition("P", (), Prefix(A, Seq(Call("P"), Prefix(B, STOP)))),
    ])
    with pytest.raises(StateLimitExceeded):
        compile_term(env, Call("P"))


def test_compilation_deterministic():
    env = phil_env()
    l1 = compile_term(env, Call("Phil", (Lit(1),)))
    l2 = compile_term(env, Call("Phil", (Lit(1),)))
    assert l1.trans == l2.trans


def test_seq_converts_tick():
    lts = compile_term(ENV, Seq(SKIP, Prefix(A, STOP)))
    # initial state has a single internal move into the continuation
    assert lts.trans[0] == ((TAU, 1),)
    assert lts.trans[1] == ((A, 2),)


def test_parallel_full_sync():
    p = compile_term(ENV, Prefix(A, STOP))
    prod = parallel_lts(p, frozenset({A}), p, frozenset({A}))
    assert prod.n_states == 2
    assert prod.trans[0] == ((A, 1),)


def test_parallel_interleaving_diamond():
    p = compile_term(ENV, Prefix(A, STOP))
    q = compile_term(ENV, Prefix(B, STOP))
    prod = parallel_lts(p, frozenset({A}), q, frozenset({B}))
    assert prod.n_states == 4
    labels = sorted(l for row in prod.trans for (l, _t) in row)
    assert labels == sorted([A, B, A, B])


def test_parallel_synchronises_on_shared_alphabet_only():
    # philosopher and its own fork share exactly pickup.0.0 / putdown.0.0
    env = phil_env()
    fork_alpha = frozenset(
        event(e) for e in ("pickup.0.0", "pickup.2.0", "putdown.0.0", "putdown.2.0")
    )
    phil_alpha = frozenset(
        event(e)
        for e in (
            "sit.0", "pickup.0.0", "pickup.0.1", "eat.0",
            "putdown.0.0", "putdown.0.1", "getup.0",
        )
    )
    assert phil_alpha & fork_alpha == {event("pickup.0.0"), event("putdown.0.0")}
    fork = compile_term(
        DefEnv([Definition("F", (), ExtChoice((
            Prefix(event("pickup.0.0"), Prefix(event("putdown.0.0"), Call("F"))),
            Prefix(event("pickup.2.0"), Prefix(event("putdown.2.0"), Call("F"))),
        )))]),
        Call("F"),
    )
    phil = compile_term(env, Call("Phil", (Lit(0),)))
    prod = parallel_lts(phil, phil_alpha, fork, fork_alpha)
    # shared events appear only once per step (synchronised)
    shared_labels = [
        l for row in prod.trans for (l, _t) in row
        if l in (event("pickup.0.0"), event("putdown.0.0"))
    ]
    assert shared_labels  # they do happen, jointly
    assert prod.n_states > phil.n_states  # interleaving with the fork's side


def test_alphabet_violation_rejected():
    p = compile_term(ENV, Prefix(A, STOP))
    with pytest.raises(AlphabetViolation):
        parallel_lts(p, frozenset({B}), p, frozenset({A, B}))
    with pytest.raises(AlphabetViolation):
        check_alphabet(p, frozenset({B}))


def test_parallel_commutative_and_associative():
    from dpa.denotational import diff_behaviours, lts_behaviours

    sigma = frozenset({A, B, C})
    p = compile_term(ENV, Prefix(A, Prefix(B, STOP)))
    q = compile_term(ENV, ExtChoice((Prefix(B, STOP), Prefix(C, STOP))))
    r = compile_term(ENV, Prefix(C, Prefix(A, STOP)))
    aa, ab, ac = frozenset({A, B}), frozenset({B, C}), frozenset({C, A})
    pq = parallel_lts(p, aa, q, ab)
    qp = parallel_lts(q, ab, p, aa)
    assert diff_behaviours(
        lts_behaviours(pq, sigma, 6), lts_behaviours(qp, sigma, 6), 6
    ) is None
    left = parallel_lts(pq, aa | ab, r, ac)
    right = parallel_lts(p, aa, parallel_lts(q, ab, r, ac), ab | ac)
    assert diff_behaviours(
        lts_behaviours(left, sigma, 6), lts_behaviours(right, sigma, 6), 6
    ) is None


def test_hide_then_compile_equals_compile_then_hide():
    from dpa.denotational import diff_behaviours, lts_behaviours
    from dpa.terms import Hide

    sigma = frozenset({A, B, C})
    term = ExtChoice((Prefix(A, Prefix(B, STOP)), Prefix(C, SKIP)))
    hidden = frozenset({A})
    via_term = compile_term(ENV, Hide(term, hidden))
    via_lts = hide_lts(compile_term(ENV, term), hidden)
    assert diff_behaviours(
        lts_behaviours(via_term, sigma, 6), lts_behaviours(via_lts, sigma, 6), 6
    ) is None
