import itertools
import math
import random

import pytest
from gen import random_kb

from paraquery import (
    BOT,
    HARD,
    Atom,
    Constant,
    Fact,
    Func,
    KnowledgeBase,
    ParseError,
    QuantifiedRule,
    Query,
    Rule,
    Variable,
    format_kb,
    parse_kb,
    parse_query,
    skolemize,
)
from paraquery.kb import KBError, atom


def test_parse_fact_with_weight_and_source():
    kb = parse_kb("bird(tweety) @ w=1.0 src=d1")
    assert kb.facts == {Fact(atom("bird", "tweety"), 1.0, "d1")}


def test_parse_hard_bot_rule():
    kb = parse_kb("bot :- flies(X), notflies(X). w=hard")
    (r,) = kb.rules
    assert r.head == BOT
    assert r.body == (atom("flies", "X"), atom("notflies", "X"))
    assert r.weight == HARD and r.hard


def test_rule_without_weight_defaults_to_one():
    (r,) = parse_kb("flies(X) :- bird(X).").rules
    assert r.weight == 1.0


@pytest.mark.parametrize("text, line", [
    ("flies(X) :- .", 1),
    ("bird(tweety)\nflies(X) :- bird(Y).", 2),
    ("p(a) @ w=1.5", 1),
    ("p(a) @ w=0", 1),
    ("p(a)\np(a, b)", 2),
    ("p(a) :- q(a). w=0", 1),
    ("p(a) @ w=hard", 1),
    ("p(NULL)", 1),
    ("p(a) @ colour=red", 1),
    ("p(a", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_kb(text)
    assert info.value.line == line


def test_comments_and_blank_lines_are_skipped():
    kb = parse_kb("# header\n\nbird(tweety)  # trailing\n")
    assert kb.base_atoms == {atom("bird", "tweety")}


def test_quoted_constants_roundtrip():
    kb = parse_kb('label(x, "Martin Luther King") @ w=0.5')
    (f,) = kb.facts
    assert f.atom.args[1] == Constant("Martin Luther King")
    assert parse_kb(format_kb(kb)) == kb


def test_parse_query_examples():
    q = parse_query("answer(X) :- flies(X).")
    assert q == Query((atom("flies", "X"),), atom("answer", "X"))
    q = parse_query("answer(U) :- birthPlace(X,U), convictedKiller(X, mlk).")
    assert len(q.body) == 2
    assert q.body[1].args[1] == Constant("mlk")


@pytest.mark.parametrize("text", [
    "bot :- p(X).",
    "answer(Y) :- p(X).",
    "answer(X) :- p(X).\nanswer(X) :- q(X).",
    "",
])
def test_parse_query_errors(text):
    with pytest.raises(KBError):
        parse_query(text)


def test_fact_must_be_ground_and_not_bot():
    with pytest.raises(KBError):
        Fact(atom("p", "X"))
    with pytest.raises(KBError):
        Fact(BOT)


def test_rule_safety():
    with pytest.raises(KBError):
        Rule((atom("p", "X"),), atom("q", "Y"))


def test_rule_statistics():
    r = skolemize(QuantifiedRule((("forall", "X"), ("exists", "Y")), (atom("p", "X"),), atom("q", "X", "Y")))
    assert r.h == 1
    assert r.k == 1


def test_noisy_or_confidence():
    kb = parse_kb("p(a) @ w=0.5 src=s1\np(a) @ w=0.5 src=s2\nq(a) @ w=0.3")
    assert kb.confidence(atom("p", "a")) == pytest.approx(0.75)
    assert kb.confidence(atom("q", "a")) == pytest.approx(0.3)
    assert kb.confidence(atom("r", "a")) is None
    assert set(kb.sources) == {"s1", "s2", "default"}


def test_arity_conflict_in_constructor():
    with pytest.raises(KBError):
        KnowledgeBase({Fact(atom("p", "a")), Fact(atom("p", "a", "b"))})


# -- skolemization


def test_skolemize_forall_exists():
    f = QuantifiedRule((("forall", "X"), ("exists", "Y")), (atom("p", "X"),), atom("q", "X", "Y"))
    r = skolemize(f)
    assert r.head == Atom("q", (Variable("X"), Func("sk_1", (Variable("X"),))))
    assert r.body == (atom("p", "X"),)


def test_skolemize_plain_rule_is_identity():
    r = Rule((atom("p", "X"),), atom("q", "X"), 2.0)
    assert skolemize(r) is r


def test_skolemize_nullary_existential():
    f = QuantifiedRule((("exists", "Y"),), (), Atom("r", (Variable("Y"),)))
    r = skolemize(f, itertools.count(2))
    assert r.head == Atom("r", (Constant("sk_2"),))
    assert r.head.is_ground()


def test_skolemize_rejects_exists_forall():
    f = QuantifiedRule((("exists", "Y"), ("forall", "X")), (atom("p", "X"),), atom("q", "X", "Y"))
    with pytest.raises(KBError):
        skolemize(f)


def test_skolemize_idempotent():
    f = QuantifiedRule((("forall", "X"), ("exists", "Y")), (atom("p", "X"),), atom("q", "X", "Y"))
    once = skolemize(f)
    assert skolemize(once) == once


def test_parser_skolemizes_prefixed_rules():
    kb = parse_kb("forall X exists Y: parent(X, Y) :- person(X). w=hard\nperson(ann)")
    (r,) = kb.rules
    assert isinstance(r.head.args[1], Func)
    assert r.hard


def test_format_parse_roundtrip_on_random_kbs():
    rng = random.Random(7)
    for _ in range(100):
        kb = random_kb(rng)
        again = parse_kb(format_kb(kb))
        assert again.facts == kb.facts
        assert again.rules == kb.rules


def test_hard_is_infinite():
    assert HARD == math.inf
