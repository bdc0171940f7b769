"""Random KB, query and graph generators shared by the property tests."""

import random

from paraquery.kb import BOT, HARD, Atom, Constant, Fact, KnowledgeBase, Query, Rule, Variable
from paraquery.similarity import HypGraph

ARITY = {"p": 1, "q": 1, "r": 1, "e": 2, "f": 2}


def _atom(rng, pred, terms):
    return Atom(pred, tuple(rng.choice(terms) for _ in range(ARITY[pred])))


def random_kb(rng: random.Random, max_facts=12, max_rules=6, max_domain=4, bot_rate=0.35) -> KnowledgeBase:
    consts = [Constant(f"c{i}") for i in range(rng.randint(1, max_domain))]
    facts = {}
    for _ in range(rng.randint(max_facts // 3, max_facts)):
        a = _atom(rng, rng.choice(list(ARITY)), consts)
        facts[a] = Fact(a, round(rng.uniform(0.05, 1.0), 3), rng.choice(["d1", "d2"]))
    rules = set()
    variables = [Variable(n) for n in "XYZ"]
    # bodies favour predicates that can actually hold, so rules fire and chain
    live = sorted({a.predicate for a in facts}) or list(ARITY)
    for _ in range(rng.randint(0, max_rules)):
        n_body = rng.choices([1, 2, 3], weights=[4, 4, 1])[0]
        width = variables[: rng.randint(1, 3)]
        body = tuple(
            _atom(rng, rng.choice(live) if rng.random() < 0.8 else rng.choice(list(ARITY)), width + consts[:1])
            for _ in range(n_body)
        )
        body_vars = [Variable(v) for b in body for v in b.variables()]
        if rng.random() < bot_rate or not body_vars:
            head = BOT
        else:
            head = _atom(rng, rng.choice(list(ARITY)), body_vars)
            live.append(head.predicate)
        weight = HARD if rng.random() < 0.4 else round(rng.uniform(0.1, 3.0), 2)
        rules.add(Rule(body, head, weight))
    return KnowledgeBase(frozenset(facts.values()), frozenset(rules))


def random_query(rng: random.Random) -> Query:
    variables = [Variable(n) for n in "XYZ"]
    body = tuple(_atom(rng, rng.choice(list(ARITY)), variables) for _ in range(rng.randint(1, 2)))
    names = sorted({v for b in body for v in b.variables()})
    head_vars = rng.sample(names, rng.randint(1, len(names)))
    return Query(body, Atom("answer", tuple(Variable(v) for v in head_vars)))


def random_graph(rng: random.Random, consts=("a", "b", "c"), preds=("p", "q", "pq", "e", "ee"), max_atoms=3):
    atoms = set()
    for _ in range(rng.randint(1, max_atoms)):
        pred = rng.choice(preds)
        arity = 2 if pred.startswith("e") else 1
        atoms.add(Atom(pred, tuple(Constant(rng.choice(consts)) for _ in range(arity))))
    return HypGraph(frozenset(atoms))
