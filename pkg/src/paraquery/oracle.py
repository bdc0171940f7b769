"""Brute-force reference semantics.

Deliberately naive and written separately from the engine: no indexing, no
semi-naive rounds, no provenance tracking, no vectorization.
"""

from __future__ import annotations

import itertools
import math

from .kb import BOT, Atom, Func, KnowledgeBase, Variable


def _subst(t, theta):
    if isinstance(t, Variable):
        return theta[t.name]
    if isinstance(t, Func):
        return Func(t.functor, tuple(_subst(a, theta) for a in t.args))
    return t


def _inst(a: Atom, theta) -> Atom:
    return Atom(a.predicate, tuple(_subst(t, theta) for t in a.args))


def _vars(atoms):
    names = []
    for a in atoms:
        for t in a.args:
            stack = [t]
            while stack:
                x = stack.pop()
                if isinstance(x, Variable) and x.name not in names:
                    names.append(x.name)
                elif isinstance(x, Func):
                    stack.extend(x.args)
    return names


def naive_ground(kb: KnowledgeBase, facts=None) -> frozenset:
    """Fire every rule under every substitution over the domain until nothing changes."""
    facts = kb.facts if facts is None else facts
    atoms = {f.atom if not isinstance(f, Atom) else f for f in facts}
    while True:
        domain = sorted({t for a in atoms for t in a.args}, key=str)
        new = set(atoms)
        for rule in kb.rules:
            names = _vars([*rule.body, rule.head])
            for values in itertools.product(domain, repeat=len(names)):
                theta = dict(zip(names, values))
                if all(_inst(b, theta) in atoms for b in rule.body):
                    new.add(_inst(rule.head, theta))
        if new == atoms:
            return frozenset(atoms)
        atoms = new


def brute_mis(kb: KnowledgeBase) -> frozenset:
    """Minimal subsets of base atoms whose closure contains bot."""
    base = sorted({f.atom for f in kb.facts}, key=str)
    if BOT not in naive_ground(kb, base):
        return frozenset()
    bad = []
    for size in range(1, len(base) + 1):
        for subset in itertools.combinations(base, size):
            s = frozenset(subset)
            if any(m <= s for m in bad):
                continue
            if BOT in naive_ground(kb, s):
                bad.append(s)
    return frozenset(bad)


def brute_minimal_supports(kb: KnowledgeBase, target: Atom) -> frozenset:
    """Minimal subsets of base atoms whose closure contains ``target``."""
    base = sorted({f.atom for f in kb.facts}, key=str)
    found = []
    for size in range(1, len(base) + 1):
        for subset in itertools.combinations(base, size):
            s = frozenset(subset)
            if any(m <= s for m in found):
                continue
            if target in naive_ground(kb, s):
                found.append(s)
    return frozenset(found)


def brute_cons(kb: KnowledgeBase, atoms) -> bool:
    """Some set of base atoms derives all of ``atoms`` without deriving bot."""
    base = sorted({f.atom for f in kb.facts}, key=str)
    need = set(atoms)
    for size in range(len(base) + 1):
        for subset in itertools.combinations(base, size):
            closure = naive_ground(kb, subset)
            if need <= closure and BOT not in closure:
                return True
    return False


def _logit(w):
    if w >= 1.0:
        return 30.0
    return max(-30.0, min(30.0, math.log(w / (1.0 - w))))


def enumerate_worlds(fg) -> list:
    """Every total world of ``fg`` with its probability, by a direct loop."""
    from .worlds import World

    rows = []
    for values in itertools.product([False, True], repeat=len(fg.atoms)):
        true = frozenset(a for a, v in zip(fg.atoms, values) if v)
        weight = 1.0
        for f in fg.factors:
            if f.kind == "atom":
                if f.head in true:
                    weight *= math.exp(f.theta)
                continue
            body_holds = all(b in true for b in f.body)
            ok = (not body_holds) or (f.head is not None and f.head in true)
            if f.theta == math.inf:
                if not ok:
                    weight = 0.0
            elif ok:
                weight *= math.exp(f.theta)
        rows.append((World(true), weight))
    z = sum(w for _, w in rows)
    return [(world, w / z) for world, w in rows]


def brute_rank(kb: KnowledgeBase, true_sets_with_likelihood) -> float:
    """Total-probability score from explicit (true-set, likelihood) pairs.

    Builds its own factor weights from ``kb`` and a naive grounding, and sums
    over all total worlds agreeing with each true-set on the union scope.
    """
    gb = naive_ground(kb)
    atoms = sorted(gb - {BOT}, key=str)
    conf = {}
    for f in kb.facts:
        conf.setdefault(f.atom, []).append(f.weight)
    groundings = []
    for rule in kb.rules:
        names = _vars([*rule.body, rule.head])
        domain = sorted({t for a in gb for t in a.args}, key=str)
        for values in itertools.product(domain, repeat=len(names)):
            theta = dict(zip(names, values))
            body = [_inst(b, theta) for b in rule.body]
            if all(b in gb for b in body):
                groundings.append((body, _inst(rule.head, theta), rule.weight))
    scope = set().union(*(s for s, _ in true_sets_with_likelihood))
    z = 0.0
    hits = {frozenset(s): 0.0 for s, _ in true_sets_with_likelihood}
    for values in itertools.product([False, True], repeat=len(atoms)):
        true = {a for a, v in zip(atoms, values) if v}
        weight = 1.0
        for a in true:
            if a in conf:
                weight *= math.exp(_logit(1.0 - math.prod(1.0 - w for w in conf[a])))
        for body, head, w in groundings:
            ok = not all(b in true for b in body) or (head != BOT and head in true)
            if w == math.inf:
                if not ok:
                    weight = 0.0
            elif ok:
                weight *= math.exp(w)
        z += weight
        key = frozenset(true & scope)
        if key in hits:
            hits[key] += weight
    return sum(lik * hits[frozenset(s)] / z for s, lik in true_sets_with_likelihood)

