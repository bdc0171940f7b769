"""Unification, fixed-point expansion with why-provenance, and inconsistency checks."""

from __future__ import annotations

import itertools
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .kb import BOT, Atom, Constant, Func, KnowledgeBase, Rule, Term, Variable

DEFAULT_SUPPORT_CAP = 64
DEFAULT_MAX_ROUNDS = 1000


class GroundingLimitError(RuntimeError):
    """Fixed-point iteration did not converge within the round cap."""


class Substitution(Mapping):
    """Immutable, hashable variable-name to ground-term map."""

    __slots__ = ("_map", "_hash")

    def __init__(self, items=()):
        self._map = dict(items)
        self._hash = None

    def __getitem__(self, key):
        return self._map[key]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self._map == other._map
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}↦{v}" for k, v in sorted(self._map.items()))
        return f"{{{inner}}}"

    def term(self, t: Term) -> Term:
        if isinstance(t, Variable):
            return self._map.get(t.name, t)
        if isinstance(t, Func):
            return Func(t.functor, tuple(self.term(a) for a in t.args))
        return t

    def atom(self, a: Atom) -> Atom:
        return Atom(a.predicate, tuple(self.term(t) for t in a.args))

    def __call__(self, a: Atom) -> Atom:
        return self.atom(a)


def _match(pattern: Term, value: Term, binding: dict) -> bool:
    if isinstance(pattern, Variable):
        bound = binding.get(pattern.name)
        if bound is None:
            binding[pattern.name] = value
            return True
        return bound == value
    if isinstance(pattern, Func):
        if not isinstance(value, Func) or value.functor != pattern.functor or len(value.args) != len(pattern.args):
            return False
        return all(_match(p, v, binding) for p, v in zip(pattern.args, value.args))
    return pattern == value


def match_atom(pattern: Atom, ground: Atom, binding: dict) -> dict | None:
    """Extend ``binding`` so that it maps ``pattern`` onto ``ground``."""
    if pattern.predicate != ground.predicate or pattern.arity != ground.arity:
        return None
    trial = dict(binding)
    for p, v in zip(pattern.args, ground.args):
        if not _match(p, v, trial):
            return None
    return trial


def _index(atoms: Iterable[Atom]) -> dict:
    idx = defaultdict(list)
    for a in atoms:
        idx[a.predicate, a.arity].append(a)
    return idx


def _join(body, sources, binding):
    if not body:
        yield binding
        return
    first, rest = body[0], body[1:]
    for g in sources[0].get((first.predicate, first.arity), ()):
        b = match_atom(first, g, binding)
        if b is not None:
            yield from _join(rest, sources[1:], b)


def unify(atoms: Iterable[Atom], rule) -> set:
    """All substitutions grounding every body atom of ``rule`` into ``atoms``."""
    idx = atoms if isinstance(atoms, dict) else _index(atoms)
    body = tuple(rule.body)
    return {Substitution(b) for b in _join(body, [idx] * len(body), {})}


def _unify_delta(full_idx, delta_idx, rule):
    # at least one body atom must come from delta
    body = tuple(rule.body)
    out = set()
    for i in range(len(body)):
        if (body[i].predicate, body[i].arity) not in delta_idx:
            continue
        sources = [full_idx] * len(body)
        sources[i] = delta_idx
        out.update(Substitution(b) for b in _join(body, sources, {}))
    return out


def expansion_step(atoms: Iterable[Atom], rules: Iterable[Rule]) -> frozenset:
    atoms = frozenset(atoms)
    idx = _index(atoms)
    new = set(atoms)
    for r in rules:
        for theta in unify(idx, r):
            new.add(theta(r.head))
    return frozenset(new)


@dataclass(frozen=True)
class GroundedKB:
    atoms: frozenset
    provenance: Mapping | None = None
    rule_groundings: frozenset = frozenset()
    base: frozenset = field(default=frozenset())

    @cached_property
    def mis(self) -> frozenset:
        return minimal_inconsistent_subsets(self)

    @property
    def domain(self) -> frozenset:
        return frozenset(t for a in self.atoms for t in a.args)

    def supports(self, a: Atom) -> frozenset:
        if self.provenance is not None and self.provenance.get(a):
            return self.provenance[a]
        return frozenset({frozenset({a})})

    def cons(self, atoms: Iterable[Atom]) -> bool:
        return cons(atoms, self.mis, self.provenance)

    def consistent_support(self, atoms: Iterable[Atom]) -> frozenset | None:
        """Smallest union of per-atom supports that embeds no MIS, or None."""
        return _support_choice(atoms, self.mis, self.provenance, smallest=True)


def _minimize(family: Iterable[frozenset]) -> list:
    ordered = sorted(set(family), key=lambda s: (len(s), sorted(map(str, s))))
    kept: list = []
    for s in ordered:
        if not any(k <= s for k in kept):
            kept.append(s)
    return kept


def _cap(family: Iterable[frozenset], cap: int) -> frozenset:
    return frozenset(_minimize(family)[:cap])


def _close(kb: KnowledgeBase, max_rounds: int, support_cap: int | None):
    track = support_cap is not None
    atoms = set(kb.base_atoms)
    kappa: dict = {a: frozenset({frozenset({a})}) for a in atoms} if track else {}
    groundings: set = set()
    rules = sorted(kb.rules, key=str)
    full = _index(atoms)
    delta = set(atoms)
    rounds = 0
    while delta:
        rounds += 1
        if rounds > max_rounds:
            raise GroundingLimitError(f"no fixed point after {max_rounds} rounds; unsafe recursion through skolem terms?")
        delta_idx = _index(delta)
        pending: dict = defaultdict(set)
        new_atoms = set()
        for r in rules:
            for theta in _unify_delta(full, delta_idx, r):
                groundings.add((r, theta))
                h = theta(r.head)
                if h not in atoms:
                    new_atoms.add(h)
                if track:
                    families = [kappa[theta(b)] for b in r.body]
                    for choice in itertools.product(*families):
                        pending[h].add(frozenset().union(*choice))
        changed = set(new_atoms)
        for a in new_atoms:
            atoms.add(a)
            full[a.predicate, a.arity].append(a)
        if track:
            for h, fam in pending.items():
                updated = _cap(kappa.get(h, frozenset()) | fam, support_cap)
                if updated != kappa.get(h):
                    kappa[h] = updated
                    changed.add(h)
        delta = changed
    return frozenset(atoms), (kappa if track else None), frozenset(groundings)


def ground_fixpoint(kb: KnowledgeBase, max_rounds: int = DEFAULT_MAX_ROUNDS) -> GroundedKB:
    """Least fixed point of the expansion step (semi-naive)."""
    atoms, _, groundings = _close(kb, max_rounds, None)
    return GroundedKB(atoms, None, groundings, kb.base_atoms)


def expansion_step_prov(state, rules: Iterable[Rule], support_cap: int = DEFAULT_SUPPORT_CAP):
    """One expansion step that also extends the provenance map.

    Every firing adds to the head each union of one support per body atom.
    """
    atoms, kappa = state
    atoms = frozenset(atoms)
    idx = _index(atoms)
    pending: dict = defaultdict(set)
    for r in rules:
        for theta in unify(idx, r):
            families = [kappa[theta(b)] for b in r.body]
            for choice in itertools.product(*families):
                pending[theta(r.head)].add(frozenset().union(*choice))
    new_kappa = dict(kappa)
    for h, fam in pending.items():
        new_kappa[h] = _cap(kappa.get(h, frozenset()) | fam, support_cap)
    return atoms | frozenset(pending), new_kappa


def ground_fixpoint_prov(
    kb: KnowledgeBase,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> GroundedKB:
    """Fixed point of atoms together with their minimal support sets."""
    atoms, kappa, groundings = _close(kb, max_rounds, support_cap)
    return GroundedKB(atoms, kappa, groundings, kb.base_atoms)


def minimal_inconsistent_subsets(gkb: GroundedKB) -> frozenset:
    if gkb.provenance is None:
        raise ValueError("minimal inconsistent subsets need a provenance-tracking grounding")
    return frozenset(_minimize(gkb.provenance.get(BOT, ())))


def _support_choice(atoms, mis, provenance, smallest=False):
    atoms = sorted(set(atoms), key=str)
    mis = list(mis)

    def families(a):
        if provenance is not None and provenance.get(a):
            return sorted(provenance[a], key=lambda s: (len(s), sorted(map(str, s))))
        return [frozenset({a})]

    fams = [families(a) for a in atoms]
    best = None

    def embeds(u):
        return any(m <= u for m in mis)

    def search(i, union):
        nonlocal best
        if embeds(union):
            return False
        if best is not None and len(union) >= len(best):
            return False
        if i == len(fams):
            best = union
            return True
        found = False
        for s in fams[i]:
            if search(i + 1, union | s):
                found = True
                if not smallest:
                    return True
        return found

    search(0, frozenset())
    return best


def cons(candidate: Iterable[Atom], mis: Iterable[frozenset], provenance: Mapping | None = None) -> bool:
    """True iff some choice of supports for ``candidate`` contains no MIS.

    Without ``provenance`` every atom is its own support.
    """
    mis = list(mis)
    candidate = list(candidate)
    if not mis or not candidate:
        return True
    return _support_choice(candidate, mis, provenance) is not None
