"""Factor graphs over the grounded KB, exact world probabilities, and answer ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .grounding import GroundedKB
from .kb import BOT, HARD, Atom, KnowledgeBase
from .query import Candidate

DEFAULT_CAP = 22
LOGIT_CLAMP = 30.0
_CHUNK = 1 << 16


class EnumerationCapError(ValueError):
    """Too many atoms for exact enumeration."""


class UnsatisfiableError(ValueError):
    """Every world violates some hard factor."""


@dataclass(frozen=True)
class Factor:
    scope: tuple
    theta: float
    kind: str  # "atom" or "rule"
    body: tuple = ()
    head: Atom | None = None  # None encodes a bot head

    @property
    def hard(self) -> bool:
        return self.theta == HARD

    def satisfied(self, true_atoms) -> bool:
        if self.kind == "atom":
            return self.head in true_atoms
        if not all(b in true_atoms for b in self.body):
            return True
        return self.head is not None and self.head in true_atoms

    def __str__(self):
        w = "hard" if self.hard else f"{self.theta:.6g}"
        if self.kind == "atom":
            return f"atom[{self.head}] θ={w}"
        head = "bot" if self.head is None else str(self.head)
        return f"rule[{', '.join(map(str, self.body))} -> {head}] θ={w}"


@dataclass(frozen=True)
class World:
    """Truth assignment over ``scope``: ``true_atoms`` hold, the rest of the scope is false.

    A world whose scope is ``None`` covers every atom of the factor graph it
    is evaluated against.
    """

    true_atoms: frozenset
    scope: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "true_atoms", frozenset(self.true_atoms))
        if self.scope is not None:
            object.__setattr__(self, "scope", frozenset(self.scope))
            if not self.true_atoms <= self.scope:
                raise ValueError("true atoms must lie inside the world's scope")

    def __getitem__(self, a: Atom) -> bool:
        return a in self.true_atoms

    def __str__(self):
        return "{" + ", ".join(sorted(map(str, self.true_atoms))) + "}"


@dataclass(frozen=True)
class FactorGraph:
    atoms: tuple
    factors: tuple

    def __post_init__(self):
        known = set(self.atoms)
        for f in self.factors:
            if not set(f.scope) <= known:
                raise ValueError(f"factor {f} mentions atoms outside the graph")

    @property
    def atom_weights(self) -> dict:
        return {f.head: f.theta for f in self.factors if f.kind == "atom"}

    @property
    def rule_factors(self) -> list:
        return [f for f in self.factors if f.kind == "rule"]

    def restrict(self, atoms: Iterable[Atom]) -> "FactorGraph":
        keep = set(atoms)
        return FactorGraph(
            tuple(a for a in self.atoms if a in keep),
            tuple(f for f in self.factors if set(f.scope) <= keep),
        )

    def components(self) -> list:
        """Connected components of atoms linked through shared factors."""
        parent = {a: a for a in self.atoms}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for f in self.factors:
            scope = list(f.scope)
            for other in scope[1:]:
                ra, rb = find(scope[0]), find(other)
                if ra != rb:
                    parent[max(ra, rb, key=str)] = min(ra, rb, key=str)
        groups: dict = {}
        for a in self.atoms:
            groups.setdefault(find(a), []).append(a)
        return [frozenset(g) for g in groups.values()]


def confidence_to_theta(w: float) -> float:
    """Logit of a confidence, clamped so certain facts stay finite."""
    if w >= 1.0:
        return LOGIT_CLAMP
    if w <= 0.0:
        return -LOGIT_CLAMP
    return max(-LOGIT_CLAMP, min(LOGIT_CLAMP, math.log(w / (1.0 - w))))


def build_factor_graph(gkb: GroundedKB, kb: KnowledgeBase, cap: int = DEFAULT_CAP) -> FactorGraph:
    """One factor per grounded atom and one per recorded rule grounding.

    Asserted atoms get the logit of their confidence, derived atoms 0.  The
    contradiction atom is not a variable: rules concluding it are satisfied
    exactly when their body is not fully true.
    """
    atoms = tuple(sorted(gkb.atoms - {BOT}, key=str))
    if len(atoms) > cap:
        raise EnumerationCapError(f"{len(atoms)} grounded atoms exceed the enumeration cap {cap}")
    factors = []
    for a in atoms:
        conf = kb.confidence(a)
        theta = 0.0 if conf is None else confidence_to_theta(conf)
        factors.append(Factor((a,), theta, "atom", (), a))
    for rule, theta in sorted(gkb.rule_groundings, key=lambda rt: (str(rt[0]), repr(rt[1]))):
        body = tuple(theta(b) for b in rule.body)
        head = theta(rule.head)
        head = None if head == BOT else head
        scope = tuple(dict.fromkeys(body + ((head,) if head is not None else ())))
        factors.append(Factor(scope, rule.weight, "rule", body, head))
    return FactorGraph(atoms, tuple(factors))


def _soft_offset(fg: FactorGraph) -> float:
    return math.fsum(f.theta for f in fg.factors if f.kind == "rule" and not f.hard)


def world_log_weight(fg: FactorGraph, world: World, shifted: bool = False) -> float:
    """Log of the unnormalized weight.

    With ``shifted`` a satisfied soft rule contributes 0 and a violated one
    ``-theta``; this divides every world by the same constant and keeps the
    numbers small when rule weights are large.
    """
    total = 0.0
    for f in fg.factors:
        sat = f.satisfied(world.true_atoms)
        if f.kind == "atom":
            total += f.theta if sat else 0.0
        elif f.hard:
            if not sat:
                return -math.inf
        elif shifted:
            total -= 0.0 if sat else f.theta
        elif sat:
            total += f.theta
    return total


def world_weight(fg: FactorGraph, world: World) -> float:
    """Unnormalized product of factor values for a total world."""
    return math.exp(world_log_weight(fg, world))


def _enumerate(fg: FactorGraph):
    """Yield (states, shifted log-weights) chunks; disallowed worlds get -inf."""
    n = len(fg.atoms)
    index = {a: i for i, a in enumerate(fg.atoms)}
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, _CHUNK):
        states = np.arange(start, min(1 << n, start + _CHUNK), dtype=np.int64)
        bits = ((states[:, None] >> shifts) & 1).astype(bool)
        logw = np.zeros(len(states))
        allowed = np.ones(len(states), dtype=bool)
        for f in fg.factors:
            if f.kind == "atom":
                logw += f.theta * bits[:, index[f.head]]
                continue
            body_true = bits[:, [index[b] for b in f.body]].all(axis=1) if f.body else np.ones(len(states), bool)
            sat = ~body_true
            if f.head is not None:
                sat = sat | bits[:, index[f.head]]
            if f.hard:
                allowed &= sat
            else:
                logw -= f.theta * ~sat
        logw[~allowed] = -np.inf
        yield states, logw


def _logsumexp(chunks) -> float:
    m = -math.inf
    parts = []
    for v in chunks:
        if v.size:
            parts.append(v)
            m = max(m, float(v.max()))
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(float(np.exp(v - m).sum()) for v in parts))


def _check_cap(fg: FactorGraph, cap: int):
    if len(fg.atoms) > cap:
        raise EnumerationCapError(f"{len(fg.atoms)} atoms exceed the enumeration cap {cap}")


def _log_z_shifted(fg: FactorGraph, cap: int) -> float:
    _check_cap(fg, cap)
    logz = _logsumexp(lw for _, lw in _enumerate(fg))
    if logz == -math.inf:
        raise UnsatisfiableError("hard factors rule out every world")
    return logz


def log_partition_function(fg: FactorGraph, cap: int = DEFAULT_CAP) -> float:
    return _log_z_shifted(fg, cap) + _soft_offset(fg)


def partition_function(fg: FactorGraph, cap: int = DEFAULT_CAP) -> float:
    """Sum of world weights over all 2^n worlds."""
    return math.exp(log_partition_function(fg, cap))


def world_distribution(fg: FactorGraph, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Probabilities of all worlds; index bit i is the truth of ``fg.atoms[i]``."""
    logz = _log_z_shifted(fg, cap)
    return np.concatenate([np.exp(lw - logz) for _, lw in _enumerate(fg)])


def world_probability(fg: FactorGraph, world: World, cap: int = DEFAULT_CAP) -> float:
    """Probability of a world; for a partial scope, the marginal of that assignment.

    Components of the graph that do not touch the scope factor out, so only
    the touched components are enumerated.
    """
    if world.scope is None or world.scope == frozenset(fg.atoms):
        logz = _log_z_shifted(fg, cap)
        logw = world_log_weight(fg, world, shifted=True)
        return 0.0 if logw == -math.inf else math.exp(logw - logz)
    unknown = world.scope - set(fg.atoms)
    if unknown:
        raise ValueError(f"world mentions atoms outside the graph: {sorted(map(str, unknown))}")
    touched = set()
    for comp in fg.components():
        if comp & world.scope:
            touched |= comp
    sub = fg.restrict(touched)
    _check_cap(sub, cap)
    index = {a: i for i, a in enumerate(sub.atoms)}
    mask = sum(1 << index[a] for a in world.scope)
    want = sum(1 << index[a] for a in world.true_atoms)
    chunks = list(_enumerate(sub))
    logz = _logsumexp(lw for _, lw in chunks)
    if logz == -math.inf:
        raise UnsatisfiableError("hard factors rule out every world")
    hit = _logsumexp(lw[(states & mask) == want] for states, lw in chunks)
    return 0.0 if hit == -math.inf else math.exp(hit - logz)


# -- relevant worlds and ranking ------------------------------------------------------


def max_relevant_world(s, gkb: GroundedKB, q=None) -> World:
    """Atoms derivable from a consistent choice of base supports of the summary.

    An atom holds when one of its support sets lies inside the base facts
    that support the summary's members.
    """
    atoms = frozenset().union(*(m.atoms for m in s.members))
    base = gkb.consistent_support(atoms)
    if base is None:
        raise ValueError(f"summary {s} embeds a minimal inconsistent subset")
    true = frozenset(
        e for e in gkb.atoms - {BOT}
        if any(c <= base for c in gkb.supports(e))
    )
    return World(true, true)


def candidate_universe(gamma, summaries: Iterable, gkb: GroundedKB, q=None) -> frozenset:
    """One maximum relevant world per summary, all over a shared scope."""
    worlds = {max_relevant_world(s, gkb, q) for s in summaries}
    scope = frozenset().union(*(w.true_atoms for w in worlds)) if worlds else frozenset()
    return frozenset(World(w.true_atoms, scope) for w in worlds)


def likelihood(matches: Iterable[tuple], combinator: str = "max") -> float:
    """Combine (interpretation error, match score) pairs into one likelihood."""
    values = [(1.0 - err) * score for err, score in matches]
    if not values:
        return 0.0
    if combinator == "max":
        return max(values)
    if combinator == "mean":
        return sum(values) / len(values)
    raise ValueError(f"unknown likelihood combinator {combinator!r}")


def summary_likelihood(s, combinator: str = "max") -> float:
    if combinator == "max":
        return s.likelihood
    return likelihood(((m.error, m.score) for m in s.members), combinator)


@dataclass(frozen=True)
class RankConfig:
    cap: int = DEFAULT_CAP
    likelihood: str = "max"


@dataclass(frozen=True)
class RankedAnswer:
    candidate: Candidate
    probability: float
    worlds: tuple  # ((World, likelihood, prior), ...)
    summaries: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


def rank_candidates(
    justification: Mapping,
    gkb: GroundedKB,
    kb: KnowledgeBase,
    cfg: RankConfig = RankConfig(),
    prior=None,
) -> list:
    """Score each candidate by summing likelihood times prior over its universe.

    ``prior(fg, world)`` defaults to :func:`world_probability`.
    """
    fg = build_factor_graph(gkb, kb, cfg.cap)
    prior = prior or (lambda g, w: world_probability(g, w, cfg.cap))
    out = []
    for gamma, summaries in justification.items():
        cand = gamma if isinstance(gamma, Candidate) else Candidate(gamma)
        summaries = sorted(summaries, key=lambda s: s.sort_key())
        if not summaries:
            continue
        universe = candidate_universe(cand, summaries, gkb)
        scope = next(iter(universe)).scope
        best: dict = {}
        for s in summaries:
            w = World(max_relevant_world(s, gkb).true_atoms, scope)
            best[w] = max(best.get(w, 0.0), summary_likelihood(s, cfg.likelihood))
        rows = []
        for w in sorted(universe, key=lambda w: sorted(map(str, w.true_atoms))):
            rows.append((w, best[w], prior(fg, w)))
        total = math.fsum(lik * p for _, lik, p in rows)
        out.append(RankedAnswer(cand, min(1.0, max(0.0, total)), tuple(rows), tuple(summaries)))
    out.sort(key=lambda r: (-r.probability, str(r.candidate)))
    return out
