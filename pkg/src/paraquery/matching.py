"""Approximate matching of compiled queries and summarization of hypothesis graphs."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable

from .grounding import GroundedKB, Substitution
from .kb import BOT, Variable
from .query import CompiledQuery, Hypothesis
from .similarity import DEFAULT_CONFIG, HypGraph, SimilarityConfig, atom_similarity, similarity

# subsets of extra graphs examined by graph_provenance
PROVENANCE_SEARCH_CAP = 12


class ProvenanceMissError(LookupError):
    """No subset of the input graphs summarizes to the given summary."""


def approx_match(
    gkb: GroundedKB,
    cq: CompiledQuery,
    cfg: SimilarityConfig = DEFAULT_CONFIG,
    k: int | None = 10,
) -> list:
    """Ranked hypotheses approximately matching ``cq`` against the grounded KB.

    Each query atom collects grounded atoms whose atom-level similarity is at
    least ``cfg.theta_r``; consistent variable bindings are joined by
    backtracking, smallest candidate list first.  A hypothesis is scored by
    the similarity of its atoms to the query body under the same binding and
    dropped when it fails Cons.
    """
    if k is not None and k < 1:
        raise ValueError("k must be at least 1")
    q = cq.query
    pool = sorted(gkb.atoms - {BOT}, key=str)
    cands = []
    for qa in q.body:
        cands.append([g for g in pool if atom_similarity(qa, g, cfg) >= cfg.theta_r])
    order = sorted(range(len(q.body)), key=lambda i: (len(cands[i]), i))

    found: dict = {}

    def bind(qa, g, binding):
        trial = dict(binding)
        for t, v in zip(qa.args, g.args):
            if isinstance(t, Variable):
                if trial.setdefault(t.name, v) != v:
                    return None
        return trial

    def search(pos, binding, chosen):
        if pos == len(order):
            theta = Substitution(binding)
            body = frozenset(chosen)
            if not gkb.cons(body):
                return
            target = frozenset(theta(a) for a in q.body)
            score = similarity(body, target, cfg, gkb)
            head = theta(q.head)
            key = (body, head)
            if key not in found or score > found[key].score:
                found[key] = Hypothesis(body, score, cq.error, head)
            return
        i = order[pos]
        for g in cands[i]:
            b = bind(q.body[i], g, binding)
            if b is not None:
                search(pos + 1, b, chosen + [g])

    search(0, {}, [])
    ranked = sorted(found.values(), key=Hypothesis.sort_key)
    return ranked if k is None else ranked[:k]


# -- summarization ---------------------------------------------------------------


def _max_likelihood(members) -> float:
    return max(((1.0 - m.error) * m.score for m in members), default=0.0)


@dataclass(frozen=True)
class SummaryGraph:
    merged: HypGraph
    members: frozenset
    support_counts: tuple  # ((atom, count), ...) sorted by atom text
    likelihood: float = 1.0

    def __post_init__(self):
        if not self.members:
            raise ValueError("a summary needs at least one member")

    def count(self, atom) -> int:
        return dict(self.support_counts).get(atom, 0)

    def sort_key(self):
        return (sorted(map(str, self.merged.atoms)), sorted(m.sort_key() for m in self.members))

    def __str__(self):
        return str(self.merged)


def nu_udf(cluster: Iterable[HypGraph]) -> SummaryGraph:
    """Default summarizer: union of atoms with per-atom multiplicities."""
    members = frozenset(cluster)
    if not members:
        raise ValueError("cannot summarize an empty cluster")
    counts = Counter(a for m in members for a in m.atoms)
    merged = HypGraph(
        frozenset(counts),
        max(m.score for m in members),
        min(m.error for m in members),
    )
    return SummaryGraph(
        merged,
        members,
        tuple(sorted(counts.items(), key=lambda kv: str(kv[0]))),
        _max_likelihood(members),
    )


Similarity = Callable[..., float]


def summarize(
    graphs: Iterable[HypGraph],
    cfg: SimilarityConfig = DEFAULT_CONFIG,
    gkb: GroundedKB | None = None,
    sim: Similarity | None = None,
    udf: Callable[[Iterable[HypGraph]], SummaryGraph] = nu_udf,
) -> frozenset:
    """Cluster graphs around each pivot and merge every cluster.

    A pivot's cluster is its ``theta_r``-ball (similarity strictly above the
    threshold).  Members are dropped, least similar to the pivot first, until
    the cluster is pairwise similar and its union passes Cons.
    """
    graphs = sorted(set(graphs), key=HypGraph.sort_key)
    if not graphs:
        return frozenset()
    sim = sim or similarity
    cache: dict = {}

    def s(a, b):
        key = (a, b) if id(a) <= id(b) else (b, a)
        if key not in cache:
            cache[key] = 1.0 if a == b else sim(a, b, cfg, gkb)
        return cache[key]

    out = set()
    for pivot in graphs:
        ball = [g for g in graphs if g == pivot or s(pivot, g) > cfg.theta_r]
        while len(ball) > 1:
            others = [g for g in ball if g != pivot]
            bad = [g for g in others if any(h != g and s(g, h) <= cfg.theta_r for h in ball)]
            if not bad and (gkb is None or gkb.cons(frozenset().union(*(g.atoms for g in ball)))):
                break
            pool = bad or others
            drop = min(pool, key=lambda g: (s(pivot, g), g.sort_key()))
            ball.remove(drop)
        out.add(udf(ball))
    return frozenset(out)


def graph_provenance(
    s: SummaryGraph,
    graphs: Iterable[HypGraph],
    cfg: SimilarityConfig = DEFAULT_CONFIG,
    gkb: GroundedKB | None = None,
    sim: Similarity | None = None,
    udf: Callable[[Iterable[HypGraph]], SummaryGraph] = nu_udf,
) -> frozenset:
    """Largest subset of ``graphs`` whose summarization is exactly ``{s}``."""
    graphs = set(graphs)
    if not s.members <= graphs:
        raise ProvenanceMissError(f"summary {s} has members outside the graph collection")
    extras = sorted(graphs - s.members, key=HypGraph.sort_key)
    if len(extras) > PROVENANCE_SEARCH_CAP:
        extras = []
    target = frozenset({s})
    for size in range(len(extras), -1, -1):
        for combo in itertools.combinations(extras, size):
            cand = s.members | frozenset(combo)
            if summarize(cand, cfg, gkb, sim, udf) == target:
                return cand
    raise ProvenanceMissError(f"no subset of the graphs summarizes to {s}")
