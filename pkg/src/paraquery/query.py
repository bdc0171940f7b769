"""Query answering over a grounded KB, and the query compiler."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .grounding import GroundedKB, unify
from .kb import BOT, Atom, Constant, Query, Variable
from .similarity import DEFAULT_CONFIG, HypGraph, SimilarityConfig, SynonymTable, label_similarity, similarity


@dataclass(frozen=True)
class Candidate:
    answer: Atom

    def __post_init__(self):
        if self.answer == BOT or not self.answer.is_ground():
            raise ValueError(f"invalid candidate {self.answer}")

    def __str__(self):
        return str(self.answer)

    def __lt__(self, other):
        return str(self) < str(other)


@dataclass(frozen=True)
class Hypothesis:
    body_atoms: frozenset
    score: float = 1.0
    compiled_error: float = 0.0
    answer: Atom | None = None

    def __post_init__(self):
        object.__setattr__(self, "body_atoms", frozenset(self.body_atoms))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"hypothesis score {self.score} outside [0, 1]")

    def graph(self) -> HypGraph:
        return HypGraph(self.body_atoms, self.score, self.compiled_error)

    def sort_key(self):
        return (-self.score, self.compiled_error, str(self.answer), sorted(map(str, self.body_atoms)))


@dataclass(frozen=True)
class CompiledQuery:
    query: Query
    error: float = 0.0
    origin: str = "identity"

    def __post_init__(self):
        if not 0.0 <= self.error <= 1.0:
            raise ValueError(f"interpretation error {self.error} outside [0, 1]")


# -- exact answering -----------------------------------------------------------


def consistent_unifications(gkb: GroundedKB, q: Query) -> set:
    """Pairs (grounded body, grounded head) whose body passes Cons."""
    out = set()
    for theta in unify(gkb.atoms, q):
        body = frozenset(theta(b) for b in q.body)
        if gkb.cons(body):
            out.add((body, theta(q.head)))
    return out


Unifier = Callable[[GroundedKB, Query], Iterable[tuple]]


def candidates(gkb: GroundedKB, q: Query, unifier: Unifier | None = None) -> frozenset:
    unifier = unifier or consistent_unifications
    return frozenset(Candidate(row[1]) for row in unifier(gkb, q))


def _identity(hyps):
    return hyps


def hypotheses(gkb: GroundedKB, q: Query, gamma: Candidate, summarizer=None, unifier: Unifier | None = None) -> set:
    """Evidence for one candidate, passed through ``summarizer``.

    Without a summarizer (equivalence similarity) the raw hypotheses come back
    unchanged. Rows carrying a third element use it as the interpretation error.
    """
    unifier = unifier or consistent_unifications
    answer = gamma.answer if isinstance(gamma, Candidate) else gamma
    raw = set()
    for row in unifier(gkb, q):
        if row[1] == answer:
            err = row[2] if len(row) > 2 else 0.0
            raw.add(Hypothesis(row[0], 1.0, err, answer))
    return set((summarizer or _identity)(raw))


def justify(gkb: GroundedKB, q: Query, unifier: Unifier | None = None, summarizer=None) -> dict:
    unifier = unifier or consistent_unifications
    rows = list(unifier(gkb, q))

    def cached(_gkb, _q):
        return rows

    return {
        c: hypotheses(gkb, q, c, summarizer, cached)
        for c in sorted(candidates(gkb, q, cached))
    }


# -- alignment and compilation ---------------------------------------------------


@dataclass(frozen=True)
class RewriteRule:
    kind: str  # "predicate" or "constant"
    source: str
    target: str
    similarity: float

    def __str__(self):
        return f"{self.kind}:{self.source}->{self.target}@{self.similarity:.4f}"


def align(
    queries: Iterable[Query],
    schema: Mapping[str, int],
    synonyms: SynonymTable | None = None,
    theta_r: float = DEFAULT_CONFIG.theta_r,
    domain: Iterable = (),
) -> frozenset:
    """Correspondences from query symbols to KB symbols.

    Synonym-table entries score 1; other pairs score by edit similarity and
    are kept when at least ``theta_r``.  Predicates only align to KB predicates
    of the same arity.
    """
    synonyms = synonyms or SynonymTable()
    labels = sorted({t.label for t in domain if isinstance(t, Constant)})
    rules = set()
    for q in queries:
        for a in q.body:
            for pred, arity in schema.items():
                if pred == BOT.predicate or arity != a.arity:
                    continue
                s = label_similarity(a.predicate, pred, synonyms)
                if s >= theta_r:
                    rules.add(RewriteRule("predicate", a.predicate, pred, s))
            for t in a.args:
                if not isinstance(t, Constant):
                    continue
                for lab in labels:
                    s = label_similarity(t.label, lab, synonyms)
                    if s >= theta_r:
                        rules.add(RewriteRule("constant", t.label, lab, s))
    return frozenset(rules)


@dataclass(frozen=True)
class CompilerConfig:
    rewrites: frozenset = frozenset()
    ground_variables: tuple = ()
    domain: tuple = ()
    similarity: SimilarityConfig = field(default=DEFAULT_CONFIG)
    max_variants: int = 256


def query_similarity(q1: Query, q2: Query, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    return similarity(HypGraph(frozenset(q1.body)), HypGraph(frozenset(q2.body)), cfg)


def _rename(q: Query, preds: dict, consts: dict, theta: dict) -> Query:
    def term(t):
        if isinstance(t, Variable) and t.name in theta:
            return theta[t.name]
        if isinstance(t, Constant) and t.label in consts:
            return Constant(consts[t.label])
        return t

    body = tuple(Atom(preds.get(a.predicate, a.predicate), tuple(term(t) for t in a.args)) for a in q.body)
    head = Atom(q.head.predicate, tuple(term(t) if isinstance(t, Variable) else t for t in q.head.args))
    return Query(body, head)


def compile_query(q: Query, config: CompilerConfig = CompilerConfig()) -> frozenset:
    """Query variants with their interpretation errors.

    Combines schema-alignment rewrites, groundings of the listed bounded
    variables over ``config.domain``, and both together.  The identity
    compilation is always present with error 0.
    """
    preds = sorted({a.predicate for a in q.body})
    consts = sorted({t.label for a in q.body for t in a.args if isinstance(t, Constant)})
    pred_opts = []
    for p in preds:
        alts = sorted({r.target for r in config.rewrites if r.kind == "predicate" and r.source == p} - {p})
        pred_opts.append([None, *alts])
    const_opts = []
    for c in consts:
        alts = sorted({r.target for r in config.rewrites if r.kind == "constant" and r.source == c} - {c})
        const_opts.append([None, *alts])
    qvars = {v for a in q.body for v in a.variables()}
    gvars = [v for v in config.ground_variables if v in qvars]
    dom = sorted(config.domain, key=str)
    ground_opts = [dom for _ in gvars]

    out = {CompiledQuery(q, 0.0, "identity")}
    for pchoice in itertools.product(*pred_opts):
        for cchoice in itertools.product(*const_opts):
            for gchoice in itertools.product(*ground_opts):
                pmap = {p: t for p, t in zip(preds, pchoice) if t is not None}
                cmap = {c: t for c, t in zip(consts, cchoice) if t is not None}
                theta = dict(zip(gvars, gchoice))
                if not (pmap or cmap or theta):
                    continue
                try:
                    qi = _rename(q, pmap, cmap, theta)
                except ValueError:
                    continue
                err = 1.0 - query_similarity(q, qi, config.similarity)
                tags = [f"align:{p}->{t}" for p, t in sorted(pmap.items())]
                tags += [f"align:{c}->{t}" for c, t in sorted(cmap.items())]
                tags += [f"ground:{v}={t}" for v, t in theta.items()]
                out.add(CompiledQuery(qi, max(0.0, min(1.0, err)), ";".join(tags)))
    if len(out) > config.max_variants:
        ranked = sorted(out, key=lambda c: (c.error, c.origin != "identity", str(c.query)))
        out = set(ranked[: config.max_variants])
    return frozenset(out)


def unify_compiled(gkb: GroundedKB, q: Query, config: CompilerConfig = CompilerConfig()) -> set:
    """Consistent unifications of every compiled variant, keeping the least error."""
    best: dict = {}
    for cq in sorted(compile_query(q, config), key=lambda c: (c.error, str(c.query))):
        for body, head in consistent_unifications(gkb, cq.query):
            key = (body, head)
            if key not in best or cq.error < best[key]:
                best[key] = cq.error
    return {(b, h, e) for (b, h), e in best.items()}


def compiled_unifier(config: CompilerConfig) -> Unifier:
    def run(gkb, q):
        return unify_compiled(gkb, q, config)

    return run

