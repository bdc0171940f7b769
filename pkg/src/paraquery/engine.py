"""End-to-end pipeline: expand the KB, match a query, summarize, rank."""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .grounding import DEFAULT_SUPPORT_CAP, GroundedKB, ground_fixpoint_prov
from .kb import KnowledgeBase, Query
from .matching import approx_match, summarize
from .query import Candidate, CompiledQuery, CompilerConfig, align, compile_query, consistent_unifications
from .similarity import HypGraph, SimilarityConfig, SynonymTable
from .worlds import DEFAULT_CAP, RankConfig, rank_candidates

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class EngineConfig:
    theta_r: float = 0.5
    predicate_weight: float = 0.7
    structure_weight: float = 0.3
    synonyms_file: str | None = None
    cap: int = DEFAULT_CAP
    topk: int = 10
    likelihood: str = "max"
    support_cap: int = DEFAULT_SUPPORT_CAP

    def __post_init__(self):
        self.similarity_config()  # validates the similarity block
        if self.cap < 1 or self.topk < 1 or self.support_cap < 1:
            raise ValueError("cap, topk and support_cap must be positive")
        if self.likelihood not in ("max", "mean"):
            raise ValueError(f"unknown likelihood combinator {self.likelihood!r}")

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        """Read a TOML file; keys may sit at top level or under ``[similarity]``."""
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        flat = dict(data.get("similarity", {}))
        flat.update({k: v for k, v in data.items() if k != "similarity"})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(flat) - known)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        if flat.get("synonyms_file"):
            flat["synonyms_file"] = str((Path(path).parent / flat["synonyms_file"]).resolve())
        return cls(**flat)

    def override(self, **changes) -> "EngineConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def similarity_config(self) -> SimilarityConfig:
        synonyms = SynonymTable.load(self.synonyms_file) if self.synonyms_file else SynonymTable()
        return SimilarityConfig(self.theta_r, self.predicate_weight, self.structure_weight, synonyms)


class Engine:
    """Grounds a KB once, then answers and ranks queries against it."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.similarity = self.config.similarity_config()

    def fit(self, kb: KnowledgeBase) -> "Engine":
        self.kb_ = kb
        self.gkb_: GroundedKB = ground_fixpoint_prov(kb, self.config.support_cap)
        return self

    def compile(self, q: Query, approx: bool = True) -> frozenset:
        if not approx:
            return frozenset({CompiledQuery(q)})
        rewrites = align([q], self.kb_.predicates, self.similarity.synonyms, self.config.theta_r, self.gkb_.domain)
        return compile_query(q, CompilerConfig(rewrites=rewrites, similarity=self.similarity))

    def hypotheses(self, q: Query, approx: bool = False) -> dict:
        """Candidate -> hypotheses, best (1 - error) * score kept per body."""
        found: dict = {}
        if not approx:
            for body, head in consistent_unifications(self.gkb_, q):
                found.setdefault(Candidate(head), {})[body] = (1.0, 0.0)
        else:
            for cq in sorted(self.compile(q), key=lambda c: (c.error, str(c.query))):
                for h in approx_match(self.gkb_, cq, self.similarity, self.config.topk):
                    slot = found.setdefault(Candidate(h.answer), {})
                    prev = slot.get(h.body_atoms)
                    if prev is None or (1 - h.compiled_error) * h.score > (1 - prev[1]) * prev[0]:
                        slot[h.body_atoms] = (h.score, h.compiled_error)
        return {
            c: frozenset(HypGraph(body, score, err) for body, (score, err) in bodies.items())
            for c, bodies in sorted(found.items())
        }

    def justify(self, q: Query, approx: bool = False) -> dict:
        """Candidate -> summaries of its hypothesis graphs."""
        return {
            c: summarize(graphs, self.similarity, self.gkb_)
            for c, graphs in self.hypotheses(q, approx).items()
        }

    def rank(self, q: Query, approx: bool = False, prior=None) -> list:
        cfg = RankConfig(self.config.cap, self.config.likelihood)
        return rank_candidates(self.justify(q, approx), self.gkb_, self.kb_, cfg, prior)
