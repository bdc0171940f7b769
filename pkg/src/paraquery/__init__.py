"""Query engine for knowledge bases whose data and queries may both be wrong."""

from pathlib import Path

from .engine import Engine, EngineConfig
from .grounding import (
    GroundedKB,
    Substitution,
    cons,
    expansion_step,
    expansion_step_prov,
    ground_fixpoint,
    ground_fixpoint_prov,
    minimal_inconsistent_subsets,
    unify,
)
from .kb import (
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
from .matching import SummaryGraph, approx_match, graph_provenance, nu_udf, summarize
from .query import (
    Candidate,
    CompiledQuery,
    CompilerConfig,
    Hypothesis,
    align,
    candidates,
    compile_query,
    consistent_unifications,
    hypotheses,
    justify,
    unify_compiled,
)
from .similarity import HypGraph, SimilarityConfig, SynonymTable, equivalence_similarity, similarity
from .worlds import (
    Factor,
    FactorGraph,
    RankedAnswer,
    World,
    build_factor_graph,
    candidate_universe,
    likelihood,
    max_relevant_world,
    partition_function,
    rank_candidates,
    world_probability,
    world_weight,
)

CORPUS = Path(__file__).parent / "corpus"

__version__ = "0.1.0"
