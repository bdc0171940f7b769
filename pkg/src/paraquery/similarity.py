"""The single similarity metric shared by compilation, matching and clustering."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from rapidfuzz.distance import Levenshtein

from .kb import Atom, Constant, Func, Term, Variable

# similarity of an inconsistent union stays strictly below 1
DELTA = 2.0**-16


class SynonymTable:
    """Groups of interchangeable predicate or constant names."""

    def __init__(self, groups: Iterable[Iterable[str]] = ()):
        self._group: dict[str, int] = {}
        self.groups: list[frozenset] = []
        for g in groups:
            self.add(g)

    def add(self, names: Iterable[str]):
        names = set(names)
        ids = {self._group[n] for n in names if n in self._group}
        for i in ids:
            names |= self.groups[i]
        gid = len(self.groups)
        self.groups.append(frozenset(names))
        for n in names:
            self._group[n] = gid

    def same(self, a: str, b: str) -> bool:
        return a == b or (a in self._group and self._group.get(b) == self._group[a])

    def synonyms(self, name: str) -> frozenset:
        if name not in self._group:
            return frozenset({name})
        return self.groups[self._group[name]]

    def __bool__(self):
        return bool(self.groups)

    @classmethod
    def parse(cls, text: str) -> "SynonymTable":
        """One comma-separated synonym group per line; ``#`` comments."""
        table = cls()
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                table.add(n.strip() for n in line.split(",") if n.strip())
        return table

    @classmethod
    def load(cls, path) -> "SynonymTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SimilarityConfig:
    theta_r: float = 0.5
    predicate_weight: float = 0.7
    structure_weight: float = 0.3
    synonyms: SynonymTable = field(default_factory=SynonymTable, compare=False, hash=False)

    def __post_init__(self):
        if not 0.0 <= self.theta_r <= 1.0:
            raise ValueError(f"theta_r={self.theta_r} outside [0, 1]")
        if self.predicate_weight < 0 or self.structure_weight < 0:
            raise ValueError("similarity weights must be non-negative")
        if abs(self.predicate_weight + self.structure_weight - 1.0) > 1e-9:
            raise ValueError("predicate_weight + structure_weight must equal 1")


DEFAULT_CONFIG = SimilarityConfig()


def label_similarity(a: str, b: str, synonyms: SynonymTable | None = None) -> float:
    """Normalized Levenshtein similarity; synonyms count as identical."""
    if a == b or (synonyms is not None and synonyms.same(a, b)):
        return 1.0
    return Levenshtein.normalized_similarity(a, b)


def _term_label(t: Term) -> str:
    return t.label if isinstance(t, Constant) else str(t)


def term_similarity(q: Term, t: Term, synonyms: SynonymTable | None = None) -> float:
    if isinstance(q, Variable) or isinstance(t, Variable):
        return 1.0
    return label_similarity(_term_label(q), _term_label(t), synonyms)


def _combine(pred: float, struct: float, cfg: SimilarityConfig) -> float:
    # 1 - weighted loss keeps the exact case at exactly 1.0
    value = 1.0 - (cfg.predicate_weight * (1.0 - pred) + cfg.structure_weight * (1.0 - struct))
    return min(1.0, max(0.0, value))


def atom_similarity(query_atom: Atom, atom: Atom, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    """Similarity of one (possibly non-ground) query atom to a ground atom."""
    if query_atom.arity != atom.arity:
        return 0.0
    pred = label_similarity(query_atom.predicate, atom.predicate, cfg.synonyms)
    if query_atom.arity == 0:
        args = 1.0
    else:
        args = sum(term_similarity(q, t, cfg.synonyms) for q, t in zip(query_atom.args, atom.args)) / atom.arity
    return _combine(pred, args, cfg)


@dataclass(frozen=True)
class HypGraph:
    """A set of ground atoms read as a labeled graph.

    Constants are nodes; unary atoms label nodes, binary atoms are edges and
    wider atoms are hyperedges.  ``score`` and ``error`` record how the graph
    was matched (similarity to the query, interpretation error of the query).
    """

    atoms: frozenset
    score: float = 1.0
    error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "atoms", frozenset(self.atoms))

    @property
    def nodes(self) -> frozenset:
        return frozenset(t for a in self.atoms for t in a.args)

    @property
    def node_labels(self) -> dict:
        out: dict = {}
        for a in self.atoms:
            if a.arity == 1:
                out.setdefault(a.args[0], set()).add(a.predicate)
        return out

    @property
    def edges(self) -> list:
        return sorted(((a.args[0], a.predicate, a.args[1]) for a in self.atoms if a.arity == 2), key=str)

    @property
    def hyperedges(self) -> list:
        return sorted((a for a in self.atoms if a.arity > 2), key=str)

    def sort_key(self):
        return (sorted(map(str, self.atoms)), -self.score, self.error)

    def __str__(self):
        return "{" + ", ".join(sorted(map(str, self.atoms))) + "}"


def _nodes_compatible(x: Term, y: Term, synonyms: SynonymTable) -> bool:
    if isinstance(x, Variable) or isinstance(y, Variable):
        return True
    if isinstance(x, Func) or isinstance(y, Func):
        return x == y
    return synonyms.same(x.label, y.label)


def max_common_atoms(g1: frozenset, g2: frozenset, synonyms: SynonymTable | None = None) -> int:
    """Largest number of atom pairs matched under one injective node map."""
    synonyms = synonyms or SynonymTable()
    left = sorted(g1, key=str)
    right = sorted(g2, key=str)
    partners = []
    for a in left:
        partners.append([j for j, b in enumerate(right)
                         if a.arity == b.arity and synonyms.same(a.predicate, b.predicate)])
    best = 0

    def extend(fwd, bwd, a, b):
        fwd, bwd = dict(fwd), dict(bwd)
        for x, y in zip(a.args, b.args):
            if x in fwd or y in bwd:
                if fwd.get(x) != y or bwd.get(y) != x:
                    return None
                continue
            if not _nodes_compatible(x, y, synonyms):
                return None
            fwd[x] = y
            bwd[y] = x
        return fwd, bwd

    def search(i, used, fwd, bwd, count):
        nonlocal best
        if count + (len(left) - i) <= best:
            return
        if i == len(left):
            best = count
            return
        for j in partners[i]:
            if j in used:
                continue
            ext = extend(fwd, bwd, left[i], right[j])
            if ext is not None:
                search(i + 1, used | {j}, ext[0], ext[1], count + 1)
        search(i + 1, used, fwd, bwd, count)

    search(0, frozenset(), {}, {}, 0)
    return best


def _mean_best(xs, ys, synonyms):
    return sum(max(label_similarity(x, y, synonyms) for y in ys) for x in xs) / len(xs)


def raw_similarity(g1: frozenset, g2: frozenset, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    if not g1 and not g2:
        return 1.0
    if not g1 or not g2:
        return 0.0
    p1 = [a.predicate for a in sorted(g1, key=str)]
    p2 = [a.predicate for a in sorted(g2, key=str)]
    pred = (_mean_best(p1, p2, cfg.synonyms) + _mean_best(p2, p1, cfg.synonyms)) / 2.0
    common = max_common_atoms(g1, g2, cfg.synonyms)
    struct = common / (len(g1) + len(g2) - common)
    return _combine(pred, struct, cfg)


def similarity(g1, g2, cfg: SimilarityConfig = DEFAULT_CONFIG, gkb=None) -> float:
    """Default graph similarity in [0, 1].

    Weighted mix of predicate-name agreement and atom-set overlap. When a
    grounded KB is given, the value reaches 1 only if the union is consistent.
    """
    a1 = g1.atoms if isinstance(g1, HypGraph) else frozenset(g1)
    a2 = g2.atoms if isinstance(g2, HypGraph) else frozenset(g2)
    value = raw_similarity(a1, a2, cfg)
    if gkb is not None and value > 1.0 - DELTA and not gkb.cons(a1 | a2):
        value = 1.0 - DELTA
    return value


def equivalence_similarity(g1, g2, cfg=None, gkb=None) -> float:
    """The identity similarity: 1 for equal atom sets, 0 otherwise."""
    a1 = g1.atoms if isinstance(g1, HypGraph) else frozenset(g1)
    a2 = g2.atoms if isinstance(g2, HypGraph) else frozenset(g2)
    return 1.0 if a1 == a2 else 0.0
