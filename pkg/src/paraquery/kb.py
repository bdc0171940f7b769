"""Terms, atoms, facts, rules and queries, plus the line-oriented parser.

File format, one statement per line, ``#`` starts a comment::

    bird(tweety) @ w=1.0 src=d1
    flies(X) :- bird(X). w=1.5
    bot :- flies(X), notflies(X). w=hard
    forall X exists Y: parent(X, Y) :- person(X). w=hard

Variables start with an uppercase letter or ``_``; constants are
lowercase identifiers, numbers or double-quoted strings.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

HARD = math.inf

_IDENT = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_NUMBER = re.compile(r"-?\d+(\.\d+)?([eE][-+]?\d+)?\Z")


class KBError(ValueError):
    pass


class ParseError(KBError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Constant:
    label: str

    def __post_init__(self):
        if not self.label:
            raise KBError("constant label must be non-empty")
        if self.label == "NULL":
            raise KBError("NULL is not a domain value")

    def __str__(self):
        if _IDENT.match(self.label) or _NUMBER.match(self.label):
            return self.label
        return json.dumps(self.label, ensure_ascii=False)


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Func:
    """Skolem function term ``sk_n(X, ...)``; ground once all args are."""

    functor: str
    args: tuple

    def __str__(self):
        return f"{self.functor}({', '.join(map(str, self.args))})"


Term = Union[Constant, Variable, Func]


def term_is_ground(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    if isinstance(t, Func):
        return all(term_is_ground(a) for a in t.args)
    return True


def term_variables(t: Term) -> Iterator[str]:
    if isinstance(t, Variable):
        yield t.name
    elif isinstance(t, Func):
        for a in t.args:
            yield from term_variables(a)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(term_is_ground(a) for a in self.args)

    def variables(self) -> list[str]:
        seen = []
        for a in self.args:
            for v in term_variables(a):
                if v not in seen:
                    seen.append(v)
        return seen

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(map(str, self.args))})"

    def __lt__(self, other):
        return str(self) < str(other)


BOT = Atom("bot")


def atom(predicate: str, *args: str) -> Atom:
    """Shorthand constructor: uppercase-initial strings become variables."""
    terms = tuple(Variable(a) if a[:1].isupper() or a[:1] == "_" else Constant(a) for a in args)
    return Atom(predicate, terms)


@dataclass(frozen=True)
class Fact:
    atom: Atom
    weight: float = 1.0
    source: str = "default"

    def __post_init__(self):
        if not self.atom.is_ground():
            raise KBError(f"fact {self.atom} contains variables")
        if self.atom == BOT:
            raise KBError("bot cannot be asserted as a fact")
        if not 0.0 < self.weight <= 1.0:
            raise KBError(f"fact weight {self.weight} outside (0, 1]")

    def __str__(self):
        return f"{self.atom} @ w={self.weight!r} src={_fmt_id(self.source)}"


def _check_safe(body: tuple, head: Atom, what: str):
    body_vars = {v for b in body for v in b.variables()}
    missing = [v for v in head.variables() if v not in body_vars]
    if missing:
        raise KBError(f"unsafe {what}: head variable(s) {', '.join(missing)} absent from body")


@dataclass(frozen=True)
class Rule:
    """Implication ``body => head`` with a soft weight or ``HARD``."""

    body: tuple
    head: Atom
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if not self.weight > 0:
            raise KBError(f"rule weight {self.weight} must be positive or hard")
        _check_safe(self.body, self.head, "rule")

    @property
    def hard(self) -> bool:
        return self.weight == HARD

    @property
    def h(self) -> int:
        """Number of universally quantified variables."""
        names = set()
        for a in (*self.body, self.head):
            names.update(a.variables())
        return len(names)

    @property
    def k(self) -> int:
        """Number of existentials removed by skolemization."""
        functors = set()

        def walk(t):
            if isinstance(t, Func):
                functors.add(t.functor)
                for a in t.args:
                    walk(a)
            elif isinstance(t, Constant) and re.fullmatch(r"sk_\d+", t.label):
                functors.add(t.label)

        for a in (*self.body, self.head):
            for t in a.args:
                walk(t)
        return len(functors)

    def __str__(self):
        w = "hard" if self.hard else repr(float(self.weight))
        return f"{self.head} :- {', '.join(map(str, self.body))}. w={w}"


@dataclass(frozen=True)
class QuantifiedRule:
    """A rule still carrying its quantifier prefix, e.g. ``forall X exists Y``."""

    prefix: tuple  # of ("forall" | "exists", variable name)
    body: tuple
    head: Atom
    weight: float = 1.0


@dataclass(frozen=True)
class Query:
    body: tuple
    head: Atom

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if self.head.predicate == BOT.predicate:
            raise KBError("query head cannot be bot: every answer must differ from bot")
        _check_safe(self.body, self.head, "query")

    def __str__(self):
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class KnowledgeBase:
    facts: frozenset = frozenset()
    rules: frozenset = frozenset()
    predicates: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(self.facts))
        object.__setattr__(self, "rules", frozenset(self.rules))
        table = dict(self.predicates)
        table.setdefault(BOT.predicate, 0)
        for a in itertools.chain(
            (f.atom for f in self.facts),
            (a for r in self.rules for a in (*r.body, r.head)),
        ):
            if table.setdefault(a.predicate, a.arity) != a.arity:
                raise KBError(f"arity conflict for {a.predicate}: {table[a.predicate]} vs {a.arity}")
        object.__setattr__(self, "predicates", table)

    @property
    def base_atoms(self) -> frozenset:
        return frozenset(f.atom for f in self.facts)

    @property
    def sources(self) -> dict:
        out: dict = {}
        for f in self.facts:
            out.setdefault(f.source, set()).add(f)
        return out

    @property
    def domain(self) -> frozenset:
        return frozenset(t for f in self.facts for t in f.atom.args)

    def confidence(self, a: Atom) -> float | None:
        """Combined confidence of an asserted atom (noisy-or over sources)."""
        ws = [f.weight for f in self.facts if f.atom == a]
        if not ws:
            return None
        return 1.0 - math.prod(1.0 - w for w in ws)

    def with_facts(self, facts: Iterable[Fact]) -> "KnowledgeBase":
        return KnowledgeBase(self.facts | frozenset(facts), self.rules)

    def __str__(self):
        return format_kb(self)


def format_kb(kb: KnowledgeBase) -> str:
    lines = sorted(str(f) for f in kb.facts) + sorted(str(r) for r in kb.rules)
    return "\n".join(lines) + ("\n" if lines else "")


def _fmt_id(s: str) -> str:
    return s if re.fullmatch(r"[A-Za-z0-9_]+", s) else json.dumps(s, ensure_ascii=False)


# -- skolemization -----------------------------------------------------------


def skolemize(formula: QuantifiedRule | Rule, counter: Iterator[int] | None = None) -> Rule:
    """Replace existential variables by fresh skolem terms.

    Each existential becomes ``sk_n(U1, ..., Uh)`` over the universals that
    precede it, or the constant ``sk_n`` when there are none.  Plain rules are
    returned unchanged.
    """
    if isinstance(formula, Rule):
        return formula
    counter = counter if counter is not None else itertools.count(1)
    universals: list[str] = []
    replace: dict = {}
    seen_exists = False
    for quant, var in formula.prefix:
        if quant == "forall":
            if seen_exists:
                raise KBError("quantifier prefix is not in the forall-exists fragment")
            universals.append(var)
        elif quant == "exists":
            seen_exists = True
            n = next(counter)
            if universals:
                replace[var] = Func(f"sk_{n}", tuple(Variable(u) for u in universals))
            else:
                replace[var] = Constant(f"sk_{n}")
        else:
            raise KBError(f"unknown quantifier {quant!r}")

    def sub(t):
        if isinstance(t, Variable) and t.name in replace:
            return replace[t.name]
        if isinstance(t, Func):
            return Func(t.functor, tuple(sub(a) for a in t.args))
        return t

    def sub_atom(a: Atom) -> Atom:
        return Atom(a.predicate, tuple(sub(t) for t in a.args))

    body = tuple(sub_atom(b) for b in formula.body)
    head = sub_atom(formula.head)
    if not body:
        # body-free formulas are allowed here; the parser rejects them as rules
        r = object.__new__(Rule)
        object.__setattr__(r, "body", ())
        object.__setattr__(r, "head", head)
        object.__setattr__(r, "weight", formula.weight)
        return r
    return Rule(body, head, formula.weight)


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<implies>:-)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.@=:])
    """,
    re.VERBOSE,
)


def _tokenize(line: str, lineno: int) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise ParseError(f"unexpected character {line[pos]!r}", lineno)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append((kind, m.group()))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, lineno):
        self.toks = tokens
        self.i = 0
        self.lineno = lineno

    def error(self, msg):
        return ParseError(msg, self.lineno)

    def peek(self, offset=0):
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None:
            raise self.error(f"unexpected end of line, expected {value or kind}")
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise self.error(f"expected {value or kind}, found {tok[1]!r}")
        self.i += 1
        return tok

    def at(self, value):
        return self.peek()[1] == value

    def done(self):
        return self.i >= len(self.toks)

    def term(self):
        kind, text = self.take()
        if kind == "string":
            label = json.loads(text)
            try:
                return Constant(label)
            except KBError as e:
                raise self.error(str(e)) from None
        if kind == "number":
            return Constant(text)
        if kind == "ident":
            if text[0].isupper() or text[0] == "_":
                return Variable(text)
            if self.at("("):
                return Func(text, self.arglist())
            return Constant(text)
        raise self.error(f"expected a term, found {text!r}")

    def arglist(self):
        self.take(value="(")
        args = [self.term()]
        while self.at(","):
            self.take()
            args.append(self.term())
        self.take(value=")")
        return tuple(args)

    def atom(self):
        kind, text = self.take("ident")
        if not (text[0].islower()):
            raise self.error(f"predicate {text!r} must start with a lowercase letter")
        args = self.arglist() if self.at("(") else ()
        return Atom(text, args)

    def weight_value(self, allow_hard):
        kind, text = self.take()
        if allow_hard and text == "hard":
            return HARD
        if kind != "number":
            raise self.error(f"bad weight {text!r}")
        return float(text)

    def prefix(self):
        prefix = []
        while self.peek()[1] in ("forall", "exists") and self.peek(1)[0] == "ident" and (
            self.peek(1)[1][0].isupper() or self.peek(1)[1][0] == "_"
        ):
            quant = self.take()[1]
            while self.peek()[0] == "ident" and (self.peek()[1][0].isupper() or self.peek()[1][0] == "_"):
                prefix.append((quant, self.take()[1]))
                if self.at(","):
                    self.take()
        if prefix:
            self.take(value=":")
        return tuple(prefix)

    def body(self):
        if self.at("."):
            raise self.error("empty rule body")
        body = [self.atom()]
        while self.at(","):
            self.take()
            body.append(self.atom())
        self.take(value=".")
        return tuple(body)


def _parse_statement(tokens, lineno, counter):
    p = _Parser(tokens, lineno)
    prefix = p.prefix()
    head = p.atom()
    if p.at(":-"):
        p.take()
        body = p.body()
        weight = 1.0
        if p.at("w"):
            p.take()
            p.take(value="=")
            weight = p.weight_value(allow_hard=True)
        if not p.done():
            raise p.error(f"trailing input {p.peek()[1]!r}")
        try:
            if prefix:
                return skolemize(QuantifiedRule(prefix, body, head, weight), counter)
            return Rule(body, head, weight)
        except KBError as e:
            raise ParseError(str(e), lineno) from None
    if prefix:
        raise p.error("quantifier prefix requires a rule")
    if p.at("."):
        p.take()
    weight, source = 1.0, "default"
    if p.at("@"):
        p.take()
    while not p.done():
        key = p.take("ident")[1]
        p.take(value="=")
        if key == "w":
            weight = p.weight_value(allow_hard=False)
        elif key == "src":
            kind, text = p.take()
            source = json.loads(text) if kind == "string" else text
        else:
            raise p.error(f"unknown fact attribute {key!r}")
    try:
        return Fact(head, weight, source)
    except KBError as e:
        raise ParseError(str(e), lineno) from None


def parse_kb(text: str) -> KnowledgeBase:
    facts, rules = [], []
    arity: dict = {BOT.predicate: 0}
    counter = itertools.count(1)
    for lineno, line in enumerate(text.splitlines(), 1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        stmt = _parse_statement(tokens, lineno, counter)
        atoms = [stmt.atom] if isinstance(stmt, Fact) else [*stmt.body, stmt.head]
        for a in atoms:
            if arity.setdefault(a.predicate, a.arity) != a.arity:
                raise ParseError(
                    f"arity conflict for {a.predicate}: {arity[a.predicate]} vs {a.arity}", lineno
                )
        (facts if isinstance(stmt, Fact) else rules).append(stmt)
    return KnowledgeBase(frozenset(facts), frozenset(rules), arity)


def parse_query(text: str) -> Query:
    found = None
    for lineno, line in enumerate(text.splitlines(), 1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        if found is not None:
            raise ParseError("a query file holds exactly one query", lineno)
        p = _Parser(tokens, lineno)
        head = p.atom()
        p.take(value=":-")
        body = p.body()
        if not p.done():
            raise p.error(f"trailing input {p.peek()[1]!r}")
        if not head.variables():
            raise ParseError("query head needs at least one answer variable", lineno)
        try:
            found = Query(body, head)
        except KBError as e:
            raise ParseError(str(e), lineno) from None
    if found is None:
        raise ParseError("no query found")
    return found
