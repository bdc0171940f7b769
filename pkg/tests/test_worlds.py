import itertools
import math

import pytest
from conftest import load_kb

from paraquery import (
    HARD,
    Atom,
    Candidate,
    Factor,
    FactorGraph,
    HypGraph,
    World,
    build_factor_graph,
    candidate_universe,
    ground_fixpoint_prov,
    likelihood,
    max_relevant_world,
    nu_udf,
    parse_kb,
    partition_function,
    rank_candidates,
    world_probability,
    world_weight,
)
from paraquery.kb import atom
from paraquery.oracle import brute_rank, enumerate_worlds
from paraquery.worlds import EnumerationCapError, UnsatisfiableError, world_distribution

A = atom
PA, PB = Atom("a"), Atom("b")


def conflict_pair(theta_a, theta_b, theta_f):
    return FactorGraph(
        (PA, PB),
        (
            Factor((PA,), theta_a, "atom", (), PA),
            Factor((PB,), theta_b, "atom", (), PB),
            Factor((PA, PB), theta_f, "rule", (PA, PB), None),
        ),
    )


def closed_form_p11(ta, tb, tf):
    return 1.0 / (1.0 + math.exp(tf) * (1 + math.exp(ta) + math.exp(tb)) / math.exp(ta + tb))


def closed_form_z(ta, tb, tf):
    return math.exp(tf) * (1 + math.exp(ta) + math.exp(tb)) + math.exp(ta + tb)


def test_conflict_pair_soft_value():
    fg = conflict_pair(0.0, 0.0, math.log(3))
    p = world_probability(fg, World({PA, PB}))
    assert p == pytest.approx(0.1, abs=1e-12)
    assert p == pytest.approx(closed_form_p11(0, 0, math.log(3)), abs=1e-12)


def test_conflict_pair_hard_is_exact_zero():
    fg = conflict_pair(0.0, 0.0, HARD)
    assert world_probability(fg, World({PA, PB})) == 0.0
    assert world_weight(fg, World({PA, PB})) == 0.0


def test_conflict_pair_partition_function():
    ta, tb, tf = 0.3, -1.2, 2.0
    assert partition_function(conflict_pair(ta, tb, tf)) == pytest.approx(closed_form_z(ta, tb, tf), rel=1e-12)


def test_conflict_pair_world_weight_one_zero():
    tf = 1.7
    assert world_weight(conflict_pair(0, 0, tf), World({PA})) == pytest.approx(math.exp(tf))


def test_factor_counts_from_kbs(tweety, tweety_gkb):
    kb = parse_kb("p(a)\nq(b)")
    fg = build_factor_graph(ground_fixpoint_prov(kb), kb)
    assert (len(fg.atom_weights), len(fg.rule_factors)) == (2, 0)
    fg = build_factor_graph(tweety_gkb, tweety)
    assert len(fg.atom_weights) == 4
    assert len(fg.rule_factors) == 3
    assert sum(f.hard for f in fg.rule_factors) == 1
    kb = parse_kb("a @ w=0.5\nb @ w=0.5\nbot :- a, b. w=hard")
    fg = build_factor_graph(ground_fixpoint_prov(kb), kb)
    assert (len(fg.atom_weights), len(fg.rule_factors), fg.rule_factors[0].hard) == (2, 1, True)


def test_asserted_and_derived_thetas(tweety, tweety_gkb):
    w = build_factor_graph(tweety_gkb, tweety).atom_weights
    assert w[A("penguin", "tweety")] == pytest.approx(math.log(9))
    assert w[A("bird", "tweety")] == 30.0
    assert w[A("flies", "tweety")] == 0.0


def test_all_false_world_weight(tweety, tweety_gkb):
    fg = build_factor_graph(tweety_gkb, tweety)
    assert world_weight(fg, World(set())) == pytest.approx(math.exp(1.5 + 2.0))


def test_single_atom_partition():
    fg = FactorGraph((PA,), (Factor((PA,), 0.0, "atom", (), PA),))
    assert partition_function(fg) == 2.0
    assert [p for _, p in enumerate_worlds(fg)] == [0.5, 0.5]


def test_forced_contradiction_leaves_false_worlds():
    kb = parse_kb("p @ w=1.0\nbot :- p. w=hard")
    fg = build_factor_graph(ground_fixpoint_prov(kb), kb)
    assert partition_function(fg) == 1.0
    assert world_probability(fg, World({Atom("p")})) == 0.0


def test_unsatisfiable_graph():
    fg = FactorGraph((PA,), (Factor((), HARD, "rule", (), None),))
    with pytest.raises(UnsatisfiableError):
        partition_function(fg)


def test_enumeration_cap(tweety, tweety_gkb):
    with pytest.raises(EnumerationCapError):
        build_factor_graph(tweety_gkb, tweety, cap=3)


def test_empty_graph_has_one_world():
    fg = FactorGraph((), ())
    assert [(w.true_atoms, p) for w, p in enumerate_worlds(fg)] == [(frozenset(), 1.0)]
    assert partition_function(fg) == 1.0


def test_uniform_graph():
    atoms = tuple(Atom(f"x{i}") for i in range(5))
    fg = FactorGraph(atoms, tuple(Factor((a,), 0.0, "atom", (), a) for a in atoms))
    for w in (World(set()), World({atoms[1], atoms[3]})):
        assert world_probability(fg, w) == pytest.approx(2 ** -5, abs=1e-15)


def test_distribution_matches_loop_oracle(tweety, tweety_gkb):
    fg = build_factor_graph(tweety_gkb, tweety)
    dist = world_distribution(fg)
    assert float(dist.sum()) == pytest.approx(1.0, abs=1e-12)
    index = {a: i for i, a in enumerate(fg.atoms)}
    for w, p in enumerate_worlds(fg):
        code = sum(1 << index[a] for a in w.true_atoms)
        assert dist[code] == pytest.approx(p, abs=1e-12)


def test_partial_scope_is_marginal(tweety, tweety_gkb):
    fg = build_factor_graph(tweety_gkb, tweety)
    scope = {A("bird", "tweety"), A("flies", "tweety")}
    w = World({A("bird", "tweety")}, scope)
    expected = sum(p for v, p in enumerate_worlds(fg) if v.true_atoms & scope == w.true_atoms)
    assert world_probability(fg, w) == pytest.approx(expected, abs=1e-12)


# -- relevance and ranking


def test_max_relevant_world_closes_support(tweety_gkb):
    s = nu_udf([HypGraph(frozenset({A("bird", "tweety")}))])
    assert max_relevant_world(s, tweety_gkb).true_atoms == {A("bird", "tweety"), A("flies", "tweety")}


def test_max_relevant_world_on_base_facts():
    gkb = ground_fixpoint_prov(parse_kb("p(a)\nq(b)"))
    s = nu_udf([HypGraph(frozenset({A("p", "a")}))])
    assert max_relevant_world(s, gkb).true_atoms == {A("p", "a")}


def test_max_relevant_world_rejects_inconsistent(tweety_gkb):
    s = nu_udf([HypGraph(frozenset({A("bird", "tweety"), A("penguin", "tweety")}))])
    with pytest.raises(ValueError):
        max_relevant_world(s, tweety_gkb)


def test_universe_shares_scope():
    gkb = ground_fixpoint_prov(load_kb("diamond"))
    s1 = nu_udf([HypGraph(frozenset({A("link", "a", "b"), A("link", "b", "d")}))])
    s2 = nu_udf([HypGraph(frozenset({A("link", "a", "c"), A("link", "c", "d")}))])
    u = candidate_universe(Candidate(A("answer", "a", "d")), [s1, s2], gkb)
    assert len(u) == 2
    assert len({w.scope for w in u}) == 1


def test_likelihood_examples():
    assert likelihood([(0.0, 1.0)]) == 1.0
    assert likelihood([(0.2, 0.9)]) == pytest.approx(0.72)
    assert likelihood([(0.2, 0.9), (0.1, 0.9)]) == pytest.approx(0.81)
    assert likelihood([(0.2, 0.9), (0.1, 0.9)], "mean") == pytest.approx((0.72 + 0.81) / 2)
    assert likelihood([]) == 0.0
    with pytest.raises(ValueError):
        likelihood([(0, 1)], "median")


def test_single_fact_rank():
    kb = parse_kb("p(a) @ w=0.8")
    gkb = ground_fixpoint_prov(kb)
    s = nu_udf([HypGraph(frozenset({A("p", "a")}))])
    (r,) = rank_candidates({Candidate(A("answer", "a")): {s}}, gkb, kb)
    assert r.probability == pytest.approx(0.8, abs=1e-12)


def _tweety_by_hand():
    """16 worlds over bird, penguin, flies, notflies with the corpus weights."""
    tb, tp = 30.0, math.log(0.9 / 0.1)
    z = hit = 0.0
    for bird, peng, fly, nfly in itertools.product([0, 1], repeat=4):
        if fly and nfly:
            continue
        w = math.exp(tb * bird + tp * peng)
        w *= math.exp(1.5) if (not bird or fly) else 1.0
        w *= math.exp(2.0) if (not peng or nfly) else 1.0
        z += w
        if bird and fly:
            hit += w
    return hit / z


def test_tweety_rank_matches_independent_enumeration(tweety, tweety_gkb):
    s = nu_udf([HypGraph(frozenset({A("bird", "tweety")}))])
    (r,) = rank_candidates({Candidate(A("answer", "tweety")): {s}}, tweety_gkb, tweety)
    (world, lik, _), = r.worlds
    assert world.true_atoms == {A("bird", "tweety"), A("flies", "tweety")}
    assert r.probability == pytest.approx(_tweety_by_hand(), abs=1e-12)
    assert r.probability == pytest.approx(brute_rank(tweety, [(world.true_atoms, lik)]), abs=1e-12)
    assert r.probability == pytest.approx(0.448607659944, abs=1e-12)


def test_rank_order_and_ties():
    kb = parse_kb("p(a) @ w=0.5\np(b) @ w=0.5\np(c) @ w=0.9")
    gkb = ground_fixpoint_prov(kb)
    j = {Candidate(A("answer", x)): {nu_udf([HypGraph(frozenset({A("p", x)}))])} for x in "bca"}
    order = [str(r.candidate) for r in rank_candidates(j, gkb, kb)]
    assert order == ["answer(c)", "answer(a)", "answer(b)"]



def test_conflict_pair_bound_in_limit():
    for tf in (10.0, 20.0, 30.0):
        fg = conflict_pair(0.0, 0.0, tf)
        assert world_probability(fg, World({PA, PB})) < math.exp(-tf + 2)


def test_hard_equals_soft_limit():
    import random

    rng = random.Random(4)
    for _ in range(20):
        n = rng.randint(2, 10)
        atoms = tuple(Atom(f"x{i}") for i in range(n))
        factors = [Factor((a,), rng.uniform(-2, 2), "atom", (), a) for a in atoms]
        rules = []
        for _ in range(rng.randint(1, n)):
            body = tuple(rng.sample(atoms, rng.randint(1, min(3, n))))
            head = rng.choice([None, *[a for a in atoms if a not in body]])
            rules.append((body, head))

        def graph(theta):
            extra = [Factor(b + ((h,) if h else ()), theta, "rule", b, h) for b, h in rules]
            return FactorGraph(atoms, tuple(factors + extra))

        tv = 0.5 * float(abs(world_distribution(graph(HARD)) - world_distribution(graph(50.0))).sum())
        assert tv < 1e-15


def test_probability_one_witness():
    # certain fact, exact hypothesis, no soft rules: the only world in the universe is the likely one
    kb = parse_kb("p(a) @ w=1.0")
    gkb = ground_fixpoint_prov(kb)
    s = nu_udf([HypGraph(frozenset({A("p", "a")}))])
    (r,) = rank_candidates({Candidate(A("answer", "a")): {s}}, gkb, kb)
    assert r.probability == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= r.probability <= 1.0
