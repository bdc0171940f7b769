from hypothesis import given, settings
from hypothesis import strategies as st
from test_query import edit_similarity

from paraquery import HypGraph, Substitution, similarity
from paraquery.kb import Atom, Constant
from paraquery.similarity import label_similarity

labels = st.text(alphabet="abcXY_", min_size=1, max_size=12)
consts = st.sampled_from([Constant(c) for c in "abc"])
unary = st.builds(lambda p, c: Atom(p, (c,)), st.sampled_from(["p", "q"]), consts)
binary = st.builds(lambda a, b: Atom("pq", (a, b)), consts, consts)
graphs = st.frozensets(st.one_of(unary, binary), min_size=1, max_size=4).map(HypGraph)


@given(labels, labels)
def test_label_similarity_against_dp(a, b):
    assert abs(label_similarity(a, b) - edit_similarity(a, b)) < 1e-12


@settings(max_examples=200)
@given(graphs, graphs)
def test_similarity_bounds_and_symmetry(g, h):
    v = similarity(g, h)
    assert 0.0 <= v <= 1.0
    assert abs(v - similarity(h, g)) < 1e-15
    assert similarity(g, g) == 1.0


@given(st.dictionaries(st.sampled_from("XYZ"), consts))
def test_substitution_hash_matches_equality(d):
    assert Substitution(d) == Substitution(dict(d))
    assert hash(Substitution(d)) == hash(Substitution(dict(d)))
