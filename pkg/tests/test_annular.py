import random

import pytest

from strand.core import diagram as sd
from strand.core.annular import (
    classify_cycles,
    close,
    essential_decomposition,
    power_form,
    reduce_annular,
)
from strand.core.diagram import MERGE, SPLIT
from strand.core.elements import GroupElement, standard_generator
from strand.core.errors import CompositionError
from strand.tools.grammar import parse_element
from strand.tools.suites import random_words


def _assert_decomposition(g, dec):
    rebuilt = sd.reduce(sd.compose_all([dec.conjugator, dec.essential, sd.invert(dec.conjugator)]))
    assert rebuilt == g.diagram
    assert close(dec.essential).is_reduced()
    assert sd.is_reduced(sd.compose(dec.essential, dec.essential))


def test_straight_strands_close_to_free_loops():
    a = close(sd.identity(2, 2))
    assert a.vertex_count == 0
    assert a.free_loops == 2
    r = reduce_annular(a)
    assert r.free_loops == 1
    assert r.trace == [{"move": "C", "loops": 2}]
    # reduce_annular works on a copy
    assert a.free_loops == 2


def test_single_loop_is_reduced():
    assert close(sd.identity(1, 3)).is_reduced()
    assert not close(sd.identity(3, 3)).is_reduced()


def test_close_needs_square_diagram():
    with pytest.raises(CompositionError):
        close(sd.from_layers(1, [(SPLIT, 0)], 2))


def test_merge_split_across_cut_is_a_redex():
    # merge output re-enters the split after going round the annulus
    d = sd.from_layers(3, [(SPLIT, 0), (MERGE, 1), (MERGE, 0), (SPLIT, 1)], 2)
    assert sd.is_reduced(d)
    a = close(d)
    assert any(step[0] == "B" for step in a.redexes())


def test_essential_part_of_A(A):
    dec = essential_decomposition(A)
    assert dec.width == 2
    assert dec.essential == sd.from_layers(2, [(SPLIT, 0), (MERGE, 1)], 2)
    structure = classify_cycles(close(dec.essential))
    assert (structure.split_loops, structure.merge_loops, structure.free_loops) == (1, 1, 0)


def test_essential_part_of_X_carries_a_straight_strand(X):
    dec = essential_decomposition(X)
    assert dec.width == 3
    structure = classify_cycles(close(dec.essential))
    assert (structure.split_loops, structure.merge_loops, structure.free_loops) == (1, 1, 1)


def test_X_from_three_blocks(X):
    s = sd.from_layers(1, [(SPLIT, 0), (SPLIT, 0)], 2)
    e = sd.from_layers(3, [(SPLIT, 1), (MERGE, 2)], 2)
    assert GroupElement(sd.reduce(sd.compose_all([s, e, sd.invert(s)]))) == X


def test_essential_part_of_N(N):
    dec = essential_decomposition(N)
    _assert_decomposition(N, dec)
    structure = classify_cycles(close(dec.essential))
    assert structure.free_loops == 0
    assert structure.split_loops + structure.merge_loops >= 1


@pytest.mark.parametrize("i, e", [(0, 1), (0, -2), (1, 1), (2, -1)])
def test_decomposition_rebuilds_element(i, e):
    g = standard_generator(i, 2) ** e
    _assert_decomposition(g, essential_decomposition(g))


def test_decomposition_in_F3():
    g = standard_generator(1, 3) * standard_generator(0, 3).inverse()
    dec = essential_decomposition(g)
    assert close(dec.essential).is_reduced()


def test_annular_reduction_is_confluent(A, X):
    for g in (X, A * X, X * A.inverse()):
        raw = close(g.diagram)
        signatures = {reduce_annular(raw, random.Random(s)).signature() for s in range(5)}
        assert len(signatures) == 1


@pytest.mark.parametrize("name", ["A", "N", "X"])
def test_power_form_reproduces_powers(name, request):
    g = request.getfixturevalue(name)
    one = GroupElement.identity(2)
    form = power_form(one, g, one)
    assert form.k0 >= 1
    for p in range(form.k0, form.k0 + 4):
        assert GroupElement(sd.reduce(form.diagram(p))) == g ** p


def test_power_form_with_outer_elements(A, X):
    form = power_form(X.inverse(), A, X)
    for p in range(form.k0, form.k0 + 3):
        assert GroupElement(sd.reduce(form.diagram(p))) == X.inverse() * A ** p * X


@pytest.mark.parametrize("text", ["x1 x2^-1", "x2^-1 x1", "x3 x0 x1", "x0 x3^-1 x1^-1"])
def test_decomposition_of_words_with_cut_redexes(text):
    g = parse_element(text, 2)
    dec = essential_decomposition(g)
    _assert_decomposition(g, dec)
    assert all(step["winding"] >= 1 for step in dec.steps if step["move"] != "C")


@pytest.mark.parametrize("arity", [2, 3])
def test_decomposition_of_random_words(arity):
    for g in random_words(arity, 15, seed=11):
        _assert_decomposition(g, essential_decomposition(g))


def test_rotation_steps_name_single_layers():
    for text in ("x1 x2^-1", "x3 x0 x1"):
        dec = essential_decomposition(parse_element(text, 2))
        assert dec.steps
        for step in dec.steps:
            assert step["move"] in ("A", "B", "C")
            assert step["layer"][0] in (SPLIT, MERGE)


def test_conjugates_have_essential_parts_of_equal_size(A, X):
    for g in (X, A * X, X * A.inverse()):
        conj = A * g * A.inverse()
        assert essential_decomposition(conj).essential.vertex_count == \
            essential_decomposition(g).essential.vertex_count
