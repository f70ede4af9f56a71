import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strand.core.elements import (
    GroupElement,
    element_from_trees,
    right_comb,
    standard_generator,
    tree,
    word_element,
)
from strand.core.errors import ArgumentError


def test_tree_pair_of_first_generator(A):
    assert standard_generator(0, 2) == A
    assert A.to_tree_pair() == ([1, 1], [1, 2])


def test_inverse_cancels(A, X):
    for g in (A, X):
        assert (g * g.inverse()).is_identity()
        assert (g.inverse() * g).is_identity()


def test_common_caret_cancels():
    # adding the same caret below both trees changes nothing
    assert element_from_trees([1, 1, 3], [1, 2, 3], 2) == element_from_trees([1, 1], [1, 2], 2)


def test_mismatched_trees_are_rejected():
    with pytest.raises(ArgumentError):
        element_from_trees([1, 1], [1], 2)


def test_powers_of_A_are_combs(A):
    # A^k pairs the left comb with the right comb on k+2 leaves
    for k in range(1, 5):
        assert A ** k == element_from_trees([1] * (k + 1), right_comb(k + 1, 2), 2)
    assert A ** -2 == (A ** 2).inverse()
    assert (A ** 0).is_identity()


@pytest.mark.parametrize("arity", [2, 3, 4])
def test_generator_relations(arity):
    for i in range(3):
        for j in range(i + 1, 4):
            lhs = standard_generator(j, arity) * standard_generator(i, arity)
            rhs = standard_generator(i, arity) * standard_generator(j + arity - 1, arity)
            assert lhs == rhs


def test_forest_relation():
    # f_j f_i = f_i f_{j+n-1} for i < j, applied left to right
    for n in (2, 3):
        k = 1
        while 1 + k * (n - 1) <= 6:
            prefix = [1] * k
            leaves = 1 + k * (n - 1)
            for i in range(1, leaves + 1):
                for j in range(i + 1, leaves + 1):
                    assert tree(prefix + [j, i], n) == tree(prefix + [i, j + n - 1], n)
            k += 1


def test_word_element_multiplies_left_to_right():
    x0, x1 = standard_generator(0, 2), standard_generator(1, 2)
    assert word_element([(1, 1), (0, -1)], 2) == x1 * x0.inverse()
    assert word_element([], 2).is_identity()


def test_negative_generator_index():
    with pytest.raises(ArgumentError):
        standard_generator(-1, 2)


def test_repr_shows_tree_words(A):
    assert repr(A) == "GroupElement(n=2, f1 f1 ; f1 f2)"


generator_words = st.lists(
    st.tuples(st.integers(0, 3), st.sampled_from([-2, -1, 1, 2])), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(generator_words, generator_words)
def test_multiplication_is_associative(u, v):
    a = word_element(u, 2)
    b = word_element(v, 2)
    c = standard_generator(1, 2)
    assert (a * b) * c == a * (b * c)


@settings(max_examples=40, deadline=None)
@given(generator_words)
def test_tree_pair_round_trip(u):
    g = word_element(u, 2)
    top, bottom = g.to_tree_pair()
    assert element_from_trees(top, bottom, 2) == g


@settings(max_examples=30, deadline=None)
@given(generator_words, generator_words, generator_words)
def test_multiplication_is_associative_in_F3(u, v, w):
    a, b, c = word_element(u, 3), word_element(v, 3), word_element(w, 3)
    assert (a * b) * c == a * (b * c)
