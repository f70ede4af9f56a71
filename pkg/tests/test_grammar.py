import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strand.core import diagram as sd
from strand.core.elements import GroupElement, standard_generator
from strand.core.errors import ArgumentError
from strand.tools.grammar import (
    load_element_file,
    parse_coefficient,
    parse_element,
    parse_psi,
    parse_tree_word,
)
from strand.tools.suites import get_available_suites, run_suite


def test_named_elements(A, N, X):
    assert parse_element("A", 2) == A
    assert parse_element("N", 2) == N
    assert parse_element("X", 2) == X


def test_named_elements_live_in_F2():
    with pytest.raises(ArgumentError):
        parse_element("A", 3)


def test_tree_pair_syntax(A):
    assert parse_element("tree: f1 f1 ; tree: f1 f2", 2) == A
    assert parse_element("f1 f1;f1 f2", 2) == A


def test_generator_words():
    x0, x1 = standard_generator(0, 2), standard_generator(1, 2)
    assert parse_element("x1 x0^-1", 2) == x1 * x0.inverse()
    assert parse_element("x0^3", 2) == x0 ** 3
    assert parse_element("1", 3) == GroupElement.identity(3)


@pytest.mark.parametrize("text", ["y0", "x0^", "f0 ; f1", "f1 ; f1 f1", "x-1"])
def test_bad_elements(text):
    with pytest.raises(ArgumentError):
        parse_element(text, 2)


def test_tree_word_parsing():
    assert parse_tree_word("tree: f1 f2 f2") == [1, 2, 2]
    assert parse_tree_word("") == []


@pytest.mark.parametrize("expr, value", [
    ("1", 1), ("1/2", 0.5), ("-1j", -1j), ("2**-1", 0.5), ("(1+1j)/2", 0.5 + 0.5j),
])
def test_coefficients(expr, value):
    assert parse_coefficient(expr) == pytest.approx(value)


@pytest.mark.parametrize("expr", ["__import__('os')", "abs(1)", "'a'", "1/0", "x"])
def test_unsafe_coefficients(expr):
    with pytest.raises(ArgumentError):
        parse_coefficient(expr)


@given(st.integers(-1000, 1000), st.integers(1, 1000))
def test_fraction_coefficients(p, q):
    assert parse_coefficient(f"{p}/{q}") == pytest.approx(p / q)


def test_psi_terms(A):
    terms = parse_psi(["1:1", "0.5j:tree: f1 f1 ; tree: f1 f2"], 2)
    assert terms[0] == (1 + 0j, GroupElement.identity(2))
    assert terms[1] == (0.5j, A)
    with pytest.raises(ArgumentError):
        parse_psi(["A"], 2)


def test_element_files(tmp_path, X):
    text_file = tmp_path / "x.txt"
    text_file.write_text("f1 f1 f2 ; f1 f1 f3\n")
    assert load_element_file(text_file, 2) == X
    json_file = tmp_path / "x.json"
    json_file.write_text(json.dumps(sd.to_json(X.diagram)))
    assert load_element_file(json_file, 2) == X
    with pytest.raises(ArgumentError):
        load_element_file(json_file, 3)
    with pytest.raises(ArgumentError):
        load_element_file(tmp_path / "missing.json", 2)


def test_suites(tl):
    assert set(get_available_suites()) == {
        "calibration", "relations", "group", "confluence", "essential",
        "oracle", "measure", "coloring", "examples",
    }
    assert run_suite("group", tl)["checked"] > 0
    assert run_suite("examples", tl)["X"]["essential_width"] == 3
    assert "error" in run_suite("nope", tl)


def test_tensor_relation_suite_skips_exchange(tensor):
    residuals = run_suite("relations", tensor, trials=4)["residuals"]
    assert "exchange" not in residuals
    assert set(residuals) == {"unitarity", "rotation", "rotation_mirror", "tadpole", "triangle"}
