"""Text grammar for group elements and vector coefficients."""
from __future__ import annotations

import ast
import json
import re
from pathlib import Path

from strand.core import diagram as sd
from strand.core.elements import GroupElement, element_from_trees, word_element
from strand.core.errors import ArgumentError

NAMED_ELEMENTS = {
    "A": "tree: f1 f1 ; tree: f1 f2",
    "N": "x1 x0^-1 x1^-1 x2",
    "X": "tree: f1 f1 f2 ; tree: f1 f1 f3",
}

_SAFE_NODES = {
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
}

_GENERATOR = re.compile(r"^x(\d+)(?:\^(-?\d+))?$")
_FOREST = re.compile(r"^f(\d+)$")


def parse_tree_word(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("tree:"):
        text = text[len("tree:"):]
    out = []
    for token in text.split():
        match = _FOREST.match(token)
        if not match or int(match.group(1)) < 1:
            raise ArgumentError(f"bad tree letter '{token}', expected f1, f2, ...")
        out.append(int(match.group(1)))
    return out


def parse_generator_word(text: str) -> list[tuple[int, int]]:
    out = []
    for token in text.split():
        match = _GENERATOR.match(token)
        if not match:
            raise ArgumentError(f"bad generator '{token}', expected x<i> or x<i>^<e>")
        out.append((int(match.group(1)), int(match.group(2) or 1)))
    return out


def parse_element(text: str, arity: int) -> GroupElement:
    text = text.strip()
    if text in NAMED_ELEMENTS:
        if arity != 2:
            raise ArgumentError(f"named element '{text}' lives in F_2")
        text = NAMED_ELEMENTS[text]
    if text in ("", "1", "id"):
        return GroupElement.identity(arity)
    if ";" in text:
        top, bottom = text.split(";", 1)
        return element_from_trees(parse_tree_word(top), parse_tree_word(bottom), arity)
    return word_element(parse_generator_word(text), arity)


def load_element_file(path: str | Path, arity: int) -> GroupElement:
    """A diagram JSON file, or a text file holding one element in the grammar."""
    path = Path(path)
    if not path.exists():
        raise ArgumentError(f"element file not found: {path}")
    text = path.read_text().strip()
    if text.startswith("{"):
        try:
            d = sd.from_json(json.loads(text))
        except json.JSONDecodeError as e:
            raise ArgumentError(f"malformed JSON in {path}: {e}") from e
        if d.arity != arity:
            raise ArgumentError(f"{path} holds an F_{d.arity} diagram, expected F_{arity}")
        return GroupElement(sd.reduce(d))
    return parse_element(text, arity)


def parse_coefficient(expr: str) -> complex:
    """Arithmetic over numeric literals, e.g. '0.5', '1/2', '-1j', '2**-0.5'."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as e:
        raise ArgumentError(f"bad coefficient '{expr}': {e}") from e
    for node in ast.walk(tree):
        if type(node) not in _SAFE_NODES:
            raise ArgumentError(f"coefficient '{expr}' contains disallowed operations")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, complex)):
            raise ArgumentError(f"coefficient '{expr}' contains a non-numeric literal")
    try:
        return complex(eval(compile(tree, "<coefficient>", "eval"), {"__builtins__": {}}, {}))
    except (ArithmeticError, TypeError, ValueError) as e:
        raise ArgumentError(f"cannot evaluate coefficient '{expr}': {e}") from e


def parse_psi(items: list[str], arity: int) -> list[tuple[complex, GroupElement]]:
    """Terms 'coeff:element' of a vector sum coeff * pi(element) Omega."""
    out = []
    for item in items:
        if ":" not in item:
            raise ArgumentError(f"vector term '{item}' must look like coeff:element")
        coeff, element = item.split(":", 1)
        # 'tree:' is part of the element grammar, not a coefficient
        if coeff.strip() == "tree":
            raise ArgumentError(f"vector term '{item}' is missing its coefficient")
        out.append((parse_coefficient(coeff), parse_element(element, arity)))
    return out
