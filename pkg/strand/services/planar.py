"""Planar words and the evaluator interface shared by both backends.

A planar word acts on a left-to-right frontier of trivalent strands:

    ("split", j)  strand j becomes strands j..j+n-1
    ("merge", j)  strands j..j+n-1 become strand j
    ("cup", j)    two new strands j, j+1 joined by a cup
    ("cap", j)    strands j, j+1 are joined by a cap
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Iterable

from strand.core import diagram as sd
from strand.core.diagram import MERGE, SPLIT, StrandDiagram
from strand.core.errors import ArgumentError

CUP = "cup"
CAP = "cap"

Letter = tuple[str, int]


def width_after(width: int, word: Iterable[Letter], arity: int) -> int:
    for kind, j in word:
        if kind == SPLIT:
            ok = 0 <= j < width
            width += arity - 1
        elif kind == MERGE:
            ok = 0 <= j <= width - arity
            width -= arity - 1
        elif kind == CUP:
            ok = 0 <= j <= width
            width += 2
        elif kind == CAP:
            ok = 0 <= j <= width - 2
            width -= 2
        else:
            raise ArgumentError(f"unknown planar letter '{kind}'")
        if not ok:
            raise ArgumentError(f"{kind} at {j} does not fit the frontier")
    return width


def shifted(word: Iterable[Letter], offset: int) -> list[Letter]:
    return [(kind, j + offset) for kind, j in word]


def vertex_count(word: Iterable[Letter]) -> int:
    return sum(1 for kind, _ in word if kind in (SPLIT, MERGE))


def closed_components(word: list[Letter], arity: int) -> list[list[Letter]]:
    """Split a closed word into the subwords of its connected components.

    Positions are rewritten against the component's own frontier, so each
    subword is a closed word by itself.
    """
    parent: list[int] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def fresh(count: int) -> list[int]:
        start = len(parent)
        parent.extend(range(start, start + count))
        return list(range(start, start + count))

    frontier: list[int] = []
    moves = []
    for kind, j in word:
        if kind == SPLIT:
            taken, made = frontier[j:j + 1], fresh(arity)
        elif kind == MERGE:
            taken, made = frontier[j:j + arity], fresh(1)
        elif kind == CUP:
            taken, made = [], fresh(2)
        elif kind == CAP:
            taken, made = frontier[j:j + 2], []
        else:
            raise ArgumentError(f"unknown planar letter '{kind}'")
        ends = taken + made
        for x in ends[1:]:
            parent[find(x)] = find(ends[0])
        moves.append((ends[0], len(taken), made))
        frontier[j:j + len(taken)] = made
    if frontier:
        raise ArgumentError("word does not close the frontier")

    parts: dict[int, list[Letter]] = {}
    frontier = []
    for (kind, j), (anchor, width, made) in zip(word, moves):
        root = find(anchor)
        local = sum(1 for x in frontier[:j] if find(x) == root)
        parts.setdefault(root, []).append((kind, local))
        frontier[j:j + width] = made
    return list(parts.values())


def closure_word(d: StrandDiagram) -> list[Letter]:
    """Trace closure of a (1,1)-diagram: the output is brought back round the left."""
    if d.sources != 1 or d.sinks != 1:
        raise ArgumentError("trace closure needs a (1,1)-diagram")
    return [(CUP, 0)] + shifted(sd.narrow_layer_word(d), 1) + [(CAP, 0)]


@dataclass
class TransferPieces:
    """Linearised prefix, core and suffix of a closed word.

    The closed value of prefix ; core^q ; suffix, divided by the loop value,
    is eta @ matrix^q @ xi.
    """
    xi: Any
    matrix: Any
    eta: Any
    basis: list

    @property
    def dimension(self) -> int:
        return len(self.basis)


class Evaluator(ABC):
    """A unitary planar algebra evaluating closed trivalent words."""

    name: str = "base"
    arity: int = 2
    exact: bool = False
    symbolic: bool = False

    @abstractmethod
    def evaluate_word(self, word: list[Letter]) -> Any:
        """Normalised value of a closed planar word."""

    @abstractmethod
    def loop_value(self) -> Any:
        """Value of a single closed strand."""

    @abstractmethod
    def transfer_pieces(self, prefix: list[Letter], core: list[Letter],
                        suffix: list[Letter]) -> TransferPieces:
        """prefix opens the frontier from width 0, suffix closes it."""

    @abstractmethod
    def to_complex(self, value: Any) -> complex:
        ...

    @abstractmethod
    def health_check(self) -> dict:
        ...

    def is_zero(self, value: Any, tol: float = 1e-9) -> bool:
        return abs(self.to_complex(value)) <= tol
