"""Group elements of F_n as reduced (1,1)-strand diagrams."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from strand.core import diagram as sd
from strand.core.diagram import MERGE, SPLIT, StrandDiagram
from strand.core.errors import ArgumentError, InvariantError


def tree(word: Iterable[int], arity: int) -> StrandDiagram:
    """n-ary tree from a word f_{i1} f_{i2} ..., applied left to right (1-based leaves)."""
    layers = []
    leaves = 1
    for i in word:
        if not 1 <= i <= leaves:
            raise ArgumentError(f"f{i} applied to a tree with {leaves} leaves")
        layers.append((SPLIT, i - 1))
        leaves += arity - 1
    return sd.from_layers(1, layers, arity)


def right_comb(carets: int, arity: int) -> list[int]:
    return [1 + k * (arity - 1) for k in range(carets)]


def leaves(word: Iterable[int], arity: int) -> int:
    return 1 + len(list(word)) * (arity - 1)


@dataclass(frozen=True)
class GroupElement:
    diagram: StrandDiagram

    def __post_init__(self):
        d = self.diagram
        if d.sources != 1 or d.sinks != 1:
            raise ArgumentError("group elements are (1,1)-diagrams")
        if not sd.is_reduced(d):
            raise InvariantError("group element diagram is not reduced")

    @property
    def arity(self) -> int:
        return self.diagram.arity

    @classmethod
    def identity(cls, arity: int) -> "GroupElement":
        return cls(sd.identity(1, arity))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        # self is drawn on top of other
        return GroupElement(sd.reduce(sd.compose(self.diagram, other.diagram)))

    def inverse(self) -> "GroupElement":
        return GroupElement(sd.invert(self.diagram))

    def __pow__(self, p: int) -> "GroupElement":
        base = self if p >= 0 else self.inverse()
        return GroupElement(sd.reduce(sd.power(base.diagram, abs(p))))

    def is_identity(self) -> bool:
        return self.diagram.vertex_count == 0

    def to_tree_pair(self) -> tuple[list[int], list[int]]:
        """(top, bottom) tree words with self = tree(top) ; tree(bottom)^-1."""
        d = self.diagram
        layers = sd.layer_word(d, allowed=lambda v: d.kinds[v] == SPLIT)
        cut = sum(1 for kind, _ in layers if kind == SPLIT)
        if any(kind != MERGE for kind, _ in layers[cut:]):
            raise InvariantError("reduced element is not a tree pair")
        top = [j + 1 for _, j in layers[:cut]]
        bottom = [kind_j[1] + 1 for kind_j in sd.flip_layers(layers[cut:])]
        return top, bottom

    def encoding(self) -> str:
        return self.diagram.encoding()

    def __repr__(self) -> str:
        top, bottom = self.to_tree_pair()
        fmt = lambda w: " ".join(f"f{i}" for i in w) or "1"
        return f"GroupElement(n={self.arity}, {fmt(top)} ; {fmt(bottom)})"


def element_from_trees(top: Iterable[int], bottom: Iterable[int], arity: int) -> GroupElement:
    top, bottom = list(top), list(bottom)
    if len(top) != len(bottom):
        raise ArgumentError(
            f"trees have {leaves(top, arity)} and {leaves(bottom, arity)} leaves")
    d = sd.compose(tree(top, arity), sd.invert(tree(bottom, arity)))
    return GroupElement(sd.reduce(d))


def standard_generator(i: int, arity: int) -> GroupElement:
    """x_i, with x_j x_i = x_i x_{j+n-1} for i < j.

    Write i = q(n-1) + r. The top tree is the comb of q+1 carets with leaf r of
    its last caret split; the bottom tree is the comb of q+2 carets.
    """
    if i < 0:
        raise ArgumentError(f"generator index must be >= 0, got {i}")
    q, r = divmod(i, arity - 1)
    comb = right_comb(q + 1, arity)
    top = comb + [1 + q * (arity - 1) + r]
    bottom = right_comb(q + 2, arity)
    return element_from_trees(top, bottom, arity)


def word_element(word: Iterable[tuple[int, int]], arity: int) -> GroupElement:
    """Product of x_i^e over (i, e) pairs, leftmost factor on top."""
    out = GroupElement.identity(arity)
    for i, e in word:
        out = out * (standard_generator(i, arity) ** e)
    return out
