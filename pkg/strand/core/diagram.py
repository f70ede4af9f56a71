"""Strand diagrams for the Brown-Thompson groups F_n.

A diagram is stored combinatorially. Every edge is a pair (tail, head) of
ports, and the planar embedding is carried by the port indices:

    ("src", i)      i-th source, left to right along the top
    ("snk", j)      j-th sink, left to right along the bottom
    ("out", v, k)   k-th outgoing port of vertex v
    ("in", v, k)    k-th incoming port of vertex v

A split has one incoming and n outgoing ports, a merge n incoming and one
outgoing. Diagrams are always stored in canonical form, so two diagrams are
isotopic exactly when they compare equal.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from strand.core.errors import ArgumentError, CompositionError, InvariantError, PlanarityError

SPLIT = "split"
MERGE = "merge"

Port = tuple
Layer = tuple[str, int]


def _in_count(kind: str, arity: int) -> int:
    return 1 if kind == SPLIT else arity


def _out_count(kind: str, arity: int) -> int:
    return arity if kind == SPLIT else 1


@dataclass(frozen=True)
class StrandDiagram:
    arity: int
    sources: int
    sinks: int
    kinds: tuple[str, ...]
    edges: tuple[tuple[Port, Port], ...]

    def __post_init__(self):
        if self.arity < 2:
            raise ArgumentError(f"arity must be >= 2, got {self.arity}")
        _check_degrees(self)
        # raises PlanarityError on cyclic or non-planar incidence orders
        layer_word(self)

    @property
    def vertex_count(self) -> int:
        return len(self.kinds)

    @property
    def splits(self) -> int:
        return sum(1 for k in self.kinds if k == SPLIT)

    @property
    def merges(self) -> int:
        return sum(1 for k in self.kinds if k == MERGE)

    def head_of(self) -> dict[Port, Port]:
        return {tail: head for tail, head in self.edges}

    def encoding(self) -> str:
        return json.dumps(to_json(self), sort_keys=True, separators=(",", ":"))


def _check_degrees(d: StrandDiagram):
    tails = [t for t, _ in d.edges]
    heads = [h for _, h in d.edges]
    if len(set(tails)) != len(tails) or len(set(heads)) != len(heads):
        raise ArgumentError("a port carries more than one edge")
    expected_tails = {("src", i) for i in range(d.sources)}
    expected_heads = {("snk", j) for j in range(d.sinks)}
    for v, kind in enumerate(d.kinds):
        if kind not in (SPLIT, MERGE):
            raise ArgumentError(f"vertex {v} has unknown kind '{kind}'")
        expected_heads.update(("in", v, k) for k in range(_in_count(kind, d.arity)))
        expected_tails.update(("out", v, k) for k in range(_out_count(kind, d.arity)))
    if set(tails) != expected_tails or set(heads) != expected_heads:
        raise ArgumentError("edge incidences do not match vertex valences")


# ---------------------------------------------------------------------------
# Layer words: a planar diagram is a sequence of elementary splits and merges
# applied to a left-to-right frontier of strands.
# ---------------------------------------------------------------------------

def _sweep(head_of: dict[Port, Port], kinds: dict[int, str], arity: int, width: int,
           allowed: Optional[Callable[[int], bool]] = None,
           frontier: Optional[list[Port]] = None,
           merges_first: bool = False) -> tuple[list[Layer], list[Port], set[int]]:
    """Fire vertices leftmost-first. Returns (layers, final frontier, fired vertices).

    With merges_first a ready merge anywhere on the frontier fires before any
    split, which keeps the frontier as narrow as the diagram allows.
    """
    frontier = list(frontier) if frontier is not None else [("src", i) for i in range(width)]
    layers: list[Layer] = []
    fired: set[int] = set()
    while True:
        pick = None
        for j, tail in enumerate(frontier):
            head = head_of[tail]
            if head[0] != "in":
                continue
            v = head[1]
            if allowed is not None and not allowed(v):
                continue
            if kinds[v] == SPLIT:
                if pick is None:
                    pick = (SPLIT, j, v)
                if not merges_first:
                    break
                continue
            if head[2] == 0 and all(
                j + k < len(frontier) and head_of[frontier[j + k]] == ("in", v, k)
                for k in range(arity)
            ):
                pick = (MERGE, j, v)
                break
        if pick is None:
            return layers, frontier, fired
        kind, j, v = pick
        if kind == SPLIT:
            frontier[j:j + 1] = [("out", v, k) for k in range(arity)]
        else:
            frontier[j:j + arity] = [("out", v, 0)]
        layers.append((kind, j))
        fired.add(v)


def layer_word(d: StrandDiagram, allowed: Optional[Callable[[int], bool]] = None) -> list[Layer]:
    kinds = dict(enumerate(d.kinds))
    layers, frontier, fired = _sweep(d.head_of(), kinds, d.arity, d.sources, allowed)
    if allowed is not None:
        rest, frontier, more = _sweep(d.head_of(), kinds, d.arity, d.sources, None, frontier)
        layers += rest
        fired |= more
    if len(fired) != len(kinds):
        raise PlanarityError("incidence orders admit no planar layering")
    head_of = d.head_of()
    if [head_of[t] for t in frontier] != [("snk", j) for j in range(d.sinks)]:
        raise PlanarityError("sinks are not reached in left-to-right order")
    return layers


def narrow_layer_word(d: StrandDiagram) -> list[Layer]:
    """Planar layering that closes merges as soon as their inputs are adjacent."""
    layers, frontier, fired = _sweep(d.head_of(), dict(enumerate(d.kinds)), d.arity, d.sources,
                                     merges_first=True)
    if len(fired) != len(d.kinds):
        raise PlanarityError("incidence orders admit no planar layering")
    head_of = d.head_of()
    if [head_of[t] for t in frontier] != [("snk", j) for j in range(d.sinks)]:
        raise PlanarityError("sinks are not reached in left-to-right order")
    return layers


# ---------------------------------------------------------------------------
# Mutable working graph used by reduction, composition and the annulus.
# ---------------------------------------------------------------------------

class _Edge:
    __slots__ = ("tail", "head", "labels")

    def __init__(self, tail: Port, head: Port, labels: tuple = ()):
        self.tail = tail
        self.head = head
        # one sortable label per crossing of the annular cut
        self.labels = labels

    @property
    def winding(self) -> int:
        return len(self.labels)


class WorkGraph:
    def __init__(self, arity: int, sources: int = 0, sinks: int = 0):
        self.arity = arity
        self.sources = sources
        self.sinks = sinks
        self.kinds: dict[int, str] = {}
        self.tags: dict[int, int] = {}
        self.edges: dict[int, _Edge] = {}
        self.by_tail: dict[Port, int] = {}
        self.by_head: dict[Port, int] = {}
        self.free_loops: list[tuple] = []
        self._next_v = 0
        self._next_e = 0

    # -- construction -----------------------------------------------------
    def add_vertex(self, kind: str, tag: int = 0) -> int:
        v = self._next_v
        self._next_v += 1
        self.kinds[v] = kind
        self.tags[v] = tag
        return v

    def add_edge(self, tail: Port, head: Port, labels: tuple = ()) -> int:
        e = self._next_e
        self._next_e += 1
        self.edges[e] = _Edge(tail, head, labels)
        self.by_tail[tail] = e
        self.by_head[head] = e
        return e

    def remove_edge(self, e: int):
        edge = self.edges.pop(e)
        if self.by_tail.get(edge.tail) == e:
            del self.by_tail[edge.tail]
        if self.by_head.get(edge.head) == e:
            del self.by_head[edge.head]

    @classmethod
    def from_word(cls, arity: int, width: int, layers: Iterable[Layer],
                  tags: Optional[Iterable[int]] = None) -> "WorkGraph":
        layers = list(layers)
        tags = list(tags) if tags is not None else [0] * len(layers)
        g = cls(arity, sources=width)
        frontier: list[Port] = [("src", i) for i in range(width)]
        for (kind, j), tag in zip(layers, tags):
            if kind == SPLIT:
                if not 0 <= j < len(frontier):
                    raise ArgumentError(f"split position {j} outside width {len(frontier)}")
                v = g.add_vertex(SPLIT, tag)
                g.add_edge(frontier[j], ("in", v, 0))
                frontier[j:j + 1] = [("out", v, k) for k in range(arity)]
            elif kind == MERGE:
                if not 0 <= j <= len(frontier) - arity:
                    raise ArgumentError(f"merge position {j} outside width {len(frontier)}")
                v = g.add_vertex(MERGE, tag)
                for k in range(arity):
                    g.add_edge(frontier[j + k], ("in", v, k))
                frontier[j:j + arity] = [("out", v, 0)]
            else:
                raise ArgumentError(f"unknown layer kind '{kind}'")
        for j, tail in enumerate(frontier):
            g.add_edge(tail, ("snk", j))
        g.sinks = len(frontier)
        return g

    # -- redexes ------------------------------------------------------------
    def split_merge_redex(self, s: int) -> Optional[int]:
        """Merge m such that the n outputs of split s enter m in order, or None."""
        if self.kinds.get(s) != SPLIT:
            return None
        outs = [self.edges[self.by_tail[("out", s, k)]] for k in range(self.arity)]
        head = outs[0].head
        if head[0] != "in" or self.kinds[head[1]] != MERGE:
            return None
        m = head[1]
        if any(e.head != ("in", m, k) for k, e in enumerate(outs)):
            return None
        if len({e.winding for e in outs}) != 1:
            return None
        return m

    def merge_split_redex(self, m: int) -> Optional[int]:
        if self.kinds.get(m) != MERGE:
            return None
        head = self.edges[self.by_tail[("out", m, 0)]].head
        if head[0] == "in" and self.kinds[head[1]] == SPLIT:
            return head[1]
        return None

    def redexes(self) -> list[tuple[str, int, int]]:
        found = []
        for v in sorted(self.kinds):
            m = self.split_merge_redex(v)
            if m is not None:
                found.append(("A", v, m))
        for v in sorted(self.kinds):
            s = self.merge_split_redex(v)
            if s is not None:
                found.append(("B", v, s))
        return found

    # -- moves --------------------------------------------------------------
    def apply_move(self, move: str, a: int, b: int) -> dict:
        """Apply move A (split a, merge b) or move B (merge a, split b)."""
        n = self.arity
        if move == "A":
            outs = [self.by_tail[("out", a, k)] for k in range(n)]
            labels = self.edges[outs[0]].labels
            record = {"move": "A", "split": a, "merge": b, "winding": len(labels),
                      "tags": (self.tags[a], self.tags[b])}
            self._splice({a, b}, outs, {("in", a, 0): (("out", b, 0), labels)})
        elif move == "B":
            e = self.by_tail[("out", a, 0)]
            labels = self.edges[e].labels
            glue = {("in", a, k): (("out", b, k), tuple(lab + (k,) for lab in labels)) for k in range(n)}
            record = {"move": "B", "merge": a, "split": b, "winding": len(labels),
                      "tags": (self.tags[a], self.tags[b])}
            self._splice({a, b}, [e], glue)
        else:
            raise ArgumentError(f"unknown move '{move}'")
        return record

    def _splice(self, removed: set[int], deleted: list[int], glue: dict[Port, tuple[Port, tuple]]):
        for e in deleted:
            self.remove_edge(e)
        touching = [e for e, edge in self.edges.items()
                    if (edge.tail[0] == "out" and edge.tail[1] in removed)
                    or (edge.head[0] == "in" and edge.head[1] in removed)]
        visited: set[int] = set()
        new_edges = []
        for e in touching:
            tail = self.edges[e].tail
            if tail[0] == "out" and tail[1] in removed:
                continue
            labels = list(self.edges[e].labels)
            cur = e
            visited.add(cur)
            while True:
                head = self.edges[cur].head
                if head[0] == "in" and head[1] in removed:
                    out_port, extra = glue[head]
                    cur = self.by_tail[out_port]
                    visited.add(cur)
                    labels += list(extra) + list(self.edges[cur].labels)
                    continue
                break
            new_edges.append((tail, head, tuple(labels)))
        for e in touching:
            if e in visited:
                continue
            # chains with no surviving endpoint close up into free loops
            labels = []
            cur = e
            while cur not in visited:
                visited.add(cur)
                labels += list(self.edges[cur].labels)
                out_port, extra = glue[self.edges[cur].head]
                labels += list(extra)
                cur = self.by_tail[out_port]
            self.free_loops.append(tuple(sorted(labels)))
        for e in touching:
            self.remove_edge(e)
        for v in removed:
            del self.kinds[v]
            del self.tags[v]
        for tail, head, labels in new_edges:
            self.add_edge(tail, head, labels)

    def reduce(self, rng: Optional[random.Random] = None) -> list[dict]:
        trace = []
        while True:
            found = self.redexes()
            if not found:
                return trace
            move, a, b = rng.choice(found) if rng is not None else found[0]
            trace.append(self.apply_move(move, a, b))

    # -- output -------------------------------------------------------------
    def head_of(self) -> dict[Port, Port]:
        return {edge.tail: edge.head for edge in self.edges.values()}

    def sweep(self, allowed: Optional[Callable[[int], bool]] = None,
              frontier: Optional[list[Port]] = None):
        return _sweep(self.head_of(), self.kinds, self.arity, self.sources, allowed, frontier)

    def freeze(self) -> StrandDiagram:
        """Canonical relabelling: leftmost-first depth-first search from the sources."""
        order: dict[int, int] = {}

        def neighbours(v: int):
            kind = self.kinds[v]
            for k in range(_in_count(kind, self.arity)):
                tail = self.edges[self.by_head[("in", v, k)]].tail
                if tail[0] == "out":
                    yield tail[1]
            for k in range(_out_count(kind, self.arity)):
                head = self.edges[self.by_tail[("out", v, k)]].head
                if head[0] == "in":
                    yield head[1]

        for i in range(self.sources):
            head = self.edges[self.by_tail[("src", i)]].head
            if head[0] != "in" or head[1] in order:
                continue
            order[head[1]] = len(order)
            stack = [neighbours(head[1])]
            while stack:
                for w in stack[-1]:
                    if w not in order:
                        order[w] = len(order)
                        stack.append(neighbours(w))
                        break
                else:
                    stack.pop()
        if len(order) != len(self.kinds):
            raise InvariantError("diagram has a component without sources")

        def relabel(port: Port) -> Port:
            if port[0] in ("in", "out"):
                return (port[0], order[port[1]], port[2])
            return port

        kinds = [None] * len(order)
        for v, new in order.items():
            kinds[new] = self.kinds[v]
        edges = tuple(sorted((relabel(e.tail), relabel(e.head)) for e in self.edges.values()))
        return StrandDiagram(self.arity, self.sources, self.sinks, tuple(kinds), edges)


def work_graph(d: StrandDiagram, tag: int = 0) -> WorkGraph:
    return WorkGraph.from_word(d.arity, d.sources, layer_word(d), [tag] * d.vertex_count)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def from_layers(width: int, layers: Iterable[Layer], arity: int) -> StrandDiagram:
    if width < 1:
        raise ArgumentError("a strand diagram needs at least one source")
    return WorkGraph.from_word(arity, width, layers).freeze()


def identity(m: int, arity: int) -> StrandDiagram:
    return from_layers(m, [], arity)


def forest_generator(i: int, m: int, arity: int) -> StrandDiagram:
    """The (m, m+n-1)-forest f_i: straight strands with a single split at strand i (1-based)."""
    if not 1 <= i <= m:
        raise ArgumentError(f"forest index {i} out of range 1..{m}")
    return from_layers(m, [(SPLIT, i - 1)], arity)


def compose(top: StrandDiagram, bottom: StrandDiagram) -> StrandDiagram:
    """Concatenate: the sinks of top are glued to the sources of bottom. No reduction."""
    if top.arity != bottom.arity:
        raise CompositionError(f"arity mismatch {top.arity} != {bottom.arity}")
    if top.sinks != bottom.sources:
        raise CompositionError(f"cannot glue {top.sinks} sinks onto {bottom.sources} sources")
    return from_layers(top.sources, layer_word(top) + layer_word(bottom), top.arity)


def compose_all(diagrams: Iterable[StrandDiagram]) -> StrandDiagram:
    diagrams = list(diagrams)
    out = diagrams[0]
    for d in diagrams[1:]:
        out = compose(out, d)
    return out


def flip_layers(layers: Iterable[Layer]) -> list[Layer]:
    return [(MERGE if kind == SPLIT else SPLIT, j) for kind, j in reversed(list(layers))]


def invert(d: StrandDiagram) -> StrandDiagram:
    """Reflection in a horizontal line: sources and sinks, splits and merges swap."""
    return from_layers(d.sinks, flip_layers(layer_word(d)), d.arity)


def reduce(d: StrandDiagram, rng: Optional[random.Random] = None) -> StrandDiagram:
    g = work_graph(d)
    g.reduce(rng)
    return g.freeze()


def is_reduced(d: StrandDiagram) -> bool:
    return not work_graph(d).redexes()


def power(d: StrandDiagram, p: int) -> StrandDiagram:
    if d.sources != d.sinks:
        raise CompositionError("only square diagrams have powers")
    if p == 0:
        return identity(d.sources, d.arity)
    return from_layers(d.sources, layer_word(d) * p, d.arity)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _port_json(port: Port) -> list:
    if port[0] == "src":
        return ["src", port[1]]
    if port[0] == "snk":
        return ["snk", port[1]]
    return [port[1], port[2]]


def to_json(d: StrandDiagram) -> dict:
    return {
        "arity": d.arity,
        "sources": d.sources,
        "sinks": d.sinks,
        "vertices": [{"id": v, "kind": kind} for v, kind in enumerate(d.kinds)],
        "edges": [_port_json(t) + _port_json(h) for t, h in d.edges],
    }


def from_json(obj: dict | str) -> StrandDiagram:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        arity = int(obj["arity"])
        ids = [v["id"] for v in obj["vertices"]]
        index = {vid: k for k, vid in enumerate(ids)}
        kinds = [v["kind"] for v in obj["vertices"]]
        g = WorkGraph(arity, int(obj["sources"]), int(obj["sinks"]))
        for kind in kinds:
            g.add_vertex(kind)
        for a, ap, b, bp in obj["edges"]:
            tail = ("src", int(ap)) if a == "src" else ("out", index[a], int(ap))
            head = ("snk", int(bp)) if b == "snk" else ("in", index[b], int(bp))
            g.add_edge(tail, head)
    except (KeyError, TypeError, ValueError) as e:
        raise ArgumentError(f"malformed diagram JSON: {e}") from e
    raw = StrandDiagram(arity, g.sources, g.sinks, tuple(kinds),
                        tuple(sorted((e.tail, e.head) for e in g.edges.values())))
    return work_graph(raw).freeze()
