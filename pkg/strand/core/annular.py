"""Annular strand diagrams, essential parts and power forms.

Closing a square diagram glues sink j to source j around an annulus. Each
edge remembers the cut crossings it accumulated, one sortable label per
crossing; the number of labels is its winding.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Optional

import networkx as nx

from strand.core import diagram as sd
from strand.core.diagram import MERGE, SPLIT, StrandDiagram, WorkGraph
from strand.core.elements import GroupElement
from strand.core.errors import ArgumentError, CertificationError, CompositionError, InvariantError


class AnnularDiagram:
    def __init__(self, graph: WorkGraph):
        self.graph = graph
        self.trace: list[dict] = []

    @property
    def arity(self) -> int:
        return self.graph.arity

    @property
    def vertex_count(self) -> int:
        return len(self.graph.kinds)

    @property
    def free_loops(self) -> int:
        return len(self.graph.free_loops)

    def copy(self) -> "AnnularDiagram":
        g = WorkGraph(self.graph.arity)
        g.kinds = dict(self.graph.kinds)
        g.tags = dict(self.graph.tags)
        for e, edge in self.graph.edges.items():
            g.add_edge(edge.tail, edge.head, edge.labels)
        g.free_loops = list(self.graph.free_loops)
        g._next_v = self.graph._next_v
        out = AnnularDiagram(g)
        out.trace = list(self.trace)
        return out

    # -- move C -------------------------------------------------------------
    def loop_runs(self) -> list[list[int]]:
        """Runs of n free loops that are adjacent in cut order."""
        n = self.arity
        marks = sorted(
            [(lab, -1) for edge in self.graph.edges.values() for lab in edge.labels]
            + [(lab, k) for k, loop in enumerate(self.graph.free_loops) for lab in loop]
        )
        runs, current = [], []
        for _, k in marks:
            if k >= 0 and len(self.graph.free_loops[k]) == 1:
                current.append(k)
                if len(current) == n:
                    runs.append(current)
                    current = []
            else:
                current = []
        return runs

    def apply_loop_move(self, run: list[int]) -> dict:
        kept = self.graph.free_loops[run[0]]
        self.graph.free_loops = [loop for k, loop in enumerate(self.graph.free_loops) if k not in run]
        self.graph.free_loops.append(kept)
        return {"move": "C", "loops": len(run)}

    def redexes(self) -> list:
        found: list = list(self.graph.redexes())
        found += [("C", run) for run in self.loop_runs()]
        return found

    def is_reduced(self) -> bool:
        return not self.redexes()

    def reduce(self, rng: Optional[random.Random] = None) -> "AnnularDiagram":
        while True:
            found = self.redexes()
            if not found:
                return self
            step = rng.choice(found) if rng is not None else found[0]
            if step[0] == "C":
                self.trace.append(self.apply_loop_move(step[1]))
            else:
                self.trace.append(self.graph.apply_move(*step))

    # -- structure ------------------------------------------------------------
    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from((v, {"kind": kind}) for v, kind in self.graph.kinds.items())
        for edge in self.graph.edges.values():
            g.add_edge(edge.tail[1], edge.head[1], winding=edge.winding)
        return g

    def signature(self) -> tuple:
        """Isotopy-invariant encoding relative to the fixed cut."""
        g = self.graph
        best = None
        for start in sorted(g.kinds):
            order = {start: 0}
            queue = [start]
            while queue:
                v = queue.pop(0)
                ports = [e for e in g.edges.values() if e.tail[1] == v or e.head[1] == v]
                ports.sort(key=lambda e: (e.tail[1] != v, e.tail[2] if e.tail[1] == v else e.head[2]))
                for e in ports:
                    w = e.head[1] if e.tail[1] == v else e.tail[1]
                    if w not in order:
                        order[w] = len(order)
                        queue.append(w)
            if len(order) != len(g.kinds):
                for v in sorted(g.kinds):
                    if v not in order:
                        order[v] = len(order)
            enc = (
                tuple(g.kinds[v] for v in sorted(order, key=order.get)),
                tuple(sorted((order[e.tail[1]], e.tail[2], order[e.head[1]], e.head[2], e.winding)
                             for e in g.edges.values())),
            )
            if best is None or enc < best:
                best = enc
        kinds, edges = best if best is not None else ((), ())
        return self.arity, kinds, edges, len(g.free_loops)


def close(d: StrandDiagram) -> AnnularDiagram:
    """Annular closure of an (m,m)-diagram: sink j is glued to source j."""
    if d.sources != d.sinks:
        raise CompositionError(f"cannot close a ({d.sources},{d.sinks})-diagram")
    return _close_graph(sd.work_graph(d))


def _close_graph(src: WorkGraph) -> AnnularDiagram:
    """Closure that keeps the vertex ids of src."""
    g = WorkGraph(src.arity)
    for v, kind in src.kinds.items():
        g.kinds[v] = kind
        g.tags[v] = src.tags[v]
    g._next_v = src._next_v
    from_src = {j: src.by_tail[("src", j)] for j in range(src.sources)}
    used: set[int] = set()
    for edge in list(src.edges.values()):
        if edge.tail[0] != "out":
            continue
        labels, head = [], edge.head
        while head[0] == "snk":
            labels.append((head[1],))
            e = from_src[head[1]]
            used.add(e)
            head = src.edges[e].head
        g.add_edge(edge.tail, head, tuple(labels))
    for j, e in from_src.items():
        if e in used:
            continue
        labels = []
        while e not in used:
            used.add(e)
            head = src.edges[e].head
            labels.append((head[1],))
            e = from_src[head[1]]
        g.free_loops.append(tuple(sorted(labels)))
    return AnnularDiagram(g)


def reduce_annular(a: AnnularDiagram, rng: Optional[random.Random] = None) -> AnnularDiagram:
    return a.copy().reduce(rng)


@dataclass
class CycleStructure:
    split_loops: int = 0
    merge_loops: int = 0
    free_loops: int = 0
    cycles: list[list[int]] = field(default_factory=list)


def classify_cycles(a: AnnularDiagram) -> CycleStructure:
    """Every component of a reduced annular diagram has exactly one directed
    cycle, made only of splits or only of merges."""
    g = a.to_networkx()
    out = CycleStructure(free_loops=a.free_loops)
    limit = g.number_of_nodes() + 1
    cycles = list(itertools.islice(nx.simple_cycles(nx.DiGraph(g)), limit))
    seen: set[int] = set()
    for cycle in cycles:
        kinds = {a.graph.kinds[v] for v in cycle}
        if len(kinds) != 1:
            raise InvariantError(f"mixed cycle through vertices {cycle}")
        if seen & set(cycle):
            raise InvariantError("cycles share a vertex")
        seen |= set(cycle)
        if kinds == {SPLIT}:
            out.split_loops += 1
        else:
            out.merge_loops += 1
        out.cycles.append(sorted(cycle))
    for component in nx.weakly_connected_components(g):
        if not component & seen:
            raise InvariantError("component without a directed cycle")
    return out


# ---------------------------------------------------------------------------
# Essential parts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EssentialDecomposition:
    element: GroupElement
    conjugator: StrandDiagram   # S, a (1,m)-diagram
    essential: StrandDiagram    # E, an (m,m)-diagram
    steps: tuple = field(default=(), compare=False)

    @property
    def width(self) -> int:
        return self.essential.sources


def _straight_run(c: StrandDiagram) -> Optional[int]:
    head_of = c.head_of()
    straight = [head_of[("src", j)] == ("snk", j) for j in range(c.sources)]
    n = c.arity
    for p in range(c.sources - n + 1):
        if all(straight[p:p + n]):
            return p
    return None


def _cut_redex(c: StrandDiagram) -> Optional[tuple[dict, StrandDiagram]]:
    """Layer that carries the closure redex of least winding across the cut.

    The head vertex of such a redex is fed straight from the sources, so
    conjugating by that single vertex lowers the winding of the redex by one.
    """
    wg = sd.work_graph(c)
    annulus = _close_graph(wg)
    best = None
    for move, a, b in annulus.graph.redexes():
        winding = annulus.graph.edges[annulus.graph.by_tail[("out", a, 0)]].winding
        if winding == 0:
            raise InvariantError("reduced diagram closes onto an uncut redex")
        if best is None or winding < best[0]:
            best = (winding, move, a, b)
    if best is None:
        return None
    winding, move, a, w = best
    tail = wg.edges[wg.by_head[("in", w, 0)]].tail
    if tail[0] != "src":
        raise InvariantError(f"redex head {w} is not fed from the sources")
    layer = (wg.kinds[w], tail[1])
    record = {"move": move, "winding": winding, "layer": layer}
    return record, sd.from_layers(c.sources, [layer], c.arity)


def essential_decomposition(g: GroupElement) -> EssentialDecomposition:
    """Conjugate g until its annular closure admits no move.

    Straight runs of n strands are merged away first. Otherwise the closure
    redex of least winding is rotated one step across the cut.
    """
    n = g.arity
    conj = sd.identity(1, n)
    c = sd.reduce(g.diagram)
    steps = []
    limit = 8 * (c.vertex_count + 2) ** 2
    for _ in range(limit):
        p = _straight_run(c)
        if p is not None:
            layer = (MERGE, p)
            steps.append({"move": "C", "loops": n, "layer": layer})
            h = sd.from_layers(c.sources, [layer], n)
        else:
            found = _cut_redex(c)
            if found is None:
                break
            record, h = found
            steps.append(record)
        conj = sd.reduce(sd.compose(conj, h))
        c = sd.reduce(sd.compose_all([sd.invert(h), c, h]))
    else:
        raise InvariantError(f"no annular-reduced essential part after {limit} rotations")

    if not close(c).is_reduced():
        raise InvariantError("essential part closes onto a reducible annulus")
    rebuilt = sd.reduce(sd.compose_all([conj, c, sd.invert(conj)]))
    if rebuilt != g.diagram:
        raise InvariantError("S;E;S^-1 does not reproduce the element")
    if not sd.is_reduced(sd.compose(c, c)):
        raise InvariantError("essential part squared is not reduced")
    return EssentialDecomposition(g, conj, c, tuple(steps))


# ---------------------------------------------------------------------------
# Power forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerForm:
    """h g^p h~ = S+ ; E~^(p-k0+1) ; S- for every p >= k0."""
    s_plus: StrandDiagram
    e_tilde: StrandDiagram
    s_minus: StrandDiagram
    k0: int
    front: Optional[GroupElement] = field(default=None, compare=False)
    element: Optional[GroupElement] = field(default=None, compare=False)
    back: Optional[GroupElement] = field(default=None, compare=False)

    @property
    def width(self) -> int:
        return self.e_tilde.sources

    def diagram(self, p: int) -> StrandDiagram:
        if p < self.k0:
            raise ArgumentError(f"power form holds for p >= {self.k0}, got {p}")
        return sd.compose_all([self.s_plus, sd.power(self.e_tilde, p - self.k0 + 1), self.s_minus])


def _slice_by_tag(g: WorkGraph, top_tag: int) -> list[tuple[int, list]]:
    """(width, layers) for each tag level, fired in tag order."""
    frontier = None
    pieces = []
    for t in range(top_tag + 1):
        width = g.sources if frontier is None else len(frontier)
        layers, frontier, _ = g.sweep(allowed=lambda v, t=t: g.tags[v] <= t, frontier=frontier)
        pieces.append((width, layers))
    if sum(len(layers) for _, layers in pieces) != len(g.kinds):
        raise InvariantError("tag levels do not slice the reduced stack")
    return pieces


def _certify(form: PowerForm, h: GroupElement, g: GroupElement, h_tilde: GroupElement) -> bool:
    for p in range(form.k0, form.k0 + 3):
        raw = form.diagram(p)
        if not sd.is_reduced(raw):
            return False
        if sd.reduce(raw) != (h * g ** p * h_tilde).diagram:
            return False
    return True


def power_form(h: GroupElement, g: GroupElement, h_tilde: GroupElement,
               decomposition: Optional[EssentialDecomposition] = None) -> PowerForm:
    dec = decomposition or essential_decomposition(g)
    n = g.arity
    s_hat = sd.reduce(sd.compose(h.diagram, dec.conjugator))
    s_check = sd.reduce(sd.compose(sd.invert(dec.conjugator), h_tilde.diagram))
    copies = 2 * (s_hat.vertex_count + s_check.vertex_count) + 3
    e_word = sd.layer_word(dec.essential)
    layers = sd.layer_word(s_hat) + e_word * copies + sd.layer_word(s_check)
    tags = ([0] * s_hat.vertex_count
            + [t for t in range(1, copies + 1) for _ in e_word]
            + [copies + 1] * s_check.vertex_count)
    stack = WorkGraph.from_word(n, 1, layers, tags)
    stack.reduce()
    pieces = _slice_by_tag(stack, copies + 1)

    mid = (copies + 1) // 2
    lo = hi = mid
    while lo - 1 >= 1 and pieces[lo - 1] == pieces[mid]:
        lo -= 1
    while hi + 1 <= copies and pieces[hi + 1] == pieces[mid]:
        hi += 1

    def build(first: int, last: int) -> PowerForm:
        plus = sd.from_layers(1, [l for _, ls in pieces[:first] for l in ls], n)
        core = sd.from_layers(pieces[first][0], pieces[first][1], n)
        minus = sd.from_layers(pieces[last + 1][0], [l for _, ls in pieces[last + 1:] for l in ls], n)
        k0 = (first - 1) + (copies - last) + 1
        return PowerForm(plus, core, minus, k0)

    if hi > lo:
        form = build(lo, hi)
        if _certify(form, h, g, h_tilde):
            return replace(form, front=h, element=g, back=h_tilde)
        print(f"[PowerForm] peeled form failed certification at k0={form.k0}, retrying unpeeled")
    form = PowerForm(s_hat, dec.essential, s_check, 1)
    if _certify(form, h, g, h_tilde):
        return replace(form, front=h, element=g, back=h_tilde)
    raise CertificationError("power form does not reproduce h g^p h~")
