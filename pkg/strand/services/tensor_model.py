"""Tensor-network backend.

A trivalent vertex is a tensor R with one input index and n output indices;
splits contract with R, merges with its conjugate. Strand states carry a
trailing batch axis so a whole basis can be pushed through a word at once.
"""
from __future__ import annotations

import itertools
import time
from typing import Any, Callable

import networkx as nx
import numpy as np

from strand.core import config
from strand.core.diagram import MERGE, SPLIT
from strand.core.errors import ArgumentError, ResourceError
from strand.services.planar import CAP, CUP, Evaluator, Letter, TransferPieces, width_after


def coloring_tensor(colors: int = 3, arity: int = 2, normalised: bool = True) -> np.ndarray:
    """R[i, j, ...] nonzero exactly when all n+1 colours differ."""
    if colors < arity + 1:
        raise ArgumentError(f"{colors} colours cannot colour an {arity + 1}-valent vertex")
    shape = (colors,) * (arity + 1)
    r = np.zeros(shape)
    for idx in itertools.permutations(range(colors), arity + 1):
        r[idx] = 1.0
    if normalised:
        # bigon = 1: sum over the n outgoing colours of |R|^2 for a fixed input
        r /= np.sqrt(np.sum(r[0] ** 2))
    return r


MODEL_REGISTRY: dict[str, Callable[[int], np.ndarray]] = {
    "coloring3": lambda arity: coloring_tensor(3, arity),
    "coloring4": lambda arity: coloring_tensor(4, arity),
}


class TensorEvaluator(Evaluator):
    name = "tensor"
    exact = False

    def __init__(self, model: str = "coloring3", arity: int = 2, tensor: np.ndarray | None = None):
        if tensor is None and model not in MODEL_REGISTRY:
            raise ArgumentError(f"unknown tensor model '{model}', known: {sorted(MODEL_REGISTRY)}")
        self.model = model
        self.arity = arity
        self._tensor = tensor
        self._load_time_ms = None
        self.load()

    def load(self):
        start = time.time()
        r = self._tensor if self._tensor is not None else MODEL_REGISTRY[self.model](self.arity)
        r = np.asarray(r, dtype=complex)
        if r.ndim != self.arity + 1 or len(set(r.shape)) != 1:
            raise ArgumentError(f"vertex tensor must be cubical of order {self.arity + 1}")
        self.R = r
        self.kappa = r.shape[0]
        self._load_time_ms = int((time.time() - start) * 1000)
        print(f"[Tensor] Ready: model={self.model} kappa={self.kappa} in {self._load_time_ms}ms")

    def loop_value(self) -> float:
        return float(self.kappa)

    def to_complex(self, value: Any) -> complex:
        return complex(value)

    # -- contractions ---------------------------------------------------------
    def apply(self, state: np.ndarray, letter: Letter) -> np.ndarray:
        kind, j = letter
        n = self.arity
        if kind == SPLIT:
            out = np.tensordot(state, self.R, axes=([j], [0]))
            return np.moveaxis(out, list(range(-n, 0)), list(range(j, j + n)))
        if kind == MERGE:
            out = np.tensordot(state, self.R.conj(), axes=(list(range(j, j + n)), list(range(1, n + 1))))
            return np.moveaxis(out, -1, j)
        if kind == CUP:
            out = np.multiply.outer(state, np.eye(self.kappa))
            return np.moveaxis(out, [-2, -1], [j, j + 1])
        if kind == CAP:
            return np.trace(state, axis1=j, axis2=j + 1)
        raise ArgumentError(f"unknown planar letter '{kind}'")

    def run(self, word: list[Letter], state: np.ndarray) -> np.ndarray:
        for letter in word:
            state = self.apply(state, letter)
        return state

    def evaluate_word(self, word: list[Letter]) -> complex:
        if width_after(0, word, self.arity) != 0:
            raise ArgumentError("word does not close the frontier")
        return complex(self.run(word, np.ones((1,), dtype=complex))[0])

    def _basis_batch(self, width: int) -> np.ndarray:
        dim = self.kappa ** width
        if dim > config.MAX_TENSOR_DIM:
            raise ResourceError(f"transfer dimension {dim} exceeds {config.MAX_TENSOR_DIM}")
        return np.eye(dim, dtype=complex).reshape((self.kappa,) * width + (dim,))

    def transfer_pieces(self, prefix: list[Letter], core: list[Letter],
                        suffix: list[Letter]) -> TransferPieces:
        width = width_after(0, prefix, self.arity)
        if width_after(width, core, self.arity) != width or width_after(width, suffix, self.arity) != 0:
            raise ArgumentError("core must preserve and suffix must close the frontier")
        basis = self._basis_batch(width)
        dim = basis.shape[-1]
        xi = self.run(prefix, np.ones((1,), dtype=complex)).reshape(dim)
        matrix = self.run(core, basis).reshape(dim, dim)
        eta = self.run(suffix, basis).reshape(dim) / self.kappa
        labels = list(itertools.product(range(self.kappa), repeat=width))
        return TransferPieces(xi, matrix, eta, labels)

    def health_check(self) -> dict:
        return {
            "backend": self.name,
            "model": self.model,
            "kappa": self.kappa,
            "load_time_ms": self._load_time_ms,
        }


def coloring_graph(word: list[Letter], arity: int = 2) -> tuple[nx.MultiGraph, int]:
    """The closed trivalent graph drawn by word, and its number of vertex-free loops.

    Nodes are the positions of splits and merges in word.
    """
    parent: list[int] = []
    ends: list[list[int]] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def segment(*attached: int) -> int:
        parent.append(len(parent))
        ends.append(list(attached))
        return len(parent) - 1

    frontier: list[int] = []
    for v, (kind, j) in enumerate(word):
        if kind == SPLIT:
            ends[frontier[j]].append(v)
            frontier[j:j + 1] = [segment(v) for _ in range(arity)]
        elif kind == MERGE:
            for s in frontier[j:j + arity]:
                ends[s].append(v)
            frontier[j:j + arity] = [segment(v)]
        elif kind == CUP:
            s = segment()
            frontier[j:j] = [s, s]
        elif kind == CAP:
            a, b = find(frontier[j]), find(frontier[j + 1])
            if a != b:
                parent[a] = b
            del frontier[j:j + 2]
        else:
            raise ArgumentError(f"unknown planar letter '{kind}'")
    if frontier:
        raise ArgumentError("word does not close the frontier")

    g = nx.MultiGraph()
    g.add_nodes_from(v for v, (kind, _) in enumerate(word) if kind in (SPLIT, MERGE))
    joined: dict[int, list[int]] = {}
    for s in range(len(parent)):
        joined.setdefault(find(s), []).extend(ends[s])
    loops = 0
    for attached in joined.values():
        if not attached:
            loops += 1
        elif len(attached) == 2:
            g.add_edge(*attached)
        else:
            raise ArgumentError(f"strand meets {len(attached)} vertex ends")
    return g, loops


def count_colorings(word: list[Letter], colors: int = 3, arity: int = 2) -> int:
    """Number of proper edge colourings of the closed graph drawn by word."""
    g, loops = coloring_graph(word, arity)
    if nx.number_of_selfloops(g):
        return 0
    order = list(nx.edge_bfs(g))
    used: dict[int, set[int]] = {v: set() for v in g.nodes}

    def backtrack(i: int) -> int:
        if i == len(order):
            return 1
        u, v, _ = order[i]
        total = 0
        for c in range(colors):
            if c in used[u] or c in used[v]:
                continue
            used[u].add(c)
            used[v].add(c)
            total += backtrack(i + 1)
            used[u].discard(c)
            used[v].discard(c)
        return total

    return backtrack(0) * colors ** loops
