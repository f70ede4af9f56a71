"""Temperley-Lieb backend for F_2.

Each trivalent strand is a doubled Temperley-Lieb strand carrying the
Jones-Wenzl projector p2, so its loop value is d = delta^2 - 1. States are
sparse combinations of non-crossing perfect matchings on the doubled
frontier, point 2i and 2i+1 belonging to strand i.
"""
from __future__ import annotations

import math
import time
from collections import deque
from typing import Any

import numpy as np
import sympy
from sympy.polys.domains import QQ

from strand.core import config
from strand.core.diagram import MERGE, SPLIT
from strand.core.errors import ArgumentError, ResourceError
from strand.services.planar import (
    CAP, CUP, Evaluator, Letter, TransferPieces, closed_components, vertex_count, width_after,
)

DELTA = sympy.Symbol("delta", positive=True)

Matching = tuple[int, ...]


def parse_delta(d: str) -> sympy.Expr | None:
    """Exact loop parameter delta for a --d value; None when d is symbolic."""
    if d == "symbolic":
        return None
    if d.startswith("cos:"):
        k = int(d.split(":", 1)[1])
        return 2 * sympy.cos(sympy.pi / k)
    return sympy.sqrt(sympy.nsimplify(d) + 1)


def is_admissible(d: str) -> bool:
    """d >= 3, or d = 4 cos^2(pi/k) - 1 with k >= 6."""
    if d == "symbolic":
        return True
    if d.startswith("cos:"):
        return int(d.split(":", 1)[1]) >= 6
    value = float(d)
    if value >= 3 - 1e-12:
        return True
    # k = 6 gives d = 2 and the sequence increases to 3
    for k in range(6, 10_000):
        target = 4 * math.cos(math.pi / k) ** 2 - 1
        if abs(target - value) < 1e-12:
            return True
        if target > value:
            return False
    return False


# ---------------------------------------------------------------------------
# Matching moves
# ---------------------------------------------------------------------------

def _insert_cup(m: Matching, pos: int) -> Matching:
    moved = [p + 2 if p >= pos else p for p in m]
    return tuple(moved[:pos] + [pos + 1, pos] + moved[pos:])


def _drop_pair(m: list[int], pos: int) -> Matching:
    return tuple(p - 2 if p > pos + 1 else p for i, p in enumerate(m) if i not in (pos, pos + 1))


def _cap(m: Matching, pos: int) -> tuple[Matching, int]:
    """Join points pos and pos+1. Returns the matching and the number of loops closed."""
    a, b = m[pos], m[pos + 1]
    if a == pos + 1:
        return _drop_pair(list(m), pos), 1
    out = list(m)
    out[a], out[b] = b, a
    return _drop_pair(out, pos), 0


def _hook(m: Matching, i: int) -> Matching:
    """e_i applied to a matching in which i and i+1 are not paired."""
    a, b = m[i], m[i + 1]
    out = list(m)
    out[a], out[b] = b, a
    out[i], out[i + 1] = i + 1, i
    return tuple(out)


class TemperleyLiebEvaluator(Evaluator):
    name = "tl"

    def __init__(self, d: str = config.DEFAULT_D, exact: bool = False, arity: int = 2):
        if arity != 2:
            raise ArgumentError("the Temperley-Lieb backend evaluates F_2 only")
        if d == "symbolic" and not exact:
            raise ArgumentError("symbolic d needs exact arithmetic")
        if not is_admissible(d):
            raise ArgumentError(f"d={d} is not admissible: need d >= 3 or d = 4cos^2(pi/k)-1, k >= 6")
        self.d_spec = d
        self.exact = exact
        self.symbolic = d == "symbolic"
        self.delta_value = parse_delta(d)
        self._load_time_ms = None
        self.load()

    def load(self):
        start = time.time()
        if self.exact:
            self.K = QQ.frac_field(DELTA)
            self.one, self.zero = self.K.one, self.K.zero
            self.delta = self.K.from_sympy(DELTA)
        else:
            self.K = None
            self.one, self.zero = 1.0, 0.0
            self.delta = float(self.delta_value)
        self.inv_delta = self.one / self.delta
        # the raw bigon is (d-1)/delta; each vertex carries sqrt of its inverse
        self.vertex_weight_sq = self.delta / (self.delta * self.delta - 2 * self.one)
        self._closed: dict[tuple, Any] = {}
        self._load_time_ms = int((time.time() - start) * 1000)
        print(f"[TL] Ready: d={self.d_spec} exact={self.exact} in {self._load_time_ms}ms")

    # -- scalars ------------------------------------------------------------
    def loop_value(self) -> Any:
        return self.delta * self.delta - self.one

    def weight(self, vertices: int) -> Any:
        if vertices % 2:
            raise ArgumentError("a closed trivalent word has an even number of vertices")
        out = self.one
        for _ in range(vertices // 2):
            out = out * self.vertex_weight_sq
        return out

    def specialize(self, value: Any) -> sympy.Expr:
        if not self.exact:
            return sympy.Float(value)
        expr = self.K.to_sympy(value)
        if self.delta_value is None:
            return sympy.factor(expr)
        return sympy.simplify(expr.subs(DELTA, self.delta_value))

    def is_zero(self, value: Any, tol: float = 1e-9) -> bool:
        if self.exact:
            return value == self.zero
        return abs(value) <= tol

    def to_complex(self, value: Any) -> complex:
        if not self.exact:
            return complex(value)
        if self.delta_value is None:
            raise ArgumentError("a symbolic value has no numeric specialisation")
        return complex(sympy.N(self.K.to_sympy(value).subs(DELTA, self.delta_value), 30))

    # -- linear maps on matchings ---------------------------------------------
    def _add(self, out: dict, key: Matching, value: Any):
        total = out.get(key, self.zero) + value
        if total == self.zero:
            out.pop(key, None)
        else:
            out[key] = total

    def _project(self, state: dict, i: int) -> dict:
        """p2 = id - e_i / delta on points i, i+1."""
        out: dict = {}
        for m, v in state.items():
            if m[i] == i + 1:
                continue
            self._add(out, m, v)
            self._add(out, _hook(m, i), -v * self.inv_delta)
        return out

    def _cup(self, state: dict, pos: int) -> dict:
        return {_insert_cup(m, pos): v for m, v in state.items()}

    def _cap(self, state: dict, pos: int) -> dict:
        out: dict = {}
        for m, v in state.items():
            new, loops = _cap(m, pos)
            self._add(out, new, v * self.delta if loops else v)
        return out

    def apply(self, state: dict, letter: Letter) -> dict:
        kind, j = letter
        p = 2 * j
        if kind == SPLIT:
            state = self._cup(state, p + 1)
            state = self._project(state, p)
            return self._project(state, p + 2)
        if kind == MERGE:
            state = self._cap(state, p + 1)
            return self._project(state, p)
        if kind == CUP:
            state = self._cup(state, p)
            state = self._cup(state, p + 1)
            return self._project(state, p)
        if kind == CAP:
            state = self._cap(state, p + 1)
            return self._cap(state, p)
        raise ArgumentError(f"unknown planar letter '{kind}'")

    def run(self, word: list[Letter], state: dict | None = None) -> dict:
        state = {(): self.one} if state is None else state
        for letter in word:
            state = self.apply(state, letter)
            if len(state) > config.MAX_TL_STATES:
                raise ResourceError(f"Temperley-Lieb expansion exceeds {config.MAX_TL_STATES} matchings")
        return state

    # -- closed values ----------------------------------------------------------
    def evaluate_word(self, word: list[Letter]) -> Any:
        if width_after(0, word, 2) != 0:
            raise ArgumentError("word does not close the frontier")
        raw = self.one
        for part in closed_components(word, 2):
            key = tuple(part)
            if key not in self._closed:
                self._closed[key] = self.run(part).get((), self.zero)
            raw = raw * self._closed[key]
        return raw * self.weight(vertex_count(word))

    def transfer_pieces(self, prefix: list[Letter], core: list[Letter],
                        suffix: list[Letter]) -> TransferPieces:
        width = width_after(0, prefix, 2)
        if width_after(width, core, 2) != width or width_after(width, suffix, 2) != 0:
            raise ArgumentError("core must preserve and suffix must close the frontier")
        core_w = self.weight(vertex_count(core))
        edge_w = self.weight(vertex_count(prefix) + vertex_count(suffix)) / self.loop_value()

        start = self.run(prefix)
        index: dict[Matching, int] = {}
        columns: list[dict] = []
        queue = deque(sorted(start))
        for m in queue:
            index.setdefault(m, len(index))
        while queue:
            m = queue.popleft()
            image = self.run(core, {m: self.one})
            columns.append((m, image))
            for key in sorted(image):
                if key not in index:
                    index[key] = len(index)
                    if len(index) > config.MAX_LINK_STATES:
                        raise ResourceError(
                            f"transfer basis exceeds {config.MAX_LINK_STATES} link states")
                    queue.append(key)
        basis = sorted(index, key=index.get)
        size = len(basis)
        eta = [self.run(suffix, {m: self.one}).get((), self.zero) * edge_w for m in basis]
        xi = [start.get(m, self.zero) for m in basis]
        matrix = [[self.zero] * size for _ in range(size)]
        for m, image in columns:
            col = index[m]
            for key, v in image.items():
                matrix[index[key]][col] = v * core_w
        if not self.exact:
            return TransferPieces(np.array(xi, dtype=complex), np.array(matrix, dtype=complex),
                                  np.array(eta, dtype=complex), basis)
        return TransferPieces(xi, matrix, eta, basis)

    def health_check(self) -> dict:
        return {
            "backend": self.name,
            "d": self.d_spec,
            "exact": self.exact,
            "delta": str(self.delta_value),
            "load_time_ms": self._load_time_ms,
        }
