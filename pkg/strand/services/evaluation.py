"""Coefficients phi(g), calibration and skein-relation checks."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any

from strand.core import config
from strand.core.config import BackendConfig
from strand.core.diagram import MERGE, SPLIT
from strand.core.elements import GroupElement
from strand.core.errors import ArgumentError, CalibrationError
from strand.services.planar import CAP, CUP, Evaluator, Letter, closure_word
from strand.services.tensor_model import TensorEvaluator
from strand.services.trivalent import TemperleyLiebEvaluator


class EvaluatorRegistry:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._engines = {}
        return cls._instance

    def get(self, backend: BackendConfig, arity: int = 2) -> Evaluator:
        key = (backend.backend, backend.d, backend.model, backend.exact, arity)
        if key not in self._engines:
            print(f"[Registry] Building {backend.backend} evaluator for n={arity}")
            if backend.backend == "tl":
                self._engines[key] = TemperleyLiebEvaluator(backend.d, backend.exact, arity)
            elif backend.backend == "tensor":
                if backend.exact:
                    raise ArgumentError("the tensor backend has no exact mode")
                self._engines[key] = TensorEvaluator(backend.model, arity)
            else:
                raise ArgumentError(f"unknown backend '{backend.backend}'")
        return self._engines[key]

    def clear(self):
        self._engines.clear()

    def health_check(self) -> dict:
        return {
            "engines": [engine.health_check() for engine in self._engines.values()],
            "max_tensor_dim": config.MAX_TENSOR_DIM,
            "max_link_states": config.MAX_LINK_STATES,
            "max_tl_states": config.MAX_TL_STATES,
        }


evaluator_registry = EvaluatorRegistry()


def make_evaluator(backend: str = "tl", d: str = config.DEFAULT_D, model: str = "coloring3",
                   exact: bool = False, arity: int = 2) -> Evaluator:
    return evaluator_registry.get(BackendConfig(backend=backend, d=d, model=model, exact=exact), arity)


def _unit(ev: Evaluator) -> Any:
    loop = ev.loop_value()
    return loop / loop


def _triangle_coefficient(ev: Evaluator) -> Any:
    """t = (d - 2) / (d - 1)."""
    unit = _unit(ev)
    loop = ev.loop_value()
    return (loop - 2 * unit) / (loop - unit)


def coefficient(g: GroupElement, ev: Evaluator) -> Any:
    """phi(g): the trace closure of g divided by the loop value."""
    if g.arity != ev.arity:
        raise ArgumentError(f"element of F_{g.arity} given to an F_{ev.arity} evaluator")
    return ev.evaluate_word(closure_word(g.diagram)) / ev.loop_value()


# ---------------------------------------------------------------------------
# Calibration: values of small closed graphs
# ---------------------------------------------------------------------------

LOOP_WORD: list[Letter] = [(CUP, 0), (CAP, 0)]
BIGON_WORD: list[Letter] = [(CUP, 0), (SPLIT, 1), (MERGE, 1), (CAP, 0)]
THETA_WORD: list[Letter] = [(CUP, 0), (SPLIT, 0), (MERGE, 1), (CAP, 0)]
TETRAHEDRON_WORD: list[Letter] = [(CUP, 0), (SPLIT, 0), (SPLIT, 1), (MERGE, 2), (MERGE, 0), (CAP, 0)]


@dataclass
class Calibration:
    loop: Any
    bigon: Any
    theta: Any
    tetrahedron: Any

    @property
    def triangle(self) -> Any:
        return self.tetrahedron / self.theta


def calibrate(ev: Evaluator) -> Calibration:
    if ev.arity != 2:
        raise ArgumentError("calibration graphs are drawn for n = 2")
    loop = ev.evaluate_word(LOOP_WORD)
    cal = Calibration(
        loop=loop,
        bigon=ev.evaluate_word(BIGON_WORD) / loop,
        theta=ev.evaluate_word(THETA_WORD),
        tetrahedron=ev.evaluate_word(TETRAHEDRON_WORD),
    )
    if not ev.is_zero(cal.bigon - _unit(ev)):
        raise CalibrationError(f"bigon evaluates to {ev.to_complex(cal.bigon)}, expected 1")
    if not ev.is_zero(cal.theta - loop):
        raise CalibrationError(f"theta evaluates to {ev.to_complex(cal.theta)}, expected d")
    if not ev.is_zero(cal.triangle - _triangle_coefficient(ev)):
        raise CalibrationError(f"triangle evaluates to {ev.to_complex(cal.triangle)}, expected (d-2)/(d-1)")
    print(f"[Calibrate] {ev.name}: loop, bigon, theta and triangle consistent")
    return cal


# ---------------------------------------------------------------------------
# Skein relations in random closed contexts
# ---------------------------------------------------------------------------

def _opening(width: int, rng: random.Random) -> list[Letter]:
    """A random word from the empty frontier to the given width (n = 2)."""
    word: list[Letter] = [(CUP, 0)]
    w = 2
    while w < width:
        word.append((SPLIT, rng.randrange(w)))
        w += 1
    for _ in range(rng.randrange(3)):
        word.append((SPLIT, rng.randrange(w)))
        word.append((MERGE, rng.randrange(w)))
    while w > width:
        word.append((MERGE, rng.randrange(w - 1)))
        w -= 1
    return word


def _closing(width: int, rng: random.Random) -> list[Letter]:
    word: list[Letter] = []
    w = width
    for _ in range(rng.randrange(3)):
        word.append((SPLIT, rng.randrange(w)))
        word.append((MERGE, rng.randrange(w)))
    if w == 1:
        word.append((SPLIT, 0))
        w = 2
    while w > 2:
        word.append((MERGE, rng.randrange(w - 1)))
        w -= 1
    return word + [(CAP, 0)]


RELATIONS = ("unitarity", "exchange", "rotation", "rotation_mirror", "tadpole", "triangle")


def _relation_sides(name: str, o: int, ev: Evaluator) -> tuple[int, int, list[tuple[Any, list[Letter]]]]:
    """(input width, output width, combination that must vanish), local at strand o."""
    unit = _unit(ev)
    if name == "unitarity":
        return 1, 1, [(unit, [(SPLIT, o), (MERGE, o)]), (-unit, [])]
    if name == "exchange":
        k = unit / (ev.loop_value() - unit)
        return 2, 2, [
            (unit, [(MERGE, o), (SPLIT, o)]),
            (-unit, [(SPLIT, o), (MERGE, o + 1)]),
            (-k, []),
            (k, [(CAP, o), (CUP, o)]),
        ]
    if name == "rotation":
        return 1, 2, [(unit, [(SPLIT, o)]), (-unit, [(CUP, o + 1), (MERGE, o)])]
    if name == "rotation_mirror":
        return 1, 2, [(unit, [(SPLIT, o)]), (-unit, [(CUP, o), (MERGE, o + 1)])]
    if name == "tadpole":
        return 1, 0, [(unit, [(SPLIT, o), (CAP, o)])]
    if name == "triangle":
        return 1, 2, [
            (unit, [(SPLIT, o), (SPLIT, o), (MERGE, o + 1)]),
            (-_triangle_coefficient(ev), [(SPLIT, o)]),
        ]
    raise ArgumentError(f"unknown relation '{name}'")


def check_relations(ev: Evaluator, trials: int = 8, seed: int = 0,
                    relations: tuple[str, ...] = RELATIONS) -> dict[str, float]:
    """Largest residual of each relation over random closing contexts."""
    if ev.arity != 2:
        raise ArgumentError("relation contexts are drawn for n = 2")
    rng = random.Random(seed)
    report: dict[str, float] = {}
    for name in relations:
        worst = 0.0
        for _ in range(trials):
            extra = rng.randrange(3)
            o = rng.randrange(extra + 1)
            w_in, w_out, combo = _relation_sides(name, o, ev)
            width_in = w_in + extra
            opening = _opening(width_in, rng)
            width_out = width_in - w_in + w_out
            if width_out == 0:
                closing: list[Letter] = []
            else:
                closing = _closing(width_out, rng)
            total = None
            for coeff, local in combo:
                value = coeff * ev.evaluate_word(opening + local + closing)
                total = value if total is None else total + value
            if ev.is_zero(total):
                continue
            try:
                worst = max(worst, abs(ev.to_complex(total)) or float("inf"))
            except ArgumentError:
                worst = float("inf")
        report[name] = worst
    print(f"[Relations] {ev.name}: " + ", ".join(f"{k}={v:.2e}" for k, v in report.items()))
    return report


def assert_relations(ev: Evaluator, tol: float = 1e-9, **kwargs) -> dict[str, float]:
    report = check_relations(ev, **kwargs)
    bad = {k: v for k, v in report.items() if v > tol}
    if bad:
        raise CalibrationError(f"relations fail: {bad}")
    return report
