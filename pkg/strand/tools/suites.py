"""Named self-checks run by the verify command."""
from __future__ import annotations

import math
import random
from typing import Any

from strand.core import diagram as sd
from strand.core.annular import classify_cycles, close, essential_decomposition
from strand.core.elements import GroupElement, standard_generator, tree, word_element
from strand.core.errors import InvariantError, ResourceError, StrandError
from strand.services.evaluation import RELATIONS, assert_relations, calibrate, coefficient
from strand.services.planar import Evaluator, closure_word, vertex_count
from strand.services.spectral import measure_for_element
from strand.services.tensor_model import count_colorings
from strand.services.transfer import certify_transfer, transfer_for
from strand.tools.grammar import NAMED_ELEMENTS, parse_element


def _value(ev: Evaluator, x: Any) -> Any:
    return str(ev.specialize(x)) if ev.exact else ev.to_complex(x).real


def random_words(arity: int, count: int, seed: int = 0, length: int = 4) -> list[GroupElement]:
    """Seeded non-trivial products of standard generators."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        word = [(rng.randrange(4), rng.choice((-1, 1))) for _ in range(rng.randint(1, length))]
        g = word_element(word, arity)
        if not g.is_identity():
            out.append(g)
    return out


def _calibration(ev: Evaluator, **_) -> dict:
    if ev.arity != 2:
        return {"skipped": "calibration graphs are drawn for n = 2"}
    cal = calibrate(ev)
    return {
        "loop": _value(ev, cal.loop),
        "theta": _value(ev, cal.theta),
        "tetrahedron": _value(ev, cal.tetrahedron),
        "triangle": _value(ev, cal.triangle),
    }


def _relations(ev: Evaluator, trials: int = 50, seed: int = 0, **_) -> dict:
    if ev.arity != 2:
        return {"skipped": "relation contexts are drawn for n = 2"}
    # colouring models are not Temperley-Lieb categories
    names = RELATIONS if ev.name == "tl" else tuple(r for r in RELATIONS if r != "exchange")
    return {"residuals": assert_relations(ev, trials=trials, seed=seed, relations=names)}


def _group_relations(ev: Evaluator, depth: int = 4, **_) -> dict:
    """x_j x_i = x_i x_{j+n-1} for i < j, and the forest relation f_j f_i = f_i f_{j+n-1}."""
    n = ev.arity
    checked = 0
    for i in range(depth):
        for j in range(i + 1, depth + 1):
            lhs = standard_generator(j, n) * standard_generator(i, n)
            rhs = standard_generator(i, n) * standard_generator(j + n - 1, n)
            if lhs != rhs:
                raise InvariantError(f"x{j} x{i} != x{i} x{j + n - 1} in F_{n}")
            checked += 1
    for i in range(1, depth + 1):
        for j in range(i + 1, depth + 1):
            prefix = [1] * (j - 1)
            a = tree(prefix + [j, i], n)
            b = tree(prefix + [i, j + n - 1], n)
            if a != b:
                raise InvariantError(f"forest relation fails for i={i}, j={j}")
            checked += 1
    return {"checked": checked}


def _confluence(ev: Evaluator, seeds: int = 6, **_) -> dict:
    """Reduction of random products lands on one diagram whatever the move order."""
    n = ev.arity
    rng = random.Random(0)
    checked = 0
    for _ in range(4):
        gens = [standard_generator(rng.randrange(4), n) ** rng.choice((-1, 1)) for _ in range(3)]
        raw = sd.compose_all([g.diagram for g in gens])
        forms = {sd.reduce(raw, random.Random(s)) for s in range(seeds)}
        if len(forms) != 1:
            raise InvariantError("reduction depends on the order of moves")
        checked += 1
    return {"products": checked}


def _essential(ev: Evaluator, count: int = 8, **_) -> dict:
    """Essential parts rebuild g, square to reduced diagrams and close onto pure cycles."""
    widths = []
    for g in random_words(ev.arity, count, seed=1):
        dec = essential_decomposition(g)
        structure = classify_cycles(close(dec.essential))
        if structure.split_loops + structure.merge_loops + structure.free_loops == 0:
            raise InvariantError(f"essential part of {g!r} closes onto nothing")
        widths.append(dec.width)
    return {"elements": len(widths), "widths": widths}


def _oracle(ev: Evaluator, count: int = 4, **_) -> dict:
    """Transfer moments agree with direct closed-diagram evaluation."""
    dims = []
    for g in random_words(ev.arity, count, seed=2, length=3):
        ts = transfer_for(g, ev)
        certify_transfer(ts, extra=8)
        dims.append(ts.dimension)
    return {"elements": len(dims), "dimensions": dims}


def _measure(ev: Evaluator, **_) -> dict:
    if ev.symbolic:
        return {"skipped": "spectral measures need a numeric d"}
    n = ev.arity
    out = {}
    for label, g in (("x0", standard_generator(0, n)),
                     ("x0 x1", standard_generator(0, n) * standard_generator(1, n))):
        sm = measure_for_element(g, ev)
        out[label] = {"atoms": len(sm.atoms), "atom_mass": sum(a.weight for a in sm.atoms)}
    return out


def _coloring(ev: Evaluator, count: int = 10, max_vertices: int = 12, **_) -> dict:
    """Closed values equal colouring counts times P(kappa-1, n)^(-V/2)."""
    if ev.name != "tensor" or not getattr(ev, "model", "").startswith("coloring"):
        return {"skipped": "needs a colouring tensor model"}
    kappa, n = ev.kappa, ev.arity
    scale = math.perm(kappa - 1, n)
    checked = 0
    for g in random_words(n, 3 * count, seed=3):
        word = closure_word(g.diagram)
        v = vertex_count(word)
        if v > max_vertices:
            continue
        expected = count_colorings(word, kappa, n) * scale ** (-v / 2)
        got = ev.to_complex(ev.evaluate_word(word))
        if abs(got - expected) > 1e-9:
            raise InvariantError(f"closure of {g!r}: contraction {got:.12g}, colourings give {expected:.12g}")
        checked += 1
        if checked == count:
            break
    return {"closures": checked}


def _examples(ev: Evaluator, **_) -> dict:
    if ev.arity != 2:
        return {"skipped": "named elements live in F_2"}
    out = {}
    for name in NAMED_ELEMENTS:
        g = parse_element(name, 2)
        dec = essential_decomposition(g)
        out[name] = {
            "coefficient": _value(ev, coefficient(g, ev)),
            "essential_width": dec.width,
        }
    return out


SUITE_REGISTRY = {
    "calibration": _calibration,
    "relations": _relations,
    "group": _group_relations,
    "confluence": _confluence,
    "essential": _essential,
    "oracle": _oracle,
    "measure": _measure,
    "coloring": _coloring,
    "examples": _examples,
}


def run_suite(name: str, ev: Evaluator, **params) -> dict:
    if name not in SUITE_REGISTRY:
        return {"error": f"Suite '{name}' not found. Available: {list(SUITE_REGISTRY)}"}
    return SUITE_REGISTRY[name](ev, **params)


def get_available_suites() -> list[str]:
    return list(SUITE_REGISTRY)


def run_all(ev: Evaluator) -> dict:
    """One row per suite with status pass, fail or skipped."""
    rows, failed = [], []
    for name in SUITE_REGISTRY:
        try:
            detail = run_suite(name, ev)
            status = "skipped" if "skipped" in detail else "pass"
        except ResourceError as e:
            detail, status = {"skipped": str(e)}, "skipped"
        except StrandError as e:
            detail, status = {"error": str(e)}, "fail"
            failed.append(name)
        print(f"[Verify] {name}: {status}")
        rows.append({"suite": name, "status": status, "detail": detail})
    return {"suites": rows, "failed": failed}
