"""Command line entry point: python -m strand.main <command> [options]."""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time
from pathlib import Path

from strand.core import config
from strand.core import diagram as sd
from strand.core.annular import essential_decomposition
from strand.core.config import RunConfig, load_run_config
from strand.core.elements import GroupElement
from strand.core.errors import ArgumentError, InvariantError, ResourceError, StrandError
from strand.services.evaluation import calibrate, coefficient, evaluator_registry
from strand.services.spectral import (
    density_csv,
    measure_for_vector,
    moments_closed_form,
    sample_density,
    spectral_measure,
)
from strand.services.transfer import transfer_for
from strand.tools.grammar import load_element_file, parse_element, parse_psi
from strand.tools.suites import run_all

STARTUP_TIME = time.time()

COMMANDS = ("reduce", "essential", "coefficient", "moments", "measure", "verify", "calibrate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strand", description="Thompson group coefficients and spectral measures")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, default=2, help="arity of F_n")
    p.add_argument("--backend", default="tl", help="tl or tensor")
    p.add_argument("--d", default=config.DEFAULT_D, help="loop value: number, cos:k or symbolic")
    p.add_argument("--model", default="coloring3", help="tensor model name")
    p.add_argument("--element", help="A, N, X, 'TOP ; BOTTOM' tree words or 'x0 x1^-1'")
    p.add_argument("--element-file", help="diagram JSON or a text file in the element grammar")
    p.add_argument("--psi", action="append", default=[], help="vector term coeff:element (repeatable)")
    p.add_argument("--max", type=int, default=10, dest="max_moment", help="largest |p| for moments")
    p.add_argument("--samples", type=int, default=64, help="density samples printed or written")
    p.add_argument("--out", help="write JSON (or CSV for measure) here")
    p.add_argument("--exact", action="store_true", help="exact arithmetic in Q(delta)")
    p.add_argument("--json", action="store_true", dest="as_json", help="print JSON")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    return load_run_config(
        command=ns.command,
        n=ns.n,
        backend={"backend": ns.backend, "d": ns.d, "model": ns.model, "exact": ns.exact},
        element=ns.element,
        element_file=ns.element_file,
        psi=ns.psi,
        max_moment=ns.max_moment,
        samples=ns.samples,
        out=ns.out,
        as_json=ns.as_json,
    )


def _element(cfg: RunConfig) -> GroupElement:
    if cfg.element_file:
        return load_element_file(cfg.element_file, cfg.n)
    return parse_element(cfg.element, cfg.n)


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.12g}" if abs(z.imag) < 1e-12 else f"{z.real:.12g}{z.imag:+.12g}j"


def _fmt(ev, value) -> str:
    if ev.exact:
        return str(ev.specialize(value))
    return _fmt_complex(value)


def _tree_pair(g: GroupElement) -> dict:
    top, bottom = g.to_tree_pair()
    return {"top": top, "bottom": bottom}


def cmd_reduce(cfg: RunConfig) -> dict:
    g = _element(cfg)
    return {"element": _tree_pair(g), "vertices": g.diagram.vertex_count, "diagram": sd.to_json(g.diagram)}


def cmd_essential(cfg: RunConfig) -> dict:
    dec = essential_decomposition(_element(cfg))
    return {
        "width": dec.width,
        "conjugator": sd.to_json(dec.conjugator),
        "essential": sd.to_json(dec.essential),
    }


def cmd_coefficient(cfg: RunConfig) -> dict:
    ev = evaluator_registry.get(cfg.backend, cfg.n)
    return {"coefficient": _fmt(ev, coefficient(_element(cfg), ev))}


def cmd_moments(cfg: RunConfig) -> dict:
    ev = evaluator_registry.get(cfg.backend, cfg.n)
    ts = transfer_for(_element(cfg), ev)
    mcf = moments_closed_form(ts)
    moments = {}
    for p in range(-cfg.max_moment, cfg.max_moment + 1):
        value = mcf.moment(p)
        moments[str(p)] = str(value) if mcf.symbolic else _fmt_complex(value)
    return {
        "k0": mcf.k0,
        "transfer_dimension": ts.dimension,
        "basis": ts.basis_descr,
        "closed_form": mcf.to_json(),
        "moments": moments,
    }


def cmd_measure(cfg: RunConfig) -> dict:
    ev = evaluator_registry.get(cfg.backend, cfg.n)
    g = _element(cfg)
    if cfg.psi:
        sm = measure_for_vector(g, parse_psi(cfg.psi, cfg.n), ev)
    else:
        sm = spectral_measure(moments_closed_form(transfer_for(g, ev)))
    samples = sample_density(sm, cfg.samples)
    if cfg.out and cfg.out.endswith(".csv"):
        Path(cfg.out).write_text(density_csv(samples))
    return {**sm.to_json(), "warnings": sm.warnings,
            "samples": [{"theta": t, "f": f} for t, f in samples]}


def cmd_verify(cfg: RunConfig) -> dict:
    ev = evaluator_registry.get(cfg.backend, cfg.n)
    return run_all(ev)


def cmd_calibrate(cfg: RunConfig) -> dict:
    ev = evaluator_registry.get(cfg.backend, cfg.n)
    cal = calibrate(ev)
    return {
        "loop": _fmt(ev, cal.loop),
        "bigon": _fmt(ev, cal.bigon),
        "theta": _fmt(ev, cal.theta),
        "tetrahedron": _fmt(ev, cal.tetrahedron),
        "triangle": _fmt(ev, cal.triangle),
    }


HANDLERS = {
    "reduce": cmd_reduce,
    "essential": cmd_essential,
    "coefficient": cmd_coefficient,
    "moments": cmd_moments,
    "measure": cmd_measure,
    "verify": cmd_verify,
    "calibrate": cmd_calibrate,
}


def _render(result: dict, as_json: bool) -> str:
    if as_json:
        return json.dumps(result, indent=2, sort_keys=True)
    lines = []
    for key, value in result.items():
        if key in ("samples", "closed_form"):
            continue
        if key in ("diagram", "conjugator", "essential"):
            lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
        elif key == "suites":
            lines.append(f"{'suite':<12} {'status':<8} detail")
            for row in value:
                lines.append(f"{row['suite']:<12} {row['status'].upper():<8} "
                             f"{json.dumps(row['detail'], sort_keys=True)}")
        elif isinstance(value, dict):
            lines.append(f"{key}:")
            lines += [f"  {k}: {v}" for k, v in value.items()]
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines)


def run(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else ArgumentError.exit_code
    try:
        cfg = _config(ns)
        # progress lines from the engines go to stderr, results to stdout
        with contextlib.redirect_stdout(sys.stderr):
            print(f"=== strand {cfg.command} (n={cfg.n}, backend={cfg.backend.backend}) ===")
            result = HANDLERS[cfg.command](cfg)
            print(f"=== done in {time.time() - STARTUP_TIME:.2f}s ===")
    except StrandError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except MemoryError:
        print("error: out of memory; lower the element size or the state caps", file=sys.stderr)
        return ResourceError.exit_code
    if cfg.out and not cfg.out.endswith(".csv"):
        Path(cfg.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(_render(result, cfg.as_json))
    if result.get("failed"):
        print(f"error: suites failed: {', '.join(result['failed'])}", file=sys.stderr)
        return InvariantError.exit_code
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
