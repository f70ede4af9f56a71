"""Closed-form moments and spectral measures.

For p >= k0 a moment is a finite sum of terms c * C(N, q) * lam^(N-q) with
N = p - k0 + 1. Terms with |lam| = 1 and q = 0 are atoms of the spectral
measure; terms inside the disc sum to a rational density in e^(i theta).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg
import sympy
from sympy.polys.matrices import DomainMatrix

from strand.core import config
from strand.core.elements import GroupElement
from strand.core.errors import (
    ArgumentError,
    CertificationError,
    ClusteringError,
    InconsistencyError,
    InvariantError,
)
from strand.services.evaluation import coefficient
from strand.services.planar import Evaluator
from strand.services.transfer import TransferSystem, transfer_for
from strand.services.trivalent import DELTA

LAM = sympy.Symbol("lam")


@dataclass
class MomentTerm:
    lam: Any
    q: int
    c: Any

    def value(self, n: int) -> Any:
        if n < self.q:
            return 0
        if self.lam == 0:
            return self.c if n == self.q else 0
        return self.c * math.comb(n, self.q) * self.lam ** (n - self.q)


@dataclass
class MomentClosedForm:
    k0: int
    terms: Optional[list[MomentTerm]]
    head: list
    sources: list[tuple[complex, TransferSystem]] = field(default_factory=list)
    exact_terms: Optional[list[MomentTerm]] = None

    @property
    def symbolic(self) -> bool:
        return self.terms is None

    def moment(self, p: int) -> Any:
        if p < 0:
            # symbolic moments live in the real field Q(delta)
            return self.moment(-p) if self.symbolic else complex(self.moment(-p)).conjugate()
        if p < self.k0:
            return self.head[p]
        terms = self.terms if self.terms is not None else self.exact_terms
        n = p - self.k0 + 1
        total = 0
        for term in terms:
            total = total + term.value(n)
        return sympy.cancel(total) if self.terms is None else complex(total)

    def iterate(self, count: int) -> np.ndarray:
        """mu_0 .. mu_{count-1} by repeated application of the transfer matrices."""
        out = np.zeros(count, dtype=complex)
        for p in range(min(count, self.k0)):
            out[p] = complex(self.head[p])
        for weight, ts in self.sources:
            m, xi, eta = ts.numeric()
            v = xi.copy()
            for _ in range(self.k0 - ts.k0 + 1):
                v = m @ v
            for p in range(self.k0, count):
                out[p] += weight * (eta @ v)
                v = m @ v
        return out

    def to_json(self) -> dict:
        terms = self.terms or []
        out = {
            "k0": self.k0,
            "head": [_complex_json(complex(x)) for x in self.head] if not self.symbolic
            else [str(x) for x in self.head],
            "terms": [{"lambdaRe": t.lam.real, "lambdaIm": t.lam.imag, "q": t.q,
                       "cRe": t.c.real, "cIm": t.c.imag} for t in terms],
        }
        if self.exact_terms is not None:
            out["exactTerms"] = [{"lambda": str(t.lam), "q": t.q, "c": str(t.c)} for t in self.exact_terms]
        return out


def _complex_json(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


# ---------------------------------------------------------------------------
# Numeric spectral data
# ---------------------------------------------------------------------------

def _cluster(eigs: np.ndarray, tol: float) -> list[list[int]]:
    parent = list(range(len(eigs)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            if abs(eigs[i] - eigs[j]) <= tol * max(1.0, abs(eigs[i])):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(eigs)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: (-abs(np.mean(eigs[g])), np.angle(np.mean(eigs[g]))))


def _check_circle_ambiguity(eigs: np.ndarray, tol: float):
    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            a, b = abs(eigs[i]) - 1, abs(eigs[j]) - 1
            if abs(eigs[i] - eigs[j]) < 10 * tol and a * b < 0 \
                    and max(abs(a), abs(b)) > config.CIRCLE_TOL:
                raise ClusteringError(
                    f"eigenvalues {eigs[i]:.6g} and {eigs[j]:.6g} straddle the unit circle")


def _snap(lam: complex) -> complex:
    r = abs(lam)
    if r < 1e-12:
        return 0j
    if abs(r - 1) < config.CIRCLE_TOL:
        return lam / r
    return lam


def _null_basis(a: np.ndarray, r: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(a)
    return vh[-r:].conj().T


def _project_terms(m: np.ndarray, xi: np.ndarray, eta: np.ndarray, eigs: np.ndarray,
                   groups: list[list[int]]) -> Optional[list[MomentTerm]]:
    dim = m.shape[0]
    eye = np.eye(dim)
    terms = []
    for group in groups:
        lam = complex(np.mean(eigs[group]))
        r = len(group)
        shifted_power = np.linalg.matrix_power(m - lam * eye, r)
        u = _null_basis(shifted_power, r)
        y = _null_basis(shifted_power.conj().T, r)
        gram = y.conj().T @ u
        if np.linalg.cond(gram) > 1e12:
            return None
        proj = u @ np.linalg.solve(gram, y.conj().T)
        if np.linalg.norm(proj, 2) > 1e8:
            return None
        nil = (m - lam * eye) @ proj
        vec = proj @ xi
        for q in range(r):
            c = complex(eta @ vec)
            if abs(c) > 1e-13:
                terms.append(MomentTerm(_snap(lam), q, c))
            vec = nil @ vec
    # the decomposition must reproduce direct powers
    v = xi.astype(complex)
    for n in range(dim + 6):
        direct = complex(eta @ v)
        closed = sum(t.value(n) for t in terms)
        if abs(direct - closed) > 1e-8 * max(1.0, abs(direct)):
            return None
        v = m @ v
    return terms


def numeric_terms(m: np.ndarray, xi: np.ndarray, eta: np.ndarray,
                  tol: float = config.CLUSTER_TOL) -> list[MomentTerm]:
    """Terms with eta . M^N . xi = sum c C(N, q) lam^(N-q) for all N >= 0."""
    if m.shape[0] == 0:
        return []
    eigs = scipy.linalg.eigvals(m)
    _check_circle_ambiguity(eigs, tol)
    groups = _cluster(eigs, tol)
    while True:
        terms = _project_terms(m, xi, eta, eigs, groups)
        if terms is not None:
            return terms
        if len(groups) == 1:
            raise ClusteringError("no stable spectral decomposition of the transfer matrix")
        # merge the two nearest clusters and retry
        centres = [np.mean(eigs[g]) for g in groups]
        best = min(((abs(centres[i] - centres[j]), i, j)
                    for i in range(len(groups)) for j in range(i + 1, len(groups))))
        _, i, j = best
        groups[i] = groups[i] + groups[j]
        del groups[j]
        print(f"[Spectral] merged eigenvalue clusters, {len(groups)} remain")


# ---------------------------------------------------------------------------
# Exact spectral data over Q(delta)
# ---------------------------------------------------------------------------

class _NotSplit(Exception):
    pass


def _matvec(rows: list, v: list, zero: Any) -> list:
    return [sum((a * b for a, b in zip(row, v)), zero) for row in rows]


def minimal_polynomial(ts: TransferSystem) -> sympy.Expr:
    """Monic minimal polynomial in lam of xi under M, over Q(delta)."""
    ev = ts.evaluator
    K, zero = ev.K, ev.zero
    dim = ts.dimension
    rows = ts.pieces.matrix
    vecs = [list(ts.pieces.xi)]
    if all(a == zero for a in vecs[0]):
        return sympy.Integer(1)
    while True:
        nxt = _matvec(rows, vecs[-1], zero)
        k = len(vecs)
        cols = vecs + [nxt]
        a = DomainMatrix([[col[i] for col in cols] for i in range(dim)], (dim, k + 1), K)
        reduced, pivots = a.rref()
        if k in pivots:
            vecs.append(nxt)
            continue
        sol = reduced.to_Matrix()
        return LAM ** k - sum(sol[i, k] * LAM ** i for i in range(k))


def exact_roots(ts: TransferSystem) -> dict:
    """Roots of the minimal polynomial with multiplicities; raises _NotSplit."""
    numer, _ = sympy.fraction(sympy.together(minimal_polynomial(ts)))
    _, factors = sympy.factor_list(sympy.expand(numer), LAM, DELTA)
    roots: dict = {}
    for f, mult in factors:
        deg = sympy.degree(f, LAM)
        if deg == 0:
            continue
        if deg > 1:
            raise _NotSplit(str(f))
        f = sympy.expand(f)
        root = sympy.cancel(-f.coeff(LAM, 0) / f.coeff(LAM, 1))
        roots[root] = roots.get(root, 0) + mult
    return roots


def exact_terms(ts: TransferSystem) -> list[MomentTerm]:
    """Exact terms from the Krylov minimal polynomial of xi under M."""
    ev = ts.evaluator
    zero = ev.zero
    roots = exact_roots(ts)
    k = sum(roots.values())
    if k == 0:
        return []

    moments = []
    v = list(ts.pieces.xi)
    for _ in range(k):
        moments.append(ev.K.to_sympy(sum((a * b for a, b in zip(ts.pieces.eta, v)), zero)))
        v = _matvec(ts.pieces.matrix, v, zero)

    unknowns = [(lam, q) for lam, r in roots.items() for q in range(r)]
    system = sympy.zeros(k, len(unknowns))
    for n in range(k):
        for col, (lam, q) in enumerate(unknowns):
            system[n, col] = MomentTerm(lam, q, sympy.Integer(1)).value(n)
    solution = system.LUsolve(sympy.Matrix(moments))
    terms = []
    for (lam, q), c in zip(unknowns, solution):
        c = sympy.cancel(c)
        if c != 0:
            terms.append(MomentTerm(lam, q, c))
    return terms


def _specialize_terms(terms: list[MomentTerm], delta_value) -> Optional[list[MomentTerm]]:
    out = []
    for t in terms:
        lam = sympy.N(sympy.sympify(t.lam).subs(DELTA, delta_value), 30)
        c = sympy.N(sympy.sympify(t.c).subs(DELTA, delta_value), 30)
        if not (lam.is_finite and c.is_finite):
            return None
        out.append(MomentTerm(_snap(complex(lam)), t.q, complex(c)))
    return out


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _head(ts: TransferSystem) -> list:
    form, ev = ts.form, ts.evaluator
    head = []
    for p in range(ts.k0):
        value = coefficient(form.front * form.element ** p * form.back, ev)
        head.append(ev.specialize(value) if ev.symbolic else ev.to_complex(value))
    return head


def _check_bounded(terms: list[MomentTerm]):
    for t in terms:
        if abs(t.lam) > 1 + config.CIRCLE_TOL and abs(t.c) > 1e-9:
            raise CertificationError(f"moment term grows like |{t.lam:.6g}|^p")


def moments_closed_form(ts: TransferSystem) -> MomentClosedForm:
    ev = ts.evaluator
    head = _head(ts)
    exact = None
    terms = None
    if ev.exact:
        try:
            exact = exact_terms(ts)
        except _NotSplit as e:
            if ev.symbolic:
                raise ArgumentError(
                    f"minimal polynomial factor {e} does not split over Q(delta); pass a numeric d")
            print(f"[Spectral] minimal polynomial does not split, using the numeric path")
        if exact is not None and not ev.symbolic:
            terms = _specialize_terms(exact, ev.delta_value)
            if terms is None:
                print("[Spectral] exact terms have a pole at this d, using the numeric path")
        if ev.symbolic:
            mcf = MomentClosedForm(ts.k0, None, head, [(1.0, ts)], exact)
            for p in range(ts.k0, ts.k0 + 11):
                if sympy.cancel(mcf.moment(p) - ev.specialize(ts.moment(p))) != 0:
                    raise CertificationError(f"exact closed form disagrees at p={p}")
            return mcf
    if terms is None:
        m, xi, eta = ts.numeric()
        terms = numeric_terms(m, xi, eta)
    _check_bounded(terms)
    mcf = MomentClosedForm(ts.k0, terms, head, [(1.0, ts)], exact)
    for p in range(ts.k0, ts.k0 + 11):
        direct = ev.to_complex(ts.moment(p))
        if abs(mcf.moment(p) - direct) > 1e-9 * max(1.0, abs(direct)):
            raise CertificationError(f"closed form disagrees with the transfer matrix at p={p}")
    return mcf


def shift_terms(terms: list[MomentTerm], s: int) -> list[MomentTerm]:
    """Re-express terms in N' = N - s, using C(N'+s, q) = sum_j C(N', j) C(s, q-j)."""
    out: dict[tuple[complex, int], complex] = {}
    for t in terms:
        for j in range(t.q + 1):
            b = math.comb(s, t.q - j)
            if b == 0:
                continue
            power = s - t.q + j
            factor = b * (t.lam ** power if power > 0 else 1)
            if t.lam == 0 and power > 0:
                continue
            key = (t.lam, j)
            out[key] = out.get(key, 0) + t.c * factor
    return [MomentTerm(lam, q, c) for (lam, q), c in out.items() if abs(c) > 1e-15]


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

@dataclass
class Atom:
    point: complex
    weight: float

    @property
    def angle(self) -> float:
        return float(np.angle(self.point) % (2 * np.pi))


@dataclass
class SpectralMeasure:
    atoms: list[Atom]
    density_terms: list[MomentTerm]
    trig_correction: dict[int, complex]
    k0: int
    warnings: list[str] = field(default_factory=list)

    def _series(self, theta: np.ndarray) -> np.ndarray:
        z = np.exp(-1j * np.asarray(theta, dtype=float))
        total = np.zeros_like(z)
        for p, nu in self.trig_correction.items():
            if p > 0:
                total += nu * z ** p
        for t in self.density_terms:
            body = z ** t.q / (1 - t.lam * z) ** (t.q + 1)
            if t.q == 0:
                body = body - 1
            total += t.c * z ** (self.k0 - 1) * body
        return total

    def density_complex(self, theta: np.ndarray) -> np.ndarray:
        g = self._series(theta)
        return self.trig_correction.get(0, 0) + g + np.conj(g)

    def density(self, theta: np.ndarray) -> np.ndarray:
        return self.density_complex(theta).real

    def moment(self, p: int, points: int = config.QUADRATURE_POINTS) -> complex:
        theta = 2 * np.pi * np.arange(points) / points
        ac = np.mean(self.density(theta) * np.exp(1j * p * theta))
        return complex(ac + sum(a.weight * a.point ** p for a in self.atoms))

    def to_json(self) -> dict:
        return {
            "atoms": [{"angle": a.angle, "weight": a.weight} for a in self.atoms],
            "densityTerms": [{"lambdaRe": t.lam.real, "lambdaIm": t.lam.imag, "q": t.q,
                              "cRe": t.c.real, "cIm": t.c.imag} for t in self.density_terms],
            "trigCorrection": [{"p": p, "cRe": c.real, "cIm": c.imag}
                               for p, c in sorted(self.trig_correction.items())],
        }


def _atoms(mcf: MomentClosedForm) -> list[Atom]:
    found: list[tuple[complex, complex]] = []
    for t in mcf.terms:
        if abs(abs(t.lam) - 1) > config.CIRCLE_TOL:
            continue
        if t.q > 0:
            if abs(t.c) > 1e-9:
                raise InconsistencyError(f"nilpotent term of order {t.q} on the unit circle at {t.lam:.6g}")
            continue
        w = t.c * t.lam ** (1 - mcf.k0)
        for k, (point, weight) in enumerate(found):
            if abs(point - t.lam) < config.CIRCLE_TOL:
                found[k] = (point, weight + w)
                break
        else:
            found.append((t.lam, w))
    atoms = []
    for point, w in found:
        if abs(w.imag) > 1e-7 or w.real < -1e-6:
            raise InconsistencyError(f"atom at {point:.6g} has weight {w:.6g}")
        if w.real < 0:
            print(f"[Spectral] clamping atom weight {w.real:.3g} at {point:.6g} to 0")
        if w.real > 1e-12:
            atoms.append(Atom(point, w.real))
    return sorted(atoms, key=lambda a: a.angle)


def spectral_measure(mcf: MomentClosedForm, verify: bool = True) -> SpectralMeasure:
    if mcf.symbolic:
        raise ArgumentError("spectral measures need a numeric d")
    atoms = _atoms(mcf)
    inside = [t for t in mcf.terms if abs(abs(t.lam) - 1) > config.CIRCLE_TOL and t.lam != 0]
    reach = max([mcf.k0] + [mcf.k0 + t.q for t in mcf.terms if t.lam == 0]) + 1
    correction: dict[int, complex] = {}
    for p in range(reach):
        value = complex(mcf.moment(p)) - sum(a.weight * a.point ** p for a in atoms)
        if p >= mcf.k0:
            value -= sum(t.value(p - mcf.k0 + 1) for t in inside)
        if abs(value) > 1e-15:
            correction[p] = value
    sm = SpectralMeasure(atoms, inside, correction, mcf.k0)
    if verify:
        verify_measure(sm, mcf)
    return sm


def verify_measure(sm: SpectralMeasure, mcf: MomentClosedForm):
    theta = 2 * np.pi * np.arange(config.QUADRATURE_POINTS) / config.QUADRATURE_POINTS
    values = sm.density_complex(theta)
    if np.max(np.abs(values.imag)) > 1e-10:
        raise InvariantError("density has an imaginary part")
    mass = float(np.mean(values.real)) + sum(a.weight for a in sm.atoms)
    if abs(mass - 1) > 1e-8:
        raise InvariantError(f"total mass {mass:.12f} differs from 1")
    coarse = 2 * np.pi * np.arange(config.DENSITY_SAMPLES) / config.DENSITY_SAMPLES
    low = float(np.min(sm.density(coarse)))
    if low < -1e-8:
        raise InvariantError(f"density is negative ({low:.3g})")
    for p in range(-10, 11):
        ac = np.mean(values.real * np.exp(1j * p * theta))
        got = complex(ac + sum(a.weight * a.point ** p for a in sm.atoms))
        if abs(got - complex(mcf.moment(p))) > 1e-7:
            raise InvariantError(f"moment {p} does not round-trip through the measure")
    if sm.atoms:
        n = config.CESARO_N
        mu = mcf.iterate(n)
        for a in sm.atoms:
            avg = complex(np.mean(mu * a.point ** (-np.arange(n))))
            if abs(avg - a.weight) > 2e-3:
                raise CertificationError(
                    f"atom at angle {a.angle:.6f}: weight {a.weight:.6f}, Cesaro average {avg.real:.6f}")
    print(f"[Spectral] measure verified: {len(sm.atoms)} atoms, {len(sm.density_terms)} density terms")


def sample_density(sm: SpectralMeasure, num: int = config.DENSITY_SAMPLES) -> list[tuple[float, float]]:
    if num < 1:
        raise ArgumentError("need at least one sample")
    theta = 2 * np.pi * np.arange(num) / num
    return list(zip(theta.tolist(), sm.density(theta).tolist()))


def density_csv(samples: list[tuple[float, float]]) -> str:
    return "theta,f\n" + "".join(f"{t:.12g},{f:.12g}\n" for t, f in samples)


# ---------------------------------------------------------------------------
# Vectors in the dense subspace
# ---------------------------------------------------------------------------

def _pair_form(args: tuple) -> MomentClosedForm:
    g, h, h_tilde, ev = args
    return moments_closed_form(transfer_for(g, ev, h, h_tilde))


def measure_for_vector(g: GroupElement, psi: list[tuple[complex, GroupElement]],
                       ev: Evaluator, verify: bool = True) -> SpectralMeasure:
    """Spectral measure of g for psi = sum alpha_i pi(g_i) Omega."""
    if not psi:
        raise ArgumentError("empty vector")
    if ev.symbolic:
        raise ArgumentError("spectral measures need a numeric d")
    norm_sq = 0j
    for a_i, g_i in psi:
        for a_j, g_j in psi:
            norm_sq += a_i * np.conj(a_j) * ev.to_complex(coefficient(g_j.inverse() * g_i, ev))
    if abs(norm_sq) < 1e-12:
        raise ArgumentError("vector has zero norm")
    pairs = [(i, j) for i in range(len(psi)) for j in range(len(psi))]
    jobs = [(g, psi[j][1], psi[i][1], ev) for i, j in pairs]
    with ThreadPoolExecutor(max_workers=config.WORKERS) as pool:
        forms = list(pool.map(_pair_form, jobs))

    k0 = max(f.k0 for f in forms)
    terms: dict[tuple[complex, int], complex] = {}
    sources = []
    head = [0j] * k0
    for (i, j), form in zip(pairs, forms):
        weight = complex(psi[i][0] * np.conj(psi[j][0]) / norm_sq)
        for t in shift_terms(form.terms, k0 - form.k0):
            key = (t.lam, t.q)
            terms[key] = terms.get(key, 0) + weight * t.c
        for p in range(k0):
            head[p] += weight * complex(form.moment(p))
        sources += [(weight * w, ts) for w, ts in form.sources]
    combined = MomentClosedForm(
        k0, [MomentTerm(lam, q, c) for (lam, q), c in terms.items() if abs(c) > 1e-15], head, sources)

    sm = spectral_measure(combined, verify=verify)
    plain = transfer_for(g, ev)
    m, _, _ = plain.numeric()
    spectrum = scipy.linalg.eigvals(m) if m.size else np.array([])
    for a in sm.atoms:
        if spectrum.size == 0 or np.min(np.abs(spectrum - a.point)) > 1e-6:
            msg = f"atom at angle {a.angle:.6f} is not in the spectrum of the essential transfer matrix"
            print(f"[Spectral] warning: {msg}")
            sm.warnings.append(msg)
    return sm


def measure_for_element(g: GroupElement, ev: Evaluator, verify: bool = True) -> SpectralMeasure:
    return spectral_measure(moments_closed_form(transfer_for(g, ev)), verify=verify)
