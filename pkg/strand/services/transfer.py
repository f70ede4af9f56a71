"""Transfer operators: moments of h g^p h~ as eta . M^(p-k0+1) . xi."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import sympy

from strand.core import diagram as sd
from strand.core.annular import PowerForm, power_form
from strand.core.elements import GroupElement
from strand.core.errors import ArgumentError, CertificationError
from strand.services.evaluation import coefficient
from strand.services.planar import CAP, CUP, Evaluator, TransferPieces, shifted
from strand.services.trivalent import DELTA

# delta at d = 4, where the symbolic inner product is positive definite
SAMPLE_DELTA = sympy.sqrt(5)


@dataclass
class TransferSystem:
    pieces: TransferPieces
    k0: int
    form: PowerForm
    evaluator: Evaluator

    @property
    def exact(self) -> bool:
        return self.evaluator.exact

    @property
    def dimension(self) -> int:
        return self.pieces.dimension

    @property
    def basis_descr(self) -> str:
        if self.evaluator.name == "tl":
            return f"link patterns on {2 * (self.form.width + 1)} points ({self.dimension} reachable)"
        return f"tensor power of C^{self.evaluator.loop_value():.0f} over {self.form.width + 1} strands"

    def moment(self, p: int) -> Any:
        if p < self.k0:
            raise ArgumentError(f"transfer moments start at p = {self.k0}")
        steps = p - self.k0 + 1
        if not self.exact:
            v = self.pieces.xi
            for _ in range(steps):
                v = self.pieces.matrix @ v
            return complex(self.pieces.eta @ v)
        v = list(self.pieces.xi)
        rows = self.pieces.matrix
        zero = self.evaluator.zero
        for _ in range(steps):
            v = [sum((a * b for a, b in zip(row, v)), zero) for row in rows]
        return sum((a * b for a, b in zip(self.pieces.eta, v)), zero)

    def numeric(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(M, xi, eta) as complex arrays; symbolic systems are read at d = 4."""
        if not self.exact:
            return self.pieces.matrix, self.pieces.xi, self.pieces.eta
        ev = self.evaluator
        if ev.symbolic:
            def conv(a):
                return 0j if a == ev.zero else complex(sympy.N(ev.K.to_sympy(a).subs(DELTA, SAMPLE_DELTA)))
        else:
            conv = ev.to_complex
        return (
            np.array([[conv(a) for a in row] for row in self.pieces.matrix], dtype=complex).reshape(
                self.dimension, self.dimension),
            np.array([conv(a) for a in self.pieces.xi], dtype=complex),
            np.array([conv(a) for a in self.pieces.eta], dtype=complex),
        )

    def spectral_radius(self) -> float:
        """Largest |eigenvalue| of M on the cyclic subspace generated by xi."""
        m, xi, _ = self.numeric()
        q = krylov_basis(m, xi)
        if q.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(q.conj().T @ m @ q))))


def krylov_basis(m: np.ndarray, xi: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning xi, M xi, M^2 xi, ..."""
    cols: list[np.ndarray] = []
    v = np.asarray(xi, dtype=complex)
    for _ in range(len(v)):
        scale = np.linalg.norm(v)
        if scale <= 1e-14:
            break
        w = v
        for _ in range(2):
            for q in cols:
                w = w - q * (q.conj() @ w)
        norm = np.linalg.norm(w)
        if norm <= tol * scale:
            break
        cols.append(w / norm)
        v = m @ cols[-1]
    if not cols:
        return np.zeros((len(v), 0), dtype=complex)
    return np.array(cols).T


def moments_direct(g: GroupElement, h: GroupElement, h_tilde: GroupElement, p: int,
                   ev: Evaluator) -> Any:
    """coefficient(h^-1 g^p h~), evaluated from scratch."""
    if p < 0:
        value = moments_direct(g, h_tilde, h, -p, ev)
        # exact evaluators work over real fields
        return value if ev.exact else value.conjugate()
    return coefficient(h.inverse() * g ** p * h_tilde, ev)


def _contractive(ev: Evaluator) -> bool:
    """Whether the formal span carries a positive definite inner product."""
    if ev.name != "tl" or ev.symbolic:
        return True
    return ev.to_complex(ev.loop_value()).real >= 3 - 1e-9


def _front(form: PowerForm) -> GroupElement:
    if form.front is None or form.element is None or form.back is None:
        raise ArgumentError("power form carries no element triple to certify against")
    return form.front


def build_transfer(form: PowerForm, ev: Evaluator, certify: bool = True) -> TransferSystem:
    if form.e_tilde.arity != ev.arity:
        raise ArgumentError(f"F_{form.e_tilde.arity} power form given to an F_{ev.arity} evaluator")
    prefix = [(CUP, 0)] + shifted(sd.narrow_layer_word(form.s_plus), 1)
    core = shifted(sd.narrow_layer_word(form.e_tilde), 1)
    suffix = shifted(sd.narrow_layer_word(form.s_minus), 1) + [(CAP, 0)]
    pieces = ev.transfer_pieces(prefix, core, suffix)
    ts = TransferSystem(pieces, form.k0, form, ev)
    print(f"[Transfer] {ev.name}: dimension {ts.dimension}, k0={form.k0}")
    radius = ts.spectral_radius()
    if radius > 1 + 1e-9:
        if _contractive(ev):
            raise CertificationError(f"spectral radius {radius:.12f} of the transfer operator exceeds 1")
        print(f"[Transfer] warning: spectral radius {radius:.12f} exceeds 1 on the formal span")
    if certify:
        certify_transfer(ts)
    return ts


def certify_transfer(ts: TransferSystem, extra: int = 4):
    ev = ts.evaluator
    front = _front(ts.form)
    g, back = ts.form.element, ts.form.back
    for p in range(ts.k0, ts.k0 + extra + 1):
        direct = coefficient(front * g ** p * back, ev)
        diff = ts.moment(p) - direct
        if not ev.is_zero(diff):
            raise CertificationError(
                f"transfer moment at p={p} disagrees with direct evaluation")


def transfer_for(g: GroupElement, ev: Evaluator, h: GroupElement | None = None,
                 h_tilde: GroupElement | None = None) -> TransferSystem:
    """Transfer system for the moments coefficient(h^-1 g^p h~)."""
    one = GroupElement.identity(g.arity)
    h = h or one
    h_tilde = h_tilde or one
    return build_transfer(power_form(h.inverse(), g, h_tilde), ev)
