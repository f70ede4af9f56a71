import numpy as np
import pytest
import sympy

from strand.core.elements import GroupElement
from strand.core.errors import ArgumentError, CertificationError, ClusteringError, InconsistencyError
from strand.services.evaluation import coefficient, make_evaluator
from strand.services.spectral import (
    LAM,
    MomentClosedForm,
    MomentTerm,
    _atoms,
    density_csv,
    exact_roots,
    measure_for_element,
    measure_for_vector,
    minimal_polynomial,
    moments_closed_form,
    numeric_terms,
    sample_density,
    shift_terms,
    spectral_measure,
)
from strand.services.tensor_model import TensorEvaluator, coloring_tensor
from strand.services.transfer import moments_direct, transfer_for
from strand.services.trivalent import DELTA
from strand.tools.suites import random_words

THETA = np.linspace(0, 2 * np.pi, 17)[:-1]


def t_of(d: float) -> float:
    return (d - 2) / (d - 1)


def x_moment(k: int, d: float) -> float:
    t = t_of(d)
    k = abs(k)
    return t ** (k + 2) + 1 / d - (t + 1 / d) * (1 - d) ** -(k + 1)


def poisson(theta, t):
    return (1 - t ** 2) / (1 - 2 * t * np.cos(theta) + t ** 2)


@pytest.mark.parametrize("d", [3.0, 4.0])
def test_transfer_moments_of_A(A, d):
    ev = make_evaluator("tl", d=str(d))
    ts = transfer_for(A, ev)
    for p in range(ts.k0, ts.k0 + 6):
        assert ts.moment(p) == pytest.approx(t_of(d) ** p)


def test_moments_direct_negative_powers(A, X, tl):
    one = GroupElement.identity(2)
    for p in (1, 2, 3):
        assert moments_direct(A, one, one, -p, tl) == pytest.approx(0.5 ** p)
        assert moments_direct(A, X, X, p, tl) == pytest.approx(coefficient(X.inverse() * A ** p * X, tl))


def test_closed_form_of_A(A, tl):
    mcf = moments_closed_form(transfer_for(A, tl))
    for p in range(-8, 9):
        assert mcf.moment(p) == pytest.approx(0.5 ** abs(p))
    live = [t for t in mcf.terms if abs(t.c) > 1e-12 and abs(t.lam) > 1e-12]
    assert [round(t.lam.real, 9) for t in live] == [0.5]


def test_measure_of_A_is_poisson(A, tl):
    sm = measure_for_element(A, tl)
    assert sm.atoms == []
    assert sm.density(THETA) == pytest.approx(poisson(THETA, 0.5))


def test_measure_of_N(N, tl):
    t = 0.5
    mcf = moments_closed_form(transfer_for(N, tl))
    for p in range(1, 8):
        assert mcf.moment(p) == pytest.approx(t ** (p + 3))
        assert mcf.moment(-p) == pytest.approx(t ** (p + 3))
    sm = spectral_measure(mcf)
    assert sm.atoms == []
    c = np.cos(THETA)
    expected = (2 * t ** 3 - 2 * t ** 4 * c) / (1 - 2 * t * c + t ** 2) - 2 * t ** 3 + 1
    assert sm.density(THETA) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("d", [3.0, 5.0])
def test_moments_of_X(X, d):
    ev = make_evaluator("tl", d=str(d))
    mcf = moments_closed_form(transfer_for(X, ev))
    for p in range(1, 10):
        assert mcf.moment(p).real == pytest.approx(x_moment(p, d))
        assert mcf.moment(-p).real == pytest.approx(x_moment(p, d))
    points = sorted(round(t.lam.real, 9) for t in mcf.terms if abs(t.c) > 1e-12 and abs(t.lam) > 1e-12)
    assert points == sorted([round(t_of(d), 9), 1.0, round(1 / (1 - d), 9)])


def test_measure_of_X_has_atom_at_one(X, tl):
    d = 3.0
    sm = measure_for_element(X, tl)
    assert len(sm.atoms) == 1
    assert sm.atoms[0].angle == pytest.approx(0.0, abs=1e-9)
    assert sm.atoms[0].weight == pytest.approx(1 / d)
    ks = np.arange(1, 200)
    nu = np.array([x_moment(k, d) - 1 / d for k in ks])
    expected = (1 - 1 / d) + 2 * np.sum(nu[:, None] * np.cos(np.outer(ks, THETA)), axis=0)
    assert sm.density(THETA) == pytest.approx(expected, abs=1e-9)


def test_measure_of_X_at_two(X):
    ev = make_evaluator("tl", d="2")
    sm = measure_for_element(X, ev)
    assert sorted(round(a.angle, 9) for a in sm.atoms) == [0.0, round(np.pi, 9)]
    assert [a.weight for a in sm.atoms] == pytest.approx([0.5, 0.5])
    assert sm.density(THETA) == pytest.approx(np.zeros_like(THETA), abs=1e-9)


def test_symbolic_closed_form_of_A(A, tl_symbolic):
    mcf = moments_closed_form(transfer_for(A, tl_symbolic))
    assert mcf.symbolic
    d = DELTA ** 2 - 1
    assert sympy.simplify(mcf.moment(4) - ((d - 2) / (d - 1)) ** 4) == 0
    with pytest.raises(ArgumentError):
        spectral_measure(mcf)


def test_exact_terms_of_X_specialise(X, tl_exact):
    mcf = moments_closed_form(transfer_for(X, tl_exact))
    for p in range(1, 6):
        assert mcf.moment(p).real == pytest.approx(x_moment(p, 3.0))


def test_tensor_backend_matches_tl_on_X(X, tl, tensor):
    a = moments_closed_form(transfer_for(X, tl))
    b = moments_closed_form(transfer_for(X, tensor))
    for p in range(0, 8):
        assert a.moment(p) == pytest.approx(b.moment(p))


def test_numeric_terms_jordan_block():
    # [[l, 1], [0, l]] gives moments (c0 + c1 N) l^N
    lam = 0.4
    m = np.array([[lam, 1.0], [0.0, lam]], dtype=complex)
    xi = np.array([0.0, 1.0], dtype=complex)
    eta = np.array([1.0, 0.0], dtype=complex)
    terms = numeric_terms(m, xi, eta)
    for n in range(1, 8):
        direct = eta @ np.linalg.matrix_power(m, n) @ xi
        assert sum(t.value(n) for t in terms) == pytest.approx(direct)


def test_numeric_terms_of_synthetic_three_state_system():
    d = 3.0
    t = t_of(d)
    m = np.array([[t, 0, 1], [0, 1, 1 / (d - 1)], [0, 0, 1 / (1 - d)]], dtype=complex)
    xi = np.array([0.2, 0.3, 0.5], dtype=complex)
    eta = np.array([1.0, 1.0, 1.0], dtype=complex)
    terms = numeric_terms(m, xi, eta)
    assert len({round(term.lam.real, 9) for term in terms}) == 3
    for n in range(1, 10):
        assert sum(term.value(n) for term in terms) == pytest.approx(eta @ np.linalg.matrix_power(m, n) @ xi)


def test_shift_terms_preserve_values():
    terms = [MomentTerm(0.5, 0, 1.0), MomentTerm(0.3 + 0j, 1, 2.0)]
    shifted = shift_terms(terms, 2)
    for n in range(1, 6):
        assert sum(t.value(n) for t in shifted) == pytest.approx(sum(t.value(n + 2) for t in terms))


def test_vector_measure_matches_direct_moments(A, X, tl):
    one = GroupElement.identity(2)
    psi = [(1.0, one), (0.5j, X)]
    sm = measure_for_vector(A, psi, tl)
    norm = sum(a * np.conj(b) * coefficient(gb.inverse() * ga, tl) for a, ga in psi for b, gb in psi)
    for p in range(-4, 5):
        direct = sum(a * np.conj(b) * coefficient(gb.inverse() * A ** p * ga, tl)
                     for a, ga in psi for b, gb in psi) / norm
        assert sm.moment(p) == pytest.approx(direct, abs=1e-8)


def test_vector_measure_of_vacuum(A, tl):
    plain = measure_for_element(A, tl)
    sm = measure_for_vector(A, [(2.0, GroupElement.identity(2))], tl)
    assert sm.density(THETA) == pytest.approx(plain.density(THETA))


def test_zero_vector_is_rejected(A, tl):
    one = GroupElement.identity(2)
    with pytest.raises(ArgumentError):
        measure_for_vector(A, [(1.0, one), (-1.0, one)], tl)
    with pytest.raises(ArgumentError):
        measure_for_vector(A, [], tl)


def test_density_samples_and_csv(A, tl):
    sm = measure_for_element(A, tl)
    samples = sample_density(sm, 8)
    assert len(samples) == 8
    assert samples[0][0] == 0.0
    text = density_csv(samples)
    assert text.splitlines()[0] == "theta,f"
    assert len(text.splitlines()) == 9


def test_measure_json_keys(X, tl):
    out = measure_for_element(X, tl).to_json()
    assert set(out) == {"atoms", "densityTerms", "trigCorrection"}
    assert out["atoms"][0]["weight"] == pytest.approx(1 / 3)


def test_cluster_error_is_an_invariant_error():
    from strand.core.errors import InvariantError
    assert issubclass(ClusteringError, InvariantError)


def x_density(theta, d):
    t = t_of(d)
    c = np.cos(theta)
    return ((2 * t ** 2 - 2 * t ** 3 * c) / (1 + t ** 2 - 2 * t * c)
            - (t + 1 / d) * (2 - 2 * d - 2 * c) / ((1 - d) ** 2 - 2 * (1 - d) * c + 1)
            + (2 * t * d ** 2 - 2 * t * d + 1 - d ** 2 + 2 * d) / (d * (1 - d)))


@pytest.mark.parametrize("d", [3.0, 5.0])
def test_density_of_X_in_closed_form(X, d):
    sm = measure_for_element(X, make_evaluator("tl", d=str(d)))
    assert sm.atoms[0].weight == pytest.approx(1 / d)
    assert sm.density(THETA) == pytest.approx(x_density(THETA, d), abs=1e-10)


def test_symbolic_moments_of_X(X, tl_symbolic):
    mcf = moments_closed_form(transfer_for(X, tl_symbolic))
    d = DELTA ** 2 - 1
    t = (d - 2) / (d - 1)
    for p in range(1, 11):
        expected = t ** (p + 2) + 1 / d - (t + 1 / d) * (1 - d) ** -(p + 1)
        assert sympy.cancel(mcf.moment(p) - expected) == 0
        assert sympy.cancel(mcf.moment(-p) - expected) == 0


def test_minimal_polynomial_roots_of_X(X, tl_symbolic):
    ts = transfer_for(X, tl_symbolic)
    roots = exact_roots(ts)
    assert sum(roots.values()) == sympy.degree(minimal_polynomial(ts), LAM)
    d = DELTA ** 2 - 1
    allowed = [(d - 2) / (d - 1), sympy.Integer(1), 1 / (1 - d)]
    live = [root for root in roots if root != 0]
    assert live
    for root in live:
        assert any(sympy.cancel(root - a) == 0 for a in allowed)


def test_symbolic_negative_moments_stay_exact(A, tl_symbolic):
    mcf = moments_closed_form(transfer_for(A, tl_symbolic))
    d = DELTA ** 2 - 1
    assert sympy.cancel(mcf.moment(-3) - ((d - 2) / (d - 1)) ** 3) == 0


def test_tiny_negative_atom_weight_is_dropped():
    mcf = MomentClosedForm(1, [MomentTerm(1 + 0j, 0, 1 + 0j), MomentTerm(-1 + 0j, 0, -1e-10 + 0j)], [1 + 0j])
    atoms = _atoms(mcf)
    assert len(atoms) == 1
    assert atoms[0].weight == pytest.approx(1.0)


def test_negative_atom_weight_is_inconsistent():
    mcf = MomentClosedForm(1, [MomentTerm(-1 + 0j, 0, -1e-3 + 0j)], [1 + 0j])
    with pytest.raises(InconsistencyError):
        _atoms(mcf)


@pytest.mark.parametrize("name", ["A", "N", "X"])
def test_transfer_radius_is_at_most_one(name, request, tl, tensor):
    g = request.getfixturevalue(name)
    for ev in (tl, tensor):
        assert transfer_for(g, ev).spectral_radius() <= 1 + 1e-9


def test_random_transfer_radii(tl, tensor):
    for g in random_words(2, 6, seed=8, length=3):
        for ev in (tl, tensor):
            assert transfer_for(g, ev).spectral_radius() <= 1 + 1e-9


def test_symbolic_radius_is_read_at_four(A, tl_symbolic):
    radius = transfer_for(A, tl_symbolic).spectral_radius()
    assert 2 / 3 - 1e-9 <= radius <= 1 + 1e-9


def test_expanding_transfer_is_rejected(A):
    ev = TensorEvaluator("scaled", arity=2, tensor=2 * coloring_tensor(3, 2))
    with pytest.raises(CertificationError):
        transfer_for(A, ev)
