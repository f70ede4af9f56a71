import pytest

from strand.core import diagram as sd
from strand.core.annular import close, essential_decomposition, power_form
from strand.core.elements import GroupElement, tree
from strand.main import run
from strand.services.evaluation import make_evaluator
from strand.services.spectral import (
    measure_for_element,
    measure_for_vector,
    moments_closed_form,
    sample_density,
)
from strand.services.transfer import moments_direct, transfer_for
from strand.tools.suites import random_words

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("d", ["2", "3", "cos:7"])
def test_closed_form_matches_direct_moments(d):
    ev = make_evaluator("tl", d=d)
    one = GroupElement.identity(2)
    for g in random_words(2, 20, seed=17, length=3):
        mcf = moments_closed_form(transfer_for(g, ev))
        for p in range(mcf.k0, mcf.k0 + 9):
            direct = ev.to_complex(moments_direct(g, one, one, p, ev))
            assert complex(mcf.moment(p)) == pytest.approx(direct, abs=1e-8), (g, p)


@pytest.mark.parametrize("arity", [2, 3])
def test_power_vertex_counts_grow_by_the_essential_part(arity):
    one = GroupElement.identity(arity)
    for g in random_words(arity, 20, seed=19):
        form = power_form(one, g, one)
        slope = form.e_tilde.vertex_count
        counts = [(g ** p).diagram.vertex_count for p in range(form.k0, form.k0 + 6)]
        assert [b - a for a, b in zip(counts, counts[1:])] == [slope] * 5, g


@pytest.mark.parametrize("arity", [2, 3])
def test_decompositions_of_longer_words(arity):
    for g in random_words(arity, 40, seed=23, length=6):
        dec = essential_decomposition(g)
        rebuilt = sd.reduce(sd.compose_all([dec.conjugator, dec.essential, sd.invert(dec.conjugator)]))
        assert rebuilt == g.diagram
        assert close(dec.essential).is_reduced()
        assert sd.is_reduced(sd.compose(dec.essential, dec.essential))


@pytest.mark.parametrize("arity", [2, 3, 4])
def test_forest_relation_on_wide_forests(arity):
    k = 1
    while 1 + k * (arity - 1) <= 10:
        prefix = [1] * k
        leaves = 1 + k * (arity - 1)
        for i in range(1, leaves + 1):
            for j in range(i + 1, leaves + 1):
                assert tree(prefix + [j, i], arity) == tree(prefix + [i, j + arity - 1], arity)
        k += 1


def test_vector_of_the_element_itself(A, tl):
    # pi(A) is unitary, so psi = pi(A) Omega has the measure of Omega
    plain = measure_for_element(A, tl)
    moved = measure_for_vector(A, [(1, A)], tl)
    assert len(moved.atoms) == len(plain.atoms)
    for a, b in zip(sorted(moved.atoms, key=lambda a: a.angle), sorted(plain.atoms, key=lambda a: a.angle)):
        assert a.angle == pytest.approx(b.angle, abs=1e-9)
        assert a.weight == pytest.approx(b.weight, abs=1e-9)
    for (t1, f1), (t2, f2) in zip(sample_density(moved, 32), sample_density(plain, 32)):
        assert t1 == pytest.approx(t2)
        assert f1 == pytest.approx(f2, abs=1e-8)


@pytest.mark.parametrize("argv", [
    ["verify", "--d", "3", "--json"],
    ["measure", "--element", "X", "--samples", "32", "--json"],
    ["moments", "--element", "X", "--d", "symbolic", "--exact", "--max", "4", "--json"],
])
def test_commands_are_deterministic(argv, capsys):
    assert run(argv) == 0
    first = capsys.readouterr().out
    assert run(argv) == 0
    assert capsys.readouterr().out == first
