import numpy as np
import pytest

from pybailout.bailout import evaluate_allocation
from pybailout.exceptions import GeneratorError
from pybailout.instances import KINDS, GeneratorSpec, cover_allocation, describe, generate
from pybailout.network import clear_fixed_point
from pybailout.objectives import Objective
from pybailout.shocks import SeededRng


def _solvent_after(instance, z):
    x = instance.shock.x0
    return clear_fixed_point(instance.net, x, instance.L * z).n_solvent


@pytest.mark.parametrize("kind", KINDS)
def test_every_generator_is_deterministic(kind):
    params = {"n": 30} if kind == "random-er" else {}
    first = generate(GeneratorSpec(kind, params, seed=7))
    second = generate(GeneratorSpec(kind, params, seed=7))
    assert np.array_equal(first.net.dense_P(), second.net.dense_P())
    assert np.array_equal(first.net.c, second.net.c)
    assert np.array_equal(first.L, second.L)
    assert first.budget == second.budget
    assert first.provenance == second.provenance
    assert first.provenance.startswith(f"generator={kind}; ")


def test_describe_records_parameters():
    text = describe(GeneratorSpec("two-clique", {"r": 0.3, "n": 10}, seed=4))
    assert 'params={"n": 10, "r": 0.3}' in text
    assert "seed=4" in text
    assert "construction:" in text


def test_star():
    instance = generate(GeneratorSpec("star-pof", {"n": 6}))
    P = instance.net.dense_P()
    assert np.array_equal(P[0, 1:], np.ones(5))
    assert not P[1:].any()
    assert instance.budget == pytest.approx(6.0)
    assert np.array_equal(instance.shock.x0, instance.net.c)


def test_two_clique_structure():
    instance = generate(GeneratorSpec("two-clique", {"n": 12, "r": 0.5}, seed=1))
    P = instance.net.dense_P()
    group = np.arange(12) < 6
    within = P[np.ix_(group, group)]
    assert np.array_equal(within, np.ones((6, 6)) - np.eye(6))
    assert np.array_equal(P, P.T)
    assert np.array_equal(instance.q, group.astype(float))
    assert np.array_equal(instance.shock.x0, np.where(group, 1.0, 0.0))


def test_two_clique_density_changes_with_seed():
    dense = [generate(GeneratorSpec("two-clique", {"n": 20, "r": 0.5}, seed=s)).net.dense_P().sum() for s in range(3)]
    assert len(set(dense)) > 1


def test_complete_gap_parameters():
    instance = generate(GeneratorSpec("complete-gap", {"n": 10, "k": 2, "eps": 0.5}))
    assert np.allclose(instance.L, 2.5)
    assert instance.budget == pytest.approx(5.0)
    assert np.allclose(instance.shock.x0, 0.5)


def test_path_threshold_layout():
    instance = generate(GeneratorSpec("path-threshold", {"n": 6}))
    net = instance.net
    eps = 1.0 / 10.0
    assert net.c[0] == 1.0 and net.b[0] == 1.0
    for i in range(1, 5):
        assert net.dense_P()[i, i + 1] == pytest.approx(1.0 - i * eps)
    assert net.p[5] == pytest.approx(1.0 - 5 * eps + eps / 2.0)


def test_set_cover_gadget_solvency():
    instance = generate(GeneratorSpec("set-cover-gadget"))
    assert instance.net.n == 6
    assert instance.net.beta_max == pytest.approx(2.0 / 3.0)
    assert instance.budget == pytest.approx(6.0)
    assert _solvent_after(instance, cover_allocation(instance, [0, 1])) == 6
    # set {0, 1, 2} alone leaves item 3 short
    assert _solvent_after(instance, cover_allocation(instance, [0])) == 4
    assert _solvent_after(instance, np.zeros(6)) == 0


def test_layered_gadget_amplifies_cover():
    instance = generate(GeneratorSpec("layered-gadget", {"layers": 2}))
    assert instance.net.n == 10
    assert _solvent_after(instance, cover_allocation(instance, [0, 1])) == 10
    assert _solvent_after(instance, cover_allocation(instance, [0])) == 4


def test_random_er():
    instance = generate(GeneratorSpec("random-er", {"n": 50, "p": 0.1, "ell": 2.0, "k": 3, "property": True}, seed=5))
    net = instance.net
    assert np.allclose(net.b, 0.9 * net.c)
    assert net.beta_max < 1
    assert np.allclose(instance.L, 2.0)
    assert instance.budget == pytest.approx(6.0)
    assert instance.shock.kind == "uniform"
    assert instance.q.shape == (50,)


def test_random_er_follows_the_given_stream():
    spec = GeneratorSpec("random-er", {"n": 20}, seed=0)
    a = generate(spec, SeededRng(3, 1))
    b = generate(spec, SeededRng(3, 2))
    assert not np.array_equal(a.net.dense_P(), b.net.dense_P())


@pytest.mark.parametrize(
    "kind, params",
    [
        ("two-clique", {"n": 7}),
        ("two-clique", {"r": 0.0}),
        ("complete-gap", {"eps": 1.0}),
        ("complete-gap", {"k": 10, "n": 10}),
        ("path-threshold", {"n": 5, "eps": 0.5}),
        ("set-cover-gadget", {"sets": [[0, 1]]}),
        ("set-cover-gadget", {"alpha": 3.0}),
        ("layered-gadget", {"layers": 0}),
        ("random-er", {"p": 0.0}),
        ("star-pof", {"size": 4}),
    ],
)
def test_invalid_parameters(kind, params):
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec(kind, params))


def test_unknown_generator():
    with pytest.raises(GeneratorError):
        GeneratorSpec("lattice")


def _solvency(instance, z):
    prob = instance.problem(Objective.absolute_solvency())
    return evaluate_allocation(prob, z, instance.shock.x0).mean


@pytest.mark.parametrize("layers", [1, 2, 3])
def test_layered_gadget_cover_versus_no_bailout(layers):
    instance = generate(GeneratorSpec("layered-gadget", {"layers": layers}))
    k, n_items = 2, 4
    assert _solvency(instance, cover_allocation(instance, [0, 1])) >= k + layers * n_items
    assert _solvency(instance, np.zeros(instance.net.n)) == 0


def test_set_cover_gadget_item_bailouts_waste_budget():
    instance = generate(GeneratorSpec("set-cover-gadget"))
    sets = [(0, 1, 2), (1, 2, 3)]
    cover = _solvency(instance, cover_allocation(instance, [0, 1]))
    for item in range(4):
        node = 2 + item
        alone = np.zeros(6)
        alone[node] = 1.0
        assert _solvency(instance, alone) == 1
        for s, members in enumerate(sets):
            if item in members:
                assert _solvency(instance, cover_allocation(instance, [s])) > 1
        # trading a set of the cover for an item node loses solvent nodes
        for s in range(2):
            swapped = cover_allocation(instance, [1 - s])
            swapped[node] = 1.0
            assert _solvency(instance, swapped) < cover
