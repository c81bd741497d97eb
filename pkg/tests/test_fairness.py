import math

import numpy as np
import pytest

from conftest import random_problem, symmetric_network
from pybailout.exceptions import DegenerateFairnessError
from pybailout.fairness import (
    FairnessSpec,
    coefficient,
    fairness_satisfied,
    gini,
    price_of_fairness,
    property_gini,
    solve_fair_relaxation,
    spatial_gini,
    synthetic_property,
    within_between_fairness_check,
)
from pybailout.bailout import BailoutProblem, solve_relaxation
from pybailout.instances import GeneratorSpec, generate
from pybailout.objectives import make_objective
from pybailout.rounding import sample_rounded_values
from pybailout.shocks import SeededRng, ShockDistribution, batch_matrix


@pytest.mark.parametrize("n", [2, 5, 40])
def test_gini_extremes(n):
    L = np.arange(1.0, n + 1)
    assert gini(1.0 / L, L) == pytest.approx(0.0, abs=1e-12)
    single = np.zeros(n)
    single[-1] = 1.0
    assert gini(single, L) == pytest.approx(1.0 - 1.0 / n, abs=1e-12)


def test_gini_matches_pairwise_definition(gen):
    theta = gen.exponential(1.0, 9)
    pairwise = np.abs(theta[:, None] - theta[None, :]).sum() / (2 * 9 * theta.sum())
    assert gini(theta, np.ones(9)) == pytest.approx(pairwise, abs=1e-12)


def test_property_gini_with_half_property_is_gini(gen):
    z = gen.random(12)
    L = gen.uniform(0.5, 2.0, 12)
    assert property_gini(z, L, np.full(12, 0.5)) == pytest.approx(gini(z, L), abs=1e-12)


def test_coefficients_are_scale_invariant(gen):
    prob = random_problem(gen, 10)
    z = gen.random(10)
    q = gen.random(10)
    for scale in (0.1, 3.0):
        assert gini(scale * z, prob.L) == pytest.approx(gini(z, prob.L), abs=1e-12)
        assert property_gini(scale * z, prob.L, q) == pytest.approx(property_gini(z, prob.L, q), abs=1e-12)
        assert spatial_gini(scale * z, prob.L, prob.net) == pytest.approx(spatial_gini(z, prob.L, prob.net), abs=1e-12)


def test_zero_allocation_is_degenerate(example1):
    with pytest.raises(DegenerateFairnessError):
        gini(np.zeros(2), example1.L)
    with pytest.raises(DegenerateFairnessError):
        spatial_gini([0.0, 1.0], example1.L, example1.net)
    assert fairness_satisfied(np.zeros(2), example1.L, FairnessSpec("GC", 0.0))


@pytest.mark.parametrize("kind", ["GC", "PGC", "SGC"])
def test_linear_form_agrees_with_ratio(gen, kind):
    prob = random_problem(gen, 8)
    q = gen.random(8)
    for _ in range(50):
        z = gen.random(8) * (gen.random(8) < 0.7)
        if not z.any():
            continue
        spec = FairnessSpec(kind, 0.0, q)
        try:
            value = coefficient(spec, z, prob.L, prob.net)
        except DegenerateFairnessError:
            continue
        assert fairness_satisfied(z, prob.L, spec.with_bound(value * 1.001 + 1e-9), prob.net)
        if value > 1e-6:
            assert not fairness_satisfied(z, prob.L, spec.with_bound(value * 0.99), prob.net)


@pytest.mark.parametrize(
    "kind, g, q",
    [("Gini", 0.1, None), ("GC", -0.1, None), ("PGC", 0.1, None), ("PGC", 0.1, [0.0, 0.0]), ("PGC", 0.1, [0.5, 1.5])],
)
def test_invalid_specs(kind, g, q):
    with pytest.raises(ValueError):
        FairnessSpec(kind, g, q)


@pytest.mark.parametrize("kind", ["GC", "SGC"])
@pytest.mark.parametrize("g", [0.05, 0.2])
def test_fair_relaxation_meets_its_bound(gen, kind, g):
    prob = random_problem(gen, 8, k=3)
    x = gen.random(8) * prob.net.c
    spec = FairnessSpec(kind, g)
    relaxed = solve_fair_relaxation(prob, spec, x)
    assert relaxed.opt_r <= solve_relaxation(prob, x).opt_r + 1e-7
    if relaxed.allocation.z.sum() > 1e-9:
        assert coefficient(spec, relaxed.allocation.z, prob.L, prob.net) <= g + 1e-5


def test_fair_relaxation_with_loose_bound_is_unconstrained(gen):
    prob = random_problem(gen, 8, k=3)
    x = gen.random(8) * prob.net.c
    loose = solve_fair_relaxation(prob, FairnessSpec("GC", 1.0), x)
    assert loose.opt_r == pytest.approx(solve_relaxation(prob, x).opt_r, rel=1e-7)


def _star_problem():
    instance = generate(GeneratorSpec("star-pof", {"n": 5}))
    return instance.problem(make_objective("SoP", instance.net))


def test_star_fractional_price_of_fairness_is_finite():
    prob = _star_problem()
    assert solve_relaxation(prob).opt_r == pytest.approx(9.0, rel=1e-8)
    assert solve_fair_relaxation(prob, FairnessSpec("GC", 0.0)).opt_r == pytest.approx(5.0, rel=1e-8)
    assert price_of_fairness(prob, FairnessSpec("GC", 0.0)) == pytest.approx(1.8, rel=1e-7)


def test_star_discrete_price_of_fairness_is_infinite():
    assert math.isinf(price_of_fairness(_star_problem(), FairnessSpec("GC", 0.0), discrete=True))


def test_price_of_fairness_without_constraint_is_one(example1):
    assert price_of_fairness(example1, FairnessSpec("GC", 1.0)) == pytest.approx(1.0, rel=1e-8)


def test_price_of_fairness_decreases_in_g():
    instance = generate(GeneratorSpec("two-clique", {"n": 20, "r": 0.4}, seed=3))
    prob = instance.problem(make_objective("SoP", instance.net))
    curve = [price_of_fairness(prob, FairnessSpec("SGC", g)) for g in (0.05, 0.1, 0.3, 1.0)]
    assert all(value >= 1.0 - 1e-7 for value in curve)
    assert all(a >= b - 1e-7 for a, b in zip(curve, curve[1:]))


@pytest.mark.parametrize("g", [0.92, 0.96])
def test_rounded_gini_relaxation_with_equal_bailouts(g):
    instance = generate(GeneratorSpec("random-er", {"n": 30, "p": 0.2, "ell": 1.0, "k": 3.0}, seed=5))
    prob = instance.problem(make_objective("SoP", instance.net))
    n, k = prob.n, prob.budget / prob.L[0]
    assert g > 1.0 - k / n
    x = batch_matrix(prob.dist, SeededRng(5), 1)[:, 0]
    relaxed = solve_fair_relaxation(prob, FairnessSpec("GC", g), x)
    values = sample_rounded_values(relaxed.allocation, prob, x, SeededRng(5, stream=2), 5000)
    error = values.std() / math.sqrt(values.size)
    factor = (1.0 - prob.net.beta_max) * (1.0 - k / n) / (g * prob.obj.zeta)
    assert values.mean() >= factor * relaxed.opt_r - 3 * error


def test_within_between_check():
    q = np.array([1.0, 1.0, 0.0, 0.0])
    L = np.ones(4)
    # z * q = (1, 1, 0, 0) has Gini 8 / (2 * 4 * 2) over all four nodes
    assert within_between_fairness_check(np.ones(4), L, q, 0.0, 0.5)
    assert not within_between_fairness_check(np.ones(4), L, q, 1.0, 0.1)
    # z * q = (1, 0, 0, 0) has Gini 3/4, the between-group Gini is 1/2
    z = np.array([1.0, 0.0, 1.0, 1.0])
    assert within_between_fairness_check(z, L, q, 0.5, 0.75)
    assert not within_between_fairness_check(z, L, q, 0.4, 1.0)
    assert not within_between_fairness_check(z, L, q, 1.0, 0.7)


def test_within_between_check_with_fractional_property():
    assert within_between_fairness_check(np.ones(4), np.ones(4), np.full(4, 0.5), 0.0, 0.0)


@pytest.mark.parametrize(
    "z, q",
    [([1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]), ([0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 0.0, 0.0])],
)
def test_within_between_check_needs_both_sides(z, q):
    with pytest.raises(DegenerateFairnessError):
        within_between_fairness_check(np.array(z), np.ones(4), np.array(q), 1.0, 1.0)


def test_synthetic_property_is_seeded():
    q = synthetic_property(100, SeededRng(1))
    assert np.array_equal(q, synthetic_property(100, SeededRng(1)))
    assert np.all((q >= 0) & (q <= 1))
    assert q.mean() == pytest.approx(2.0 / 7.0, abs=0.06)


def test_sgc_relaxation_on_symmetric_network(gen):
    net = symmetric_network(gen, 6)
    prob = BailoutProblem(net, np.full(6, 0.5), 1.0, ShockDistribution.uniform(net.c), make_objective("SoP", net))
    relaxed = solve_fair_relaxation(prob, FairnessSpec("SGC", 0.1), 0.8 * net.c)
    assert relaxed.opt_r > 0
    assert relaxed.allocation.spent <= 1.0 + 1e-7


@pytest.mark.slow
def test_price_of_fairness_decreases_with_cross_density():
    curve = []
    for r in (0.1, 0.4, 1.0):
        instance = generate(GeneratorSpec("two-clique", {"n": 20, "r": r}, seed=3))
        prob = instance.problem(make_objective("SoP", instance.net))
        curve.append(price_of_fairness(prob, FairnessSpec("SGC", 0.1)))
    assert all(a >= b - 1e-7 for a, b in zip(curve, curve[1:]))
