"""Exact small-instance analysis: enumeration, bounds, decomposition,
and the fairness metrics."""

import numpy as np
import pytest

from fairrank import (
    ConstraintSet,
    Instance,
    InstanceTooLarge,
    ValueModel,
    check_submodularity,
    dcg,
    distribution_dcg,
    enumerate_valid_rankings,
    fair_decomposition,
    gini,
    lorenz_dominates,
    max_total_value,
    merit_ranking,
    metrics_for_distribution,
    metrics_for_ranking,
    min_satisfaction_bound,
    spread,
    FairDistribution,
)

from conftest import random_instance, random_upper_constraints

MALES = ("u1", "u2", "u4", "u5")


@pytest.fixture(scope="module")
def eight_table(eight, eight_lower, eight_model):
    """All valid rankings of the running instance with their value rows."""
    rankings = enumerate_valid_rankings(eight, eight_lower)
    matrix = np.stack([eight_model.values(r) for r in rankings])
    return rankings, matrix


def test_enumeration_count_and_validity(eight, eight_table):
    rankings, _ = eight_table
    assert len(rankings) == 13824
    assert len({r.order for r in rankings}) == len(rankings)


def _flat_instance(n: int) -> Instance:
    scores = np.linspace(1.0, 0.5, n)
    return Instance.from_rows((f"x{i:02d}", "a", scores[i]) for i in range(n))


def test_enumeration_guard():
    inst = _flat_instance(11)
    with pytest.raises(InstanceTooLarge):
        enumerate_valid_rankings(inst, ConstraintSet.vacuous(inst))


def test_max_total_value_goldens(eight, eight_lower, eight_model):
    assert max_total_value(eight, eight_lower, eight_model, []) == 0.0
    assert max_total_value(eight, eight_lower, eight_model, range(8)) == 0.0
    males = [eight.index_of(u) for u in MALES]
    assert max_total_value(eight, eight_lower, eight_model, males) == -3.0


def test_max_total_value_matches_enumeration(eight, eight_lower, eight_model, eight_table):
    _, matrix = eight_table
    rng = np.random.default_rng(5)
    for _ in range(30):
        members = np.flatnonzero(rng.integers(0, 2, 8))
        if members.size == 0:
            continue
        expected = matrix[:, members].sum(axis=1).max()
        got = max_total_value(eight, eight_lower, eight_model, members)
        assert got == pytest.approx(float(expected), abs=1e-9)


def test_max_total_value_rejects_bad_index(eight, eight_lower, eight_model):
    with pytest.raises(ValueError):
        max_total_value(eight, eight_lower, eight_model, [8])


def test_min_satisfaction_bound_golden(eight, eight_lower, eight_model):
    assert min_satisfaction_bound(eight, eight_lower, eight_model) == -0.75


def test_min_satisfaction_bound_vacuous(eight, eight_model):
    cons = ConstraintSet.vacuous(eight)
    assert min_satisfaction_bound(eight, cons, eight_model) == 0.0


def test_subset_scan_guard():
    inst = _flat_instance(13)
    model = ValueModel.position_diff(inst)
    cons = ConstraintSet.vacuous(inst)
    with pytest.raises(InstanceTooLarge):
        min_satisfaction_bound(inst, cons, model)
    with pytest.raises(InstanceTooLarge):
        fair_decomposition(inst, cons, model)


def test_decomposition_golden(eight, eight_lower, eight_model):
    dec = fair_decomposition(eight, eight_lower, eight_model)
    by_members = {
        frozenset(eight.ids[i] for i in members): level
        for members, level in dec.blocks
    }
    assert by_members == {
        frozenset(MALES): -0.75,
        frozenset({"u3"}): 0.0,
        frozenset({"u6", "u7", "u8"}): 1.0,
    }
    targets = dec.targets_by_id(eight)
    assert targets["u1"] == -0.75
    assert targets["u6"] == 1.0


def test_decomposition_invariants(eight, eight_lower, eight_model):
    rng = np.random.default_rng(17)
    cases = [(eight, eight_lower, eight_model)]
    for _ in range(8):
        inst = random_instance(rng, groups=2, max_n=5)
        cons = random_upper_constraints(rng, inst)
        cases.append((inst, cons, ValueModel.position_diff(inst)))
    for inst, cons, model in cases:
        dec = fair_decomposition(inst, cons, model)
        covered = [i for members, _ in dec.blocks for i in members]
        assert sorted(covered) == list(range(inst.n))
        levels = [level for _, level in dec.blocks]
        assert all(b > a for a, b in zip(levels, levels[1:]))
        assert dec.blocks[0][1] == pytest.approx(
            min_satisfaction_bound(inst, cons, model), abs=1e-9
        )
        total = sum(level * len(members) for members, level in dec.blocks)
        assert total == pytest.approx(
            max_total_value(inst, cons, model, range(inst.n)), abs=1e-9
        )


def test_decomposition_targets_are_achievable_per_subset(eight):
    rng = np.random.default_rng(23)
    for _ in range(6):
        inst = random_instance(rng, groups=2, max_n=5)
        cons = random_upper_constraints(rng, inst)
        model = ValueModel.position_diff(inst)
        dec = fair_decomposition(inst, cons, model)
        n = inst.n
        for mask in range(1, 1 << n):
            members = [i for i in range(n) if (mask >> i) & 1]
            share = float(dec.targets[members].sum())
            cap = max_total_value(inst, cons, model, members)
            assert share <= cap + 1e-9


def test_decomposition_lorenz_dominates_mixtures(eight, eight_lower, eight_model, eight_table):
    _, matrix = eight_table
    dec = fair_decomposition(eight, eight_lower, eight_model)
    rng = np.random.default_rng(31)
    for _ in range(100):
        k = int(rng.integers(1, 6))
        rows = rng.integers(0, matrix.shape[0], k)
        probs = rng.dirichlet(np.ones(k))
        mixture = probs @ matrix[rows]
        assert lorenz_dominates(dec.targets, mixture, tol=1e-9)


def test_submodularity_running_instance(eight, eight_lower, eight_model):
    assert check_submodularity(eight, eight_lower, eight_model)


def test_gini_goldens():
    assert gini([3.0, 3.0, 3.0]) == 0.0
    assert gini([7.5]) == 0.0
    assert gini([0.0, 1.0]) == pytest.approx(0.5)
    assert gini([0.0, 0.0, 1.0, 1.0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        gini([])


def test_gini_affine_invariance_and_range():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.normal(size=int(rng.integers(2, 12)))
        g = gini(x)
        assert 0.0 <= g <= 1.0
        a = float(rng.uniform(0.5, 4.0))
        b = float(rng.normal())
        assert gini(a * x + b) == pytest.approx(g, abs=1e-9)


def test_spread_goldens():
    assert spread([-2.0, 3.0]) == 5.0
    assert spread([0, 0, 0, -1, -2, 2, 1, 0]) == 4.0
    with pytest.raises(ValueError):
        spread([])


def test_dcg_maximal_at_merit(eight, eight_table):
    rankings, _ = eight_table
    best = dcg(eight, merit_ranking(eight))
    assert all(dcg(eight, r) <= best + 1e-12 for r in rankings)


def test_dcg_single_position():
    inst = Instance.from_rows([("a", "g", 0.8)])
    assert dcg(inst, merit_ranking(inst)) == pytest.approx(0.8)


def test_distribution_dcg_point_mass(eight, eight_model):
    r = merit_ranking(eight)
    dist = FairDistribution(eight, [(r, 1.0, eight_model.values(r))])
    mean, std = distribution_dcg(eight, dist)
    assert mean == pytest.approx(dcg(eight, r))
    assert std == 0.0


def test_distribution_dcg_two_atoms(eight, eight_model, eight_table):
    rankings, matrix = eight_table
    a, b = rankings[0], rankings[-1]
    dist = FairDistribution(
        eight, [(a, 0.25, matrix[0]), (b, 0.75, matrix[-1])]
    )
    da, db = dcg(eight, a), dcg(eight, b)
    mean, std = distribution_dcg(eight, dist)
    assert mean == pytest.approx(0.25 * da + 0.75 * db)
    assert std == pytest.approx(
        np.sqrt(0.25 * (da - mean) ** 2 + 0.75 * (db - mean) ** 2)
    )


def test_lorenz_dominates_basics():
    assert lorenz_dominates([0.0, 0.0], [-1.0, 1.0])
    assert not lorenz_dominates([-1.0, 1.0], [0.0, 0.0])
    assert lorenz_dominates([0.0, -1e-12], [0.0, 0.0], tol=1e-9)
    with pytest.raises(ValueError):
        lorenz_dominates([0.0], [0.0, 1.0])


def test_metrics_reports(eight, eight_model, eight_table):
    rankings, matrix = eight_table
    r = rankings[0]
    rep = metrics_for_ranking(eight, eight_model, r)
    values = eight_model.values(r)
    assert rep.min_value == values.min()
    assert rep.spread == spread(values)
    assert rep.dcg_std == 0.0
    dist = FairDistribution(
        eight, [(rankings[0], 0.5, matrix[0]), (rankings[1], 0.5, matrix[1])]
    )
    drep = metrics_for_distribution(eight, dist)
    assert drep.min_value == pytest.approx(float(dist.expected.min()))
    assert set(drep.to_dict()) == {
        "min_value", "spread", "gini", "dcg_mean", "dcg_std",
    }
