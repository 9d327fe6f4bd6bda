import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_data, tiny_instance
from drocal.eligibility import (
    EligibilityRecord,
    WeightPolytope,
    bound_linear_over_polytope,
    build_indicator_tensor,
    check_feasible,
    construct_eligibility_set,
    mean_fraction_by_size,
    n1_impact_study,
    range_shrinkage_ranking,
    simulate_summaries,
    solve_min_q,
    summarize_data,
)
from drocal.empirical import bonferroni_threshold
from drocal.errors import EmptySetError, InfeasibleError, InvalidInputError, ModelEvaluationError
from drocal.model import Box, sample_uniform
from oracles import linear_bounds_oracle, min_q_oracle, sandwich_rows
from stubs import EBlindModel, FlakyModel

tiny = st.integers(0, 2**32 - 1).map(np.random.default_rng)


def test_bits_examples():
    assert build_indicator_tensor([[2.0]], [[1.0]]).bits.tolist() == [[[True]]]
    assert build_indicator_tensor([[2.0]], [[2.0]]).bits.tolist() == [[[True]]]
    assert build_indicator_tensor([[2.0]], [[3.0]]).bits.tolist() == [[[False]]]


def test_bits_match_naive_loop(rng):
    data, sims = rng.normal(size=(3, 2)), rng.normal(size=(5, 2))
    bits = build_indicator_tensor(data, sims).bits
    for j in range(5):
        for i in range(3):
            for r in range(2):
                assert bits[j, i, r] == (sims[j, r] <= data[i, r])


def test_sandwich_rows_match_definition(rng):
    data, sims = tiny_instance(rng, 3, 5, 2)
    B, lo, hi = build_indicator_tensor(data, sims).sandwich_matrix()
    B0, lo0, hi0 = sandwich_rows(data, sims)
    np.testing.assert_array_equal(B, B0)
    np.testing.assert_allclose(lo, lo0)
    np.testing.assert_allclose(hi, hi0)


def test_tensor_shape_mismatch():
    with pytest.raises(InvalidInputError):
        build_indicator_tensor(np.zeros((2, 3)), np.zeros((4, 2)))


@pytest.mark.parametrize("backend", ["highs", "bland"])
@pytest.mark.parametrize("d,s", [(0.0, 5.0), (1.0, 1.0), (3.0, -2.0)])
def test_single_point_q_is_one(backend, d, s):
    q, w = solve_min_q(build_indicator_tensor([[d]], [[s]]), backend)
    assert q == pytest.approx(1.0, abs=1e-12)
    assert w.tolist() == [1.0]


@pytest.mark.parametrize("n1", [1, 2, 3, 4, 7])
def test_identical_multiset_gives_inverse_root(n1, rng):
    pts = rng.permutation(np.arange(n1, dtype=float))[:, None]
    tensor = build_indicator_tensor(pts, pts[::-1].copy())
    q, w = solve_min_q(tensor)
    assert q == pytest.approx(1 / math.sqrt(n1), abs=1e-6)
    if n1 <= 4:
        assert min_q_oracle(pts, pts) == pytest.approx(1 / math.sqrt(n1), abs=1e-9)


@settings(max_examples=40)
@given(tiny)
def test_min_q_matches_vertex_enumeration(rng):
    data, sims = tiny_instance(rng)
    tensor = build_indicator_tensor(data, sims)
    ref = min_q_oracle(data, sims)
    for backend in ("highs", "bland"):
        q, w = solve_min_q(tensor, backend)
        assert q == pytest.approx(ref, abs=1e-6)
        assert abs(w.sum() - 1) <= 1e-9 and np.all(w >= 0)
        assert tensor.violation(w) <= q + 1e-6


@settings(max_examples=40)
@given(tiny)
def test_linear_bounds_match_vertex_enumeration(rng):
    data, sims = tiny_instance(rng)
    q = min_q_oracle(data, sims) + rng.uniform(0.01, 1.0)
    poly = WeightPolytope(build_indicator_tensor(data, sims), q)
    c = rng.normal(size=sims.shape[0])
    lo, hi = linear_bounds_oracle(data, sims, q, c)
    for backend in ("highs", "bland"):
        assert bound_linear_over_polytope(poly, c, "min", backend) == pytest.approx(lo, abs=1e-6)
        assert bound_linear_over_polytope(poly, c, "max", backend) == pytest.approx(hi, abs=1e-6)


def test_bound_singleton_and_constant(rng):
    poly = WeightPolytope(build_indicator_tensor([[0.0]], [[0.0]]), 1.5)
    for sense in ("min", "max"):
        assert bound_linear_over_polytope(poly, [4.2], sense) == 4.2
    data, sims = rng.normal(size=(3, 1)), rng.normal(size=(6, 1))
    poly = WeightPolytope(build_indicator_tensor(data, sims), 5.0)
    for sense in ("min", "max"):
        assert bound_linear_over_polytope(poly, np.full(6, -0.7), sense) == -0.7


def test_empty_polytope_raises():
    # one sim far above one datum needs q = 1
    poly = WeightPolytope(build_indicator_tensor([[0.0]], [[1.0], [2.0]]), 0.5)
    with pytest.raises(InfeasibleError):
        bound_linear_over_polytope(poly, [1.0, 0.0], "min")
    with pytest.raises(InfeasibleError):
        bound_linear_over_polytope(poly, [1.0, 1.0], "min")


def test_bound_validation():
    poly = WeightPolytope(build_indicator_tensor([[0.0]], [[0.0]]), 1.5)
    with pytest.raises(InvalidInputError):
        bound_linear_over_polytope(poly, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        bound_linear_over_polytope(poly, [1.0], "median")
    with pytest.raises(InvalidInputError):
        WeightPolytope(poly.tensor, 0.0)


@settings(max_examples=30)
@given(tiny)
def test_feasibility_monotone_in_q(rng):
    data, sims = tiny_instance(rng, levels=6)
    tensor = build_indicator_tensor(data, sims)
    q_star, _ = solve_min_q(tensor)
    assert check_feasible(tensor, q_star + 0.01)
    assert check_feasible(tensor, 2 * math.sqrt(len(data)))
    if q_star > 0.01:
        assert not check_feasible(tensor, q_star - 0.01)


@settings(max_examples=25)
@given(tiny)
def test_q_star_permutation_invariant(rng):
    data, sims = tiny_instance(rng, levels=5)
    q, _ = solve_min_q(build_indicator_tensor(data, sims))
    q2, _ = solve_min_q(build_indicator_tensor(rng.permutation(data), rng.permutation(sims)))
    assert q2 == pytest.approx(q, abs=1e-9)


@settings(max_examples=25)
@given(tiny)
def test_duplicate_sim_never_increases_q(rng):
    data, sims = tiny_instance(rng, levels=5)
    q, _ = solve_min_q(build_indicator_tensor(data, sims))
    j = rng.integers(sims.shape[0])
    q2, _ = solve_min_q(build_indicator_tensor(data, np.vstack([sims, sims[j]])))
    assert q2 <= q + 1e-9


def test_dense_sims_interpolate_ecdf(rng):
    data = rng.uniform(0, 1, size=(8, 1))
    sims = np.linspace(-0.1, 1.1, 400)[:, None]
    q, _ = solve_min_q(build_indicator_tensor(data, sims))
    assert q <= 1 / math.sqrt(8) + 1e-6


def test_backends_agree_on_oscillator(oscillator, e_true):
    data = summarize_data(make_data(oscillator, e_true, 12, 1))
    sims = summarize_data(make_data(oscillator, np.array([1.1, 0.9, 1.0, 1.0]), 40, 2))
    tensor = build_indicator_tensor(data, sims)
    qh, _ = solve_min_q(tensor, "highs")
    qb, wb = solve_min_q(tensor, "bland")
    assert qb == pytest.approx(qh, abs=1e-7)
    assert tensor.violation(wb) <= qb + 1e-6


@pytest.fixture(scope="module")
def small_run(oscillator, e_true):
    data = make_data(oscillator, e_true, 20, 11)
    e = np.vstack([e_true, sample_uniform(oscillator.e_box, 11, 12)])
    a = sample_uniform(oscillator.a_box, 80, 13)
    return data, e, a


def test_construct_flags_and_threshold(oscillator, small_run):
    data, e, a = small_run
    recs = construct_eligibility_set(data, oscillator, e, a, keep_weights=True)
    thr = bonferroni_threshold(0.05, 12)
    assert len(recs) == len(e)
    summaries = summarize_data(data)
    for r, e_row in zip(recs, e):
        np.testing.assert_array_equal(r.e, e_row)
        assert r.threshold == thr
        assert r.eligible == (r.q_star <= thr)
        tensor = build_indicator_tensor(summaries, simulate_summaries(oscillator, a, r.e))
        assert check_feasible(tensor, thr) == r.eligible
        assert tensor.violation(r.witness_weights) <= r.q_star + 1e-6


def test_construct_jobs_do_not_change_records(oscillator, small_run):
    data, e, a = small_run
    one = construct_eligibility_set(data, oscillator, e, a, jobs=1)
    two = construct_eligibility_set(data, oscillator, e, a, jobs=2)
    assert [r.q_star for r in one] == [r.q_star for r in two]


def test_e_blind_model_gives_identical_q(small_run):
    data, e, a = small_run
    recs = construct_eligibility_set(data, EBlindModel(), e, a)
    assert len({r.q_star for r in recs}) == 1
    assert len({r.eligible for r in recs}) == 1


def test_record_level_failures(small_run):
    data, e, a = small_run
    recs = construct_eligibility_set(data, FlakyModel(1.0), e, a)
    for r in recs:
        if r.e[0] > 1.0:
            assert np.isnan(r.q_star) and not r.eligible and "flaky" in r.error
        else:
            assert r.error is None
    with pytest.raises(ModelEvaluationError, match="all"):
        construct_eligibility_set(data, FlakyModel(-1.0), e, a)


def test_ranking_examples():
    box = Box(np.zeros(2), np.full(2, 2.0))
    grid = np.linspace(0, 2, 1001)
    recs = [EligibilityRecord(np.array([x, 0.7]), 0.0, True, 1.0) for x in grid]
    ranking = dict(range_shrinkage_ranking(recs, box))
    assert ranking[0] == pytest.approx(0.10, abs=1e-3)
    assert ranking[1] == 1.0
    assert range_shrinkage_ranking(recs, box)[0][0] == 1


def test_ranking_needs_eligible():
    with pytest.raises(EmptySetError):
        range_shrinkage_ranking([EligibilityRecord(np.zeros(2), 9.0, False, 1.0)], Box(np.zeros(2), np.ones(2)))


def test_n1_study_full_size_matches_full_run(oscillator, small_run):
    data, e, a = small_run
    full = construct_eligibility_set(data, oscillator, e, a)
    rows = n1_impact_study(data, oscillator, [len(data)], [0, 1], e, a)
    for row in rows:
        assert row.n_eligible == sum(r.eligible for r in full)
        assert row.n_records == len(full)


def test_n1_study_small_sizes_more_permissive(oscillator, small_run):
    data, e, a = small_run
    rows = n1_impact_study(data, oscillator, [1, len(data)], range(3), e, a)
    frac = mean_fraction_by_size(rows)
    assert frac[1] >= frac[len(data)]


def test_n1_study_size_validation(oscillator, small_run):
    data, e, a = small_run
    with pytest.raises(InvalidInputError):
        n1_impact_study(data, oscillator, [len(data) + 1], [0], e, a)
