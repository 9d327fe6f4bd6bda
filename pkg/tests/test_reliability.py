import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drocal.eligibility import EligibilityRecord, WeightPolytope, build_indicator_tensor
from drocal.errors import EmptySetError
from drocal.reliability import (
    FailureIndicatorVector,
    failure_prob_range,
    low_rmin_subset,
    reliability_report,
    rmin_rmax_table,
    severity,
)
from oracles import linear_bounds_oracle
from stubs import ConstantGModel, TableModel, smooth_g, tiny_case

THETA = np.array([0.2, -0.1])
tiny = st.integers(0, 2**32 - 1).map(np.random.default_rng)


def oracle_report(cases, theta):
    per_lo, per_hi, sev, table = [np.inf] * 2, [-np.inf] * 2, [-np.inf] * 2, []
    for data, sims, q, a, e in cases:
        g = smooth_g(a, e, theta)
        for i in range(2):
            lo, hi = linear_bounds_oracle(data, sims, q, (g[:, i] >= 0).astype(float))
            per_lo[i], per_hi[i] = min(per_lo[i], lo), max(per_hi[i], hi)
            sev[i] = max(sev[i], linear_bounds_oracle(data, sims, q, np.maximum(g[:, i], 0))[1])
        table.append(linear_bounds_oracle(data, sims, q, (g >= 0).any(axis=1).astype(float)))
    return np.array(per_lo), np.array(per_hi), np.array(sev), table


@settings(max_examples=25)
@given(tiny)
def test_report_matches_vertex_enumeration(rng):
    records, polys, cases = tiny_case(rng)
    per_lo, per_hi, sev, table = oracle_report(cases, THETA)
    model = TableModel()
    rep = reliability_report(records, model, THETA, polys)
    np.testing.assert_allclose(rep.requirement_ranges[:, 0], per_lo, atol=1e-6)
    np.testing.assert_allclose(rep.requirement_ranges[:, 1], per_hi, atol=1e-6)
    np.testing.assert_allclose(rep.severities, sev, atol=1e-6)
    for row, (lo, hi) in zip(rep.table, table):
        assert row.r_min == pytest.approx(lo, abs=1e-6) and row.r_max == pytest.approx(hi, abs=1e-6)
    # the single-purpose entry points agree with the combined report
    ranges, combined = failure_prob_range(records, model, THETA, polys)
    np.testing.assert_allclose(ranges, rep.requirement_ranges, atol=1e-9)
    assert combined == pytest.approx(rep.combined_range, abs=1e-9)
    for i in range(2):
        assert severity(records, model, THETA, polys, i) == pytest.approx(sev[i], abs=1e-6)
    assert [(r.r_min, r.r_max) for r in rmin_rmax_table(records, model, THETA, polys)] == [
        (r.r_min, r.r_max) for r in rep.table
    ]


@settings(max_examples=15)
@given(tiny)
def test_report_invariants(rng):
    records, polys, _ = tiny_case(rng, n_e=3)
    rep = reliability_report(records, TableModel(), THETA, polys)
    lo, hi = rep.combined_range
    assert 0 <= lo <= hi <= 1 + 1e-9
    assert np.all(rep.requirement_ranges[:, 1] <= hi + 1e-9)
    assert np.all(rep.requirement_ranges[:, 0] <= rep.requirement_ranges[:, 1] + 1e-12)
    assert np.all(rep.severities >= 0)
    for row in rep.table:
        assert row.r_min <= row.r_max + 1e-12
    # dropping an eligible e never widens a range
    fewer = reliability_report(records[:1], TableModel(), THETA, {0: polys[0]})
    assert np.all(fewer.requirement_ranges[:, 0] >= rep.requirement_ranges[:, 0] - 1e-9)
    assert np.all(fewer.requirement_ranges[:, 1] <= rep.requirement_ranges[:, 1] + 1e-9)
    # raising the threshold never shrinks a range
    looser = {i: WeightPolytope(p.tensor, p.q_threshold + 0.5, p.a_samples) for i, p in polys.items()}
    wide = reliability_report(records, TableModel(), THETA, looser)
    assert np.all(wide.requirement_ranges[:, 0] <= rep.requirement_ranges[:, 0] + 1e-9)
    assert np.all(wide.requirement_ranges[:, 1] >= rep.requirement_ranges[:, 1] - 1e-9)


@pytest.mark.parametrize("value,expected", [(-1.0, 0.0), (0.0, 1.0), (3.0, 1.0)])
def test_constant_models(rng, value, expected):
    records, polys, _ = tiny_case(rng)
    rep = reliability_report(records, ConstantGModel(value), THETA, polys)
    np.testing.assert_array_equal(rep.requirement_ranges, expected)
    assert rep.combined_range == (expected, expected)
    assert all((r.r_min, r.r_max) == (expected, expected) for r in rep.table)
    np.testing.assert_allclose(rep.severities, max(value, 0.0))


def test_singleton_severity():
    poly = WeightPolytope(build_indicator_tensor([[0.0]], [[0.0]]), 1.5, np.zeros((1, 1)))
    recs = [EligibilityRecord(np.zeros(1), 1.0, True, 1.5)]
    assert severity(recs, ConstantGModel(2.5), THETA, {0: poly}, 0) == 2.5


def test_needs_eligible(rng):
    records, polys, _ = tiny_case(rng)
    for r in records:
        r.eligible = False
    with pytest.raises(EmptySetError):
        reliability_report(records, TableModel(), THETA, polys)


def test_indicator_vector_is_or():
    ind = FailureIndicatorVector.from_values([[-1.0, 0.0], [-2.0, -0.5], [1.0, -1.0]])
    assert ind.per_requirement.tolist() == [[False, False, True], [True, False, False]]
    assert ind.combined.tolist() == [True, False, True]


def test_low_rmin_subset(rng):
    records, polys, _ = tiny_case(rng, n_e=4)
    table = rmin_rmax_table(records, TableModel(), THETA, polys)
    low = low_rmin_subset(table, 0.5)
    cut = np.quantile([r.r_min for r in table], 0.5)
    assert low == [r.index for r in table if r.r_min <= cut]
    assert low_rmin_subset([]) == []
