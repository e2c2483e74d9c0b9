import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmmsat.cnf import serialize_dimacs, verify
from dmmsat.gen import (
    CdcParams,
    HardnessWarning,
    OutOfRange,
    cdc_probabilities,
    clause_types,
    generate_cdc,
    generate_uniform,
)


def test_probabilities_examples():
    assert cdc_probabilities(0.25) == pytest.approx((0.25, 0.0, 0.25), abs=1e-15)
    p0, p1, p2 = cdc_probabilities(0.08)
    assert p0 == 0.08
    assert p1 == pytest.approx(0.68 / 6)
    assert p2 == pytest.approx(1.16 / 6)


@given(st.floats(1e-6, 0.25))
def test_probabilities_normalized(p0):
    p0_, p1, p2 = cdc_probabilities(p0)
    assert p0_ + 3 * p1 + 3 * p2 == pytest.approx(1.0)
    assert p0_ + p1 - p2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("p0", [0.0, -0.1, 0.26])
def test_probabilities_out_of_range(p0):
    with pytest.raises(OutOfRange):
        cdc_probabilities(p0)


def test_generate_counts_and_planted():
    inst = generate_cdc(CdcParams(100, 4.3, 0.08, seed=3))
    assert inst.formula.num_clauses == 430
    assert verify(inst.formula, inst.planted)


def test_deterministic():
    a = generate_cdc(CdcParams(60, 4.3, 0.08, seed=11))
    b = generate_cdc(CdcParams(60, 4.3, 0.08, seed=11))
    c = generate_cdc(CdcParams(60, 4.3, 0.08, seed=12))
    assert serialize_dimacs(a.formula) == serialize_dimacs(b.formula)
    assert np.array_equal(a.planted, b.planted)
    assert serialize_dimacs(a.formula) != serialize_dimacs(c.formula)


@given(st.integers(3, 40), st.floats(4.26, 6.0), st.floats(0.08, 0.25), st.integers(0, 2**63))
@settings(max_examples=60, deadline=None)
def test_planted_always_verifies(n, ratio, p0, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HardnessWarning)
        inst = generate_cdc(CdcParams(n, ratio, p0, seed))
    f = inst.formula
    assert verify(f, inst.planted)
    assert np.all(f.variables[:, 0] != f.variables[:, 1])
    # un-gauged, no clause is all negated
    types = clause_types(f.gauged(inst.planted).signs)
    assert types.max() <= 2


def test_type_frequencies_three_sigma():
    params = CdcParams(1000, 100.0, 0.08, seed=5)  # 1e5 clauses
    inst = generate_cdc(params)
    counts = np.bincount(clause_types(inst.formula.gauged(inst.planted).signs), minlength=4)
    m = counts.sum()
    p0, p1, p2 = cdc_probabilities(0.08)
    for c, p in zip(counts[:3], (p0, 3 * p1, 3 * p2)):
        assert abs(c - m * p) <= 3 * np.sqrt(m * p * (1 - p))
    assert counts[3] == 0


def test_hardness_warning():
    with pytest.warns(HardnessWarning):
        generate_cdc(CdcParams(20, 4.0, 0.08))
    with pytest.warns(HardnessWarning):
        generate_cdc(CdcParams(20, 4.3, 0.05))
    with warnings.catch_warnings():
        warnings.simplefilter("error", HardnessWarning)
        generate_cdc(CdcParams(20, 4.3, 0.08))


def test_invalid_params():
    with pytest.raises(OutOfRange):
        CdcParams(2, 4.3)
    with pytest.raises(OutOfRange):
        CdcParams(10, -1.0)


def test_uniform():
    f = generate_uniform(20, 3.0, seed=1)
    assert f.num_clauses == 60
    assert generate_uniform(20, 3.0, seed=1) == f
    big = generate_uniform(1000, 34.0, seed=2)  # 1.02e5 literals
    k = big.signs.size
    pos = np.sum(big.signs > 0)
    assert abs(pos - k / 2) <= 3 * np.sqrt(k / 4)


def test_metadata_can_withhold_planted():
    inst = generate_cdc(CdcParams(20, 4.3, 0.08, seed=1))
    assert "planted" in inst.metadata()
    assert "planted" not in inst.metadata(include_planted=False)
