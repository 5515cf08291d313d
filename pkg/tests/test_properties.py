from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from twowell import ProblemData, build_field, optimal_fraction, quantifiers
from twowell.construction import sawtooth
from twowell.operators import compatible_part_sq, project_compatible, symbol_apply
from twowell.relaxation import envelope_at_fraction
from twowell.scaling import random_problem

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
mats = arrays(float, (2, 2), elements=finite)
vecs = arrays(float, (2,), elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)
ops = st.sampled_from(["curl", "div", "curlcurl"])


def as_state(op, a):
    return 0.5 * (a + a.T) if op == "curlcurl" else a


@given(ops, vecs, mats)
def test_projection_identities(op, xi, a):
    a = as_state(op, a)
    p = project_compatible(op, xi, a)
    scale = max(1.0, float(np.sum(a * a)))
    assert np.allclose(project_compatible(op, xi, p), p, atol=1e-10 * scale)
    assert abs(np.sum(p * (a - p))) <= 1e-10 * scale
    assert np.allclose(symbol_apply(op, xi, p), 0.0, atol=1e-9 * np.sqrt(scale) * np.linalg.norm(xi))
    assert abs(compatible_part_sq(op, xi, a) - np.sum(p * p)) <= 1e-10 * scale


@given(vecs, mats)
def test_curl_div_complementary(xi, a):
    pc = project_compatible("curl", xi, a)
    pd = project_compatible("div", xi, a)
    assert np.allclose(pc + pd, a, atol=1e-10 * max(1.0, np.abs(a).max()))


@given(ops, mats, finite.filter(lambda s: abs(s) > 1e-3))
def test_quantifier_symmetry_and_scaling(op, a, s):
    a = as_state(op, a)
    if np.sum(a * a) < 1e-6:
        return
    q = quantifiers(op, a)
    qn = quantifiers(op, -a)
    qs = quantifiers(op, s * a)
    n2 = float(np.sum(a * a))
    assert q.h >= -1e-12 * n2 and q.g >= -1e-12 * n2
    assert abs(q.h + q.g - n2) <= 1e-10 * n2
    assert abs(qn.h - q.h) <= 1e-10 * n2
    assert abs(qs.h - s * s * q.h) <= 1e-9 * s * s * n2


@settings(max_examples=50, deadline=None)
@given(ops, st.integers(0, 2**32 - 1))
def test_fraction_in_unit_interval_and_minimal(op, seed):
    d = random_problem(op, np.random.default_rng(seed))
    theta, e0 = optimal_fraction(d)
    assert 0.0 <= theta <= 1.0
    for t in np.linspace(0, 1, 11):
        assert e0 <= envelope_at_fraction(d, t) + 1e-10 * max(1.0, e0)


@given(st.floats(0.05, 0.95), st.floats(0.01, 2.0), st.floats(-5, 5))
def test_sawtooth_periodic_and_bounded(theta, r, t):
    s = sawtooth(theta, r, t)
    assert abs(sawtooth(theta, r, t + 2 * r) - s) <= 1e-9 * max(1.0, abs(t) / r)
    assert -theta * (1 - theta) * r - 1e-12 <= s <= theta * (1 - theta) * r + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["curl", "div"]), st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_ledger_cross_terms_vanish(op, seed, N):
    d = random_problem(op, np.random.default_rng(seed), mixing=True)
    led = build_field(d, N).ledger
    assert abs(led.cross) <= 1e-12 * max(1.0, led.excess)
    assert all(abs(row.cross) <= 1e-12 * max(1.0, led.excess) for row in led.layers)
    assert led.compat > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reduced_data_keeps_fraction(seed):
    d = random_problem("curlcurl", np.random.default_rng(seed), mixing=True)
    fld = build_field(d, 4)
    theta, e0 = optimal_fraction(d)
    assert abs(fld.theta - theta) <= 1e-10
    assert abs(fld.reduction.E0_density - e0) <= 1e-10 * max(1.0, e0)
    assert isinstance(fld.reduction.original, ProblemData)
