import numpy as np
import pytest

from twowell.compatibility import quantifiers
from twowell.operators import project_compatible
from twowell.relaxation import (
    DegenerateDataError,
    ProblemData,
    compatible_approximation,
    envelope_at_fraction,
    optimal_fraction,
    optimal_fraction_grid,
    relax,
)

from conftest import random_sym

Z = np.zeros((2, 2))
A1 = np.diag([2.0, 1.0])


def half_data():
    return ProblemData.make("curl", 0.5 * A1, Z, A1)


def test_envelope_examples():
    d = half_data()
    assert envelope_at_fraction(d, 0.5) == pytest.approx(0.25)
    assert envelope_at_fraction(d, 0.0) == pytest.approx(np.sum((d.F - d.a0) ** 2))
    c = ProblemData.make("curl", 0.5 * np.outer([1, 2], [1, 0]), Z, np.outer([1, 2], [1, 0]))
    assert envelope_at_fraction(c, 0.5) == 0.0


def test_optimal_fraction_symmetric_case():
    theta, e0 = optimal_fraction(half_data())
    assert theta == 0.5 and e0 == pytest.approx(0.25, abs=1e-15)
    assert optimal_fraction_grid(half_data())[0] == pytest.approx(0.5, abs=1e-6)


def test_compatible_data_has_no_excess():
    a = np.outer([1.0, -2.0], [0.6, 0.8])
    for lam in (0.2, 0.7):
        d = ProblemData.make("curl", lam * a, Z, a)
        theta, e0 = optimal_fraction(d)
        assert theta == pytest.approx(lam, abs=1e-14) and e0 == pytest.approx(0.0, abs=1e-14)
        tw = compatible_approximation(d, [0.6, 0.8])
        np.testing.assert_allclose(tw.a0, d.a0, atol=1e-14)
        np.testing.assert_allclose(tw.a1, d.a1, atol=1e-14)


def test_pure_regime_beyond_slab():
    d = ProblemData.make("curl", 3 * A1, Z, A1)
    r = relax(d)
    assert r.theta_tilde == 1.0 and r.regime == "pure1"
    assert r.E0_density == pytest.approx(np.sum((3 * A1 - A1) ** 2))


def test_tilde_wells_example():
    tw = compatible_approximation(half_data(), [1, 0])
    np.testing.assert_allclose(tw.a0, np.diag([0.0, 0.5]))
    np.testing.assert_allclose(tw.a1, np.diag([2.0, 0.5]))
    np.testing.assert_allclose(tw.b, [2.0, 0.0])
    np.testing.assert_allclose(tw.a1 - tw.a0, np.outer(tw.b, [1, 0]))


def test_non_optimal_direction_rejected():
    with pytest.raises(ValueError, match="not optimal"):
        compatible_approximation(half_data(), [0, 1])


def test_equal_wells_rejected():
    with pytest.raises(DegenerateDataError):
        ProblemData.make("div", Z, A1, A1)


@pytest.mark.parametrize("kind", ["curl", "div", "curlcurl"])
def test_random_instances(kind, rng):
    for _ in range(40):
        m = [random_sym(rng) if kind == "curlcurl" else rng.standard_normal((2, 2)) for _ in range(3)]
        d = ProblemData.make(kind, *m)
        r = relax(d)
        theta_g, e_g = optimal_fraction_grid(d, 10**5)
        assert abs(r.theta_tilde - theta_g) <= 1e-5
        assert r.E0_density <= e_g + 1e-12
        # strict convexity of the envelope in theta
        t = np.linspace(0, 1, 1001)
        vals = np.array([envelope_at_fraction(d, x, r.h) for x in t])
        assert np.all(np.diff(vals, 2) > 0)
        # slab geometry
        assert (r.theta_tilde == 0.0) == (r.theta_star <= r.R + 1e-12)
        assert (r.theta_tilde == 1.0) == (r.theta_star >= 1 - r.R - 1e-12)
        # compatible approximation reproduces the excess energy
        tw = r.tilde_wells
        at = d.a_theta(r.theta_tilde)
        pa = project_compatible(d.op, tw.xi, d.a)
        lhs = np.sum((d.F - at) ** 2) + r.theta_tilde * (1 - r.theta_tilde) * np.sum((d.a - pa) ** 2)
        assert lhs == pytest.approx(r.E0_density, rel=1e-10, abs=1e-14)
        assert np.sum((tw.a1 - tw.a0) ** 2) == pytest.approx(r.g, rel=1e-10)
        np.testing.assert_allclose((1 - r.theta_tilde) * tw.a0 + r.theta_tilde * tw.a1, d.F, atol=1e-12)


def test_translation_invariance(rng):
    d = ProblemData.make("curl", rng.standard_normal((2, 2)), Z, np.array([[1.0, 0.3], [-0.2, 0.8]]))
    theta, _ = optimal_fraction(d)
    a = d.a
    for _ in range(100):
        v = rng.standard_normal((2, 2))
        v -= np.sum(v * a) / np.sum(a * a) * a
        t2, _ = optimal_fraction(ProblemData.make("curl", d.F + v, Z, a))
        assert t2 == pytest.approx(theta, abs=1e-12)


def test_zero_excess_iff_compatible_or_in_wells():
    d = ProblemData.make("curl", A1, Z, A1)
    assert relax(d).E0_density == 0.0
    d = ProblemData.make("curl", 0.5 * A1, Z, A1)
    assert relax(d).E0_density > 0 and quantifiers("curl", A1).h > 0
