import numpy as np
import pytest

from twowell.compatibility import (
    EquicompatibleError,
    multiplier_p,
    optimal_directions,
    quantifiers,
    quantifiers_oracle,
    vanishing_order_fit,
    wave_cone_distance_sq,
)
from twowell.operators import DiffOp

from conftest import random_sym


def test_curl_diag():
    q = quantifiers("curl", np.diag([2.0, 1.0]))
    assert (q.g, q.h, q.vanishing_order) == (4.0, 1.0, 1)


def test_curlcurl_psd_and_rank_one():
    q = quantifiers("curlcurl", np.diag([2.0, 1.0]))
    assert (q.g, q.h, q.vanishing_order) == (4.0, 1.0, 1)
    q = quantifiers("curlcurl", np.diag([1.0, 0.0]))
    assert (q.g, q.h, q.vanishing_order) == (1.0, 0.0, 2)


def test_div_identity_is_equicompatible():
    q = quantifiers("div", np.eye(2))
    assert q.equicompatible and q.h == 1.0 and q.g == 1.0 and q.vanishing_order is None
    assert multiplier_p("div", np.eye(2), [0.3, 0.9]) < 1e-15


def test_optimal_direction_sets():
    s = optimal_directions("div", np.diag([1.0, 2.0]))
    assert s.kind == "subsphere" and abs(abs(s.witnesses[0][0]) - 1) < 1e-15
    s = optimal_directions("curlcurl", np.diag([1.0, -1.0]))
    assert s.kind == "four_points"
    for w in s.witnesses:
        np.testing.assert_allclose(np.abs(w), [2**-0.5, 2**-0.5], atol=1e-15)
    c, t = np.cos(0.3), np.sin(0.3)
    assert optimal_directions("curl", 1.7 * np.array([[c, -t], [t, c]])).kind == "full_sphere"


def test_multiplier_examples():
    a = np.diag([1.0, 0.0])
    assert multiplier_p("curl", a, [0, 1]) == 1.0
    assert multiplier_p("curl", a, [1, 0]) == 0.0
    assert multiplier_p("curlcurl", np.diag([1.0, -1.0]), [1, 1]) < 1e-15


@pytest.mark.parametrize("kind", ["curl", "div", "curlcurl"])
def test_against_sphere_sampling(kind, rng):
    for _ in range(30):
        a = random_sym(rng) if kind == "curlcurl" else rng.standard_normal((2, 2))
        q = quantifiers(kind, a)
        o = quantifiers_oracle(kind, a)
        n2 = np.sum(a * a)
        assert abs(q.h - o["h"]) <= 1e-9 * n2
        assert abs(q.h - wave_cone_distance_sq(kind, a)) <= 1e-5 * n2
        assert multiplier_p(kind, a, o["witness"], q) <= 1e-9 * n2
        for w in optimal_directions(kind, a).witnesses:
            assert multiplier_p(kind, a, w, q) <= 1e-10 * n2
        qm = quantifiers(kind, -a)
        assert qm.h == pytest.approx(q.h, abs=1e-14 * n2) and qm.g == pytest.approx(q.g, abs=1e-14 * n2)


def test_curl_and_curlcurl_agree_on_psd(rng):
    for _ in range(20):
        m = rng.standard_normal((2, 2))
        a = m @ m.T
        assert quantifiers("curl", a).g == pytest.approx(quantifiers("curlcurl", a).g, rel=1e-12)


def test_indefinite_is_compatible_for_curlcurl(rng):
    for _ in range(20):
        a = random_sym(rng)
        if np.linalg.det(a) < 0:
            assert quantifiers("curlcurl", a).h <= 1e-10 * np.sum(a * a)


def test_three_dimensional_curl_and_div(rng):
    for kind in ("curl", "div"):
        a = rng.standard_normal((3, 3))
        q = quantifiers(DiffOp(kind, 3), a)
        o = quantifiers_oracle(DiffOp(kind, 3), a)
        assert abs(q.h - o["h"]) <= 1e-8 * np.sum(a * a)


@pytest.mark.parametrize("kind,a,order", [
    ("curlcurl", np.diag([1.0, 0.0]), 2),
    ("curlcurl", np.diag([2.0, 1.0]), 1),
    ("div", np.diag([1.0, 2.0]), 1),
    ("curl", np.array([[1.0, 2.0], [0.5, -1.0]]), 1),
    ("curlcurl", np.diag([1.0, -1.0]), 1),
])
def test_vanishing_order_fit(kind, a, order):
    fit = vanishing_order_fit(kind, a)
    assert abs(fit.slope - 2 * order) <= 0.1
    assert round(fit.order) == order
    assert fit.r_squared > 0.999


def test_vanishing_order_rejects_equicompatible():
    with pytest.raises(EquicompatibleError):
        vanishing_order_fit("div", np.eye(2))


def test_curlcurl_3d_closed_forms_not_offered():
    a = np.eye(3)
    a[0, 1] = a[1, 0] = 0.5
    with pytest.raises(NotImplementedError):
        quantifiers(DiffOp("curlcurl", 3), a)
