from __future__ import annotations

import sys

import numpy as np
import pytest

from twowell import ProblemData


def random_sym(rng, d=2):
    m = rng.standard_normal((d, d))
    return 0.5 * (m + m.T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def curl_mixing():
    """Curl data with e1 optimal (a = diag(2, 1) plus a skew well offset)."""
    a0 = np.array([[0.1, 0.2], [-0.3, 0.05]])
    a1 = a0 + np.array([[2.0, 0.3], [0.5, 1.0]])
    F = np.array([[1.0, 0.4], [0.1, 0.3]])
    return ProblemData.make("curl", F, a0, a1)


@pytest.fixture
def cc_rank_one():
    """Curl-curl data whose well difference is 1.3 xi x xi with xi = (0.6, 0.8)."""
    a0 = np.array([[0.1, 0.2], [0.2, 0.05]])
    xi = np.array([0.6, 0.8])
    a1 = a0 + 1.3 * np.outer(xi, xi)
    F = a0 + 0.65 * np.outer(xi, xi) + np.diag([0.1, -0.2])
    return ProblemData.make("curlcurl", F, a0, a1)


@pytest.fixture
def cc_indefinite():
    return ProblemData.make("curlcurl", np.diag([0.3, -0.1]), np.zeros((2, 2)), np.diag([1.0, -1.0]))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
