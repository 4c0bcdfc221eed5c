from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from foilfem.quadrature import interval_rule, triangle_rule


def exact_monomial(a, b):
    # integral of x^a y^b over the reference triangle (0,0), (1,0), (0,1)
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 4, 8, 13])
def test_triangle_rule_integrates_monomials(degree):
    bary, w = triangle_rule(degree)
    x, y = bary[:, 1], bary[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = 0.5 * np.sum(w * x ** a * y ** b)
            assert got == pytest.approx(exact_monomial(a, b), rel=1e-12, abs=1e-15)


@given(st.integers(1, 20))
def test_triangle_rule_points_inside_and_weights_positive(degree):
    bary, w = triangle_rule(degree)
    assert np.all(bary >= 0) and np.allclose(bary.sum(axis=1), 1.0)
    assert np.all(w > 0) and w.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("npts", [1, 2, 5])
def test_interval_rule_exact_to_degree(npts):
    x, w = interval_rule(npts)
    for k in range(2 * npts):
        assert np.sum(w * x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_rules_are_read_only():
    bary, w = triangle_rule(3)
    with pytest.raises(ValueError):
        w[0] = 0.0
