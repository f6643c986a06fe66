"""Exact root isolation: known-root oracles and certified interval properties."""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyapshear import sturm


def poly_from_roots(roots):
    """Integer polynomial prod (x - r)."""
    p = [Fraction(1)]
    for r in roots:
        p = [Fraction(0)] + p
        for i in range(len(p) - 1):
            p[i] -= r * p[i + 1]
    return p


def test_eval_and_derivative():
    p = [Fraction(-1), Fraction(6), Fraction(-5), Fraction(1)]  # x^3-5x^2+6x-1
    assert sturm.poly_eval(p, 0) == -1
    assert sturm.poly_eval(p, 1) == 1
    assert sturm.poly_derivative(p) == [6, -10, 3]


def test_divmod_roundtrip():
    a = poly_from_roots([2, 3, 5])
    b = poly_from_roots([3])
    q, r = sturm.poly_divmod(a, b)
    assert sturm.poly_degree(r) < 0
    assert q == poly_from_roots([2, 5])


def test_isolation_two_integer_roots():
    p = poly_from_roots([2, 3])
    ivs = sturm.isolate_real_roots(p)
    assert len(ivs) == 2
    (a1, b1), (a2, b2) = ivs
    assert a1 < 2 <= b1 and a2 < 3 <= b2


def test_no_real_roots():
    p = [Fraction(1), Fraction(0), Fraction(1)]  # x^2 + 1
    assert sturm.isolate_real_roots(p) == []


def test_squarefree_triple_root():
    p = poly_from_roots([1, 1, 1])
    dec = sturm.squarefree_decomposition(p)
    assert len(dec) == 1
    factor, mult = dec[0]
    assert mult == 3
    assert sturm.poly_degree(factor) == 1


def test_squarefree_mixed():
    # (x-1)^2 (x-2) (x-3)^3
    p = poly_from_roots([1, 1, 2, 3, 3, 3])
    dec = dict((m, f) for f, m in sturm.squarefree_decomposition(p))
    assert sorted(dec) == [1, 2, 3]
    assert sturm.poly_eval(dec[1], 2) == 0
    assert sturm.poly_eval(dec[2], 1) == 0
    assert sturm.poly_eval(dec[3], 3) == 0


def test_refine_to_width():
    p = [Fraction(-1), Fraction(6), Fraction(-5), Fraction(1)]
    ivs = sturm.isolate_real_roots(p)
    assert len(ivs) == 3
    width = Fraction(1, 10**12)
    # independent oracle: mpmath polyroots of the same polynomial
    oracle = [0.1980622641951617, 1.5549581320873712, 3.2469796037174671]
    roots = []
    for a, b in ivs:
        lo, hi = sturm.refine_root(p, a, b, width)
        assert hi - lo <= width
        assert sturm.poly_eval(p, lo) * sturm.poly_eval(p, hi) <= 0
        roots.append(float((lo + hi) / 2))
    roots.sort()
    for got, want in zip(roots, oracle):
        assert abs(got - want) < 2e-12


def test_refine_exact_rational_root():
    p = poly_from_roots([Fraction(1, 2), 4])
    # clear denominators: 2x^2 - 9x + 4
    p = [c * 2 for c in p]
    ivs = sturm.isolate_real_roots(p)
    lo, hi = sturm.refine_root(p, *ivs[0], Fraction(1, 10**12))
    if lo == hi:
        assert lo == Fraction(1, 2)
    else:
        assert lo <= Fraction(1, 2) <= hi


def test_cauchy_bound_contains_roots():
    p = poly_from_roots([-7, 2, 11])
    bound = sturm.cauchy_bound(p)
    chain = sturm.sturm_chain(p)
    assert sturm.count_roots(chain, -bound, bound) == 3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=-9, max_value=9), min_size=1, max_size=4))
def test_isolation_recovers_integer_roots(roots):
    p = poly_from_roots(roots)
    distinct = sorted(set(roots))
    found = []
    for factor, mult in sturm.squarefree_decomposition(p):
        for a, b in sturm.isolate_real_roots(factor):
            lo, hi = sturm.refine_root(factor, a, b, Fraction(1, 10**9))
            found.append((float((lo + hi) / 2), mult))
    found.sort()
    assert len(found) == len(distinct)
    for (x, mult), want in zip(found, distinct):
        assert abs(x - want) < 1e-8
        assert mult == roots.count(want)
