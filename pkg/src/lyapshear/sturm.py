"""Exact real-root isolation for integer polynomials via Sturm sequences.

All arithmetic below is carried out over :class:`fractions.Fraction`, so the
root counts and the isolating intervals are certified, not floating guesses.
Polynomials are lists of coefficients, index = degree.
"""
from __future__ import annotations

from fractions import Fraction


def poly_degree(p):
    """Degree of ``p`` after stripping trailing zeros; -1 for the zero polynomial."""
    d = len(p) - 1
    while d >= 0 and p[d] == 0:
        d -= 1
    return d


def poly_trim(p):
    d = poly_degree(p)
    return [Fraction(c) for c in p[: d + 1]]


def poly_eval(p, x):
    """Horner evaluation; exact when ``x`` is a Fraction or int."""
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_derivative(p):
    return [i * c for i, c in enumerate(p)][1:] or [Fraction(0)]


def poly_divmod(a, b):
    """Quotient and remainder of ``a / b`` over the rationals."""
    a = poly_trim(a)
    b = poly_trim(b)
    if poly_degree(b) < 0:
        raise ZeroDivisionError("division by zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = a[:]
    db = poly_degree(b)
    lead = b[db]
    while poly_degree(r) >= db:
        dr = poly_degree(r)
        coeff = r[dr] / lead
        q[dr - db] = coeff
        for i in range(db + 1):
            r[dr - db + i] -= coeff * b[i]
    return poly_trim(q), poly_trim(r)


def poly_gcd(a, b):
    """Monic gcd over the rationals."""
    a, b = poly_trim(a), poly_trim(b)
    while poly_degree(b) >= 0:
        _, r = poly_divmod(a, b)
        a, b = b, r
    d = poly_degree(a)
    if d < 0:
        return a
    lead = a[d]
    return [c / lead for c in a]


def _poly_sub(a, b):
    out = [Fraction(0)] * max(len(a), len(b))
    for j, v in enumerate(a):
        out[j] += v
    for j, v in enumerate(b):
        out[j] -= v
    return poly_trim(out)


def squarefree_decomposition(p):
    """Yun's algorithm: return [(p_1, 1), (p_2, 2), ...] with p = lc * prod p_i^i.

    Each ``p_i`` is squarefree and the factors are pairwise coprime.  Factors
    of degree 0 are dropped.
    """
    p = poly_trim(p)
    dp = poly_derivative(p)
    a0 = poly_gcd(p, dp)
    if poly_degree(a0) <= 0:
        return [(p, 1)]
    b, _ = poly_divmod(p, a0)
    c, _ = poly_divmod(dp, a0)
    d = _poly_sub(c, poly_derivative(b))
    out = []
    i = 1
    while poly_degree(b) > 0:
        a = poly_gcd(b, d)
        if poly_degree(a) > 0:
            out.append((a, i))
            b, _ = poly_divmod(b, a)
            c, _ = poly_divmod(d, a)
        else:
            c = d
        d = _poly_sub(c, poly_derivative(b))
        i += 1
    return out


def sturm_chain(p):
    """Canonical Sturm chain of a squarefree polynomial."""
    p = poly_trim(p)
    chain = [p, poly_trim(poly_derivative(p))]
    while poly_degree(chain[-1]) > 0:
        _, r = poly_divmod(chain[-2], chain[-1])
        if poly_degree(r) < 0:
            break
        chain.append([-c for c in r])
    return chain


def sign_changes(chain, x):
    """Number of sign changes of the chain evaluated at ``x``."""
    signs = []
    for q in chain:
        v = poly_eval(q, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    changes = 0
    for a, b in zip(signs, signs[1:]):
        if a != b:
            changes += 1
    return changes


def count_roots(chain, a, b):
    """Number of distinct real roots in the half-open interval (a, b]."""
    return sign_changes(chain, a) - sign_changes(chain, b)


def cauchy_bound(p):
    """B such that all real roots lie in (-B, B); exact Fraction."""
    p = poly_trim(p)
    d = poly_degree(p)
    lead = abs(p[d])
    m = max((abs(c) for c in p[:d]), default=Fraction(0))
    return Fraction(1) + m / lead


def isolate_real_roots(p):
    """Disjoint open intervals (a, b], each containing exactly one real root.

    ``p`` must be squarefree.  Returns a list of ``(Fraction, Fraction)``
    sorted by root location.
    """
    p = poly_trim(p)
    chain = sturm_chain(p)
    bound = cauchy_bound(p)
    total = count_roots(chain, -bound, bound)
    out = []
    stack = [(-bound, bound, total)]
    while stack:
        a, b, k = stack.pop()
        if k == 0:
            continue
        if k == 1:
            out.append((a, b))
            continue
        mid = (a + b) / 2
        # a root exactly at the midpoint stays in the left half (a, mid]
        kl = count_roots(chain, a, mid)
        stack.append((a, mid, kl))
        stack.append((mid, b, k - kl))
    out.sort(key=lambda iv: iv[0])
    return out


def refine_root(p, a, b, width):
    """Shrink the bracket (a, b] around a single simple root to at most ``width``.

    Bisection over Fractions.  The comparison only uses the sign at the right
    endpoint: with exactly one simple root r in (a, b], sign(p(m)) equals
    sign(p(b)) iff r <= m.  This stays correct even when another root of p
    sits exactly at the open left endpoint.
    """
    width = Fraction(width)
    fb = poly_eval(p, b)
    if fb == 0:
        # exact rational root: collapse to a degenerate certified interval
        return b, b
    while b - a > width:
        mid = (a + b) / 2
        fm = poly_eval(p, mid)
        if fm == 0:
            return mid, mid
        if (fm > 0) == (fb > 0):
            b, fb = mid, fm
        else:
            a = mid
    return a, b
