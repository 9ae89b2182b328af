import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import Q1, Q2
from toroidal_lab.qkernel import (GenericityError, ParameterContext, PoleError, TruncatedSeries,
                                  elliptic_R, expand_rational, gamma_pair, omega_factors,
                                  omega_series, omega_value, qpoch, theta, theta_bracket)

finite = st.floats(-0.9, 0.9, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def small_q():
    return st.builds(lambda r, a: r * cmath.exp(1j * a), st.floats(0.1, 0.8), st.floats(-3, 3))


# ---------------------------------------------------------------------------
# q-Pochhammer and theta

def test_qpoch_examples():
    x, q = 0.3 + 0.2j, 0.5 - 0.1j
    assert qpoch(x, q, 0) == 1
    assert abs(qpoch(x, q, 2) - (1 - x) * (1 - q * x)) < 1e-15
    assert abs(qpoch(x, q, -1) - 1 / (1 - x / q)) < 1e-14


def test_qpoch_errors():
    with pytest.raises(ValueError):
        qpoch(0.2, 1.2)
    with pytest.raises(PoleError):
        qpoch(0.5, 0.5, -1)


@settings(max_examples=60, deadline=None)
@given(x=cplx, q=small_q(), n=st.integers(-6, 8))
def test_qpoch_telescoping(x, q, n):
    try:
        lhs = qpoch(x, q, n + 1)
        rhs = qpoch(x, q, n) * (1 - q ** n * x)
    except PoleError:
        return
    assert abs(lhs - rhs) <= 1e-10 * max(1, abs(lhs))


@settings(max_examples=60, deadline=None)
@given(x=cplx.filter(lambda z: abs(z) > 0.05), q=small_q())
def test_qpoch_infinite_matches_limit(x, q):
    # (x;q)_inf = (x;q)_n (q^n x;q)_inf
    n = 5
    assert abs(qpoch(x, q) - qpoch(x, q, n) * qpoch(q ** n * x, q)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(x=cplx.filter(lambda z: abs(z) > 0.1), q=small_q())
def test_theta_quasi_periodicity(x, q):
    lhs = theta(q * x, q)
    rhs = -theta(x, q) / x
    assert abs(lhs - rhs) <= 1e-10 * max(1, abs(rhs))


def test_bracket_zero_and_product_oracle():
    ctx = ParameterContext.create(0.41, Q2, M=1)
    assert theta_bracket(0, ctx) == 0
    # independent oracle: 200-term direct product
    u, q = 0.37, 0.41
    direct = q ** (u * (u - 1) / 2)
    for k in range(200):
        direct *= (1 - q ** (k + u)) * (1 - q ** (k + 1 - u)) * (1 - q ** (k + 1))
    assert abs(theta_bracket(u, ctx) - direct) < 1e-14


@settings(max_examples=40, deadline=None)
@given(u=cplx)
def test_bracket_symmetries(u):
    ctx = ParameterContext.create(Q1, Q2, M=1)
    b = theta_bracket(u, ctx)
    # [u+1] = -[u] = [-u]: the bracket is odd
    assert abs(theta_bracket(-u, ctx) + b) <= 1e-10 * max(1, abs(b))
    assert abs(theta_bracket(u + 1, ctx) + b) <= 1e-10 * max(1, abs(b))


def test_bracket_extended_precision_agrees():
    lo = ParameterContext.create(Q1, Q2, M=1)
    hi = ParameterContext.create(Q1, Q2, M=1, bits=120)
    u = 0.23 - 0.4j
    assert abs(complex(theta_bracket(u, hi)) - theta_bracket(u, lo)) < 1e-13


# ---------------------------------------------------------------------------
# truncated series

def _series(draw_coeffs, lo=0):
    return TruncatedSeries("x", lo, draw_coeffs)


coeff_lists = st.lists(cplx, min_size=6, max_size=6)


@settings(max_examples=50, deadline=None)
@given(a=coeff_lists, b=coeff_lists, c=coeff_lists)
def test_series_associativity(a, b, c):
    A, B, C = _series(a), _series(b), _series(c)
    left, right = (A * B) * C, A * (B * C)
    assert left.lo == right.lo and left.hi == right.hi
    assert np.allclose(left.coeffs, right.coeffs, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(a=coeff_lists.filter(lambda c: abs(c[0]) > 0.1))
def test_series_inverse(a):
    A = _series(a, lo=2)
    one = A * A.inverse()
    assert one.lo == 0
    assert abs(one[0] - 1) < 1e-10
    assert np.allclose(one.coeffs[1:], 0, atol=1e-8 * max(1, max(abs(np.array(a))) ** 6 / abs(a[0]) ** 6))


def test_series_rules():
    A = TruncatedSeries("x", 0, [1, 2, 3], alpha=0.5)
    B = TruncatedSeries("y", 0, [1, 2, 3])
    with pytest.raises(ValueError):
        A * B
    assert (A * A).alpha == 1.0
    with pytest.raises(PoleError):
        TruncatedSeries("x", 0, [0, 1]).inverse()
    with pytest.raises(IndexError):
        A[5]
    assert A[-1] == 0


def test_omega_series_and_symmetry():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    s = omega_series(ctx.q2, ctx.q3, +1, 6)
    assert abs(s[0] - 1) < 1e-15
    assert abs(s[1] - (1 - ctx.q2) * (1 - ctx.q3)) < 1e-14
    x = 0.3 + 0.2j
    assert abs(omega_value(x, ctx.q2, ctx.q3) - omega_value(ctx.q1 / x, ctx.q2, ctx.q3)) < 1e-12
    # the series sums to the function inside its disc
    long = expand_rational(omega_factors(ctx.q2, ctx.q3), "zero", 200)
    y = 0.05
    assert abs(long.evaluate(y) - omega_value(y, ctx.q2, ctx.q3)) < 1e-12


# ---------------------------------------------------------------------------
# parameters

def test_context_invariants(ctx):
    assert abs(ctx.q1 * ctx.q2 * ctx.q3 - 1) < 1e-14
    assert abs(ctx.beta + ctx.beta_check - (ctx.M + 1)) < 1e-12
    assert abs(ctx.qc2 - ctx.q2 * ctx.q1 ** (1 - ctx.M)) < 1e-12
    assert abs(ctx.qc3 - ctx.q3 * ctx.q1 ** (ctx.M + 1)) < 1e-12
    assert abs(ctx.s1 ** 2 - ctx.q1) < 1e-15


def test_context_rejects_bad_parameters():
    with pytest.raises(GenericityError):
        ParameterContext.create(1.2, Q2)
    with pytest.raises(GenericityError):
        ParameterContext.create(Q1, Q1 ** -2)   # q1^2 q2 = 1


# ---------------------------------------------------------------------------
# gamma coefficients

def test_gamma_examples():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    g = gamma_pair(0, 0, ctx)
    z, w = 1.3, 0.4 + 0.1j
    assert abs(g.forward.value(z, w) - (z - ctx.q2 * w)) < 1e-14
    g0 = gamma_pair(0, 0, ParameterContext.create(Q1, Q2, M=0))
    assert g0.forward.value(z, w) == 1


@pytest.mark.parametrize("M", range(-3, 4))
def test_gamma_balance(M):
    ctx = ParameterContext.create(Q1, Q2, M=M)
    for i2 in range(-4, 5, 2):
        for d in range(0, 6):
            g = gamma_pair(i2, i2 + 2 * d, ctx)
            assert abs(g.balance() - 1) < 1e-9, (M, i2, d)


def test_gamma_requires_ordered_integral_gap():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    with pytest.raises(ValueError):
        gamma_pair(2, 0, ctx)
    with pytest.raises(ValueError):
        gamma_pair(0, 1, ctx)


# ---------------------------------------------------------------------------
# elliptic R matrix

def test_R_corners_and_identity(ctx):
    R = elliptic_R(0.31 + 0.1j, 0.7 - 0.2j, 0.45 + 0.05j, ctx)
    assert R[0, 0] == 1 and R[3, 3] == 1
    R0 = elliptic_R(0.0, 0.7 - 0.2j, 0.45 + 0.05j, ctx)
    assert np.allclose(R0, np.eye(4), atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(u=cplx, beta=cplx, P=cplx)
def test_R_unitarity(u, beta, P):
    ctx = ParameterContext.create(Q1, Q2, M=1)
    # brackets vanish on the integers; stay clear of 0/0 entries
    for x in (beta, P, u + beta, -u + beta, beta + P, beta - P):
        assume(abs(x - round(x.real)) > 0.05)
    try:
        A = elliptic_R(u, beta, P, ctx)
        B = elliptic_R(-u, beta, P, ctx)
    except PoleError:
        return
    scale = max(1.0, np.abs(A).max() * np.abs(B).max())
    if not math.isfinite(scale) or scale > 1e6:
        return
    assert np.allclose(A @ B, np.eye(4), atol=1e-9 * scale)
