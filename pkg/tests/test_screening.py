import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import Q1, Q2_SCREENED
from toroidal_lab.amn import verify_R1, verify_R3
from toroidal_lab.fockspace import Factor, enumerate_slices
from toroidal_lab.qkernel import ParameterContext, theta_bracket
from toroidal_lab.screening import (At, Product, ScreenedEvaluator, Weight, X_VAR, bracket,
                                    build_F2222, contour_integrate, cross_validate_screened,
                                    cross_validation_space, dynamical_weight, level2_normalization,
                                    verify_Rinverse)
from toroidal_lab.vertexcalc import standard_specs

LAMS = (0.31 + 0.07j, -0.22 + 0.05j)
LAMS_C = (1 - LAMS[0], 2 - LAMS[1])


def test_contour_basics():
    assert abs(contour_integrate(lambda x, lx: np.full_like(x, 2.5), 0.7, 64) - 2.5) < 1e-14
    assert abs(contour_integrate(lambda x, lx: x, 0.7, 64)) < 1e-14
    # one simple pole at x0 inside: (1/2 pi i) oint r/(x - x0) dx/x * x = r
    x0, r = 0.3 + 0.1j, 1.7 - 0.2j
    got = contour_integrate(lambda x, lx: r * x / (x - x0), 0.8, 256)
    assert abs(got - r) < 1e-12
    # off-center circle
    got = contour_integrate(lambda x, lx: r * x / (x - x0), 0.1, 128, center=x0)
    assert abs(got - r) < 1e-12


def test_weight_zero_and_periodicity(ctx_screened):
    ctx = ctx_screened
    beta, P = ctx.beta, 0.4 - 0.2j
    # numerator argument an integer -> 0
    u = 2 - P - (1 - beta) / 2
    assert abs(dynamical_weight(cmath.exp(u * ctx.log_q1), beta, P, ctx,
                                log_x=u * ctx.log_q1)) < 1e-14
    # u -> u + 1 flips both brackets: the ratio is unchanged
    u = 0.23 + 0.11j
    a = dynamical_weight(0, beta, P, ctx, log_x=u * ctx.log_q1)
    b = dynamical_weight(0, beta, P, ctx, log_x=(u + 1) * ctx.log_q1)
    assert abs(a - b) < 1e-12 * abs(a)
    # against the independent theta_bracket route
    want = theta_bracket(u + P + (1 - beta) / 2, ctx) / theta_bracket(u + (1 + beta) / 2, ctx)
    assert abs(a - want) < 1e-12 * abs(want)


@settings(max_examples=30, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-1, 1))
def test_bracket_matches_kernel(ctx_screened, re, im):
    u = complex(re, im)
    assume(abs(u - round(u.real)) > 1e-3)
    b = theta_bracket(u, ctx_screened)
    assert abs(bracket(u, ctx_screened) - b) <= 1e-14 * max(1, abs(b))


def test_exchange_matrices(ctx_screened):
    res = verify_Rinverse(ctx_screened, samples=20, seed=11)
    bad = [(r.name, r.residual) for r in res if r.status != "pass"]
    assert not bad, bad


@pytest.fixture(scope="module")
def phi_product(ctx_screened):
    ctx = ctx_screened
    lay = (Factor(2, False, True, LAMS[0], "F2"), Factor(2, False, True, LAMS[1], "F2"))
    space = enumerate_slices(ctx, lay, 2, 1, "free")
    s0, s1 = standard_specs(ctx, lay, 0), standard_specs(ctx, lay, 1)
    prod = Product(1, [At(s0["Phi"], (0, 0)), At(s0["Phi*"], X_VAR), At(s1["Phi"], X_VAR),
                       Weight((0, 1), ctx.beta, (2, 2))])
    return space, prod


def test_quadrature_converged(phi_product):
    space, prod = phi_product
    a = ScreenedEvaluator(space, 256).blocks(prod)
    b = ScreenedEvaluator(space, 512).blocks(prod)
    worst = max(np.abs(a[s][3][m] - b[s][3][m]).max() for s in a if a[s][0] is not None
                for m in a[s][3])
    assert worst <= 1e-8


@pytest.mark.parametrize("checked", [False, True])
@pytest.mark.parametrize("kind", ["Phi-", "Phi*-"])
def test_residue_sum_oracle(ctx_screened, kind, checked):
    space = cross_validation_space(ctx_screened, checked)
    res = cross_validate_screened(kind, space)
    bad = [(r.name, r.residual) for r in res if r.status != "pass"]
    assert not bad, bad


def test_level2_normalization_sign(ctx_screened):
    for L in (-1, 0):
        a = level2_normalization(ctx_screened, L)
        b = level2_normalization(ctx_screened, L, literal_sign=True)
        assert abs(a + b) < 1e-14 * abs(a)


@pytest.fixture(scope="module")
def level2_pair(ctx_screened):
    good = build_F2222(ctx_screened, LAMS, LAMS_C, D=2, W=1)
    literal = build_F2222(ctx_screened, LAMS, LAMS_C, D=2, W=1, literal_sign=True)
    return good, literal


def test_level2_sign_only_affects_R3(level2_pair):
    good, literal = level2_pair
    pair = [(Fraction(0), Fraction(0))]
    assert verify_R3(good, pair, tol=1e-6)[0].status == "pass"
    assert verify_R3(literal, pair, tol=1e-6)[0].status == "fail"
    for rep in (good, literal):
        r1 = verify_R1(rep, (0,), tol=1e-6)
        assert all(r.status == "pass" for r in r1)


def test_level2_rejects_even_M():
    ctx = ParameterContext.create(Q1, Q2_SCREENED, M=2, N=2)
    with pytest.raises(NotImplementedError):
        build_F2222(ctx, LAMS, LAMS_C, D=1, W=0)
