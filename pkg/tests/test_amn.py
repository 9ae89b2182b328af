import cmath
from fractions import Fraction

import pytest

from conftest import Q1, Q2
from toroidal_lab import amn
from toroidal_lab.qkernel import ParameterContext, qpoch

LAM = 0.37 + 0.05j


def lam_c(M):
    return (M + 1) / 2 - LAM + 1


def all_pass(results):
    bad = [(r.name, r.residual, r.status) for r in results if r.status != "pass"]
    assert not bad, bad


@pytest.fixture(scope="module")
def f22():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    return amn.build_F22(ctx, LAM, lam_c(1), D=3, W=1)


def test_normalization_at_M1(f22):
    ctx = f22.ctx
    want = cmath.sqrt(ctx.s2 * cmath.exp(ctx.log_qc2 / 2)) * (1 - 1 / ctx.q2)
    assert abs(amn.minus_normalization(f22.view) - want) / abs(want) < 1e-14
    assert abs(qpoch(1 / ctx.q2, ctx.q1, 1) - (1 - 1 / ctx.q2)) < 1e-15


def test_levels(f22):
    ctx = f22.ctx
    C, Cc = f22.levels()
    assert abs(C - ctx.s2) < 1e-14
    assert abs(Cc - cmath.exp(ctx.log_qc2 / 2)) < 1e-14
    assert f22.level_defect() < 1e-13


def test_integrality_is_enforced():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    with pytest.raises(amn.IntegralityError):
        amn.build_F22(ctx, LAM, lam_c(1) + 0.3, D=2, W=1)


def test_f22_relations_small(f22):
    res = amn.verify_relations(f22, r2_indices=(0, 1), window=3)
    assert len([r for r in res if r.name.startswith("R1")]) == 14
    all_pass(res)


def test_f22_recursions(f22):
    all_pass(amn.verify_recursions(f22))


def test_index_lattice(f22):
    assert f22.N == 0 and not f22.plus_half
    with pytest.raises(ValueError):
        f22.check_index(1, Fraction(1, 2))


@pytest.mark.parametrize("kind,param", [("scale", 1.7 - 0.3j), ("shift", 0.8 * cmath.exp(0.4j)),
                                        ("relabel", None)])
def test_automorphisms_preserve_status(f22, kind, param):
    rep = amn.apply_automorphism(f22, kind, param)
    all_pass(amn.verify_relations(rep, r1_indices=(0,), r2_indices=(0, 1), window=3))


def test_extension_case1_small(f22):
    rep = amn.extend_by_F1(f22, 1, 0.21 - 0.13j)
    assert rep.N == f22.N + 1
    all_pass(amn.verify_relations(rep, r1_indices=(0,), r2_indices=(0, 1), window=3))


def test_expected_variant():
    assert amn.expected_variant(1, 1, 1, 1) == "standard"
    assert amn.expected_variant(2, 1, 1, 1) == "minus"
    assert amn.expected_variant(3, 1, 3, 1) == "standard"


def test_wrong_normalization_fails_R3():
    ctx = ParameterContext.create(Q1, Q2, M=1)
    rep = amn.build_F22(ctx, LAM, lam_c(1), D=2, W=1)
    good = rep.xm

    def scaled(i):
        from toroidal_lab.vertexcalc import vosum_times
        return vosum_times(good(i), 1.01)

    rep.xm = scaled
    rep._cache.clear()
    res = amn.verify_R3(rep, [(Fraction(0), Fraction(0))], window=3, delta_relative=True)
    assert res[1].status == "fail"


def test_gl11_literal_sign_fails_only_EF():
    ctx0 = ParameterContext.create(Q1, Q2, M=0)
    g = amn.gl11_rep(ctx0, 0.37, 0.5 - 0.37, 0.27 - 0.1j, D=2, W=1)
    consistent = amn.gl11_check(g, window=3)
    all_pass(consistent)
    literal = amn.gl11_check(g, window=3, f1_sign=1)
    failed = [r.name for r in literal if r.status != "pass"]
    assert failed and all("[E1,F1]" in n for n in failed), failed


def test_four_term_intertwiner():
    ctx = ParameterContext.create(Q1, Q2, M=-1)
    res, rep = amn.four_term_check(ctx, 0.31 + 0.1j, -0.22 + 0.05j, 0.37, 1 - 0.37, D=2, W=1)
    all_pass(res)
    assert rep.M == -1 and len(rep.layout) == 4
