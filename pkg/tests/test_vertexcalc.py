import numpy as np
import pytest

from toroidal_lab.fockspace import Factor, enumerate_slices, heisenberg_mode
from toroidal_lab.qkernel import ParameterContext
from toroidal_lab.vertexcalc import (build_current, commutation_kernels, compare_currents,
                                     contraction_table, coproduct_action, delta_k_check,
                                     fock_action, k_on_fock_check, phik_identities, verify_e1,
                                     verify_e1_rep)


def all_pass(results):
    bad = [(r.name, r.residual, r.status) for r in results if r.status != "pass"]
    assert not bad, bad
    return max(r.residual for r in results)


@pytest.fixture(scope="module")
def fock2(ctx):
    lay = [Factor(color=2, lam=0.3)]
    space = enumerate_slices(ctx, lay, 3, 0)
    act = fock_action(ctx, lay, 0)
    cur = [build_current(space, t) for t in (act.e, act.f, act.psip, act.psim)]
    return space, act, cur


def test_e_mode_on_vacuum(ctx, fock2):
    space, _, (e, *_rest) = fock2
    vac = np.zeros(space.osc_dim)
    vac[0] = 1
    hm1 = heisenberg_mode(space, -1, 0).blocks[0][1].toarray()
    want = -1 / ctx.c2 * ctx.qpow(0.3) * (1 - ctx.q1) * (1 - ctx.q3) * (hm1 @ vac)
    got = e.mode(0, 1)[0].toarray() @ vac
    assert np.allclose(got, want, atol=1e-14)


def test_psi_plus_on_vacuum(fock2):
    space, _, (_, _, psip, _) = fock2
    vac = np.zeros(space.osc_dim)
    vac[0] = 1
    assert 0 in psip.mode_range(0)
    for m in psip.mode_range(0):
        out = psip.mode(0, m)[0].toarray() @ vac
        if m == 0:
            assert np.abs(out).max() > 0
        else:
            assert np.allclose(out, 0)


def test_contraction_closed_forms(ctx):
    assert all_pass(contraction_table(ctx, order=12, tol=1e-10)) <= 1e-10


def test_commutation_kernels(ctx):
    assert all_pass(commutation_kernels(ctx, samples=20, seed=3, tol=1e-10)) <= 1e-10


def test_vector_representation_exact(ctx):
    assert all_pass(verify_e1_rep(ctx, "vector1", tol=1e-12)) <= 1e-12


@pytest.mark.parametrize("rep", ["fock1", "fock2", "fock3", "fock22"])
def test_fock_representations_small(ctx, rep):
    all_pass(verify_e1_rep(ctx, rep, D=3))


def test_e1_negative_control(ctx, fock2):
    space, act, (e, f, psip, psim) = fock2
    qv = (ctx.q1, ctx.q2, ctx.q3)
    res = verify_e1(space, e, f.times(1.01), psip, psim, ctx.mono(act.level), qv, serre_window=2)
    failed = [r.name for r in res if r.status == "fail"]
    assert failed and all("f" in name for name in failed)


def test_compare_currents_detects_mismatch(fock2):
    space, _, (e, *_rest) = fock2
    assert compare_currents(space, e, e, "same").status == "pass"
    assert compare_currents(space, e, e.times(1 + 1e-6), "scaled").status == "fail"


def test_phik_small(ctx):
    for r in (0, 1):
        all_pass(phik_identities(ctx, r, D=3))


def test_coproduct_k_and_fock_k(ctx):
    all_pass(delta_k_check(ctx, D=3, rmax=2))
    all_pass(k_on_fock_check(ctx, D=3))


def test_coproduct_level_is_product(ctx):
    lay = [Factor(color=2, lam=0.3), Factor(color=1, lam=-0.2)]
    A, B = fock_action(ctx, lay, 0), fock_action(ctx, lay, 1)
    AB = coproduct_action(ctx, lay, A, B)
    assert abs(ctx.mono(AB.level) - ctx.mono(A.level) * ctx.mono(B.level)) < 1e-14


@pytest.mark.parametrize("M", [-2, 0, 2])
def test_contractions_other_M(M):
    ctx = ParameterContext.create(0.58 + 0.11j, 1.1 * np.exp(0.9j), M=M)
    all_pass(contraction_table(ctx, order=8, tol=1e-10))
