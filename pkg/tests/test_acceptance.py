"""Acceptance criteria, one test (or group) per criterion.

Every test records a single summary line through ``record_criterion``; the
lines are collected in the terminal summary under "acceptance criteria".
"""
import cmath
import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from conftest import Q1, Q2, Q2_SCREENED, record_criterion
from toroidal_lab import amn
from toroidal_lab.cliverify import main, resolve, run_suite
from toroidal_lab.fermionR import run_fermion_suite
from toroidal_lab.qkernel import ParameterContext
from toroidal_lab.screening import build_F2222
from toroidal_lab.vertexcalc import (commutation_kernels, contraction_table, delta_k_check,
                                     k_on_fock_check, phik_identities, verify_e1_rep)

LAM = 0.37 + 0.05j
AUTOMORPHISMS = (("shift", 0.8 * cmath.exp(0.4j)), ("scale", 1.7 - 0.3j), ("relabel", None),
                 ("swap", None))
LEVEL2_LAMS = (0.31 + 0.07j, -0.22 + 0.05j)
LEVEL2_LAMS_C = (1 - LEVEL2_LAMS[0], 2 - LEVEL2_LAMS[1])


def lam_c(M):
    return (M + 1) / 2 - LAM + 1


def tally(results, tol=None):
    """(all passed, summary text).  ``tol`` tightens the per-check tolerance."""
    bad = [r.name for r in results
           if r.status != "pass" or (tol is not None and r.residual > tol)]
    worst = max((r.residual for r in results), default=float("nan"))
    text = f"{len(results)} checks, worst residual {worst:.1e}"
    if bad:
        text += f", failing: {', '.join(bad[:4])}"
    return not bad and bool(results), text


def settle(number, results, label, tol=None):
    ok, text = tally(results, tol)
    record_criterion(number, ok, f"{label}: {text}")
    assert ok, text


@pytest.fixture(scope="module")
def ctx1():
    return ParameterContext.create(Q1, Q2, M=1)


def test_criterion_01_e1_relations(ctx1):
    vec = verify_e1_rep(ctx1, "vector1", tol=1e-12, vector_window=6)
    ok_v, text_v = tally(vec, tol=1e-12)
    fock = []
    for rep in ("fock1", "fock2", "fock3"):
        fock += verify_e1_rep(ctx1, rep, D=5, tol=1e-8)
    fock += verify_e1_rep(ctx1, "fock22", D=4, tol=1e-8)
    ok_f, text_f = tally(fock)
    record_criterion(1, ok_v and ok_f, f"V1 |i|<=6 at 1e-12: {text_v}; F1,F2,F3 D=5 and F2xF2 D=4: {text_f}")
    assert ok_v and ok_f


def test_criterion_02_contractions(ctx1):
    res = contraction_table(ctx1, order=12, tol=1e-10)
    res += commutation_kernels(ctx1, samples=20, seed=7, tol=1e-10)
    settle(2, res, "closed forms to order 12 and kernels at 20 points, tol 1e-10")


def test_criterion_03_phik(ctx1):
    res = []
    for r in (0, 1, 2):
        res += phik_identities(ctx1, r, D=5)
    settle(3, res, "eight identities for r = 0, 1, 2 at D=5")


@pytest.mark.parametrize("M", [-1, 0, 1, 2, 3])
def test_criterion_04_f22(M):
    ctx = ParameterContext.create(Q1, Q2, M=M, N=M - 1)
    rep = amn.build_F22(ctx, LAM, lam_c(M), D=4, W=2)
    res = amn.verify_relations(rep, r1_indices=(0,), r2_indices=(-1, 0, 1, 2),
                               r3_pairs_=amn.r3_pairs(rep, 2), tol=1e-8)
    r1 = [r for r in res if r.name.startswith("R1")]
    assert len(r1) == 14
    settle(4, res, f"(M,N)=({M},{M - 1}) W=2 D=4")


@pytest.mark.parametrize("M", [0, 1])
def test_criterion_05_recursions_and_automorphisms(M):
    ctx = ParameterContext.create(Q1, Q2, M=M, N=M - 1)
    rep = amn.build_F22(ctx, LAM, lam_c(M), D=3, W=1)
    res = amn.verify_recursions(rep)
    for kind, param in AUTOMORPHISMS:
        moved = amn.apply_automorphism(rep, kind, param)
        res += amn.verify_recursions(moved)
        res += amn.verify_relations(moved, r1_indices=(0,), r2_indices=(0, 1), window=3)
    settle(5, res, f"M={M}, recursions plus shift/scale/relabel/swap")


@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_criterion_06_extension_cases(ctx1, case):
    rep = amn.extend_by_F1(amn.build_F22(ctx1, LAM, lam_c(1), D=4, W=1), case, 0.21 - 0.13j)
    res = amn.verify_relations(rep, r1_indices=(0,), r2_indices=(-1, 0, 1, 2),
                               r3_pairs_=amn.r3_pairs(rep, 2))
    settle(6, res, f"case {case} at D=4, W=1")


def test_criterion_06_iterated_constructions(ctx1):
    ex = ctx1.with_MN(-1, -2)
    res, rep = amn.four_term_check(ex, 0.31 + 0.1j, -0.22 + 0.05j, 0.37, 1 - 0.37, D=3, W=1)
    assert (rep.M, rep.N, len(rep.layout)) == (-1, 0, 4)
    rep3 = amn.ef_sum_rep(ex, 0.31 + 0.1j, 0.37, -0.22 + 0.05j, 1 - 0.37, D=3, W=1)
    res += amn.ef_sum_check(rep3, window=5)
    settle(6, res, "four-term intertwiner (M=-1, N=0) and the E/F delta sum")


def test_criterion_07_coproduct_k(ctx1):
    res = delta_k_check(ctx1, D=4, rmax=2) + k_on_fock_check(ctx1, D=4)
    settle(7, res, "Delta k_r (r=0,1,2) on F2xF2 and k on F1 at D=4")


def test_criterion_08_fermions(ctx1):
    res = run_fermion_suite(ctx1, D=4, window=2)
    algebra = [r for r in res if "anticommut" in r.name or "Heisenberg" in r.name]
    rv = [r for r in res if "family" in r.name]
    ok_a, _ = tally(algebra, tol=1e-10)
    ok_rv, _ = tally(rv, tol=1e-9)
    ok, text = tally(res, tol=1e-8)
    record_criterion(8, ok and ok_a and ok_rv and bool(algebra) and bool(rv),
                     f"D=4 |l|<=2: {text} (algebra <=1e-10, Rv <=1e-9)")
    assert ok and ok_a and ok_rv and algebra and rv


def test_criterion_09_exchange_and_residues():
    cfg = resolve("appendixB", {"degree": 4})
    recs = run_suite(cfg)
    bad = [c["name"] for c in recs if c["status"] != "pass"]
    inverse = [c for c in recs if "R(u;beta,P)" in c["name"]]
    ok = not bad and inverse and all(c["residual"] <= 1e-10 for c in inverse)
    worst = max(c["residual"] for c in recs)
    record_criterion(9, bool(ok), f"{len(recs)} checks at D=4, R R = id "
                     f"{inverse[0]['residual']:.1e}, worst {worst:.1e}")
    assert ok, bad


def _level2(M, D, **kw):
    ctx = ParameterContext.create(Q1, Q2_SCREENED, M=M, N=2 * M - 2)
    return build_F2222(ctx, LEVEL2_LAMS, LEVEL2_LAMS_C, D=D, W=1, points=256, **kw)


LEVEL2_PAIRS = [(Fraction(i), Fraction(s - i)) for s in (-1, 0, 1) for i in (-1, 0, 1)]


def _level2_checks(rep):
    return (amn.verify_R1(rep, (0,), tol=1e-6) + amn.verify_R2(rep, (-1, 0, 1), tol=1e-6)
            + amn.verify_R3(rep, LEVEL2_PAIRS, tol=1e-6, delta_relative=True))


@pytest.mark.parametrize("M", [1, 3])
def test_criterion_10_level2(M):
    settle(10, _level2_checks(_level2(M, 3)), f"M={M} D=3 with the sign-consistent N2")


@pytest.mark.xfail(strict=True, reason="the stated sign of N2 fails R3; see the decisions ledger")
@pytest.mark.parametrize("M", [1, 3])
def test_criterion_10_level2_stated_sign(M):
    res = amn.verify_R3(_level2(M, 2, literal_sign=True), LEVEL2_PAIRS, tol=1e-6)
    ok, text = tally(res)
    record_criterion(10, ok, f"M={M} N2 exactly as stated: {text}", expected_failure=True)
    assert ok


def test_criterion_10_sweep_and_perturbation():
    runner = CliRunner()
    res = runner.invoke(main, ["sweep", "level2", "--degrees", "2,3"], catch_exceptions=False)
    table = json.loads(res.stdout)["sweep"]
    flat = res.exit_code == 0 and all(t["flag"] == "ok" for t in table)
    rep = _level2(1, 2, norm_scale=1.01)
    bumped = _level2_checks(rep)
    caught = [r.name for r in bumped if r.status == "fail"]
    record_criterion(10, flat and bool(caught),
                     f"sweep D=2,3 non-increasing above rounding: {flat}; "
                     f"1% N2 perturbation fails {len(caught)} check(s)")
    assert flat and caught


def test_criterion_11_gl11():
    ctx0 = ParameterContext.create(Q1, Q2, M=0, N=0)
    rep = amn.gl11_rep(ctx0, 0.37, 0.5 - 0.37, 0.27 - 0.1j, D=3, W=1)
    assert (rep.M, rep.N) == (0, 0)
    settle(11, amn.gl11_check(rep, window=5), "M=0, N=0 after one extension")


def test_criterion_12_cli(tmp_path):
    runner = CliRunner()
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    codes = [runner.invoke(main, ["verify", "fermion", "--report", str(p)]).exit_code
             for p in paths]
    same = paths[0].read_bytes() == paths[1].read_bytes()
    fail_code = runner.invoke(main, ["verify", "level2", "--degree", "2", "--norm-mutation",
                                     "0.01", "--report", str(tmp_path / "f.json")]).exit_code
    config_code = runner.invoke(main, ["verify", "level2", "--M", "2"]).exit_code
    ok = same and codes == [0, 0] and fail_code == 1 and config_code == 2
    record_criterion(12, ok, f"byte-identical reports: {same}; exit codes pass/fail/config = "
                     f"{codes[0]}/{fail_code}/{config_code}")
    assert ok
