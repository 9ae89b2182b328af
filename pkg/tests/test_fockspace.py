import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from toroidal_lab.fockspace import (ConstantCurrent, Factor, enumerate_slices, heisenberg_mode,
                                    oscillator_norm, partition_count, tensor_apply, tensor_space,
                                    zero_modes)


def partition_gf(n_max: int) -> np.ndarray:
    """Coefficients of prod_k 1/(1 - x^k) up to x^n_max (independent of the enumerator)."""
    c = np.zeros(n_max + 1, dtype=np.int64)
    c[0] = 1
    for k in range(1, n_max + 1):
        for n in range(k, n_max + 1):
            c[n] += c[n - k]
    return c


def block(cur, s):
    t, mat, _ = cur.blocks[s]
    return t, mat.toarray()


@pytest.mark.parametrize("nf,D", [(1, 0), (1, 4), (1, 7), (2, 2), (2, 5), (3, 4)])
def test_slice_dims_match_partition_oracle(ctx, nf, D):
    space = enumerate_slices(ctx, [Factor(color=2)] * nf, D, 0)
    p = partition_gf(D)
    conv = np.array([1] + [0] * D, dtype=np.int64)
    for _ in range(nf):
        conv = np.convolve(conv, p)[:D + 1]
    assert space.slice_dims() == list(conv)


def test_slice_examples(ctx):
    assert enumerate_slices(ctx, [Factor()], 0, 0).dim == 1
    assert enumerate_slices(ctx, [Factor()], 4, 0).slice_dims() == [1, 1, 2, 3, 5]
    two = enumerate_slices(ctx, [Factor(), Factor()], 2, 0)
    assert two.slice_dims()[2] == 5
    assert [partition_count(n) for n in range(6)] == [1, 1, 2, 3, 5, 7]


def test_sector_windows(ctx):
    zm = Factor(2, zero_modes=True, lam=0.3)
    tied = enumerate_slices(ctx, [zm, Factor(2, True, True, 0.1)], 1, 2)
    free = enumerate_slices(ctx, [zm, Factor(2, True, True, 0.1)], 1, 2, "free")
    assert tied.n_sectors == 5 and free.n_sectors == 25


@pytest.mark.parametrize("color", [1, 2, 3])
def test_heisenberg_relations(ctx, color):
    D = 5
    space = enumerate_slices(ctx, [Factor(color=color)], D, 0)
    deg = space.osc_degree
    for r in range(1, D + 1):
        for s in range(1, D + 1):
            _, hr = block(heisenberg_mode(space, r, 0), 0)
            _, hs = block(heisenberg_mode(space, -s, 0), 0)
            comm = hr @ hs - hs @ hr
            # columns whose raised state stays inside the truncation
            ok = deg + s <= D
            want = oscillator_norm(ctx, space.factors[0], r) * np.eye(space.osc_dim) if r == s else 0
            assert np.allclose((comm - want)[:, ok], 0, atol=1e-12), (r, s)


def test_vacuum_annihilation_and_first_commutator(ctx):
    space = enumerate_slices(ctx, [Factor(color=2)], 3, 0)
    vac = np.zeros(space.osc_dim)
    vac[int(np.nonzero(space.osc_degree == 0)[0][0])] = 1
    for r in (1, 2, 3):
        assert not np.any(block(heisenberg_mode(space, r, 0), 0)[1] @ vac)
    _, h1 = block(heisenberg_mode(space, 1, 0), 0)
    _, hm1 = block(heisenberg_mode(space, -1, 0), 0)
    C = ctx.s2
    kappa = (1 - ctx.q1) * (1 - ctx.q2) * (1 - ctx.q3)
    assert np.allclose((h1 @ hm1 - hm1 @ h1) @ vac, (C - 1 / C) / kappa * vac)
    _, h2 = block(heisenberg_mode(space, 2, 0), 0)
    ok = space.osc_degree <= 2
    assert np.allclose((h2 @ hm1 - hm1 @ h2)[:, ok], 0)


def test_zero_modes(ctx):
    lam = 0.37 + 0.1j
    space = enumerate_slices(ctx, [Factor(2, zero_modes=True, lam=lam)], 1, 2)
    eQ, P = zero_modes(space, 0)
    s0 = space.sector_index[(0,)]
    assert np.allclose(block(P, s0)[1], lam * np.eye(space.osc_dim))
    # [P, e^Q] = beta e^Q on the interior window
    for s in range(space.n_sectors):
        t, e = block(eQ, s)
        if t is None:
            continue
        _, p_src = block(P, s)
        _, p_tgt = block(P, t)
        assert np.allclose(p_tgt @ e - e @ p_src, ctx.beta * e)
    # pushing past the window is flagged
    top = space.sector_index[(2,)]
    assert eQ.target(top) is None


def _random_constant(space, rng, parity=0):
    n = space.osc_dim
    blocks = {}
    for s in range(space.n_sectors):
        m = sp.random(n, n, density=0.4, random_state=rng, dtype=float)
        blocks[s] = (s, sp.csr_matrix(m + 1j * sp.random(n, n, density=0.4, random_state=rng)), 0)
    return ConstantCurrent(space, blocks, parity)


def _mode0(cur, s):
    M, _ = cur.mode(s, 0)
    return cur.target(s), M.toarray()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_tensor_apply_associative(ctx, seed):
    rng = np.random.default_rng(seed)
    D = 3
    S = [enumerate_slices(ctx, [Factor(color=c)], D, 0) for c in (1, 2, 3)]
    A, B, C = (_random_constant(s, rng) for s in S)
    S12 = tensor_space(S[0], S[1])
    S23 = tensor_space(S[1], S[2])
    S123 = tensor_space(S12, S[2])
    left = tensor_apply(tensor_apply(A, B, S12), C, S123)
    right = tensor_apply(A, tensor_apply(B, C, S23), S123)
    assert np.allclose(_mode0(left, 0)[1], _mode0(right, 0)[1], atol=1e-12)


def test_koszul_sign(ctx):
    fac = Factor(2, zero_modes=True, lam=0.2)
    S1 = enumerate_slices(ctx, [fac], 1, 2)
    S2 = enumerate_slices(ctx, [fac], 1, 2)
    S1.parity_rule = S2.parity_rule = lambda sec: sec[0]
    eQ1, _ = zero_modes(S1, 0)
    eQ2, _ = zero_modes(S2, 0)
    A = ConstantCurrent(S1, eQ1.blocks, parity=1)
    B = ConstantCurrent(S2, eQ2.blocks, parity=1)
    one1 = ConstantCurrent(S1, {s: (s, sp.identity(S1.osc_dim, dtype=complex, format="csr"), 0)
                                for s in range(S1.n_sectors)})
    one2 = ConstantCurrent(S2, {s: (s, sp.identity(S2.osc_dim, dtype=complex, format="csr"), 0)
                                for s in range(S2.n_sectors)})
    S = tensor_space(S1, S2)
    A1 = tensor_apply(A, one2, S)
    B1 = tensor_apply(one1, B, S)
    s = S.sector_index[(0, 0)]

    def chain(X, Y, s):
        t, y = _mode0(Y, s)
        u, x = _mode0(X, t)
        return u, x @ y

    t1, m1 = chain(A1, B1, s)
    t2, m2 = chain(B1, A1, s)
    assert t1 == t2
    assert np.allclose(m1, -m2) and np.abs(m1).max() > 0
