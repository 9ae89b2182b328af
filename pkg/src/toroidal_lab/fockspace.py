"""Degree-truncated Fock spaces with sector (charge) decoration.

A state is (sector, oscillator state).  Oscillator states are tuples of
partitions, one per boson factor, with total degree at most D.  Operators
that shift the charge act blockwise: each source sector goes to a single
target sector, and inside a block the operator is a sparse matrix on the
oscillator space.  Currents are families of such blocks indexed by the
exponent of the formal variable.

Coefficients computed on a truncated space are only trusted when no
intermediate state exceeds the cutoff; every mode carries a column mask
recording this.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .qkernel import Mono, ParameterContext, monos

Partition = tuple[int, ...]


# ---------------------------------------------------------------------------
# partitions

@lru_cache(maxsize=None)
def partitions_of(n: int, max_part: int | None = None) -> tuple[Partition, ...]:
    """Partitions of n in decreasing parts, reverse-lexicographic order."""
    if max_part is None:
        max_part = n
    if n == 0:
        return ((),)
    out = []
    for k in range(min(n, max_part), 0, -1):
        for rest in partitions_of(n - k, k):
            out.append((k,) + rest)
    return tuple(out)


def partition_count(n: int) -> int:
    return len(partitions_of(n))


def multiplicities(p: Partition) -> dict[int, int]:
    out: dict[int, int] = {}
    for k in p:
        out[k] = out.get(k, 0) + 1
    return out


def add_parts(p: Partition, q: Partition) -> Partition:
    return tuple(sorted(p + q, reverse=True))


@lru_cache(maxsize=None)
def boson_basis(D: int) -> tuple[Partition, ...]:
    return tuple(p for d in range(D + 1) for p in partitions_of(d))


@lru_cache(maxsize=None)
def boson_index(D: int) -> dict[Partition, int]:
    return {p: i for i, p in enumerate(boson_basis(D))}


# ---------------------------------------------------------------------------
# factors and spaces

@dataclass(frozen=True)
class Factor:
    """One boson.  ``color`` picks which q plays the role of q2 in the Fock
    formulas; ``checked`` selects the checked parameter family.  Factors with
    zero modes carry a charge n with momentum P = lam + n*beta."""

    color: int = 2
    checked: bool = False
    zero_modes: bool = False
    lam: complex = 0.0
    name: str = ""

    def q_monos(self, M: int) -> tuple[Mono, Mono, Mono]:
        m = monos(M)
        if self.checked:
            return (m["qc1"], m["qc2"], m["qc3"])
        return (m["q1"], m["q2"], m["q3"])

    def s_monos(self, M: int) -> tuple[Mono, Mono, Mono]:
        m = monos(M)
        if self.checked:
            return (m["sc1"], m["sc2"], m["sc3"])
        return (m["s1"], m["s2"], m["s3"])

    def level_mono(self, M: int) -> Mono:
        """C = s_c on a color-c Fock module."""
        return self.s_monos(M)[self.color - 1]

    def beta(self, ctx: ParameterContext) -> complex:
        return ctx.beta_check if self.checked else ctx.beta

    def log_q1(self, ctx: ParameterContext) -> complex:
        return ctx.log_qc1 if self.checked else ctx.log_q1


def oscillator_norm(ctx: ParameterContext, factor: Factor, r: int) -> complex:
    """[h_r, h_{-r}] = (1/r)(C^r - C^{-r})/kappa_r on this factor."""
    M = ctx.M
    qa = factor.q_monos(M)
    C = ctx.mono(factor.level_mono(M))
    kappa = 1
    for m in qa:
        kappa *= 1 - ctx.mono(m) ** r
    if abs(kappa) < ctx.tolerance:
        from .qkernel import GenericityError
        raise GenericityError("kappa_r vanishes")
    return (C ** r - C ** (-r)) / kappa / r


@dataclass
class GradedSpace:
    """Oscillator basis of several bosons (total degree <= D) times a list of
    allowed charge tuples (one entry per factor)."""

    ctx: ParameterContext
    factors: tuple[Factor, ...]
    D: int
    sectors: tuple[tuple[int, ...], ...]
    parity_rule: Callable[[tuple[int, ...]], int] | None = None

    osc_states: list[tuple[int, ...]] = field(init=False)
    osc_degree: np.ndarray = field(init=False)
    sector_index: dict[tuple[int, ...], int] = field(init=False)

    def __post_init__(self) -> None:
        D = self.D
        nb = len(boson_basis(D))
        degs = [sum(p) for p in boson_basis(D)]
        states = []
        for tup in itertools.product(range(nb), repeat=len(self.factors)):
            if sum(degs[i] for i in tup) <= D:
                states.append(tup)
        self.osc_states = states
        self.osc_degree = np.array([sum(degs[i] for i in t) for t in states], dtype=int)
        self.sector_index = {s: i for i, s in enumerate(self.sectors)}
        self._kron_rows = None

    @property
    def osc_dim(self) -> int:
        return len(self.osc_states)

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def dim(self) -> int:
        return self.osc_dim * self.n_sectors

    def slice_dims(self) -> list[int]:
        return [int(np.sum(self.osc_degree == d)) for d in range(self.D + 1)]

    def momentum(self, s: int, f: int) -> complex:
        fac = self.factors[f]
        n = self.sectors[s][f]
        return fac.lam + n * fac.beta(self.ctx)

    def shift_sector(self, s: int, shift: Sequence[int]) -> int | None:
        t = tuple(a + b for a, b in zip(self.sectors[s], shift))
        return self.sector_index.get(t)

    def parity(self, s: int) -> int:
        if self.parity_rule is None:
            return 0
        return self.parity_rule(self.sectors[s]) % 2

    def kron_rows(self) -> np.ndarray:
        """Positions of retained oscillator states inside the full Kronecker basis."""
        if self._kron_rows is None:
            nb = len(boson_basis(self.D))
            idx = np.zeros(self.osc_dim, dtype=np.int64)
            for n, t in enumerate(self.osc_states):
                v = 0
                for i in t:
                    v = v * nb + i
                idx[n] = v
            self._kron_rows = idx
        return self._kron_rows

    def describe(self, n: int) -> tuple:
        return tuple(boson_basis(self.D)[i] for i in self.osc_states[n])


def enumerate_slices(ctx: ParameterContext, factors: Sequence[Factor], D: int, W: int,
                     tie: str = "diagonal") -> GradedSpace:
    """Build a space with charges |n| <= W.  ``tie='diagonal'`` gives every
    zero-mode factor the same charge (as in the sum over n of F2 x checked F2);
    ``tie='free'`` lets each zero-mode factor have its own charge."""
    zm = [f.zero_modes for f in factors]
    nz = sum(zm)
    if nz == 0:
        sectors = [tuple(0 for _ in factors)]
    elif tie == "diagonal":
        sectors = [tuple(n if z else 0 for z in zm) for n in range(-W, W + 1)]
    else:
        sectors = []
        for ns in itertools.product(range(-W, W + 1), repeat=nz):
            it = iter(ns)
            sectors.append(tuple(next(it) if z else 0 for z in zm))
    return GradedSpace(ctx, tuple(factors), D, tuple(sectors))


# ---------------------------------------------------------------------------
# single-boson oscillator matrices

def _boson_ops(D: int):
    basis = boson_basis(D)
    index = boson_index(D)
    return basis, index


def creation_modes(D: int, coeffs: Sequence[complex]) -> dict[int, sp.csr_matrix]:
    """z^m coefficients of exp(sum_r coeffs[r-1] h_{-r} z^r) on one boson."""
    basis, index = _boson_ops(D)
    n = len(basis)
    out = {}
    for m in range(0, D + 1):
        rows, cols, vals = [], [], []
        for mu in partitions_of(m):
            c = 1
            for r, k in multiplicities(mu).items():
                c *= coeffs[r - 1] ** k / math.factorial(k)
            if c == 0:
                continue
            for j, lam in enumerate(basis):
                if sum(lam) + m > D:
                    continue
                rows.append(index[add_parts(lam, mu)])
                cols.append(j)
                vals.append(c)
        out[m] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
    return out


def annihilation_modes(D: int, coeffs: Sequence[complex], norms: Sequence[complex]) -> dict[int, sp.csr_matrix]:
    """z^{-m} coefficients of exp(sum_r coeffs[r-1] h_r z^{-r}) on one boson."""
    basis, index = _boson_ops(D)
    n = len(basis)
    out = {}
    for m in range(0, D + 1):
        rows, cols, vals = [], [], []
        for mu in partitions_of(m):
            mm = multiplicities(mu)
            c = 1
            for r, k in mm.items():
                c *= (coeffs[r - 1] * norms[r - 1]) ** k / math.factorial(k)
            if c == 0:
                continue
            for j, lam in enumerate(basis):
                ml = multiplicities(lam)
                ok = True
                f = c
                for r, k in mm.items():
                    have = ml.get(r, 0)
                    if have < k:
                        ok = False
                        break
                    f *= math.factorial(have) / math.factorial(have - k)
                if not ok:
                    continue
                rest = list(lam)
                for r, k in mm.items():
                    for _ in range(k):
                        rest.remove(r)
                rows.append(index[tuple(rest)])
                cols.append(j)
                vals.append(f)
        out[-m] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
    return out


def vertex_modes_single(D: int, cre: Sequence[complex], ann: Sequence[complex],
                        norms: Sequence[complex]) -> dict[int, sp.csr_matrix]:
    """Modes of :exp(sum cre h_{-r} z^r) exp(sum ann h_r z^{-r}): on one boson."""
    C = creation_modes(D, cre)
    A = annihilation_modes(D, ann, norms)
    out: dict[int, sp.csr_matrix] = {}
    for i, ci in C.items():
        if ci.nnz == 0:
            continue
        for j, aj in A.items():
            if aj.nnz == 0:
                continue
            prod = ci @ aj
            m = i + j
            out[m] = out[m] + prod if m in out else prod
    return out


def merge_factor_modes(space: GradedSpace, families: Sequence[dict[int, sp.csr_matrix]]) -> dict[int, sp.csr_matrix]:
    """Mode families on each boson -> modes on the restricted tensor product."""
    D = space.D
    degs = np.array([sum(p) for p in boson_basis(D)])
    # iterative kron keeping partial degree <= D
    cur = families[0]
    cur_deg = degs
    for fam in families[1:]:
        keep = np.nonzero((cur_deg[:, None] + degs[None, :]).ravel() <= D)[0]
        new = {}
        for m1, A in cur.items():
            if A.nnz == 0:
                continue
            for m2, B in fam.items():
                if B.nnz == 0:
                    continue
                K = sp.kron(A, B, format="csr")[keep][:, keep]
                m = m1 + m2
                new[m] = new[m] + K if m in new else K
        cur = new
        cur_deg = (cur_deg[:, None] + degs[None, :]).ravel()[keep]
    return {m: sp.csr_matrix(v) for m, v in cur.items()}


def identity_modes(space: GradedSpace) -> dict[int, sp.csr_matrix]:
    return {0: sp.identity(space.osc_dim, dtype=complex, format="csr")}


# ---------------------------------------------------------------------------
# currents

def canonical_alpha(alpha: complex) -> tuple[int, complex]:
    """Split alpha into an integer part and a canonical remainder."""
    r = round(alpha.real)
    if abs(alpha - r) < 1e-8:
        return r, 0j
    k = math.floor(alpha.real)
    return k, alpha - k


class Current:
    """A formal series X(z) = sum_m X_m z^{m + alpha_s} acting blockwise.

    Subclasses implement ``target``, ``alpha``, ``mode``.  ``mode`` returns
    (matrix on oscillator space, boolean mask of trusted columns).
    """

    space: GradedSpace
    parity: int = 0

    def target(self, s: int) -> int | None:
        raise NotImplementedError

    def alpha(self, s: int) -> complex:
        return 0j

    def mode(self, s: int, m: int) -> tuple[sp.csr_matrix, np.ndarray]:
        raise NotImplementedError

    def mode_range(self, s: int) -> range:
        """Exponents that can be nonzero on this sector."""
        raise NotImplementedError

    def deg_offset(self, s: int) -> int:
        """Mode m shifts the degree by m - deg_offset(s)."""
        raise NotImplementedError

    def shift_bounds(self, s: int) -> tuple[float, float]:
        """Degree shifts outside this interval are known to give exactly zero."""
        return (-math.inf, math.inf)

    # conveniences
    def scaled(self, log_lam: complex, coef: complex = 1) -> "Current":
        return ScaledCurrent(self, log_lam, coef)

    def times(self, coef: complex) -> "Current":
        return ScaledCurrent(self, 0j, coef)

    def __add__(self, other: "Current") -> "Current":
        return SumCurrent([(1, self), (1, other)])

    def __sub__(self, other: "Current") -> "Current":
        return SumCurrent([(1, self), (-1, other)])

    def dense(self, s: int, m: int) -> np.ndarray:
        return self.mode(s, m)[0].toarray()


class ModeCurrent(Current):
    """Stored modes.  ``blocks[s] = (target, alpha, deg_offset, modes, extra)``
    where mode m shifts the degree by m - deg_offset and ``extra`` optionally
    holds additional per-mode column masks."""

    def __init__(self, space: GradedSpace, blocks: dict, parity: int = 0,
                 bounds: tuple[float, float] = (-math.inf, math.inf)):
        self.space = space
        self.blocks = blocks
        self.parity = parity
        self.bounds = bounds
        self._zero = sp.csr_matrix((space.osc_dim, space.osc_dim), dtype=complex)

    def target(self, s):
        b = self.blocks.get(s)
        return None if b is None else b[0]

    def alpha(self, s):
        b = self.blocks.get(s)
        return 0j if b is None else b[1]

    def deg_offset(self, s):
        return self.blocks[s][2]

    def shift_bounds(self, s):
        return self.bounds

    def mode(self, s, m):
        b = self.blocks.get(s)
        sp_ = self.space
        if b is None or b[0] is None:
            return self._zero, np.zeros(sp_.osc_dim, dtype=bool)
        tgt, alpha, off, modes, extra = b
        if not (self.bounds[0] <= m - off <= self.bounds[1]):
            return self._zero, np.ones(sp_.osc_dim, dtype=bool)
        valid = sp_.osc_degree + (m - off) <= sp_.D
        if extra is not None and m in extra:
            valid = valid & extra[m]
        mat = modes.get(m)
        if mat is None:
            mat = self._zero
        return mat, valid

    def mode_range(self, s):
        b = self.blocks.get(s)
        if b is None or not b[3]:
            return range(0)
        ks = list(b[3].keys())
        return range(min(ks), max(ks) + 1)


class ScaledCurrent(Current):
    """coef * X(lam z) with lam = exp(log_lam)."""

    def __init__(self, base: Current, log_lam: complex, coef: complex = 1):
        self.base = base
        self.space = base.space
        self.log_lam = complex(log_lam)
        self.coef = coef
        self.parity = base.parity

    def target(self, s):
        return self.base.target(s)

    def alpha(self, s):
        return self.base.alpha(s)

    def mode(self, s, m):
        mat, valid = self.base.mode(s, m)
        f = self.coef * cmath.exp((m + self.base.alpha(s)) * self.log_lam)
        return mat * f, valid

    def mode_range(self, s):
        return self.base.mode_range(s)

    def deg_offset(self, s):
        return self.base.deg_offset(s)

    def shift_bounds(self, s):
        return self.base.shift_bounds(s)


class SumCurrent(Current):
    def __init__(self, terms: Sequence[tuple[complex, Current]]):
        self.terms = [(c, t) for c, t in terms]
        self.space = self.terms[0][1].space
        self.parity = self.terms[0][1].parity

    def target(self, s):
        tg = None
        for _, t in self.terms:
            x = t.target(s)
            if x is not None:
                if tg is not None and x != tg:
                    raise ValueError("summands with different target sectors")
                tg = x
        return tg

    def alpha(self, s):
        al = None
        for _, t in self.terms:
            if t.target(s) is None:
                continue
            a = t.alpha(s)
            if al is not None and abs(a - al) > 1e-8:
                raise ValueError("summands with different fractional exponents")
            al = a
        return 0j if al is None else al

    def deg_offset(self, s):
        off = None
        for _, t in self.terms:
            if t.target(s) is None:
                continue
            o = t.deg_offset(s)
            if off is not None and o != off:
                raise ValueError("summands with different degree grading")
            off = o
        return 0 if off is None else off

    def shift_bounds(self, s):
        bs = [t.shift_bounds(s) for _, t in self.terms if t.target(s) is not None]
        if not bs:
            return (-math.inf, math.inf)
        return (min(b[0] for b in bs), max(b[1] for b in bs))

    def mode(self, s, m):
        mat = None
        valid = None
        for c, t in self.terms:
            a, v = t.mode(s, m)
            mat = a * c if mat is None else mat + a * c
            valid = v if valid is None else valid & v
        return mat, valid

    def mode_range(self, s):
        lo, hi = None, None
        for _, t in self.terms:
            r = t.mode_range(s)
            if len(r) == 0:
                continue
            lo = r.start if lo is None else min(lo, r.start)
            hi = r.stop if hi is None else max(hi, r.stop)
        return range(0) if lo is None else range(lo, hi)


class ConstantCurrent(Current):
    """An operator with no formal variable (single mode 0)."""

    def __init__(self, space: GradedSpace, blocks: dict[int, tuple[int | None, sp.csr_matrix, int]],
                 parity: int = 0):
        # blocks[s] = (target, matrix, degree shift)
        self.space = space
        self.blocks = blocks
        self.parity = parity
        self._zero = sp.csr_matrix((space.osc_dim, space.osc_dim), dtype=complex)

    def target(self, s):
        b = self.blocks.get(s)
        return None if b is None else b[0]

    def mode(self, s, m):
        b = self.blocks.get(s)
        n = self.space.osc_dim
        if m != 0 or b is None:
            ok = np.ones(n, dtype=bool) if b is not None else np.zeros(n, dtype=bool)
            return self._zero, ok
        tgt, mat, dshift = b
        if tgt is None:
            return self._zero, np.zeros(n, dtype=bool)
        valid = self.space.osc_degree + dshift <= self.space.D
        return mat, valid

    def mode_range(self, s):
        return range(0, 1)

    def deg_offset(self, s):
        b = self.blocks.get(s)
        return 0 if b is None else -b[2]

    def shift_bounds(self, s):
        b = self.blocks.get(s)
        if b is None or b[0] is None:
            return (-math.inf, math.inf)
        return (b[2], b[2])


# ---------------------------------------------------------------------------
# Heisenberg modes and zero modes

def _embed_single(space: GradedSpace, f: int, mat: sp.csr_matrix) -> sp.csr_matrix:
    nb = len(boson_basis(space.D))
    fams = []
    for g in range(len(space.factors)):
        fams.append({0: mat} if g == f else {0: sp.identity(nb, dtype=complex, format="csr")})
    return merge_factor_modes(space, fams)[0]


def heisenberg_mode(space: GradedSpace, r: int, f: int) -> ConstantCurrent:
    """h_r on factor f (r < 0 creation, r > 0 annihilation)."""
    if r == 0 or abs(r) > space.D:
        raise ValueError("need 0 < |r| <= D")
    D = space.D
    coeffs = [0j] * D
    coeffs[abs(r) - 1] = 1.0
    if r < 0:
        single = creation_modes(D, coeffs)[-r]
        # coefficient of z^{|r|} is exactly h_{-r} plus higher powers; keep linear part
        single = _linear_part_creation(D, -r)
    else:
        norm = oscillator_norm(space.ctx, space.factors[f], r)
        single = _linear_part_annihilation(D, r, norm)
    mat = _embed_single(space, f, single)
    return ConstantCurrent(space, {s: (s, mat, -r) for s in range(space.n_sectors)})


def _linear_part_creation(D: int, r: int) -> sp.csr_matrix:
    basis, index = _boson_ops(D)
    rows, cols, vals = [], [], []
    for j, lam in enumerate(basis):
        if sum(lam) + r <= D:
            rows.append(index[add_parts(lam, (r,))])
            cols.append(j)
            vals.append(1.0)
    n = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)


def _linear_part_annihilation(D: int, r: int, norm: complex) -> sp.csr_matrix:
    basis, index = _boson_ops(D)
    rows, cols, vals = [], [], []
    for j, lam in enumerate(basis):
        k = lam.count(r)
        if k:
            rest = list(lam)
            rest.remove(r)
            rows.append(index[tuple(rest)])
            cols.append(j)
            vals.append(k * norm)
    n = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)


def zero_modes(space: GradedSpace, f: int, shift: Sequence[int] | None = None):
    """(e^Q, P) on factor f.  ``shift`` is the charge vector moved by e^Q
    (default: +1 on factor f only; in a tied space pass the tied vector)."""
    if not space.factors[f].zero_modes:
        raise ValueError("factor has no zero modes")
    if shift is None:
        shift = [1 if g == f else 0 for g in range(len(space.factors))]
    I = sp.identity(space.osc_dim, dtype=complex, format="csr")
    eQ = ConstantCurrent(space, {s: (space.shift_sector(s, shift), I, 0) for s in range(space.n_sectors)})
    P = ConstantCurrent(space, {s: (s, I * space.momentum(s, f), 0) for s in range(space.n_sectors)})
    return eQ, P


def compose_constant(A: ConstantCurrent, B: ConstantCurrent) -> ConstantCurrent:
    """A B for operators without formal variable; invalid if B leaves the window."""
    space = A.space
    blocks = {}
    for s in range(space.n_sectors):
        t = B.target(s)
        if t is None or A.target(t) is None:
            blocks[s] = (None, None, 0)
            continue
        _, mb, db = B.blocks[s]
        _, ma, da = A.blocks[t]
        blocks[s] = (A.target(t), ma @ mb, da + db)
    return ConstantCurrent(space, blocks)


# ---------------------------------------------------------------------------
# tensor products

def tensor_space(S1: GradedSpace, S2: GradedSpace,
                 sectors: Iterable[tuple[int, ...]] | None = None) -> GradedSpace:
    if S1.D != S2.D or S1.ctx is not S2.ctx:
        raise ValueError("incompatible spaces")
    if sectors is None:
        sectors = [a + b for a in S1.sectors for b in S2.sectors]
    rule = None
    if S1.parity_rule is not None or S2.parity_rule is not None:
        n1 = len(S1.factors)
        r1 = S1.parity_rule or (lambda s: 0)
        r2 = S2.parity_rule or (lambda s: 0)
        rule = lambda s: r1(s[:n1]) + r2(s[n1:])  # noqa: E731
    return GradedSpace(S1.ctx, S1.factors + S2.factors, S1.D, tuple(sectors), rule)


def tensor_apply(A: Current, B: Current, space: GradedSpace) -> ModeCurrent:
    """(A (x) B)(z) = A(z) (x) B(z) on ``space`` (factors of A then B).

    Koszul rule: (A (x) B)(v (x) w) = (-1)^{|B||v|} A v (x) B w.
    """
    S1, S2 = A.space, B.space
    n1 = len(S1.factors)
    # oscillator embedding: full state -> (index in S1, index in S2)
    idx1 = {t: i for i, t in enumerate(S1.osc_states)}
    idx2 = {t: i for i, t in enumerate(S2.osc_states)}
    pairs = [(idx1.get(t[:n1]), idx2.get(t[n1:])) for t in space.osc_states]
    # restricted kron via selection of rows/cols of kron(S1 osc, S2 osc)
    sel = np.array([a * S2.osc_dim + b for a, b in pairs], dtype=np.int64)
    blocks = {}
    for s, sec in enumerate(space.sectors):
        s1 = S1.sector_index.get(sec[:n1])
        s2 = S2.sector_index.get(sec[n1:])
        if s1 is None or s2 is None:
            continue
        t1, t2 = A.target(s1), B.target(s2)
        if t1 is None or t2 is None:
            blocks[s] = (None, 0j, 0, {}, None)
            continue
        tsec = S1.sectors[t1] + S2.sectors[t2]
        t = space.sector_index.get(tsec)
        sign = -1 if (B.parity and S1.parity(s1)) else 1
        alpha = A.alpha(s1) + B.alpha(s2)
        k, alpha_c = canonical_alpha(alpha)
        modes, masks = {}, {}
        ra, rb = A.mode_range(s1), B.mode_range(s2)
        off1, off2 = A.deg_offset(s1), B.deg_offset(s2)
        for m1 in ra:
            a, va = A.mode(s1, m1)
            # a factor pushed past degree D puts the whole product past D, where
            # the target space has no states, so that loss is harmless
            va = va | (S1.osc_degree + (m1 - off1) > S1.D)
            for m2 in rb:
                b, vb = B.mode(s2, m2)
                vb = vb | (S2.osc_degree + (m2 - off2) > S2.D)
                K = sp.kron(a, b, format="csr")[sel][:, sel] * sign
                vk = np.kron(va, vb)[sel]
                m = m1 + m2 + k
                modes[m] = modes[m] + K if m in modes else K
                masks[m] = masks[m] & vk if m in masks else vk
        off = A.deg_offset(s1) + B.deg_offset(s2) + k
        blocks[s] = (t, alpha_c, off, modes, masks)
    return ModeCurrent(space, blocks, parity=(A.parity + B.parity) % 2)
