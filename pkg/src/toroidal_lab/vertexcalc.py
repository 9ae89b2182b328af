"""Vertex operators, contractions, fusion and coefficient-level relation checks.

Oscillator coefficient sequences are kept as exact Laurent polynomials in the
lattice of monomials s1^a s2^b: a sequence c_r = sum_m c_m (m)^r.  This makes
contractions of two vertex operators available in closed form as products of
factors (1 - X t)^e, which is what evaluating products at special points
(fusion, residues) requires.
"""
from __future__ import annotations

import cmath
import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .fockspace import (Current, Factor, GradedSpace, ModeCurrent, ConstantCurrent,
                        canonical_alpha, merge_factor_modes, oscillator_norm,
                        vertex_modes_single, boson_basis)
from .qkernel import (Mono, ParameterContext, PoleError, TruncatedSeries, mono_add, mono_scale,
                      mono_neg, qpoch)


# ---------------------------------------------------------------------------
# Laurent polynomials on the monomial lattice

class LPoly:
    """sum c_m m^r as a function of r; keys are lattice monomials."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict[Mono, complex] | None = None):
        t = {}
        for k, v in (terms or {}).items():
            if v != 0:
                t[tuple(k)] = t.get(tuple(k), 0) + v
        self.terms = {k: v for k, v in t.items() if v != 0}
        self._hash = None

    @staticmethod
    def const(c: complex = 1) -> "LPoly":
        return LPoly({(0, 0): c})

    @staticmethod
    def one_minus(m: Mono, c: complex = 1) -> "LPoly":
        """c (1 - m^r)"""
        return LPoly({(0, 0): c, tuple(m): -c})

    def __mul__(self, other):
        if not isinstance(other, LPoly):
            return LPoly({k: v * other for k, v in self.terms.items()})
        out: dict[Mono, complex] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = (k1[0] + k2[0], k1[1] + k2[1])
                out[k] = out.get(k, 0) + v1 * v2
        return LPoly(out)

    __rmul__ = __mul__

    def __add__(self, other: "LPoly") -> "LPoly":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return LPoly(out)

    def __neg__(self) -> "LPoly":
        return self * -1

    def __sub__(self, other: "LPoly") -> "LPoly":
        return self + (-other)

    def shift(self, m: Mono, power: int = 1) -> "LPoly":
        """c_r -> c_r * m^{power r}."""
        return LPoly({(k[0] + power * m[0], k[1] + power * m[1]): v for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def values(self, ctx: ParameterContext, R: int) -> np.ndarray:
        r = np.arange(1, R + 1)
        out = np.zeros(R, dtype=complex)
        for k, v in self.terms.items():
            out += v * np.exp(r * ctx.mono_log(k))
        return out

    def divide_one_minus(self, u: Mono) -> "LPoly | None":
        """Exact quotient by (1 - u^r) in the group ring, or None."""
        if u == (0, 0):
            return None
        axis = 0 if u[0] != 0 else 1

        def param(m):
            return m[axis] // u[axis]

        cosets: dict[Mono, dict[int, complex]] = {}
        for m, c in self.terms.items():
            t = param(m)
            rep = (m[0] - t * u[0], m[1] - t * u[1])
            cosets.setdefault(rep, {})[t] = c
        out: dict[Mono, complex] = {}
        for rep, coeffs in cosets.items():
            ts = sorted(coeffs)
            run = 0
            for t in range(ts[0], ts[-1] + 1):
                run += coeffs.get(t, 0)
                if t < ts[-1] and run != 0:
                    out[(rep[0] + t * u[0], rep[1] + t * u[1])] = run
            if abs(run) > 1e-12:
                return None
        return LPoly(out)

    def key(self):
        if self._hash is None:
            self._hash = tuple(sorted((k, complex(v)) for k, v in self.terms.items()))
        return self._hash

    def __eq__(self, other):
        return isinstance(other, LPoly) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "LPoly(" + ", ".join(f"{v:g}*{k}" for k, v in sorted(self.terms.items())) + ")"


ZERO = LPoly()


# ---------------------------------------------------------------------------
# vertex operator specs

@dataclass(frozen=True)
class VO:
    """coef * e^{shift.Q} exp(pexp.P) z^{zexp.P + zconst} :exp(cre) exp(ann):

    All tuples are indexed by the boson factors of a layout.  P is evaluated on
    the source sector.  cre[f] multiplies h_{-r} z^r, ann[f] multiplies h_r z^{-r}.
    """

    coef: complex
    cre: tuple
    ann: tuple
    shift: tuple
    zexp: tuple
    pexp: tuple
    zconst: complex = 0j

    @property
    def n(self) -> int:
        return len(self.cre)

    def times(self, c: complex) -> "VO":
        return replace(self, coef=self.coef * c)

    def scaled(self, ctx: ParameterContext, lam: Mono) -> "VO":
        """X(z) -> X(lam z)."""
        L = ctx.mono_log(lam)
        return VO(self.coef * cmath.exp(self.zconst * L),
                  tuple(c.shift(lam, 1) for c in self.cre),
                  tuple(a.shift(lam, -1) for a in self.ann),
                  self.shift, self.zexp,
                  tuple(p + x * L for p, x in zip(self.pexp, self.zexp)),
                  self.zconst)

    def inverse_normal(self) -> "VO":
        """:X(z)^{-1}: (negated exponents, inverted zero modes)."""
        return VO(1 / self.coef, tuple(-c for c in self.cre), tuple(-a for a in self.ann),
                  tuple(-s for s in self.shift), tuple(-x for x in self.zexp),
                  tuple(-p for p in self.pexp), -self.zconst)

    def embed(self, offset: int, total: int) -> "VO":
        def pad(t, zero):
            return tuple([zero] * offset + list(t) + [zero] * (total - offset - len(t)))
        return VO(self.coef, pad(self.cre, ZERO), pad(self.ann, ZERO), pad(self.shift, 0),
                  pad(self.zexp, 0j), pad(self.pexp, 0j), self.zconst)


def identity_vo(n: int) -> VO:
    return VO(1, (ZERO,) * n, (ZERO,) * n, (0,) * n, (0j,) * n, (0j,) * n, 0j)


VOSum = list  # list of VO terms


def vosum_scaled(ctx, terms: Sequence[VO], lam: Mono) -> list[VO]:
    return [t.scaled(ctx, lam) for t in terms]


def vosum_times(terms: Sequence[VO], c: complex) -> list[VO]:
    return [t.times(c) for t in terms]


# ---------------------------------------------------------------------------
# contractions

def _factor_data(ctx: ParameterContext, f: Factor):
    M = ctx.M
    qs = f.q_monos(M)
    C = f.level_mono(M)
    num = LPoly({C: 1, mono_neg(C): -1})
    return num, list(qs)


@dataclass
class Contraction:
    """const * z^{zpow} * prod_X (1 - X t)^{e_X}, t = w/z (right/left argument ratio).

    ``linear`` holds the factors exactly (lattice monomial keys); ``series``
    gives the oscillator-pairing expansion exp(sum_r p_r t^r) computed
    independently from the coefficient sequences.
    """

    linear: dict[Mono, int]
    zpow: complex
    const: complex
    pairing: np.ndarray  # p_r for r = 1..R (numeric oracle)

    def value(self, ctx: ParameterContext, t) -> tuple[int, complex]:
        """(order, leading coefficient) at t: value ~ coeff * (1 - t'/t)^order.

        Pass t as a lattice monomial (exact zero detection) or complex."""
        order = 0
        val = complex(self.const)
        if isinstance(t, tuple):
            tl = ctx.mono_log(t)
            for X, e in self.linear.items():
                if X[0] + t[0] == 0 and X[1] + t[1] == 0:
                    order += e
                    continue
                val *= (1 - cmath.exp(ctx.mono_log(X) + tl)) ** e
        else:
            t = complex(t)
            for X, e in self.linear.items():
                f = 1 - ctx.mono(X) * t
                if abs(f) < 1e-13:
                    order += e
                    continue
                val *= f ** e
        return order, val

    def closed_series(self, ctx: ParameterContext, order: int) -> TruncatedSeries:
        acc = np.zeros(order + 1, dtype=complex)
        acc[0] = self.const
        from .qkernel import one_minus_cx_power
        for X, e in self.linear.items():
            acc = np.convolve(acc, one_minus_cx_power(ctx.mono(X), e, order))[:order + 1]
        return TruncatedSeries("w/z", 0, acc)

    def pairing_series(self, order: int) -> TruncatedSeries:
        """exp(sum p_r t^r) by the exponential recursion."""
        p = np.zeros(order + 1, dtype=complex)
        R = min(order, len(self.pairing))
        p[1:R + 1] = self.pairing[:R]
        a = np.zeros(order + 1, dtype=complex)
        a[0] = self.const
        # a' = (sum r p_r t^{r-1}) a
        for n in range(1, order + 1):
            s = 0
            for r in range(1, n + 1):
                s += r * p[r] * a[n - r]
            a[n] = s / n
        return TruncatedSeries("w/z", 0, a)


def _closed_form_factors(ctx: ParameterContext, N: LPoly, den: list[Mono],
                         tol: float = 1e-18) -> dict[Mono, int]:
    """exp(sum_r (1/r) N(r) t^r / prod (1 - u^r)) as prod (1 - X t)^e."""
    rem = []
    for u in den:
        q = N.divide_one_minus(u)
        if q is not None:
            N = q
        else:
            rem.append(u)
    # expansions of 1/(1-u^r)
    expansions = []
    for u in rem:
        au = abs(ctx.mono(u))
        if au < 1:
            expansions.append((1, u, 0, au))
        elif au > 1:
            expansions.append((-1, mono_neg(u), 1, 1 / au))
        else:
            raise PoleError("unit-modulus base in contraction")
    out: dict[Mono, int] = {}
    for m, c in N.terms.items():
        ci = round(c.real) if isinstance(c, complex) else round(c)
        if abs(c - ci) > 1e-9:
            raise ValueError("non-integer exponent in contraction closed form")
        if ci == 0:
            continue
        # enumerate products of geometric expansions
        def rec(i, key, sign, mag):
            if i == len(expansions):
                # exp(sum (1/r) ci sign (key t)^r) = (1 - key t)^{-ci sign}
                out[key] = out.get(key, 0) - ci * sign
                return
            s, base, k0, ab = expansions[i]
            k = k0
            while True:
                mg = mag * ab ** k
                if mg < tol and k > k0:
                    break
                rec(i + 1, (key[0] + k * base[0], key[1] + k * base[1]), sign * s, mg)
                k += 1
        rec(0, tuple(m), 1, abs(ctx.mono(m)) if not expansions else 1.0)
    return {k: v for k, v in out.items() if v != 0}


def contraction(ctx: ParameterContext, layout: Sequence[Factor], A: VO, B: VO,
                order: int = 16) -> Contraction:
    """A(z) B(w) = Contraction(w/z) :A(z) B(w):"""
    linear: dict[Mono, int] = {}
    pairing = np.zeros(order, dtype=complex)
    for f, fac in enumerate(layout):
        a, b = A.ann[f], B.cre[f]
        if a.is_zero() or b.is_zero():
            continue
        num, den = _factor_data(ctx, fac)
        N = a * b * num
        for k, e in _closed_form_factors(ctx, N, den).items():
            linear[k] = linear.get(k, 0) + e
        norms = np.array([oscillator_norm(ctx, fac, r) for r in range(1, order + 1)])
        pairing += a.values(ctx, order) * b.values(ctx, order) * norms
    zpow = 0j
    const = 1 + 0j
    for f, fac in enumerate(layout):
        if B.shift[f]:
            bf = fac.beta(ctx)
            zpow += A.zexp[f] * B.shift[f] * bf
            const *= cmath.exp(A.pexp[f] * B.shift[f] * bf)
    linear = {k: v for k, v in linear.items() if v != 0}
    return Contraction(linear, zpow, const, pairing)


def fuse(ctx: ParameterContext, layout: Sequence[Factor], A: VO, B: VO, t: Mono,
         allow_pole: bool = False) -> tuple[int, VO]:
    """Normal-ordered value of A(z) B(t z): (order of zero, VO with leading coefficient)."""
    con = contraction(ctx, layout, A, B)
    order, val = con.value(ctx, t)
    if order < 0 and not allow_pole:
        raise PoleError("fusion point is a pole")
    Bt = B.scaled(ctx, t)
    vo = VO(A.coef * Bt.coef * val,
            tuple(x + y for x, y in zip(A.cre, Bt.cre)),
            tuple(x + y for x, y in zip(A.ann, Bt.ann)),
            tuple(x + y for x, y in zip(A.shift, Bt.shift)),
            tuple(x + y for x, y in zip(A.zexp, Bt.zexp)),
            tuple(x + y for x, y in zip(A.pexp, Bt.pexp)),
            A.zconst + Bt.zconst + con.zpow)
    return order, vo


def fuse_sums(ctx, layout, As: Sequence[VO], Bs: Sequence[VO], t: Mono) -> list[VO]:
    """Fused product of two sums of vertex operators; vanishing terms dropped."""
    out = []
    for a in As:
        for b in Bs:
            order, vo = fuse(ctx, layout, a, b, t)
            if order == 0 and vo.coef != 0:
                out.append(vo)
    return out


def residue_dxx(ctx, layout, A: VO, B: VO, t: Mono) -> VO:
    """Res_{x=t} of A(z)B(xz) dx/x at a simple pole of the contraction."""
    order, vo = fuse(ctx, layout, A, B, t, allow_pole=True)
    if order != -1:
        raise PoleError(f"expected a simple pole, found order {order}")
    # 1/(1 - x/t) dx/x has residue -1 at x = t
    return vo.times(-1)


# ---------------------------------------------------------------------------
# building currents

_MODE_CACHE: dict = {}


def _single_modes(ctx, fac: Factor, D: int, cre: LPoly, ann: LPoly):
    key = (id(ctx), fac, D, cre, ann)
    got = _MODE_CACHE.get(key)
    if got is None:
        norms = np.array([oscillator_norm(ctx, fac, r) for r in range(1, D + 1)])
        got = vertex_modes_single(D, cre.values(ctx, D), ann.values(ctx, D), norms)
        if len(_MODE_CACHE) > 4000:
            _MODE_CACHE.clear()
        _MODE_CACHE[key] = got
    return got


def osc_modes(space: GradedSpace, vo: VO) -> dict[int, sp.csr_matrix]:
    ctx = space.ctx
    nb = len(boson_basis(space.D))
    fams = []
    for f, fac in enumerate(space.factors):
        if vo.cre[f].is_zero() and vo.ann[f].is_zero():
            fams.append({0: sp.identity(nb, dtype=complex, format="csr")})
        else:
            fams.append(_single_modes(ctx, fac, space.D, vo.cre[f], vo.ann[f]))
    return merge_factor_modes(space, fams)


def build_current(space: GradedSpace, terms: VO | Sequence[VO], parity: int = 0,
                  log_scale: complex = 0j) -> Current:
    """Mode maps of a vertex operator (or a sum of them) on ``space``.

    ``log_scale`` evaluates the current at exp(log_scale) z for arbitrary complex
    scale factors (lattice scalings should be applied to the spec instead)."""
    if isinstance(terms, VO):
        terms = [terms]
    if not terms:
        return ZeroCurrent(space, parity)
    # pure annihilation (creation) operators never raise (lower) the degree
    lo = 0 if all(c.is_zero() for t in terms for c in t.ann) else -math.inf
    hi = 0 if all(c.is_zero() for t in terms for c in t.cre) else math.inf
    currents = []
    for vo in terms:
        if vo.coef == 0:
            continue
        modes = osc_modes(space, vo)
        blocks = {}
        for s in range(space.n_sectors):
            t = space.shift_sector(s, vo.shift)
            P = [space.momentum(s, f) for f in range(len(space.factors))]
            alpha = vo.zconst + sum(x * p for x, p in zip(vo.zexp, P))
            scal = vo.coef * cmath.exp(sum(x * p for x, p in zip(vo.pexp, P)))
            k, ac = canonical_alpha(alpha)
            if t is None:
                blocks[s] = (None, ac, k, {}, None)
                continue
            if log_scale:
                mm = {m + k: mat * (scal * cmath.exp((m + alpha) * log_scale)) for m, mat in modes.items()}
            else:
                mm = {m + k: mat * scal for m, mat in modes.items()}
            blocks[s] = (t, ac, k, mm, None)
        currents.append(ModeCurrent(space, blocks, parity, (lo, hi)))
    if not currents:
        return ZeroCurrent(space, parity)
    if len(currents) == 1:
        return currents[0]
    return collapse(SumCurrentExact(currents), (lo, hi))


class ZeroCurrent(Current):
    def __init__(self, space, parity=0, target_like: Current | None = None):
        self.space = space
        self.parity = parity
        self._like = target_like
        self._z = sp.csr_matrix((space.osc_dim, space.osc_dim), dtype=complex)

    def target(self, s):
        return self._like.target(s) if self._like is not None else s

    def mode(self, s, m):
        return self._z, np.ones(self.space.osc_dim, dtype=bool)

    def mode_range(self, s):
        return range(0)

    def deg_offset(self, s):
        return self._like.deg_offset(s) if self._like is not None else 0


class SumCurrentExact(Current):
    """Sum of ModeCurrents, each carrying its own degree grading."""

    def __init__(self, parts: Sequence[Current]):
        self.parts = list(parts)
        self.space = self.parts[0].space
        self.parity = self.parts[0].parity


def collapse(sc: SumCurrentExact, bounds=(-math.inf, math.inf)) -> ModeCurrent:
    """Add ModeCurrents with identical targets/alphas/gradings into one."""
    space = sc.space
    blocks = {}
    for s in range(space.n_sectors):
        tgt, al, off, modes = None, None, None, {}
        dead = False
        for c in sc.parts:
            b = c.blocks.get(s)
            if b is None:
                continue
            if b[0] is None:
                dead = True
                continue
            if tgt is None:
                tgt, al, off = b[0], b[1], b[2]
            else:
                if b[0] != tgt or abs(b[1] - al) > 1e-8 or b[2] != off:
                    raise ValueError("incompatible summands (sector, exponent or grading)")
            for m, mat in b[3].items():
                modes[m] = modes[m] + mat if m in modes else mat
        if dead and tgt is None:
            blocks[s] = (None, 0j, 0, {}, None)
        elif tgt is not None:
            blocks[s] = (tgt, al, off, modes, None)
    return ModeCurrent(space, blocks, sc.parity, bounds)


def scalar_current(space: GradedSpace, pexp: Sequence[complex], coef: complex = 1) -> ConstantCurrent:
    """Operator coef * exp(pexp . P) (e.g. K = s2^P)."""
    I = sp.identity(space.osc_dim, dtype=complex, format="csr")
    blocks = {}
    for s in range(space.n_sectors):
        P = [space.momentum(s, f) for f in range(len(space.factors))]
        blocks[s] = (s, I * (coef * cmath.exp(sum(x * p for x, p in zip(pexp, P)))), 0)
    return ConstantCurrent(space, blocks)


# ---------------------------------------------------------------------------
# standard vertex operators on a Fock factor

@dataclass(frozen=True)
class FockParams:
    """Parameters seen by a color-c Fock factor: the q's, s's, c's in the
    roles they play for color 2 after the color permutation."""

    qa: Mono   # plays q1
    qc: Mono   # plays q2 (the color)
    qb: Mono   # plays q3
    sa: Mono
    sc: Mono
    sb: Mono
    c_color: complex
    q1: Mono   # the algebra's q1 (for k currents)
    q2: Mono
    q3: Mono
    s1: Mono
    log_q1: complex
    beta: complex


def fock_params(ctx: ParameterContext, fac: Factor) -> FockParams:
    q = fac.q_monos(ctx.M)
    s = fac.s_monos(ctx.M)
    c = fac.color
    perm = {1: (2, 1, 3), 2: (1, 2, 3), 3: (1, 3, 2)}[c]
    ia, ic, ib = (p - 1 for p in perm)
    sv = [ctx.mono(x) for x in s]
    cc = -(sv[ia] - 1 / sv[ia]) * (sv[ib] - 1 / sv[ib])
    return FockParams(q[ia], q[ic], q[ib], s[ia], s[ic], s[ib], cc,
                      q[0], q[1], q[2], s[0], fac.log_q1(ctx), fac.beta(ctx))


def _kappa(p: FockParams) -> LPoly:
    return LPoly.one_minus(p.q1) * LPoly.one_minus(p.q2) * LPoly.one_minus(p.q3)


def standard_specs(ctx: ParameterContext, layout: Sequence[Factor], f: int) -> dict[str, VO]:
    """Vertex operators of the Fock action on factor f of ``layout``."""
    fac = layout[f]
    p = fock_params(ctx, fac)
    n = len(layout)

    def vo(coef, cre=ZERO, ann=ZERO, shift=0, zexp=0j, pexp=0j, zconst=0j):
        return VO(coef, (cre,), (ann,), (shift,), (zexp,), (pexp,), zconst).embed(f, n)

    A1 = LPoly.one_minus(p.qa) * LPoly.one_minus(p.qb)          # (1-qa^r)(1-qb^r)
    A1m = LPoly.one_minus(mono_neg(p.qa)) * LPoly.one_minus(mono_neg(p.qb))
    sc = p.sc
    L = p.log_q1  # v = q1^P
    out = {}
    out["xi+"] = vo(1, A1, A1m.shift(sc, -1))
    out["xi-"] = vo(1, -A1.shift(sc, 1), -A1m)
    out["e"] = vo(-1 / p.c_color, A1, A1m.shift(sc, -1), pexp=L)
    out["f"] = vo(1 / p.c_color, -A1.shift(sc, 1), -A1m, pexp=-L)
    kap = _kappa(p)
    out["psi+"] = vo(1, ZERO, kap)
    out["psi-"] = vo(1, kap, ZERO)
    Ls = ctx.mono_log(p.sc)  # K = exp(log s_c log v / log q1) = s_c^P
    k0p = LPoly.one_minus(p.q2) * LPoly.one_minus(p.q3)
    out["k0+"] = vo(1, ZERO, k0p.shift(p.q1, 1), pexp=Ls)
    out["k0-"] = vo(1, -k0p, ZERO, pexp=-Ls)
    out["K"] = vo(1, pexp=Ls)
    # intertwiners (defined for color 2)
    B3 = LPoly.one_minus(p.qb)
    B3m = LPoly.one_minus(mono_neg(p.qb))
    beta = p.beta
    out["Phi"] = vo(1, -B3, -B3m.shift(sc, -1), shift=1, zexp=1, zconst=beta / 2)
    out["Phi*"] = vo(1, B3.shift(sc, 1), B3m, shift=-1, zexp=-1, zconst=beta / 2)
    return out


# ---------------------------------------------------------------------------
# fused currents on sums of vertex operators

def fused_product(ctx, layout, parts: Sequence[Sequence[VO]], ratios: Sequence[Mono]) -> list[VO]:
    """a_0(z) a_1(t_1 z) ... with ratios t_j relative to z.

    Orders of zeros and poles are summed along the chain, so a zero of one
    contraction may cancel a pole of a later one at the same point."""
    acc = [(0, v) for v in parts[0]]
    for nxt, t in zip(parts[1:], ratios[1:]):
        new = []
        for o, a in acc:
            for b in nxt:
                order, vo = fuse(ctx, layout, a, b, t, allow_pole=True)
                new.append((o + order, vo))
        acc = new
    if any(o < 0 for o, _ in acc):
        raise PoleError("fusion point is a pole")
    return [v for o, v in acc if o == 0]


def fused_e(ctx, layout, e_terms: Sequence[VO], r: int, c1: complex, q1: Mono) -> list[VO]:
    """e^{(r)}(z) = c1^r e(z) e(q1 z) ... e(q1^{r-1} z)."""
    if r == 0:
        return [identity_vo(len(layout))]
    parts = [e_terms] * r
    ratios = [(j * q1[0], j * q1[1]) for j in range(r)]
    return vosum_times(fused_product(ctx, layout, parts, ratios), c1 ** r)


def fused_f(ctx, layout, f_terms: Sequence[VO], r: int, c1: complex, q1: Mono) -> list[VO]:
    """f^{(r)}(z) = (-c1)^r f(q1^{r-1} z) ... f(q1 z) f(z)."""
    if r == 0:
        return [identity_vo(len(layout))]
    # f(q1^{r-1} z) ... f(z): leftmost at q1^{r-1} z; write as product at z' = q1^{r-1} z
    parts = [f_terms] * r
    ratios = [(-j * q1[0], -j * q1[1]) for j in range(r)]
    lead = (((r - 1) * q1[0], (r - 1) * q1[1]))
    prod = fused_product(ctx, layout, parts, ratios)
    return vosum_times([v.scaled(ctx, lead) for v in prod], (-c1) ** r)


def multiply_sums(ctx, layout, As: Sequence[VO], Bs: Sequence[VO]) -> list[VO]:
    """A(z) B(z) (same point)."""
    return fuse_sums(ctx, layout, As, Bs, (0, 0))


def fused_k(ctx, layout, alg: "E1Action", r: int, sign: int) -> list[VO]:
    """k_r^+ = f^{(r)} k_0^+ and k_r^- = k_0^- e^{(r)} for an E1 action by vertex operators."""
    if sign > 0:
        fr = fused_f(ctx, layout, alg.f, r, alg.c1, alg.q1)
        return multiply_sums(ctx, layout, fr, alg.k0p)
    er = fused_e(ctx, layout, alg.e, r, alg.c1, alg.q1)
    return multiply_sums(ctx, layout, alg.k0m, er)


@dataclass
class E1Action:
    """An E1[K] action by sums of vertex operators on a layout."""

    e: list
    f: list
    psip: list
    psim: list
    k0p: list
    k0m: list
    K: list
    level: Mono  # C as lattice monomial
    c1: complex
    q1: Mono
    q2: Mono
    q3: Mono
    s1: Mono
    psi0: complex = 1

    def psip_inv(self):
        return [v.inverse_normal() for v in self.psip]

    def psim_inv(self):
        return [v.inverse_normal() for v in self.psim]


def fock_action(ctx, layout, f) -> E1Action:
    sp_ = standard_specs(ctx, layout, f)
    p = fock_params(ctx, layout[f])
    s = [ctx.mono(x) for x in layout[f].s_monos(ctx.M)]
    c1 = -(s[1] - 1 / s[1]) * (s[2] - 1 / s[2])
    return E1Action([sp_["e"]], [sp_["f"]], [sp_["psi+"]], [sp_["psi-"]], [sp_["k0+"]],
                    [sp_["k0-"]], [sp_["K"]], layout[f].level_mono(ctx.M), c1, p.q1, p.q2,
                    p.q3, p.s1)


def coproduct_action(ctx, layout, A: E1Action, B: E1Action, psi0: complex = 1) -> E1Action:
    """Delta applied to two actions on disjoint factors of ``layout``."""
    C1, C2 = A.level, B.level
    e = list(A.e) + multiply_sums(ctx, layout, A.psim, vosum_scaled(ctx, B.e, C1))
    f = multiply_sums(ctx, layout, vosum_scaled(ctx, A.f, C2), B.psip) + list(B.f)
    psim = multiply_sums(ctx, layout, A.psim, vosum_scaled(ctx, B.psim, C1))
    psip = multiply_sums(ctx, layout, vosum_scaled(ctx, A.psip, C2), B.psip)
    # k_0 currents: Delta k_0^+(z) = k_0^+(C2 z) (x) k_0^+(z); Delta k_0^- = k_0^-(z) (x) k_0^-(C1 z)
    k0p = multiply_sums(ctx, layout, vosum_scaled(ctx, A.k0p, C2), B.k0p)
    k0m = multiply_sums(ctx, layout, A.k0m, vosum_scaled(ctx, B.k0m, C1))
    K = multiply_sums(ctx, layout, A.K, B.K)
    return E1Action(e, f, psip, psim, k0p, k0m, K, mono_add(C1, C2), A.c1, A.q1, A.q2, A.q3,
                    A.s1, psi0)


# ---------------------------------------------------------------------------
# coefficient-level relation checking

@dataclass
class RatioSeries:
    """const * prod x_v^{mono_v} * sum_k coeff(k) prod x_v^{k n_v}, k in [klo, khi]."""

    mono: tuple
    ratio: tuple
    coeff: Callable[[int], complex]
    klo: float
    khi: float
    const: complex = 1

    @staticmethod
    def monomial(mono: Sequence[int], const: complex = 1) -> "RatioSeries":
        n = len(mono)
        return RatioSeries(tuple(mono), (0,) * n, lambda k: 1.0, 0, 0, const)

    @staticmethod
    def poly(mono: Sequence[int], ratio: Sequence[int], coeffs: Sequence[complex], const=1) -> "RatioSeries":
        cs = list(coeffs)
        return RatioSeries(tuple(mono), tuple(ratio),
                           lambda k: cs[k] if 0 <= k < len(cs) else 0, 0, len(cs) - 1, const)

    @staticmethod
    def delta(ratio: Sequence[int], c: complex, nvars: int | None = None) -> "RatioSeries":
        """delta(c * prod x^{ratio}) = sum_k c^k prod x^{k ratio}."""
        lc = cmath.log(c)
        return RatioSeries((0,) * len(ratio), tuple(ratio), lambda k: cmath.exp(k * lc),
                           -math.inf, math.inf)

    @staticmethod
    def from_series(mono, ratio, s: TruncatedSeries, const=1, exact_tail: bool = False) -> "RatioSeries":
        lo, hi = s.lo, s.hi
        co = s.coeffs

        def coeff(k):
            if k < lo:
                return 0
            if k > hi:
                raise IndexError("series truncated too early")
            return co[k - lo]
        return RatioSeries(tuple(mono), tuple(ratio), coeff, lo, math.inf, const)


@dataclass
class Term:
    """coef * series * X_1(lam_1 x_{v_1}) X_2(...) ... (operator order left to right)."""

    coef: complex
    series: RatioSeries
    ops: list  # list of (Current, var, log_scale)


@dataclass
class CheckResult:
    name: str
    anchor: str
    residual: float
    abs_residual: float
    clean: int
    contaminated: int
    scale: float
    ms: float = 0.0
    tol: float = 1e-8
    note: str = ""
    # rounding level of ``residual``; 0 when the measure is relative to the largest term
    floor: float = 0.0

    @property
    def status(self) -> str:
        if self.clean == 0:
            return "inconclusive"
        return "pass" if self.residual <= self.tol else "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "residual": float(self.residual),
                "clean": int(self.clean), "contaminated": int(self.contaminated),
                "status": self.status, "ms": round(self.ms, 1), "floor": float(self.floor)}


def merge_results(name: str, anchor: str, parts: Sequence[CheckResult], tol: float) -> CheckResult:
    r = CheckResult(name, anchor, 0.0, 0.0, 0, 0, 1.0, 0.0, tol)
    for p in parts:
        r.residual = max(r.residual, p.residual)
        r.abs_residual = max(r.abs_residual, p.abs_residual)
        r.clean += p.clean
        r.contaminated += p.contaminated
        r.scale = max(r.scale, p.scale)
        r.floor = max(r.floor, p.floor)
        r.ms += p.ms
    return r


def _apply_chain(ops, exps, s, space, modes=None):
    """Product of single modes (right to left) on source sector s.

    Returns (dense matrix, mask, target); the matrix is None when the chain
    leaves the space.  ``modes`` caches dense mode blocks across calls."""
    n = space.osc_dim
    mat = None
    mask = np.ones(n, dtype=bool)
    cur = s
    for (X, var, lsc), m in zip(reversed(ops), reversed(exps)):
        t = X.target(cur)
        if t is None:
            return None, np.zeros(n, dtype=bool), None
        key = (id(X), cur, m)
        got = None if modes is None else modes.get(key)
        if got is None:
            A, valid = X.mode(cur, m)
            A = A.toarray() if sp.issparse(A) else np.asarray(A)
            got = (A, valid, bool(np.any(A)))
            if modes is not None:
                modes[key] = got
        A, valid, nonzero = got
        if lsc:
            A = A * cmath.exp((m + X.alpha(cur)) * lsc)
        if mat is None:
            mat = A
            mask = mask & valid
        else:
            # columns of the running product that reach invalid states of A
            if not valid.all():
                reach = np.abs(mat[~valid]).sum(axis=0) > 0
                mask = mask & ~reach
            mat = A @ mat if nonzero else np.zeros((n, n), dtype=complex)
        cur = t
    if mat is None:
        mat = np.eye(n, dtype=complex)
    return mat, mask, cur


class MultiCurrent(Current):
    """A current whose summands land in different target sectors.

    Relations containing it are expanded multilinearly into one term per
    choice of summand before checking."""

    def __init__(self, pieces: Sequence[Current]):
        self.pieces = list(pieces)
        self.space = self.pieces[0].space
        self.parity = self.pieces[0].parity

    def target(self, s):
        raise TypeError("MultiCurrent has several targets; expand it first")

    def scaled(self, log_lam: complex, coef: complex = 1) -> "MultiCurrent":
        return MultiCurrent([p.scaled(log_lam, coef) for p in self.pieces])

    def times(self, coef: complex) -> "MultiCurrent":
        return MultiCurrent([p.times(coef) for p in self.pieces])


def expand_terms(terms: Sequence[Term]) -> list[Term]:
    """Split every term whose operators include MultiCurrents."""
    out = []
    for t in terms:
        choices = [op[0].pieces if isinstance(op[0], MultiCurrent) else [op[0]] for op in t.ops]
        for pick in itertools.product(*choices):
            ops = [(X, v, l) for X, (_, v, l) in zip(pick, t.ops)]
            out.append(Term(t.coef, t.series, ops))
    return out


class RelationChecker:
    """Checks sum_terms = 0 coefficientwise on every source sector.

    Contributions are collected per target sector, so a relation may land in
    several sectors at once."""

    def __init__(self, space, nvars: int, terms: Sequence[Term], window: int | None = None,
                 deg_filter: bool = True):
        self.space = space
        self.nvars = nvars
        self.terms = expand_terms(terms)
        self.window = window if window is not None else space.D + 4
        self.deg_filter = deg_filter

    def _k_values(self, term: Term, e: Sequence[int], s: int):
        ser = term.series
        # variables without operators pin k
        used = {v for _, v, _ in term.ops}
        klo, khi = ser.klo, ser.khi
        for v in range(self.nvars):
            if v in used:
                continue
            n_v = ser.ratio[v]
            rem = e[v] - ser.mono[v]
            if n_v == 0:
                if rem != 0:
                    return []
            else:
                if rem % n_v:
                    return []
                k = rem // n_v
                klo, khi = max(klo, k), min(khi, k)
        if klo > khi:
            return []
        if math.isfinite(klo) and math.isfinite(khi):
            return list(range(int(klo), int(khi) + 1))
        # partial degree shifts along the chain are affine in k: A + B k >= -D
        D = self.space.D
        cur, A, B = s, 0, 0
        for X, v, _ in reversed(term.ops):
            t = X.target(cur)
            if t is None:
                # leaves the truncated space: one visit marks the columns contaminated
                k0 = klo if math.isfinite(klo) else (khi if math.isfinite(khi) else 0)
                return [int(k0)]
            # this op's own shift a + b k must lie within its exact bounds
            a, b = e[v] - ser.mono[v] - X.deg_offset(cur), -ser.ratio[v]
            lo_b, hi_b = X.shift_bounds(cur)
            for bound, upper in ((lo_b, False), (hi_b, True)):
                if not math.isfinite(bound):
                    continue
                if b == 0:
                    if (a > bound) if upper else (a < bound):
                        return []
                elif (b > 0) == upper:
                    khi = min(khi, math.floor((bound - a) / b))
                else:
                    klo = max(klo, math.ceil((bound - a) / b))
            A += a
            B += b
            if B > 0:
                klo = max(klo, math.ceil((-D - A) / B))
            elif B < 0:
                khi = min(khi, math.floor((-D - A) / B))
            elif A < -D:
                return []
            cur = t
        if not (math.isfinite(klo) and math.isfinite(khi)):
            raise RuntimeError("non-admissible expansion: infinitely many contributing terms")
        return list(range(int(klo), int(khi) + 1))

    def run(self, name: str, anchor: str, tol: float = 1e-8, exps: Iterable | None = None) -> CheckResult:
        t0 = time.perf_counter()
        space = self.space
        W = self.window
        best_abs, scale = 0.0, 0.0
        clean = contaminated = 0
        if exps is None:
            exps = list(itertools.product(range(-W, W + 1), repeat=self.nvars))
        modes: dict = {}
        for s in range(space.n_sectors):
            for e in exps:
                totals: dict = {}
                mask = np.ones(space.osc_dim, dtype=bool)
                tmax = 0.0
                any_term = False
                for term in self.terms:
                    ks = self._k_values(term, e, s)
                    for k in ks:
                        c = term.coef * term.series.const * term.series.coeff(k)
                        if c == 0:
                            continue
                        ms = [e[v] - term.series.mono[v] - k * term.series.ratio[v] for _, v, _ in term.ops]
                        mat, mk, tgt = _apply_chain(term.ops, ms, s, space, modes)
                        mask &= mk
                        if mat is None:
                            continue
                        any_term = True
                        if np.any(mat):
                            contrib = mat * c
                            tmax = max(tmax, float(np.abs(contrib).max()))
                            totals[tgt] = contrib + totals[tgt] if tgt in totals else contrib
                if not any_term:
                    continue
                ncol = int(mask.sum())
                clean += ncol
                contaminated += space.osc_dim - ncol
                if not totals or ncol == 0:
                    continue
                scale = max(scale, tmax)
                for tgt in sorted(totals):
                    sub = totals[tgt][:, mask]
                    if sub.size:
                        best_abs = max(best_abs, float(np.abs(sub).max()))
        sc = max(1.0, scale)
        res = CheckResult(name, anchor, best_abs / sc, best_abs, clean, contaminated, sc,
                          (time.perf_counter() - t0) * 1000, tol)
        return res


# ---------------------------------------------------------------------------
# E1 relations

def _g_coeffs(q: Sequence[complex]) -> list[complex]:
    """g(z,w) = z^3 sum_k g_k (w/z)^k."""
    q1, q2, q3 = q
    return [1, -(q1 + q2 + q3), q1 * q2 + q1 * q3 + q2 * q3, -q1 * q2 * q3]


def _g_swapped(q):
    """g(w,z) = z^3 sum_k h_k (w/z)^k."""
    g = _g_coeffs(q)
    return g[::-1]


def e1_relation_terms(e: Current, f: Current, psip: Current, psim: Current, C: complex,
                      qv: Sequence[complex], psi0: complex = 1) -> dict[str, list[Term]]:
    """All defining relations as lists of terms (variables z=0, w=1, z3=2)."""
    q1, q2, q3 = qv
    kappa1 = (1 - q1) * (1 - q2) * (1 - q3)
    g = _g_coeffs(qv)
    gs = _g_swapped(qv)
    rel: dict[str, list[Term]] = {}
    # g(C^{(1+-1)/2} z, w) psi^+-(z) e(w) + g(w, C^{..} z) e(w) psi(z) = 0
    for sign, psi in ((1, psip), (-1, psim)):
        a = C if sign > 0 else 1
        # g(a z, w) = a^3 z^3 sum g_k (w/(a z))^k
        c1 = [g[k] * a ** (3 - k) for k in range(4)]
        c2 = [gs[k] * a ** (3 - k) for k in range(4)]  # g(w, a z)
        rel[f"psi{'+' if sign > 0 else '-'} e"] = [
            Term(1, RatioSeries.poly((3, 0), (-1, 1), c1), [(psi, 0, 0j), (e, 1, 0j)]),
            Term(1, RatioSeries.poly((3, 0), (-1, 1), c2), [(e, 1, 0j), (psi, 0, 0j)]),
        ]
        b = 1 if sign > 0 else C
        # g(w, b z) psi f + g(b z, w) f psi = 0
        d1 = [gs[k] * b ** (3 - k) for k in range(4)]
        d2 = [g[k] * b ** (3 - k) for k in range(4)]
        rel[f"psi{'+' if sign > 0 else '-'} f"] = [
            Term(1, RatioSeries.poly((3, 0), (-1, 1), d1), [(psi, 0, 0j), (f, 1, 0j)]),
            Term(1, RatioSeries.poly((3, 0), (-1, 1), d2), [(f, 1, 0j), (psi, 0, 0j)]),
        ]
    # [e(z), f(w)] = kappa1^{-1} (delta(C w/z) psi+(w) - delta(C z/w) psi-(z))
    rel["[e,f]"] = [
        Term(1, RatioSeries.monomial((0, 0)), [(e, 0, 0j), (f, 1, 0j)]),
        Term(-1, RatioSeries.monomial((0, 0)), [(f, 1, 0j), (e, 0, 0j)]),
        Term(-1 / kappa1, RatioSeries.delta((-1, 1), C), [(psip, 1, 0j)]),
        Term(1 / kappa1, RatioSeries.delta((1, -1), C), [(psim, 0, 0j)]),
    ]
    rel["ee"] = [
        Term(1, RatioSeries.poly((3, 0), (-1, 1), g), [(e, 0, 0j), (e, 1, 0j)]),
        Term(1, RatioSeries.poly((3, 0), (-1, 1), gs), [(e, 1, 0j), (e, 0, 0j)]),
    ]
    rel["ff"] = [
        Term(1, RatioSeries.poly((3, 0), (-1, 1), gs), [(f, 0, 0j), (f, 1, 0j)]),
        Term(1, RatioSeries.poly((3, 0), (-1, 1), g), [(f, 1, 0j), (f, 0, 0j)]),
    ]
    for name, X in (("serre e", e), ("serre f", f)):
        terms = []
        for perm in itertools.permutations(range(3)):
            # z_{perm0} z_{perm1}^2 [X(z_{perm0}), [X(z_{perm1}), X(z_{perm2})]]
            a, b, c = perm
            mono = [0, 0, 0]
            mono[a] += 1
            mono[b] += 2
            ser = RatioSeries.monomial(tuple(mono))
            for sgn, order in ((1, (a, b, c)), (-1, (a, c, b)), (-1, (b, c, a)), (1, (c, b, a))):
                terms.append(Term(sgn, ser, [(X, v, 0j) for v in order]))
        rel[name] = terms
    return rel


def verify_e1(space, e, f, psip, psim, C: complex, qv, tol: float = 1e-8,
              window: int | None = None, serre_window: int | None = None,
              prefix: str = "") -> list[CheckResult]:
    rels = e1_relation_terms(e, f, psip, psim, C, qv)
    out = []
    for name, terms in rels.items():
        nv = 3 if name.startswith("serre") else 2
        w = serre_window if nv == 3 and serre_window is not None else window
        chk = RelationChecker(space, nv, terms, window=w)
        out.append(chk.run(prefix + name, "E1 defining relations", tol))
    return out


# ---------------------------------------------------------------------------
# contraction closed forms as displayed formulas

def closed_forms(ctx: ParameterContext) -> dict[str, tuple[complex, complex, complex]]:
    """Displayed contraction formulas z^{zpow} (a x; q1)_inf / (b x; q1)_inf as (zpow, a, b)."""
    b, bc = ctx.beta, ctx.beta_check
    qa = ctx.qpow
    q1 = ctx.q1
    out = {}
    for tag, beta in (("Phi", b), ("Phic", bc)):
        h = (qa((1 + beta) / 2), qa((1 - beta) / 2))
        out[f"{tag}* {tag}"] = (-beta, *h)
        out[f"{tag} {tag}*"] = (-beta, *h)
    out["Phi Phi"] = (b, qa(1 - b), q1)
    out["Phi* Phi*"] = (b, 1, qa(b))
    out["Phic Phic"] = (bc, 1, qa(bc))
    out["Phic* Phic*"] = (bc, qa(1 - bc), q1)
    return out


def qbinomial_series(a: complex, b: complex, q: complex, order: int) -> np.ndarray:
    """Taylor coefficients of (a x; q)_inf / (b x; q)_inf via the q-binomial theorem."""
    out = np.zeros(order + 1, dtype=complex)
    ratio = a / b
    num = den = 1 + 0j
    for n in range(order + 1):
        out[n] = num / den * b ** n
        num *= 1 - ratio * q ** n
        den *= 1 - q ** (n + 1)
    return out


# ---------------------------------------------------------------------------
# exact vector representation V_1(v)

class VectorSpace:
    """Basis |i, v>, |i| <= W; one state per sector, no truncation in degree."""

    def __init__(self, ctx: ParameterContext, v: complex, W: int = 6):
        self.ctx = ctx
        self.v = v
        self.W = W
        self.sectors = tuple((i,) for i in range(-W, W + 1))
        self.sector_index = {s: n for n, s in enumerate(self.sectors)}
        self.D = 0
        self.osc_dim = 1
        self.osc_degree = np.zeros(1, dtype=int)
        self.factors = ()

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    def index(self, s: int) -> int:
        return self.sectors[s][0]


class VectorCurrent(Current):
    """X(z)|i> = sum_m coeff(i, m) z^m |i + step>."""

    def __init__(self, space: VectorSpace, step: int, coeff: Callable[[int, int], complex],
                 mode_lo: float = -math.inf, mode_hi: float = math.inf):
        self.space = space
        self.step = step
        self.coeff = coeff
        self.parity = 0
        self.lo, self.hi = mode_lo, mode_hi

    def target(self, s):
        i = self.space.index(s) + self.step
        return self.space.sector_index.get((i,))

    def deg_offset(self, s):
        return 0

    def mode(self, s, m):
        if self.target(s) is None:
            return sp.csr_matrix((1, 1), dtype=complex), np.zeros(1, dtype=bool)
        if m < self.lo or m > self.hi:
            return sp.csr_matrix((1, 1), dtype=complex), np.ones(1, dtype=bool)
        return sp.csr_matrix(np.array([[self.coeff(self.space.index(s), m)]], dtype=complex)), np.ones(1, dtype=bool)

    def mode_range(self, s):
        return range(-10 ** 6, 10 ** 6)

    def shift_bounds(self, s):
        return (self.lo, self.hi)


def vector1_currents(ctx: ParameterContext, space: VectorSpace, order: int = 80):
    """e, f, psi+, psi- of V_1(v) as exact mode maps."""
    v = space.v
    q1, q2, q3 = ctx.q1, ctx.q2, ctx.q3
    s1 = ctx.s1
    nrm = 1 / (1 / s1 - s1)
    from .qkernel import omega_series
    wp = omega_series(q2, q3, 1, order)
    wm = omega_series(q2, q3, -1, order)

    def e_c(i, m):
        return nrm * (q1 ** i * v) ** (-m)

    def f_c(i, m):
        return nrm * (q1 ** (i - 1) * v) ** (-m)

    def pp_c(i, m):
        # omega^+(x), x = q1^i v / z: term x^k -> z^{-k}
        return wp[-m] * (q1 ** i * v) ** (-m) if m <= 0 else 0

    def pm_c(i, m):
        k = -m
        return wm[k] * (q1 ** i * v) ** k if m >= 0 else 0

    e = VectorCurrent(space, 1, e_c)
    f = VectorCurrent(space, -1, f_c)
    psip = VectorCurrent(space, 0, pp_c, mode_hi=0, mode_lo=-order)
    psim = VectorCurrent(space, 0, pm_c, mode_lo=0, mode_hi=order)
    return e, f, psip, psim


def verify_e1_rep(ctx: ParameterContext, rep: str = "fock2", D: int = 5, tol: float = 1e-8,
                  window: int | None = None, serre_window: int | None = None,
                  lam: complex = 0.3, lam2: complex = -0.45, vector_window: int = 6) -> list[CheckResult]:
    """E1 relations on a named representation: vector1, fock1, fock2, fock3, fock22."""
    qv = (ctx.q1, ctx.q2, ctx.q3)
    if rep == "vector1":
        space = VectorSpace(ctx, ctx.qpow(lam), vector_window)
        e, f, pp, pm = vector1_currents(ctx, space)
        return verify_e1(space, e, f, pp, pm, 1.0, qv, tol=tol,
                         window=window if window is not None else 6,
                         serre_window=serre_window if serre_window is not None else 3,
                         prefix="V1: ")
    if rep.startswith("fock") and len(rep) == 5:
        layout = [Factor(color=int(rep[4]), lam=lam)]
        action = fock_action(ctx, layout, 0)
        pre = f"F{rep[4]}: "
    elif rep == "fock22":
        layout = [Factor(color=2, lam=lam), Factor(color=2, lam=lam2)]
        action = coproduct_action(ctx, layout, fock_action(ctx, layout, 0), fock_action(ctx, layout, 1))
        pre = "F2xF2: "
    else:
        raise ValueError(f"unknown representation {rep!r}")
    from .fockspace import enumerate_slices
    space = enumerate_slices(ctx, layout, D, 0)
    cur = [build_current(space, t) for t in (action.e, action.f, action.psip, action.psim)]
    return verify_e1(space, *cur, ctx.mono(action.level), qv, tol=tol, window=window,
                     serre_window=serre_window if serre_window is not None else min(D, 4),
                     prefix=pre)


# ---------------------------------------------------------------------------
# comparing vertex-operator sums as operators

def compare_currents(space, lhs: Current, rhs: Current, name: str, anchor: str = "",
                     tol: float = 1e-8, window: int | None = None) -> CheckResult:
    """lhs(z) - rhs(z) = 0 coefficientwise."""
    terms = [Term(1, RatioSeries.monomial((0,)), [(lhs, 0, 0j)]),
             Term(-1, RatioSeries.monomial((0,)), [(rhs, 0, 0j)])]
    return RelationChecker(space, 1, terms, window=window).run(name, anchor, tol)


def phik_constants(ctx: ParameterContext) -> dict[str, complex]:
    """A, B and their checked analogues."""
    q1, q2 = ctx.q1, ctx.q2
    b, bc = ctx.beta, ctx.beta_check
    ls2 = ctx.log_q2 / 2
    lsc2 = ctx.log_qc2 / 2
    P = lambda x: qpoch(x, q1)  # noqa: E731
    return {
        "A": cmath.exp(-b / 2 * ls2) * P(q1) / P(1 / q2),
        "Ac": cmath.exp(bc / 2 * lsc2) * P(q1) / P(ctx.qc2),
        "B": cmath.exp(b / 2 * ls2) * P(q1 * q2) / P(q1),
        "Bc": cmath.exp(-bc / 2 * lsc2) * P(q1 / ctx.qc2) / P(q1),
    }


def phik_identities(ctx: ParameterContext, r: int, D: int = 5, W: int = 1,
                    lam: complex = 0.3, tol: float = 1e-8) -> list[CheckResult]:
    """The eight product/residue identities expressing Phi Phi* pairs through k_r."""
    from .fockspace import enumerate_slices
    M = ctx.M
    consts = phik_constants(ctx)
    out = []
    for checked in (False, True):
        fac = Factor(color=2, checked=checked, zero_modes=True, lam=lam)
        layout = [fac]
        space = enumerate_slices(ctx, layout, D, W)
        spec = standard_specs(ctx, layout, 0)
        act = fock_action(ctx, layout, 0)
        Phi, Phs = spec["Phi"], spec["Phi*"]
        q1 = fac.q_monos(M)[0]
        s2 = fac.s_monos(M)[1]
        q1r = (r * q1[0], r * q1[1])
        kp = fused_k(ctx, layout, act, r, 1)
        km = fused_k(ctx, layout, act, r, -1)
        tag = "checked " if checked else ""

        def at(A: VO, B: VO, a: Mono, b: Mono) -> list[VO]:
            # A(a z) B(b z) as a vertex operator in z
            order, vo = fuse(ctx, layout, A, B, (b[0] - a[0], b[1] - a[1]))
            return [vo.scaled(ctx, a)] if order == 0 else []

        def res(A: VO, B: VO, a: Mono, b: Mono) -> list[VO]:
            # Res_{w=z} A(a z) B(b w) dw/w
            vo = residue_dxx(ctx, layout, A, B, (b[0] - a[0], b[1] - a[1]))
            return [vo.scaled(ctx, a)]

        if not checked:
            A, B = consts["A"], consts["B"]
            pairs = [
                ("Phi*(s2 z) Phi(q1^r z) = A k-_r", at(Phs, Phi, s2, q1r), vosum_times(km, A)),
                ("Phi(s2 z) Phi*(q1^r z) = A k+_r", at(Phi, Phs, s2, q1r), vosum_times(kp, A)),
                ("Res Phi(q1^r z) Phi*(s2 w) = -B k-_r", res(Phi, Phs, q1r, s2), vosum_times(km, -B)),
                ("Res Phi*(q1^r z) Phi(s2 w) = -B k+_r", res(Phs, Phi, q1r, s2), vosum_times(kp, -B)),
            ]
        else:
            A, B = consts["Ac"], consts["Bc"]
            pairs = [
                ("Phic(qc1^r z) Phic*(sc2 z) = Ac kc-_r", at(Phi, Phs, q1r, s2), vosum_times(km, A)),
                ("Phic*(qc1^r z) Phic(sc2 z) = Ac kc+_r", at(Phs, Phi, q1r, s2), vosum_times(kp, A)),
                ("Res Phic*(sc2 z) Phic(qc1^r w) = -Bc kc-_r", res(Phs, Phi, s2, q1r), vosum_times(km, -B)),
                ("Res Phic(sc2 z) Phic*(qc1^r w) = -Bc kc+_r", res(Phi, Phs, s2, q1r), vosum_times(kp, -B)),
            ]
        for name, lhs, rhs in pairs:
            L = build_current(space, lhs)
            R = build_current(space, rhs)
            res_ = compare_currents(space, L, R, f"{tag}{name} (r={r})", "Phi Phi* through k_r", tol)
            out.append(res_)
    return out


def contraction_table(ctx: ParameterContext, order: int = 12, tol: float = 1e-10) -> list[CheckResult]:
    """Oscillator-pairing contractions of Phi, Phi*, checked versions vs closed forms."""
    out = []
    forms = closed_forms(ctx)
    for checked in (False, True):
        fac = Factor(color=2, checked=checked, zero_modes=True)
        layout = [fac]
        spec = standard_specs(ctx, layout, 0)
        X = {"Phi": spec["Phi"], "Phi*": spec["Phi*"]}
        for a, b in (("Phi", "Phi"), ("Phi*", "Phi*"), ("Phi*", "Phi"), ("Phi", "Phi*")):
            key = (a.replace("Phi", "Phic") + " " + b.replace("Phi", "Phic")) if checked else f"{a} {b}"
            t0 = time.perf_counter()
            con = contraction(ctx, layout, X[a], X[b], order=order + 1)
            oracle = con.pairing_series(order).coeffs
            zpow, fa, fb = forms[key]
            fcoef = qbinomial_series(fa, fb, ctx.q1, order)
            lat = con.closed_series(ctx, order).coeffs
            scale = max(1.0, float(np.max(np.abs(fcoef))))
            err = max(float(np.max(np.abs(oracle - fcoef))), float(np.max(np.abs(lat - fcoef)))) / scale
            err = max(err, abs(con.zpow - zpow))
            out.append(CheckResult(f"<{key}>", "contraction formulas", err, err * scale,
                                   order + 1, 0, scale, (time.perf_counter() - t0) * 1000, tol))
    return out


def commutation_kernels(ctx: ParameterContext, samples: int = 20, seed: int = 7,
                        tol: float = 1e-10) -> list[CheckResult]:
    """<X(z)Y(w)> / <Y(w)X(z)> against (w/z)^b theta ratios at sampled points."""
    from .qkernel import theta
    rng = np.random.default_rng(seed)
    out = []
    for checked in (False, True):
        fac = Factor(color=2, checked=checked, zero_modes=True)
        layout = [fac]
        spec = standard_specs(ctx, layout, 0)
        b = ctx.beta_check if checked else ctx.beta
        Phi, Phs = spec["Phi"], spec["Phi*"]
        c_xy = contraction(ctx, layout, Phi, Phs)
        c_yx = contraction(ctx, layout, Phs, Phi)
        worst = 0.0
        t0 = time.perf_counter()
        for _ in range(samples):
            z = cmath.exp(complex(rng.uniform(-0.5, 0.5), rng.uniform(-np.pi, np.pi)))
            w = z * cmath.exp(complex(rng.uniform(-0.4, 0.4), rng.uniform(-np.pi, np.pi)))
            # z^{zpow} carried by the left operator's variable; logs on principal branches
            lhs = c_xy.value(ctx, w / z)[1] * cmath.exp(c_xy.zpow * cmath.log(z))
            lhs /= c_yx.value(ctx, z / w)[1] * cmath.exp(c_yx.zpow * cmath.log(w))
            x = w / z
            rhs = cmath.exp(b * (cmath.log(w) - cmath.log(z))) * theta(ctx.qpow((1 + b) / 2) * x, ctx.q1) \
                / theta(ctx.qpow((1 - b) / 2) * x, ctx.q1)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        name = "Phic(z) Phic*(w) exchange kernel" if checked else "Phi(z) Phi*(w) exchange kernel"
        out.append(CheckResult(name, "Phi Phi* commutation", worst, worst, samples, 0, 1.0,
                               (time.perf_counter() - t0) * 1000, tol))
    return out


# ---------------------------------------------------------------------------
# fused k currents: coproduct and vanishing on F1

def delta_k_check(ctx: ParameterContext, D: int = 4, rmax: int = 2, tol: float = 1e-8,
                  lam: complex = 0.3, lam2: complex = -0.45) -> list[CheckResult]:
    """k_r^{+-} of the coproduct action on F2 x F2 against the two-factor sum
    k^+_r = sum k^+_{r1}(C2 z) k^+_{r2}(q1^{r1} z), k^-_r = sum k^-_{r1}(q1^{r2} z) k^-_{r2}(C1 z)."""
    from .fockspace import enumerate_slices
    lay = [Factor(color=2, lam=lam), Factor(color=2, lam=lam2)]
    space = enumerate_slices(ctx, lay, D, 0)
    A, B = fock_action(ctx, lay, 0), fock_action(ctx, lay, 1)
    act = coproduct_action(ctx, lay, A, B)
    q1 = A.q1
    out = []
    for r in range(rmax + 1):
        for sign in (1, -1):
            direct = fused_k(ctx, lay, act, r, sign)
            split = []
            for r1 in range(r + 1):
                r2 = r - r1
                if sign > 0:
                    a = vosum_scaled(ctx, fused_k(ctx, lay, A, r1, 1), B.level)
                    b = vosum_scaled(ctx, fused_k(ctx, lay, B, r2, 1), mono_scale(q1, r1))
                else:
                    a = vosum_scaled(ctx, fused_k(ctx, lay, A, r1, -1), mono_scale(q1, r2))
                    b = vosum_scaled(ctx, fused_k(ctx, lay, B, r2, -1), A.level)
                split += multiply_sums(ctx, lay, a, b)
            out.append(compare_currents(space, build_current(space, direct), build_current(space, split),
                                        f"Delta k{'+' if sign > 0 else '-'}_{r}",
                                        "coproduct of fused k currents", tol))
    return out


def k_on_fock_check(ctx: ParameterContext, D: int = 4, rmax: int = 3, tol: float = 1e-8,
                    lam: complex = 0.3) -> list[CheckResult]:
    """On F1: k_r^{+-} = 0 for r >= 2, and k_0^{+-}(s1 z) + k_1^{-+}(z) = 0."""
    from .fockspace import enumerate_slices
    lay = [Factor(color=1, lam=lam)]
    space = enumerate_slices(ctx, lay, D, 0)
    act = fock_action(ctx, lay, 0)
    out = []
    zero = ZeroCurrent(space)
    for r in range(2, rmax + 1):
        for sign in (1, -1):
            vos = fused_k(ctx, lay, act, r, sign)
            cur = build_current(space, vos) if vos else zero
            out.append(compare_currents(space, cur, zero, f"F1: k{'+' if sign > 0 else '-'}_{r} = 0",
                                        "k currents on F1", tol))
    for sign in (1, -1):
        k0 = act.k0p if sign > 0 else act.k0m
        lhs = vosum_scaled(ctx, k0, act.s1) + fused_k(ctx, lay, act, 1, -sign)
        out.append(compare_currents(space, build_current(space, lhs), zero,
                                    f"F1: k0{'+' if sign > 0 else '-'}(s1 z) + k1{'-' if sign > 0 else '+'}(z) = 0",
                                    "k currents on F1", tol))
    return out
