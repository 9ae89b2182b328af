"""Vertex-operator representations of the shifted algebras A_{M,N} and
coefficient-level checks of their defining relations.

A representation is an ``AmnRep``: two E1 actions (plain and checked) and the
currents X^+_i, X^-_i, all given as sums of vertex operators on one layout of
boson factors.  The relations are turned into lists of ``Term`` objects and
handed to the generic ``RelationChecker``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .fockspace import Current, Factor, GradedSpace, ScaledCurrent, enumerate_slices
from .qkernel import (Mono, ParameterContext, expand_rational, gamma_pair, mono_add,
                      mono_neg, mono_scale, monos, omega_factors, qpoch)
from .vertexcalc import (VO, CheckResult, E1Action, RatioSeries, RelationChecker, Term,
                         build_current, compare_currents, coproduct_action, fock_action,
                         fuse_sums, fused_k, fused_product, merge_results,
                         multiply_sums, standard_specs, vosum_scaled, vosum_times)

HALF = Fraction(1, 2)


class IntegralityError(ValueError):
    """Zero-mode exponents of a product of intertwiners are not integral."""


def as_index(i) -> Fraction:
    f = Fraction(i).limit_denominator(2)
    if abs(float(f) - float(i)) > 1e-12:
        raise ValueError(f"index {i} is not a half-integer")
    return f


def mono_pow(m: Mono, x) -> Mono:
    """m^x for a (half-)integer x; the result must stay on the lattice."""
    a, b = m[0] * Fraction(x), m[1] * Fraction(x)
    if a.denominator != 1 or b.denominator != 1:
        raise ValueError(f"{m}^{x} leaves the lattice")
    return (int(a), int(b))


def half_mono(m: Mono) -> Mono:
    return mono_pow(m, HALF)


# ---------------------------------------------------------------------------
# parameters as seen by one algebra

@dataclass(frozen=True)
class AlgebraView:
    """Which lattice monomials play q1, q2, q3 and their checked partners.

    Automorphisms that exchange the parameter families (swap of plain and
    checked, M -> -M) only change the view."""

    ctx: ParameterContext
    M: int
    N: int
    q: tuple
    qc: tuple

    @staticmethod
    def standard(ctx: ParameterContext, M: int | None = None, N: int | None = None) -> "AlgebraView":
        M = ctx.M if M is None else M
        N = M - 1 if N is None else N
        m = monos(M)
        return AlgebraView(ctx, M, N, (m["q1"], m["q2"], m["q3"]), (m["qc1"], m["qc2"], m["qc3"]))

    def swapped(self) -> "AlgebraView":
        # checked N: C = s1^N Cc  <=>  Cc = sc1^N C, so N is unchanged
        return replace(self, q=self.qc, qc=self.q)

    def negated(self) -> "AlgebraView":
        return replace(self, M=-self.M, q=(self.q[0], self.q[2], self.q[1]),
                       qc=(self.qc[0], self.qc[2], self.qc[1]))

    def with_N(self, N: int) -> "AlgebraView":
        return replace(self, N=N)

    # values -------------------------------------------------------------
    def val(self, m: Mono) -> complex:
        return self.ctx.mono(m)

    def log(self, m: Mono) -> complex:
        return self.ctx.mono_log(m)

    @property
    def s1(self) -> Mono:
        return half_mono(self.q[0])

    @property
    def sc1(self) -> Mono:
        return half_mono(self.qc[0])

    @property
    def q1(self) -> complex:
        return self.val(self.q[0])

    @property
    def q2(self) -> complex:
        return self.val(self.q[1])

    @property
    def q3(self) -> complex:
        return self.val(self.q[2])

    @property
    def qc2(self) -> complex:
        return self.val(self.qc[1])

    @property
    def qc3(self) -> complex:
        return self.val(self.qc[2])

    @property
    def log_q2(self) -> complex:
        return self.log(self.q[1])

    @property
    def log_q3(self) -> complex:
        return self.log(self.q[2])

    @property
    def log_qc2(self) -> complex:
        return self.log(self.qc[1])

    @property
    def log_qc3(self) -> complex:
        return self.log(self.qc[2])

    @property
    def beta(self) -> complex:
        return -self.log(self.q[2]) / self.log(self.q[0])

    @property
    def beta_check(self) -> complex:
        return -self.log(self.qc[2]) / self.log(self.qc[0])

    def is_standard(self) -> bool:
        return self == AlgebraView.standard(self.ctx, self.M, self.N) and self.M == self.ctx.M


# ---------------------------------------------------------------------------
# representations

@dataclass
class AmnRep:
    """A representation of A_{M,N} (or of its relabelled variant A^-_{M,N})."""

    ctx: ParameterContext
    view: AlgebraView
    layout: tuple
    space: GradedSpace
    act: E1Action
    actc: E1Action
    xp: Callable[[Fraction], list]
    xm: Callable[[Fraction], list]
    plus_half: bool
    minus_half: bool
    tag: str = ""
    log_shift: complex = 0j
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return self.view.M

    @property
    def N(self) -> int:
        return self.view.N

    @property
    def variant(self) -> str:
        return "minus" if self.minus_half else "standard"

    @property
    def parity(self) -> int:
        return 1 if self.M % 2 == 0 else 0

    def plus_index(self, base: int) -> Fraction:
        return Fraction(base) + (HALF if self.plus_half else 0)

    def minus_index(self, base: int) -> Fraction:
        return Fraction(base) + (HALF if self.minus_half else 0)

    def check_index(self, sign: int, i) -> Fraction:
        i = as_index(i)
        half = self.plus_half if sign > 0 else self.minus_half
        if (i.denominator == 2) != half:
            raise ValueError(f"X^{'+' if sign > 0 else '-'}_{i} is not on this index lattice")
        return i

    def levels(self) -> tuple[complex, complex]:
        return self.ctx.mono(self.act.level), self.ctx.mono(self.actc.level)

    def level_defect(self) -> float:
        """|C - s1^N Cc| for the representation's levels."""
        C, Cc = self.levels()
        return abs(C - self.view.val(mono_scale(self.view.s1, self.N)) * Cc)

    # currents ------------------------------------------------------------
    def current(self, key, vos: Sequence[VO], parity: int = 0) -> Current:
        got = self._cache.get(key)
        if got is None:
            got = build_current(self.space, list(vos), parity)
            if self.log_shift:
                got = ScaledCurrent(got, self.log_shift)
            self._cache[key] = got
        return got

    def Xp(self, i) -> Current:
        i = self.check_index(1, i)
        return self.current(("xp", i), self.xp(i), self.parity)

    def Xm(self, i) -> Current:
        i = self.check_index(-1, i)
        return self.current(("xm", i), self.xm(i), self.parity)

    def e1(self, checked: bool) -> dict[str, Current]:
        a = self.actc if checked else self.act
        tag = "c" if checked else ""
        return {name: self.current((name + tag,), getattr(a, name))
                for name in ("e", "f", "psip", "psim", "K")}

    def k_product(self, sign: int, r: int, rc: int, shift: Mono, shift_c: Mono) -> Current:
        """k_r^{+-}(shift z) kc_rc^{+-}(shift_c z) at one point."""
        key = ("kk", sign, r, rc, shift, shift_c)
        if key not in self._cache:
            a = vosum_scaled(self.ctx, fused_k(self.ctx, self.layout, self.act, r, sign), shift)
            b = vosum_scaled(self.ctx, fused_k(self.ctx, self.layout, self.actc, rc, sign), shift_c)
            return self.current(key, multiply_sums(self.ctx, self.layout, a, b))
        return self._cache[key]


def _zero_mode_parity(layout: Sequence[Factor], M: int):
    if M % 2:
        return None
    idx = next((f for f, fac in enumerate(layout) if fac.zero_modes), None)
    if idx is None:
        return None
    return lambda sec: sec[idx]


def _space(ctx, layout, D, W):
    sp = enumerate_slices(ctx, layout, D, W, "diagonal")
    sp.parity_rule = _zero_mode_parity(layout, ctx.M)
    return sp


def minus_normalization(view: AlgebraView) -> complex:
    """(s2 sc2)^{M/2} (q2^{-1}; q1)_M, the constant in front of Phi* Phi*_check."""
    M = view.M
    s2sc2 = mono_add(half_mono(view.q[1]), half_mono(view.qc[1]))
    pref = cmath.exp(view.log(s2sc2) * M / 2)
    return pref * complex(qpoch(1 / view.q2, view.q1, M))


def build_F22(ctx: ParameterContext, lam: complex, lam_c: complex, D: int = 4, W: int = 2,
              tol: float = 1e-9) -> AmnRep:
    """X^+_i = Phi(z) Phi_check(q1^i z), X^-_i = Phi*(z) Phi*_check(q1^-i z) times a constant."""
    M = ctx.M
    defect = lam + lam_c - (M + 1) / 2
    if abs(defect - round(defect.real)) > tol:
        raise IntegralityError(f"lam + lam_check - (M+1)/2 = {defect} is not an integer")
    layout = (Factor(2, False, True, lam, "F2"), Factor(2, True, True, lam_c, "F2c"))
    view = AlgebraView.standard(ctx)
    space = _space(ctx, layout, D, W)
    act = fock_action(ctx, layout, 0)
    actc = fock_action(ctx, layout, 1)
    sp0, sp1 = standard_specs(ctx, layout, 0), standard_specs(ctx, layout, 1)
    q1 = view.q[0]
    norm = minus_normalization(view)

    def xp(i):
        return multiply_sums(ctx, layout, [sp0["Phi"]], [sp1["Phi"].scaled(ctx, mono_pow(q1, i))])

    def xm(i):
        prod = multiply_sums(ctx, layout, [sp0["Phi*"]], [sp1["Phi*"].scaled(ctx, mono_pow(q1, -i))])
        return vosum_times(prod, norm)

    return AmnRep(ctx, view, layout, space, act, actc, xp, xm,
                  plus_half=(view.N % 2 == 1), minus_half=False, tag=f"F22(M={M})")


# ---------------------------------------------------------------------------
# lazily extended rational coefficients

class RationalCoefficients:
    """k -> coefficient of x^k in const * prod (1 - c x)^e expanded at 0 or infinity."""

    def __init__(self, factors, direction: str, const: complex = 1, order: int = 16):
        self.factors = list(factors)
        self.direction = direction
        self.const = const
        self.top = sum(e for _, e in self.factors) if direction == "infinity" else 0
        self._extend(order)

    def _extend(self, order: int) -> None:
        self.order = order
        self.series = expand_rational(self.factors, self.direction, order, "x", self.const)

    def __call__(self, k: int) -> complex:
        if self.direction == "zero":
            if k < 0:
                return 0
            need = k
        else:
            if k > self.top:
                return 0
            need = self.top - k
        if need > self.order:
            self._extend(max(need, 2 * self.order))
        return self.series[k]

    @property
    def bounds(self) -> tuple[float, float]:
        if self.direction == "zero":
            return 0, math.inf
        return -math.inf, self.top


def scaled_series(coeffs: RationalCoefficients, mono, ratio, c: complex = 1,
                  const: complex = 1) -> RatioSeries:
    """sum_k coeffs(k) c^k x^(mono + k ratio): the expansion evaluated at c * ratio."""
    lc = cmath.log(c)
    klo, khi = coeffs.bounds
    return RatioSeries(tuple(mono), tuple(ratio), lambda k: coeffs(k) * cmath.exp(k * lc),
                       klo, khi, const)


def omega_coeffs(q2: complex, q3: complex, sign: int) -> RationalCoefficients:
    return RationalCoefficients(omega_factors(q2, q3), "zero" if sign > 0 else "infinity")


# ---------------------------------------------------------------------------
# (R1): the E1 and checked-E1 adjoint actions on X

_U, _Z = 0, 1   # u carries the E1 current, z the X current
_R = (-1, 1)    # series in z/u


def _delta(c: complex) -> RatioSeries:
    return RatioSeries.delta(_R, c)


def _omega(view: AlgebraView, checked: bool, sign: int, c: complex) -> RatioSeries:
    q2, q3 = (view.qc2, view.qc3) if checked else (view.q2, view.q3)
    return scaled_series(omega_coeffs(q2, q3, sign), (0, 0), _R, c)


def _one():
    return RatioSeries.monomial((0, 0))


def r1_relations(rep: AmnRep, ip, im) -> dict[str, list[list[Term]]]:
    """All fourteen families for X^+_ip and X^-_im as '= 0' term lists (variables u, z)."""
    v = rep.view
    C, Cc = rep.levels()
    L1 = v.log(v.q[0])
    n1 = 1 / (1 / v.val(v.s1) - v.val(v.s1))
    nc1 = 1 / (1 / v.val(v.sc1) - v.val(v.sc1))
    E, Ec = rep.e1(False), rep.e1(True)
    ip, im = rep.check_index(1, ip), rep.check_index(-1, im)
    Xp, Xm = rep.Xp(ip), rep.Xm(im)
    q1p = cmath.exp(L1 * float(ip))
    q1m = cmath.exp(L1 * float(im))
    rel: dict[str, list[list[Term]]] = {}

    def op(X, var=_Z, lsc=0j):
        return (X, var, lsc)

    # K X K^-1 = const X, written as K X - const X K with K on u
    kp = cmath.exp(v.beta / 2 * v.log_q2)
    kpc = cmath.exp(v.beta_check / 2 * v.log_qc2)
    for name, Kc, cst in (("(KX+-)", E["K"], kp), ("(KcX+-)", Ec["K"], kpc)):
        rel[name] = [
            [Term(1, _one(), [op(Kc, _U), op(Xp)]), Term(-cst, _one(), [op(Xp), op(Kc, _U)])],
            [Term(1, _one(), [op(Kc, _U), op(Xm)]), Term(-1 / cst, _one(), [op(Xm), op(Kc, _U)])],
        ]
    # plain E1 on X^+
    rel["(psiX+)"] = [
        [Term(1, _one(), [op(E["psip"], _U), op(Xp)]),
         Term(-1, _omega(v, False, 1, 1 / C), [op(Xp), op(E["psip"], _U)])],
        [Term(1, _one(), [op(E["psim"], _U), op(Xp)]),
         Term(-1, _omega(v, False, -1, 1), [op(Xp), op(E["psim"], _U)])],
    ]
    rel["(eX+)"] = [[
        Term(1, _one(), [op(E["e"], _U), op(Xp)]),
        Term(-1, _omega(v, False, -1, 1), [op(Xp), op(E["e"], _U)]),
        Term(-n1, _delta(1), [op(rep.Xp(ip - 1), _Z, L1)]),
    ]]
    rel["(fX+)"] = [[
        Term(1, _one(), [op(E["f"], _U), op(Xp)]),
        Term(-1, _one(), [op(Xp), op(E["f"], _U)]),
        Term(-n1, _delta(1 / (v.q1 * C)), [op(rep.Xp(ip + 1), _Z, -L1), op(E["psip"], _U)]),
    ]]
    # checked E1 on X^+
    rel["(psicX+)"] = [
        [Term(1, _one(), [op(Ec["psip"], _U), op(Xp)]),
         Term(-1, _omega(v, True, 1, q1p / Cc), [op(Xp), op(Ec["psip"], _U)])],
        [Term(1, _one(), [op(Ec["psim"], _U), op(Xp)]),
         Term(-1, _omega(v, True, -1, q1p), [op(Xp), op(Ec["psim"], _U)])],
    ]
    rel["(ecX+)"] = [[
        Term(1, _one(), [op(Ec["e"], _U), op(Xp)]),
        Term(-1, _omega(v, True, -1, q1p), [op(Xp), op(Ec["e"], _U)]),
        Term(-nc1, _delta(q1p), [op(rep.Xp(ip - 1))]),
    ]]
    rel["(fcX+)"] = [[
        Term(1, _one(), [op(Ec["f"], _U), op(Xp)]),
        Term(-1, _one(), [op(Xp), op(Ec["f"], _U)]),
        Term(-nc1, _delta(q1p * v.q1 / Cc), [op(rep.Xp(ip + 1)), op(Ec["psip"], _U)]),
    ]]
    # plain E1 on X^-:  X psi = omega psi X
    rel["(psiX-)"] = [
        [Term(1, _one(), [op(Xm), op(E["psip"], _U)]),
         Term(-1, _omega(v, False, 1, 1), [op(E["psip"], _U), op(Xm)])],
        [Term(1, _one(), [op(Xm), op(E["psim"], _U)]),
         Term(-1, _omega(v, False, -1, 1 / C), [op(E["psim"], _U), op(Xm)])],
    ]
    rel["(eX-)"] = [[
        Term(1, _one(), [op(Xm), op(E["e"], _U)]),
        Term(-1, _one(), [op(E["e"], _U), op(Xm)]),
        Term(-n1, _delta(1 / (C * v.q1)), [op(E["psim"], _U), op(rep.Xm(im - 1), _Z, -L1)]),
    ]]
    rel["(fX-)"] = [[
        Term(1, _one(), [op(Xm), op(E["f"], _U)]),
        Term(-1, _omega(v, False, 1, 1), [op(E["f"], _U), op(Xm)]),
        Term(-n1, _delta(1), [op(rep.Xm(im + 1), _Z, L1)]),
    ]]
    # checked E1 on X^-
    rel["(psicX-)"] = [
        [Term(1, _one(), [op(Xm), op(Ec["psip"], _U)]),
         Term(-1, _omega(v, True, 1, 1 / q1m), [op(Ec["psip"], _U), op(Xm)])],
        [Term(1, _one(), [op(Xm), op(Ec["psim"], _U)]),
         Term(-1, _omega(v, True, -1, 1 / (q1m * Cc)), [op(Ec["psim"], _U), op(Xm)])],
    ]
    rel["(ecX-)"] = [[
        Term(1, _one(), [op(Xm), op(Ec["e"], _U)]),
        Term(-1, _one(), [op(Ec["e"], _U), op(Xm)]),
        Term(-nc1, _delta(v.q1 / (q1m * Cc)), [op(Ec["psim"], _U), op(rep.Xm(im - 1))]),
    ]]
    rel["(fcX-)"] = [[
        Term(1, _one(), [op(Xm), op(Ec["f"], _U)]),
        Term(-1, _omega(v, True, 1, 1 / q1m), [op(Ec["f"], _U), op(Xm)]),
        Term(-nc1, _delta(1 / q1m), [op(rep.Xm(im + 1))]),
    ]]
    return rel


def _window(rep: AmnRep, window: int | None) -> int:
    return rep.space.D + 2 if window is None else window


def verify_R1(rep: AmnRep, indices: Sequence[int] = (0,), tol: float = 1e-8,
              window: int | None = None) -> list[CheckResult]:
    """One merged result per relation family.  ``indices`` are integers moved
    onto the X^+ and X^- index lattices of the representation."""
    W = _window(rep, window)
    exps = [(a, b) for a in range(-W, W + 1) for b in range(-W, W + 1)]
    parts: dict[str, list[CheckResult]] = {}
    for a in indices:
        ip, im = rep.plus_index(a), rep.minus_index(a)
        i = f"{ip},{im}"
        for name, groups in r1_relations(rep, ip, im).items():
            for terms in groups:
                chk = RelationChecker(rep.space, 2, terms, window=W)
                parts.setdefault(name, []).append(chk.run(f"{name} i={i}", "", tol, exps))
    return [merge_results(f"R1 {name} [{rep.tag}]", "adjoint action on X currents", ps, tol)
            for name, ps in parts.items()]


# ---------------------------------------------------------------------------
# (R2): quadratic X X relations

def r2_terms(rep: AmnRep, sign: int, i, j) -> list[Term]:
    """gamma relation between X^s_i(z) and X^s_j(w) for i <= j (variables z, w)."""
    i, j = as_index(i), as_index(j)
    if j < i:
        raise ValueError("r2_terms expects i <= j")
    gp = gamma_pair(int(2 * i), int(2 * j), rep.view)
    fwd, bwd = gp.forward, gp.backward
    fc = gp.forward_coeffs()
    sgn = (-1) ** int(i - j - 1)
    X = rep.Xp if sign > 0 else rep.Xm
    Xi, Xj = X(i), X(j)
    if sign > 0:
        lhs = RatioSeries.poly((fwd.zpow, 0), (-1, 1), fc)
        rc = RationalCoefficients(bwd.factors, "zero", bwd.const)
        rhs = scaled_series(rc, (0, bwd.wpow), (1, -1))
        return [Term(1, lhs, [(Xi, 0, 0j), (Xj, 1, 0j)]),
                Term(-sgn, rhs, [(Xj, 1, 0j), (Xi, 0, 0j)])]
    # gamma_{i,j}(w,z) polynomial in z/w; gamma_{j,i}(z,w) expanded for |z/w| << 1,
    # i.e. the w/z form at w/z -> infinity
    lhs = RatioSeries.poly((0, fwd.zpow), (1, -1), fc)
    rc = RationalCoefficients(bwd.factors, "infinity", bwd.const)
    rhs = scaled_series(rc, (bwd.wpow, 0), (-1, 1))
    return [Term(1, lhs, [(Xi, 0, 0j), (Xj, 1, 0j)]),
            Term(-sgn, rhs, [(Xj, 1, 0j), (Xi, 0, 0j)])]


def verify_R2(rep: AmnRep, indices: Sequence[int] = (-1, 0, 1, 2), tol: float = 1e-8,
              window: int | None = None) -> list[CheckResult]:
    """X^+X^+ and X^-X^- over all ordered pairs drawn from ``indices`` (shifted
    onto the half-integer lattice when needed); i > j is the same relation as (j, i)."""
    W = _window(rep, window)
    out = []
    for sign in (1, -1):
        shift = HALF if (rep.plus_half if sign > 0 else rep.minus_half) else 0
        idx = [Fraction(a) + shift for a in indices]
        parts = []
        for a, i in enumerate(idx):
            for j in idx[a:]:
                chk = RelationChecker(rep.space, 2, r2_terms(rep, sign, i, j), window=W)
                parts.append(chk.run(f"X{'+' if sign > 0 else '-'} i={i} j={j}", "", tol))
        out.append(merge_results(f"R2 X{'+' if sign > 0 else '-'}X{'+' if sign > 0 else '-'} "
                                 f"[{rep.tag}]", "quadratic X relations", parts, tol))
    return out


# ---------------------------------------------------------------------------
# (R3): the X^+ X^- bracket

def r3_terms(rep: AmnRep, i, j) -> list[Term]:
    i, j = rep.check_index(1, i), rep.check_index(-1, j)
    v = rep.view
    C, _ = rep.levels()
    q1, qc1 = v.q[0], v.qc[0]
    Xp, Xm = rep.Xp(i), rep.Xm(j)
    terms = [Term(1, RatioSeries.monomial((0, 0)), [(Xp, 0, 0j), (Xm, 1, 0j)]),
             Term((-1) ** v.M, RatioSeries.monomial((0, 0)), [(Xm, 1, 0j), (Xp, 0, 0j)])]
    psi0 = rep.act.psi0
    total = i + j + Fraction(v.N, 2)
    if total.denominator == 1 and total >= 0:
        for r in range(int(total) + 1):
            rc = int(total) - r
            K = rep.k_product(1, r, rc, mono_scale(q1, -r), mono_add(mono_scale(qc1, -rc), mono_pow(q1, -j)))
            c = C * v.val(mono_scale(q1, -r))
            terms.append(Term(-psi0 ** float(-i), RatioSeries.delta((-1, 1), c), [(K, 1, 0j)]))
    total = -i - j + Fraction(v.N, 2)
    if total.denominator == 1 and total >= 0:
        for r in range(int(total) + 1):
            rc = int(total) - r
            K = rep.k_product(-1, r, rc, mono_scale(q1, -r), mono_add(mono_scale(qc1, -rc), mono_pow(q1, i)))
            c = C * v.val(mono_scale(q1, -r))
            terms.append(Term((-1) ** v.N * psi0 ** float(-j), RatioSeries.delta((1, -1), c), [(K, 0, 0j)]))
    return terms


def r3_pairs(rep: AmnRep, max_sum: int = 2) -> list[tuple[Fraction, Fraction]]:
    """Index pairs with |i + j| <= max_sum (half-integer sums up to max_sum - 1/2)."""
    out = []
    for a in range(-max_sum - 1, max_sum + 2):
        i = rep.plus_index(a)
        for b in range(-max_sum - 2, max_sum + 3):
            j = rep.minus_index(b)
            s = i + j
            if abs(s) <= max_sum and abs(i) <= max_sum and abs(j) <= max_sum + 1:
                out.append((i, j))
    # one representative pair per value of i + j is enough to cover every k-product
    seen, keep = set(), []
    for i, j in sorted(out, key=lambda p: (p[0] + p[1], abs(p[0]))):
        s = i + j
        if s not in seen or len([p for p in keep if p[0] + p[1] == s]) < 2:
            seen.add(s)
            keep.append((i, j))
    return keep


DELTA_ROUNDOFF = 1e-13


def verify_R3(rep: AmnRep, pairs: Sequence | None = None, tol: float = 1e-8,
              window: int | None = None, delta_relative: bool = False) -> list[CheckResult]:
    """The X+ X- bracket.  With ``delta_relative`` a second record measures the
    residual against the largest clean coefficient of the delta-function side
    instead of the largest single term.  The commutator terms can exceed the
    delta side by many orders, which hides a wrong overall normalization in
    the default measure; pairs without a delta side are left out of it."""
    W = _window(rep, window)
    pairs = r3_pairs(rep) if pairs is None else pairs
    parts, rel = [], []
    for i, j in pairs:
        terms = r3_terms(rep, i, j)
        chk = RelationChecker(rep.space, 2, terms, window=W)
        res = chk.run(f"R3 i={i} j={j}", "", tol)
        parts.append(res)
        if delta_relative and len(terms) > 2:
            side = RelationChecker(rep.space, 2, terms[2:], window=W).run("delta side", "", tol)
            if side.abs_residual > 0:
                r = res.abs_residual / side.abs_residual
                # cancellation among terms of size res.scale leaves ~eps * scale behind
                floor = DELTA_ROUNDOFF * res.scale / side.abs_residual
                rel.append(CheckResult(res.name, "", r, res.abs_residual, res.clean,
                                       res.contaminated, side.abs_residual, res.ms, tol,
                                       floor=floor))
    out = [merge_results(f"R3 [X+,X-] [{rep.tag}]", "X+ X- bracket", parts, tol)]
    if delta_relative:
        out.append(merge_results(f"R3 [X+,X-] relative to the delta side [{rep.tag}]",
                                 "X+ X- bracket", rel, tol))
    return out


def verify_relations(rep: AmnRep, r1_indices=(0,), r2_indices=(-1, 0, 1, 2), r3_pairs_=None,
                     tol: float = 1e-8, window: int | None = None) -> list[CheckResult]:
    return (verify_R1(rep, r1_indices, tol, window) + verify_R2(rep, r2_indices, tol, window)
            + verify_R3(rep, r3_pairs_, tol, window))


# ---------------------------------------------------------------------------
# recursions expressing X_{i+-1} through X_i

def recursion_identities(rep: AmnRep, ip, im) -> dict[str, tuple[list, list, list]]:
    """name -> (direct X, route through E1, route through checked E1)."""
    ctx, lay, v = rep.ctx, rep.layout, rep.view
    a, ac = rep.act, rep.actc
    q1 = v.q[0]
    C, Cc = a.level, ac.level
    c1, cc1 = a.c1, ac.c1
    out = {}
    ip, im = rep.check_index(1, ip), rep.check_index(-1, im)
    X = rep.xp(ip)
    # X+_{i-1}(z) = c1 X+_i(q1^-1 z) e(q1^-1 z) = cc1 X+_i(z) ec(q1^i z)
    r1 = vosum_times(vosum_scaled(ctx, fuse_sums(ctx, lay, X, a.e, (0, 0)), mono_neg(q1)), c1)
    r2 = vosum_times(fuse_sums(ctx, lay, X, ac.e, mono_pow(q1, ip)), cc1)
    out["X+_(i-1)"] = (rep.xp(ip - 1), r1, r2)
    # X+_{i+1}(z) = -c1 f(C^-1 z) psi+(C^-1 z)^-1 X+_i(q1 z)
    #             = -cc1 fc(b z) psic+(b z)^-1 X+_i(z),  b = Cc^-1 q1^{i+1}
    r1 = fused_product(ctx, lay, [a.f, a.psip_inv(), X], [(0, 0), (0, 0), mono_add(q1, C)])
    r1 = vosum_times(vosum_scaled(ctx, r1, mono_neg(C)), -c1)
    b = mono_add(mono_neg(Cc), mono_pow(q1, ip + 1))
    r2 = fused_product(ctx, lay, [ac.f, ac.psip_inv(), X], [(0, 0), (0, 0), mono_neg(b)])
    r2 = vosum_times(vosum_scaled(ctx, r2, b), -cc1)
    out["X+_(i+1)"] = (rep.xp(ip + 1), r1, r2)
    Y = rep.xm(im)
    # X-_{i-1}(z) = c1 X-_i(q1 z) psi-(C^-1 z)^-1 e(C^-1 z)
    #             = cc1 X-_i(z) psic-(b z)^-1 ec(b z),  b = Cc^-1 q1^{1-i}
    t = mono_neg(mono_add(C, q1))
    r1 = fused_product(ctx, lay, [Y, a.psim_inv(), a.e], [(0, 0), t, t])
    r1 = vosum_times(vosum_scaled(ctx, r1, q1), c1)
    b = mono_add(mono_neg(Cc), mono_pow(q1, 1 - im))
    r2 = vosum_times(fused_product(ctx, lay, [Y, ac.psim_inv(), ac.e], [(0, 0), b, b]), cc1)
    out["X-_(i-1)"] = (rep.xm(im - 1), r1, r2)
    # X-_{i+1}(z) = -c1 f(q1^-1 z) X-_i(q1^-1 z) = -cc1 fc(q1^-i z) X-_i(z)
    r1 = vosum_times(vosum_scaled(ctx, fuse_sums(ctx, lay, a.f, Y, (0, 0)), mono_neg(q1)), -c1)
    t = mono_pow(q1, -im)
    r2 = fused_product(ctx, lay, [ac.f, Y], [(0, 0), mono_neg(t)])
    r2 = vosum_times(vosum_scaled(ctx, r2, t), -cc1)
    out["X-_(i+1)"] = (rep.xm(im + 1), r1, r2)
    return out


def verify_recursions(rep: AmnRep, base: int = 0, tol: float = 1e-8) -> list[CheckResult]:
    """The eight recursion identities (two routes for each of four shifts)."""
    out = []
    ids = recursion_identities(rep, rep.plus_index(base), rep.minus_index(base))
    for name, (direct, via, via_c) in ids.items():
        parity = rep.parity
        lhs = rep.current(("rec", name, "d"), direct, parity)
        for route, vos in (("E1", via), ("checked E1", via_c)):
            rhs = rep.current(("rec", name, route), vos, parity)
            out.append(compare_currents(rep.space, lhs, rhs,
                                        f"recursion {name} via {route} [{rep.tag}]",
                                        "X index recursions", tol))
    return out


# ---------------------------------------------------------------------------
# automorphisms

def _scale_action(ctx, act: E1Action, lam: Mono) -> E1Action:
    """Every current of ``act`` evaluated at lam z (K is a constant)."""
    s = lambda xs: vosum_scaled(ctx, xs, lam)  # noqa: E731
    return replace(act, e=s(act.e), f=s(act.f), psip=s(act.psip), psim=s(act.psim),
                   k0p=s(act.k0p), k0m=s(act.k0m))


def apply_automorphism(rep: AmnRep, kind: str, param=None) -> AmnRep:
    """Transport a representation along one of the structural maps.

    kinds: 'shift' (all currents at a z, param = a), 'scale' (X^+ -> c X^+,
    X^- -> X^-/c), 'relabel' (i -> i+1 with the checked currents at q1 z),
    'swap' (exchange plain and checked algebras), 'negate' (M -> -M with q2, q3
    exchanged), 'unshift' (A^-_{M,N} -> A_{M,N} by half-index relabelling)."""
    ctx = rep.ctx
    base = dict(_cache={})
    if kind == "shift":
        a = complex(param)
        return replace(rep, log_shift=rep.log_shift + cmath.log(a), tag=rep.tag + "|shift", **base)
    if kind == "scale":
        c = complex(param)
        xp, xm = rep.xp, rep.xm
        return replace(rep, xp=lambda i: vosum_times(xp(i), c), xm=lambda i: vosum_times(xm(i), 1 / c),
                       tag=rep.tag + "|scale", **base)
    if kind == "relabel":
        q1 = rep.view.q[0]
        xp, xm = rep.xp, rep.xm
        return replace(rep, xp=lambda i: xp(i + 1), xm=lambda i: xm(i - 1),
                       actc=_scale_action(ctx, rep.actc, q1), tag=rep.tag + "|relabel", **base)
    if kind == "swap":
        v = rep.view
        q1 = v.q[0]
        xp, xm = rep.xp, rep.xm
        return replace(rep, view=v.swapped(), act=rep.actc, actc=rep.act,
                       xp=lambda i: vosum_scaled(ctx, xp(i), mono_pow(q1, -i)),
                       xm=lambda i: vosum_scaled(ctx, xm(i), mono_pow(q1, i)),
                       tag=rep.tag + "|swap", **base)
    if kind == "negate":
        return replace(rep, view=rep.view.negated(), tag=rep.tag + "|negate", **base)
    if kind == "unshift":
        if not rep.minus_half:
            raise ValueError("unshift applies to A^- representations")
        sc = mono_neg(rep.view.s1)
        xp, xm = rep.xp, rep.xm
        return replace(rep, xp=lambda i: xp(i - HALF), xm=lambda i: xm(i + HALF),
                       plus_half=not rep.plus_half, minus_half=False,
                       actc=_scale_action(ctx, rep.actc, sc), tag=rep.tag + "|unshift", **base)
    raise ValueError(f"unknown automorphism {kind!r}")


# ---------------------------------------------------------------------------
# extension by F1 factors

def _embed(vos: Sequence[VO], offset: int, total: int) -> list[VO]:
    return [v.embed(offset, total) for v in vos]


def embed_action(a: E1Action, offset: int, total: int) -> E1Action:
    e = lambda xs: _embed(xs, offset, total)  # noqa: E731
    return replace(a, e=e(a.e), f=e(a.f), psip=e(a.psip), psim=e(a.psim),
                   k0p=e(a.k0p), k0m=e(a.k0m), K=e(a.K))


def extend_by_F1(rep: AmnRep, case: int, lam: complex, D: int | None = None,
                 W: int | None = None) -> AmnRep:
    """Tensor a representation with one (plain or checked) color-1 Fock module.

    case 1: F1 on the left; case 2: F1 on the right; cases 3, 4: the checked
    F1 on the left or right.  Cases 2 and 4 shift the X^- index lattice."""
    if not rep.view.is_standard():
        raise ValueError("extensions are built on standard views only")
    ctx, v = rep.ctx, rep.view
    checked = case in (3, 4)
    left = case in (1, 3)
    new_fac = Factor(1, checked, False, lam, ("F1c" if checked else "F1") + f"({lam:g})")
    n_old = len(rep.layout)
    total = n_old + 1
    off, idx = (1, 0) if left else (0, n_old)
    layout = (new_fac,) + tuple(rep.layout) if left else tuple(rep.layout) + (new_fac,)
    D = rep.space.D if D is None else D
    W = max(abs(n) for sec in rep.space.sectors for n in sec) if W is None else W
    if not any(f.zero_modes for f in layout):
        W = 0
    space = _space(ctx, layout, D, W)
    new = fock_action(ctx, layout, idx)
    act, actc = embed_action(rep.act, off, total), embed_action(rep.actc, off, total)
    if checked:
        actc = coproduct_action(ctx, layout, new, actc) if left else coproduct_action(ctx, layout, actc, new)
    else:
        act = coproduct_action(ctx, layout, new, act) if left else coproduct_action(ctx, layout, act, new)
    oxp = lambda i: _embed(rep.xp(i), off, total)  # noqa: E731
    oxm = lambda i: _embed(rep.xm(i), off, total)  # noqa: E731
    q1, s1 = v.q[0], v.s1
    sc = lambda xs, m: vosum_scaled(ctx, xs, m)  # noqa: E731
    mul = lambda A, B: multiply_sums(ctx, layout, A, B)  # noqa: E731
    k0m, k0p = new.k0m, new.k0p
    k1m = fused_k(ctx, layout, new, 1, -1)
    k1p = fused_k(ctx, layout, new, 1, 1)
    plus_half, minus_half = rep.plus_half, rep.minus_half
    if case == 1:
        def xp(i):
            return (mul(k0m, sc(oxp(i - HALF), s1))
                    + mul(sc(k1m, mono_neg(q1)), sc(oxp(i + HALF), mono_neg(s1))))
        xm = lambda i: vosum_times(oxm(i), -1)  # noqa: E731
        plus_half = not plus_half
    elif case == 2:
        xp = oxp

        def xm(i):
            return (mul(sc(oxm(i + HALF), s1), k0p)
                    + mul(sc(oxm(i - HALF), mono_neg(s1)), sc(k1p, mono_neg(q1))))
        minus_half = not minus_half
    elif case == 3:
        def xp(i):
            return (mul(sc(k0m, mono_pow(q1, i)), oxp(i - HALF))
                    + mul(sc(k1m, mono_pow(q1, i + 1)), oxp(i + HALF)))
        xm = lambda i: vosum_times(oxm(i), -1)  # noqa: E731
        plus_half = not plus_half
    elif case == 4:
        xp = oxp

        def xm(i):
            return (mul(oxm(i + HALF), sc(k0p, mono_pow(q1, -i)))
                    + mul(oxm(i - HALF), sc(k1p, mono_pow(q1, 1 - i))))
        minus_half = not minus_half
    else:
        raise ValueError("case must be 1, 2, 3 or 4")
    return AmnRep(ctx, v.with_N(v.N + 1), layout, space, act, actc, xp, xm, plus_half,
                  minus_half, f"{rep.tag}+case{case}")


def build_F111222(ctx: ParameterContext, m: int, mc: int, a: int, b: int,
                  lams: Sequence[complex], lams_c: Sequence[complex], D: int = 4,
                  W: int = 2) -> AmnRep:
    """F1 x ... F2 (slot a) ... x F1 on the plain side, the same with checked
    modules (F2 in slot b) on the checked side, built from F22 by extensions."""
    if not (1 <= a <= m and 1 <= b <= mc) or len(lams) != m or len(lams_c) != mc:
        raise ValueError("inconsistent slot data")
    rep = build_F22(ctx, lams[a - 1], lams_c[b - 1], D, W)
    for k in range(a + 1, m + 1):
        rep = extend_by_F1(rep, 2, lams[k - 1])
    for k in range(a - 1, 0, -1):
        rep = extend_by_F1(rep, 1, lams[k - 1])
    for k in range(b + 1, mc + 1):
        rep = extend_by_F1(rep, 4, lams_c[k - 1])
    for k in range(b - 1, 0, -1):
        rep = extend_by_F1(rep, 3, lams_c[k - 1])
    rep.tag = f"F(m={m},mc={mc},a={a},b={b},M={ctx.M})"
    return rep


def expected_variant(m: int, mc: int, a: int, b: int) -> str:
    return "standard" if (m - a + mc - b) % 2 == 0 else "minus"


# ---------------------------------------------------------------------------
# worked examples

def four_term_check(ctx: ParameterContext, v1: complex, v2: complex, lam: complex, lam_c: complex,
                   D: int = 3, W: int = 1, tol: float = 1e-8) -> tuple[list[CheckResult], AmnRep]:
    """Three plain factors at M = -1: the extended X^+ against the explicit
    four-term sum, and X^- against the bare product of the dual intertwiners.
    Returns the checks and the representation."""
    if ctx.M != -1:
        raise ValueError("this example lives at M = -1")
    rep = build_F22(ctx, lam, lam_c, D, W)
    rep = extend_by_F1(rep, 1, v2)
    rep = extend_by_F1(rep, 1, v1)
    lay = rep.layout
    s1, q1 = rep.view.s1, rep.view.q[0]
    A0, A1 = fock_action(ctx, lay, 0), fock_action(ctx, lay, 1)
    k0 = lambda A, m: vosum_scaled(ctx, A.k0m, m)  # noqa: E731
    k1 = lambda A, m: vosum_scaled(ctx, fused_k(ctx, lay, A, 1, -1), m)  # noqa: E731
    sp2, sp3 = standard_specs(ctx, lay, 2), standard_specs(ctx, lay, 3)
    phi = lambda m: [sp2["Phi"].scaled(ctx, m)]  # noqa: E731
    mul = lambda *xs: _chain(ctx, lay, xs)  # noqa: E731
    o = (0, 0)
    s1m = mono_neg(s1)
    phi3 = (mul(k0(A0, o), k0(A1, s1), phi(mono_scale(s1, 2)))
            + mul(k0(A0, o), k1(A1, s1m), phi(o))
            + mul(k1(A0, mono_neg(q1)), k0(A1, s1m), phi(o))
            + mul(k1(A0, mono_neg(q1)), k1(A1, mono_scale(s1, -3)), phi(mono_scale(s1, -2))))
    out = []
    for i in (0, 1):
        i = Fraction(i)
        explicit = mul(phi3, [sp3["Phi"].scaled(ctx, mono_pow(q1, i))])
        out.append(compare_currents(rep.space, rep.Xp(i), rep.current(("ex2", i), explicit, rep.parity),
                                    f"four-term X+_{i} explicit form", "three plain factors", tol))
        bare = mul([sp2["Phi*"]], [sp3["Phi*"].scaled(ctx, mono_pow(q1, -i))])
        bare = vosum_times(bare, minus_normalization(rep.view))
        out.append(compare_currents(rep.space, rep.Xm(i), rep.current(("ex2m", i), bare, rep.parity),
                                    f"four-term X-_{i} explicit form", "three plain factors", tol))
    return out, rep


def _chain(ctx, lay, parts):
    acc = parts[0]
    for p in parts[1:]:
        acc = multiply_sums(ctx, lay, acc, p)
    return acc


def ef_sum_rep(ctx: ParameterContext, v1: complex, v: complex, vb1: complex, lam_c: complex,
                 D: int = 3, W: int = 1) -> AmnRep:
    """F1 x F2 x F1 on the plain side with a checked F2 at M = -1 (an A^- module)."""
    if ctx.M != -1:
        raise ValueError("this example lives at M = -1")
    rep = build_F22(ctx, v, lam_c, D, W)
    rep = extend_by_F1(rep, 1, v1)
    rep = extend_by_F1(rep, 2, vb1)
    rep.tag = "EF-sum(n=1)"
    return rep


def ef_sum_check(rep: AmnRep, i=HALF, tol: float = 1e-8, window: int | None = None) -> list[CheckResult]:
    """E(z) = X^+_i(z), F(z) = X^-_{-i}(z): quadratic relations and the
    ordinary commutator with its delta-sum right-hand side."""
    v = rep.view
    i = as_index(i)
    E, F = rep.Xp(i), rep.Xm(-i)
    q3 = v.q3
    W = _window(rep, window)
    z_q3w = RatioSeries.poly((1, 0), (-1, 1), [1, -q3])    # z - q3 w
    w_q3z = RatioSeries.poly((1, 0), (-1, 1), [-q3, 1])    # w - q3 z
    C, _ = rep.levels()
    c = v.q1 * v.val(half_mono(v.q[1]))
    q1i = v.val(mono_pow(v.q[0], i))
    kp = rep.k_product(1, 0, 0, (0, 0), mono_pow(v.q[0], i))
    km = rep.k_product(-1, 0, 0, (0, 0), mono_pow(v.q[0], i))
    rels = {
        "EE": [Term(1, z_q3w, [(E, 0, 0j), (E, 1, 0j)]), Term(1, w_q3z, [(E, 1, 0j), (E, 0, 0j)])],
        "FF": [Term(1, w_q3z, [(F, 0, 0j), (F, 1, 0j)]), Term(1, z_q3w, [(F, 1, 0j), (F, 0, 0j)])],
        "[E,F]": [Term(1, RatioSeries.monomial((0, 0)), [(E, 0, 0j), (F, 1, 0j)]),
                  Term(-1, RatioSeries.monomial((0, 0)), [(F, 1, 0j), (E, 0, 0j)]),
                  Term(-1, RatioSeries.delta((-1, 1), c), [(kp, 1, 0j)]),
                  Term(1, RatioSeries.delta((1, -1), c), [(km, 0, 0j)])],
    }
    del q1i, C
    out = []
    for name, terms in rels.items():
        chk = RelationChecker(rep.space, 2, terms, window=W)
        out.append(chk.run(f"E/F delta sum {name} i={i}", "E/F form of one A^- module", tol))
    return out


# ---------------------------------------------------------------------------
# the quantum toroidal gl(1|1) image

class HPoly:
    """Homogeneous polynomial z^deg sum_k c_k (w/z)^k in two variables."""

    def __init__(self, coeffs: Sequence[complex]):
        self.c = np.asarray(coeffs, dtype=complex)

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def subs(self, a: complex = 1, b: complex = 1) -> "HPoly":
        """p(a z, b w)."""
        d = self.deg
        return HPoly([ck * a ** (d - k) * b ** k for k, ck in enumerate(self.c)])

    def swap(self) -> "HPoly":
        """p(w, z)."""
        return HPoly(self.c[::-1])

    def __mul__(self, other: "HPoly") -> "HPoly":
        return HPoly(np.convolve(self.c, other.c))

    def series(self) -> RatioSeries:
        return RatioSeries.poly((self.deg, 0), (-1, 1), list(self.c))


def gl11_g(view: AlgebraView, i: int, j: int) -> HPoly:
    g1 = view.val(view.s1)
    g2 = view.val(mono_add(view.s1, view.q[1]))
    if (i, j) == (0, 1):
        return HPoly([1, -(g1 + 1 / g1), 1])
    if (i, j) == (1, 0):
        # (w - g2 z)(w - g2^-1 z) = z^2 (1 - (g2 + 1/g2) t + t^2)
        return HPoly([1, -(g2 + 1 / g2), 1])
    return HPoly([1])


def gl11_rep(ctx: ParameterContext, lam: complex, lam_c: complex, v1: complex, D: int = 3,
             W: int = 1) -> AmnRep:
    """A_{0,0} on F1 x F2 with a checked F2 (built by one left extension)."""
    if ctx.M != 0:
        raise ValueError("the gl(1|1) image uses M = 0")
    rep = extend_by_F1(build_F22(ctx, lam, lam_c, D, W), 1, v1)
    rep.tag = "gl11"
    return rep


def gl11_currents(rep: AmnRep, f1_sign: int = -1) -> dict[str, Current]:
    """Images of the gl(1|1) currents.  F1 -> f1_sign * X^-_0; the sign -1 is
    the one compatible with the X^+ X^- bracket at i = j = 0 (see the ledger)."""
    ctx, lay, v = rep.ctx, rep.layout, rep.view
    a, ac = rep.act, rep.actc
    q1 = v.q[0]
    g1m = mono_neg(v.s1)
    C = a.level
    psi0 = a.psi0
    par = rep.parity

    def kk(sign, shift):
        A = a.k0p if sign > 0 else a.k0m
        B = ac.k0p if sign > 0 else ac.k0m
        return multiply_sums(ctx, lay, vosum_scaled(ctx, A, shift),
                             vosum_scaled(ctx, B, mono_add(shift, q1)))

    def inv(vos):
        if len(vos) != 1:
            raise ValueError("inverse of a sum of vertex operators")
        return [vos[0].inverse_normal()]

    cur = {}
    for sign, tag in ((1, "+"), (-1, "-")):
        A = a.k0p if sign > 0 else a.k0m
        B = ac.k0p if sign > 0 else ac.k0m
        cur["Psi1" + tag] = rep.current(("gl", "Psi1" + tag), multiply_sums(ctx, lay, A, B))
        cur["Psi0" + tag] = rep.current(("gl", "Psi0" + tag),
                                        vosum_times(inv(kk(sign, g1m)), psi0 ** sign))
    cur["E1"] = rep.Xp(rep.plus_index(0))
    cur["F1"] = rep.current(("gl", "F1", f1_sign),
                            vosum_times(rep.xm(rep.minus_index(0)), f1_sign), par)
    # E0(z) = psi0^-1 (k0^- kc0^-(q1 .))^-1(g1^-1 z) X^-_{-1}(C g1^-1 z)
    e0 = fused_product(ctx, lay, [inv(kk(-1, (0, 0))), rep.xm(rep.minus_index(-1))], [(0, 0), C])
    cur["E0"] = rep.current(("gl", "E0"), vosum_times(vosum_scaled(ctx, e0, g1m), 1 / psi0), par)
    # F0(z) = X^+_1(C g1^-1 z) psi0 (k0^+ kc0^+(q1 .))^-1(g1^-1 z)
    f0 = fused_product(ctx, lay, [rep.xp(rep.plus_index(1)), inv(kk(1, (0, 0)))], [(0, 0), mono_neg(C)])
    cur["F0"] = rep.current(("gl", "F0"), vosum_times(vosum_scaled(ctx, f0, mono_add(C, g1m)), psi0), par)
    cur["K"] = rep.current(("K",), a.K)
    return cur


def gl11_relations(rep: AmnRep, f1_sign: int = -1) -> dict[str, list[Term]]:
    v = rep.view
    cur = gl11_currents(rep, f1_sign)
    C, _ = rep.levels()
    one = RatioSeries.monomial((0, 0))
    g = {(i, j): gl11_g(v, i, j) for i in (0, 1) for j in (0, 1)}
    Z, Wv = 0, 1
    rel: dict[str, list[Term]] = {}
    P = lambda i, s: cur[f"Psi{i}{'+' if s > 0 else '-'}"]  # noqa: E731
    E = lambda i: cur[f"E{i}"]  # noqa: E731
    F = lambda i: cur[f"F{i}"]  # noqa: E731
    for i in (0, 1):
        for j in (0, 1):
            for s in (1, -1):
                rel[f"Psi{i}{s:+d} Psi{j}{s:+d}"] = [
                    Term(1, one, [(P(i, s), Z, 0j), (P(j, s), Wv, 0j)]),
                    Term(-1, one, [(P(j, s), Wv, 0j), (P(i, s), Z, 0j)])]
            # g_ij(z, C^-1 w) g_ji(C w, z) Psi+_i(z) Psi-_j(w) = g_ji(C^-1 w, z) g_ij(z, C w) Psi-_j(w) Psi+_i(z)
            lhs = g[i, j].subs(1, 1 / C) * g[j, i].swap().subs(1, C)
            rhs = g[j, i].swap().subs(1, 1 / C) * g[i, j].subs(1, C)
            rel[f"Psi{i}+ Psi{j}-"] = [Term(1, lhs.series(), [(P(i, 1), Z, 0j), (P(j, -1), Wv, 0j)]),
                                       Term(-1, rhs.series(), [(P(j, -1), Wv, 0j), (P(i, 1), Z, 0j)])]
            for s in (1, -1):
                a = C if s > 0 else 1
                b = 1 if s > 0 else C
                # g_ij(a z, w) Psi E + g_ji(w, a z) E Psi = 0
                rel[f"Psi{i}{s:+d} E{j}"] = [
                    Term(1, g[i, j].subs(a, 1).series(), [(P(i, s), Z, 0j), (E(j), Wv, 0j)]),
                    Term(-1, g[j, i].swap().subs(a, 1).series(), [(E(j), Wv, 0j), (P(i, s), Z, 0j)])]
                # g_ji(w, b z) Psi F = g_ij(b z, w) F Psi
                rel[f"Psi{i}{s:+d} F{j}"] = [
                    Term(1, g[j, i].swap().subs(b, 1).series(), [(P(i, s), Z, 0j), (F(j), Wv, 0j)]),
                    Term(-1, g[i, j].subs(b, 1).series(), [(F(j), Wv, 0j), (P(i, s), Z, 0j)])]
            rel[f"E{i} E{j}"] = [Term(1, g[i, j].series(), [(E(i), Z, 0j), (E(j), Wv, 0j)]),
                                 Term(1, g[j, i].swap().series(), [(E(j), Wv, 0j), (E(i), Z, 0j)])]
            rel[f"F{i} F{j}"] = [Term(1, g[j, i].swap().series(), [(F(i), Z, 0j), (F(j), Wv, 0j)]),
                                 Term(1, g[i, j].series(), [(F(j), Wv, 0j), (F(i), Z, 0j)])]
            terms = [Term(1, one, [(E(i), Z, 0j), (F(j), Wv, 0j)]),
                     Term(1, one, [(F(j), Wv, 0j), (E(i), Z, 0j)])]
            if i == j:
                terms += [Term(1, RatioSeries.delta((-1, 1), C), [(P(i, 1), Wv, 0j)]),
                          Term(-1, RatioSeries.delta((1, -1), C), [(P(i, -1), Z, 0j)])]
            rel[f"[E{i},F{j}]"] = terms
    # K X K^-1 = q2^{+-beta/2} X
    kq = cmath.exp(v.beta / 2 * v.log_q2)
    for name, cst in (("E0", 1 / kq), ("F0", kq), ("E1", kq), ("F1", 1 / kq)):
        rel[f"K {name}"] = [Term(1, one, [(cur["K"], Z, 0j), (cur[name], Wv, 0j)]),
                            Term(-cst, one, [(cur[name], Wv, 0j), (cur["K"], Z, 0j)])]
    return rel


def gl11_check(rep: AmnRep, tol: float = 1e-8, window: int | None = None,
               names: Sequence[str] | None = None, f1_sign: int = -1) -> list[CheckResult]:
    W = _window(rep, window)
    out = []
    for name, terms in gl11_relations(rep, f1_sign).items():
        if names is not None and name not in names:
            continue
        chk = RelationChecker(rep.space, 2, terms, window=W)
        out.append(chk.run(f"gl(1|1) {name}", "toroidal gl(1|1) image", tol))
    return out
