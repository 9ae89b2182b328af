"""Parameter bookkeeping, q-special functions and truncated Laurent series.

Every multiplicative constant that appears in the oscillator calculus is a
monomial s1^a s2^b in the square roots of q1 and q2.  Such monomials are
stored as integer pairs (``Mono``) so that products and coincidences are
decided exactly; numerical values come from the fixed log branches.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath
import numpy as np

Mono = tuple[int, int]


class PoleError(ArithmeticError):
    pass


class GenericityError(ValueError):
    pass


def mono_add(a: Mono, b: Mono) -> Mono:
    return (a[0] + b[0], a[1] + b[1])


def mono_neg(a: Mono) -> Mono:
    return (-a[0], -a[1])


def mono_scale(a: Mono, k: int) -> Mono:
    return (a[0] * k, a[1] * k)


@dataclass(frozen=True)
class ParameterContext:
    """The tied parameter set (q1,q2,q3), its checked companion and (M,N)."""

    log_q1: complex
    log_q2: complex
    M: int = 0
    N: int = 0
    genericity_bound: int = 24
    tolerance: float = 1e-10
    bits: int = 53

    # derived
    log_q3: complex = field(init=False)
    q1: complex = field(init=False)
    q2: complex = field(init=False)
    q3: complex = field(init=False)
    s1: complex = field(init=False)
    s2: complex = field(init=False)
    s3: complex = field(init=False)
    c1: complex = field(init=False)
    c2: complex = field(init=False)
    c3: complex = field(init=False)
    beta: complex = field(init=False)
    log_qc1: complex = field(init=False)
    log_qc2: complex = field(init=False)
    log_qc3: complex = field(init=False)
    qc1: complex = field(init=False)
    qc2: complex = field(init=False)
    qc3: complex = field(init=False)
    beta_check: complex = field(init=False)

    def __post_init__(self) -> None:
        L1, L2 = complex(self.log_q1), complex(self.log_q2)
        L3 = -(L1 + L2)
        M = self.M
        vals = {
            "log_q3": L3,
            "q1": cmath.exp(L1), "q2": cmath.exp(L2), "q3": cmath.exp(L3),
            "s1": cmath.exp(L1 / 2), "s2": cmath.exp(L2 / 2), "s3": cmath.exp(L3 / 2),
            "beta": -L3 / L1,
            "log_qc1": -L1,
            "log_qc2": L2 + (1 - M) * L1,
            "log_qc3": L3 + (M + 1) * L1,
        }
        vals["qc1"] = cmath.exp(vals["log_qc1"])
        vals["qc2"] = cmath.exp(vals["log_qc2"])
        vals["qc3"] = cmath.exp(vals["log_qc3"])
        vals["beta_check"] = -vals["log_qc3"] / vals["log_qc1"]
        s = (vals["s1"], vals["s2"], vals["s3"])
        vals["c1"] = -(s[1] - 1 / s[1]) * (s[2] - 1 / s[2])
        vals["c2"] = -(s[0] - 1 / s[0]) * (s[2] - 1 / s[2])
        vals["c3"] = -(s[0] - 1 / s[0]) * (s[1] - 1 / s[1])
        for k, v in vals.items():
            object.__setattr__(self, k, v)
        self._validate()

    @classmethod
    def create(cls, q1: complex, q2: complex, M: int = 0, N: int | None = None,
               **kw) -> "ParameterContext":
        if N is None:
            N = M - 1
        return cls(log_q1=cmath.log(q1), log_q2=cmath.log(q2), M=M, N=N, **kw)

    def with_MN(self, M: int, N: int) -> "ParameterContext":
        return ParameterContext(self.log_q1, self.log_q2, M, N, self.genericity_bound,
                                self.tolerance, self.bits)

    def mirrored(self) -> "ParameterContext":
        """Same q1 with q2 and q3 exchanged."""
        return ParameterContext(self.log_q1, self.log_q3, self.M, self.N,
                                self.genericity_bound, self.tolerance, self.bits)

    def _validate(self) -> None:
        tol = self.tolerance
        if abs(self.q1 * self.q2 * self.q3 - 1) > tol:
            raise GenericityError("q1 q2 q3 != 1")
        if abs(self.q1) >= 1:
            raise GenericityError("|q1| must be < 1")
        if abs(self.qc2 - self.q2 * self.q1 ** (1 - self.M)) > tol * max(1, abs(self.qc2)):
            raise GenericityError("checked q2 inconsistent")
        if abs(self.beta + self.beta_check - (self.M + 1)) > tol:
            raise GenericityError("beta + beta_check != M+1")
        B = self.genericity_bound
        for a in range(-B, B + 1):
            for b in range(-B + abs(a), B - abs(a) + 1):
                if (a, b) == (0, 0):
                    continue
                v = a * self.log_q1 + b * self.log_q2
                # |q1^a q2^b - 1| computed stably
                if abs(cmath.exp(v) - 1) <= tol:
                    raise GenericityError(f"q1^{a} q2^{b} = 1 within tolerance")

    # monomials s1^a s2^b -------------------------------------------------
    def mono_log(self, m: Mono) -> complex:
        return (m[0] * self.log_q1 + m[1] * self.log_q2) / 2

    def mono(self, m: Mono) -> complex:
        return cmath.exp(self.mono_log(m))

    def mono_mp(self, m: Mono):
        return mpmath.exp(mpmath.mpc(self.mono_log(m)))

    def qpow(self, alpha: complex) -> complex:
        """q1^alpha on the fixed branch."""
        return cmath.exp(alpha * self.log_q1)

    def as_dict(self) -> dict:
        return {"q1": self.q1, "q2": self.q2, "M": self.M, "N": self.N,
                "tolerance": self.tolerance, "bits": self.bits}


# lattice names for the constants (exponents of s1, s2)
def monos(M: int) -> dict[str, Mono]:
    """Named monomials; checked ones depend on M."""
    return {
        "q1": (2, 0), "q2": (0, 2), "q3": (-2, -2),
        "s1": (1, 0), "s2": (0, 1), "s3": (-1, -1),
        "qc1": (-2, 0), "qc2": (2 - 2 * M, 2), "qc3": (2 * M, -2),
        "sc1": (-1, 0), "sc2": (1 - M, 1), "sc3": (M, -1),
        "one": (0, 0),
    }


# ---------------------------------------------------------------------------
# q-Pochhammer and theta functions

def _tail_bound(tolerance: float) -> float:
    return tolerance * 1e-2


def qpoch(x, q, n: int | float = math.inf, tolerance: float = 1e-17, max_terms: int = 100000):
    """(x;q)_n for integer n or n = inf; works for complex or mpmath scalars."""
    if n == math.inf:
        if abs(q) >= 1:
            raise ValueError("(x;q)_inf needs |q| < 1")
        out = 1
        term = x
        bound = _tail_bound(tolerance)
        for _ in range(max_terms):
            out = out * (1 - term)
            if abs(term) < bound:
                break
            term = term * q
        return out
    n = int(n)
    if n >= 0:
        out = 1
        for k in range(n):
            out = out * (1 - x * q ** k)
        return out
    den = 1
    for k in range(n, 0):
        f = 1 - x * q ** k
        if f == 0:
            raise PoleError("negative-order Pochhammer pole")
        den = den * f
    return 1 / den


def theta(x, q, tolerance: float = 1e-17):
    """theta_q(x) = (x, q/x, q; q)_inf."""
    return qpoch(x, q, math.inf, tolerance) * qpoch(q / x, q, math.inf, tolerance) * \
        qpoch(q, q, math.inf, tolerance)


def theta_bracket(u, ctx: ParameterContext):
    """[u] = q1^{u(u-1)/2} theta_{q1}(q1^u) on the fixed log branch."""
    if ctx.bits > 53:
        with mpmath.workprec(ctx.bits):
            L = mpmath.mpc(ctx.log_q1)
            u = mpmath.mpc(u)
            q = mpmath.exp(L)
            tol = float(mpmath.mpf(2) ** (-ctx.bits))
            return mpmath.exp(u * (u - 1) / 2 * L) * theta(mpmath.exp(u * L), q, tol)
    u = complex(u)
    L = ctx.log_q1
    if abs(u - round(u.real)) < 1e-14:
        return 0j
    return cmath.exp(u * (u - 1) / 2 * L) * theta(cmath.exp(u * L), ctx.q1)


# ---------------------------------------------------------------------------
# truncated Laurent series

class TruncatedSeries:
    """sum_{k=lo}^{hi} coeffs[k-lo] x^{k+alpha}; exponents above hi unknown."""

    __slots__ = ("tag", "alpha", "lo", "coeffs")

    def __init__(self, tag: str, lo: int, coeffs: Sequence[complex], alpha: complex = 0):
        self.tag = tag
        self.alpha = complex(alpha)
        self.lo = int(lo)
        self.coeffs = np.asarray(coeffs, dtype=complex)

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    def __getitem__(self, k: int) -> complex:
        if self.lo <= k <= self.hi:
            return complex(self.coeffs[k - self.lo])
        if k < self.lo:
            return 0j
        raise IndexError(f"exponent {k} beyond retained window")

    def _check(self, other: "TruncatedSeries") -> None:
        if other.tag != self.tag:
            raise ValueError("series in different variables")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        if abs(self.alpha - other.alpha) > 1e-14:
            raise ValueError("alpha mismatch")
        lo = min(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for s in (self, other):
            for k in range(s.lo, hi + 1):
                c[k - lo] += s.coeffs[k - s.lo]
        return TruncatedSeries(self.tag, lo, c, self.alpha)

    def scale(self, c: complex) -> "TruncatedSeries":
        return TruncatedSeries(self.tag, self.lo, self.coeffs * c, self.alpha)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other)
        lo = self.lo + other.lo
        # a term x^k of the product needs all coefficients of both factors up to
        # k - (other's lowest) and k - (self's lowest)
        hi = min(self.hi + other.lo, other.hi + self.lo)
        n = hi - lo + 1
        c = np.convolve(self.coeffs, other.coeffs)[:n]
        return TruncatedSeries(self.tag, lo, c, self.alpha + other.alpha)

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedSeries":
        a0 = self.coeffs[0]
        if abs(a0) == 0:
            raise PoleError("lowest coefficient vanishes")
        n = len(self.coeffs)
        b = np.zeros(n, dtype=complex)
        b[0] = 1 / a0
        for k in range(1, n):
            b[k] = -np.dot(self.coeffs[1:k + 1], b[k - 1::-1][:k]) / a0
        return TruncatedSeries(self.tag, -self.lo, b, -self.alpha)

    def evaluate(self, x: complex) -> complex:
        ks = np.arange(self.lo, self.hi + 1)
        return complex(np.sum(self.coeffs * x ** ks.astype(complex)) * x ** self.alpha)

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.tag}, lo={self.lo}, hi={self.hi}, alpha={self.alpha})"


def one_minus_cx_power(c: complex, e: int, order: int) -> np.ndarray:
    """Coefficients of (1 - c x)^e through x^order, integer e."""
    out = np.zeros(order + 1, dtype=complex)
    if e >= 0:
        for k in range(min(e, order) + 1):
            out[k] = math.comb(e, k) * (-c) ** k
    else:
        m = -e
        for k in range(order + 1):
            out[k] = math.comb(m + k - 1, k) * c ** k
    return out


def expand_rational(factors: Iterable[tuple[complex, int]], direction: str = "zero",
                    order: int = 12, tag: str = "x", const: complex = 1) -> TruncatedSeries:
    """const * prod (1 - c x)^e expanded at x = 0 or at x = infinity.

    ``factors`` holds pairs (c, e) with integer e (+1 numerator, -1 denominator).
    At infinity the result is a series in x with exponents <= shift, stored with
    lo < 0 and truncated ``order`` steps below the leading exponent.
    """
    factors = list(factors)
    if direction == "zero":
        acc = np.zeros(order + 1, dtype=complex)
        acc[0] = const
        for c, e in factors:
            acc = np.convolve(acc, one_minus_cx_power(c, e, order))[:order + 1]
        return TruncatedSeries(tag, 0, acc)
    if direction != "infinity":
        raise ValueError(direction)
    # (1 - c x) = (-c x)(1 - c^{-1} y), y = 1/x
    lead = const
    shift = 0
    acc = np.zeros(order + 1, dtype=complex)
    acc[0] = 1
    for c, e in factors:
        if c == 0:
            continue
        lead *= (-c) ** e
        shift += e
        acc = np.convolve(acc, one_minus_cx_power(1 / c, e, order))[:order + 1]
    # series in y: sum acc[k] y^k x^shift = sum acc[k] x^{shift-k}
    lo = shift - order
    return TruncatedSeries(tag, lo, (acc * lead)[::-1])


def omega_factors(q2: complex, q3: complex) -> list[tuple[complex, int]]:
    return [(q2, 1), (q3, 1), (1, -1), (q2 * q3, -1)]


def omega_value(x: complex, q2: complex, q3: complex) -> complex:
    return (1 - q2 * x) * (1 - q3 * x) / ((1 - x) * (1 - q2 * q3 * x))


def omega_series(q2: complex, q3: complex, sign: int, order: int, tag: str = "x") -> TruncatedSeries:
    """omega^+ (expansion at x = 0) or omega^- (at x = infinity)."""
    return expand_rational(omega_factors(q2, q3), "zero" if sign > 0 else "infinity", order, tag)


# ---------------------------------------------------------------------------
# gamma coefficients of the quadratic X X relations

@dataclass
class HomFactor:
    """const * z^a w^b * prod (1 - c t)^e with t the ratio named by ``ratio``."""

    const: complex
    zpow: int
    wpow: int
    factors: list[tuple[complex, int]]
    ratio: str  # "w/z" or "z/w"

    def value(self, z: complex, w: complex) -> complex:
        t = w / z if self.ratio == "w/z" else z / w
        v = self.const * z ** self.zpow * w ** self.wpow
        for c, e in self.factors:
            v *= (1 - c * t) ** e
        return v

    def limit(self, which: str) -> complex:
        """Value of (this / (z^a w^b)) as t -> 0 or t -> infinity, None if divergent."""
        if which == "0":
            return self.const
        v = self.const
        deg = 0
        for c, e in self.factors:
            v *= (-c) ** e
            deg += e
        if deg != 0:
            return None
        return v


def _lin(c: complex, var: str) -> tuple[complex, int]:
    return (c, 1)


@dataclass
class GammaPair:
    i2: int  # doubled index
    j2: int
    M: int
    forward: HomFactor  # gamma_{i,j}(z,w), polynomial, as z^deg * poly(w/z)
    backward: HomFactor  # gamma_{j,i}(w,z) as w^deg * rational(z/w)

    def backward_series(self, order: int) -> TruncatedSeries:
        return expand_rational(self.backward.factors, "zero", order, "z/w", self.backward.const)

    def forward_coeffs(self) -> np.ndarray:
        s = expand_rational(self.forward.factors, "zero",
                            sum(e for _, e in self.forward.factors), "w/z", self.forward.const)
        return s.coeffs

    def balance(self) -> complex:
        """ratio backward/forward as a function of w/z: value at 0 times value at infinity."""
        # write both in terms of x = w/z.  forward = z^n * F(x); backward = w^m * B(1/x)
        # with n = m (homogeneous of equal degree), ratio = x^m B(1/x)/F(x)
        F0 = self.forward.const
        Finf_lead, Fdeg = self.forward.const, 0
        for c, e in self.forward.factors:
            Finf_lead *= (-c) ** e
            Fdeg += e
        B0 = self.backward.const  # B at 1/x -> 0  i.e. x -> inf
        Binf_lead, Bdeg = self.backward.const, 0
        for c, e in self.backward.factors:
            Binf_lead *= (-c) ** e
            Bdeg += e
        m = self.backward.wpow
        # x -> 0: x^m B(1/x) ~ x^m Binf_lead x^{-Bdeg}; F(x) -> F0
        if m - Bdeg != 0 or Fdeg != m:
            return complex("nan")
        at0 = Binf_lead / F0
        atinf = B0 / Finf_lead  # x^m B0 / (Finf_lead x^Fdeg)
        return at0 * atinf


def gamma_pair(i2: int, j2: int, ctx: ParameterContext) -> GammaPair:
    """gamma_{i,j}(z,w) (polynomial) and gamma_{j,i}(w,z) for j >= i; indices doubled."""
    if j2 < i2:
        raise ValueError("gamma_pair expects j >= i; use the swapped relation")
    if (j2 - i2) % 2:
        raise ValueError("indices must differ by an integer")
    M = ctx.M
    q1 = ctx.q1
    if M >= 0:
        q2, q3, qc2 = ctx.q2, ctx.q3, ctx.qc2
    else:
        q2, q3, qc2 = ctx.q3, ctx.q2, ctx.qc3
    Ma = abs(M)
    d = (j2 - i2) // 2
    if d == 0:
        fwd = [(q2 * q1 ** (-r), 1) for r in range(Ma)]
        forward = HomFactor(1, Ma, 0, fwd, "w/z")
        # same relation read backward: gamma_{i,i}(w,z)
        backward = HomFactor(1, 0, Ma, [(q2 * q1 ** (-r), 1) for r in range(Ma)], "z/w")
        return GammaPair(i2, j2, M, forward, backward)
    if d <= Ma:
        fwd = [(q1 ** r, 1) for r in range(1, d)] + [(q2 * q1 ** (-r), 1) for r in range(0, -d + Ma)]
        forward = HomFactor(1, len(fwd), 0, fwd, "w/z")
        num = [(q2 * q1 ** (-r), 1) for r in range(0, d + Ma)]
        den = [(q1 ** (-r), -1) for r in range(0, d + 1)]
        const = (-1) ** (d + 1) * qc2 ** (-d)
        backward = HomFactor(const, 0, len(num) - len(den), num + den, "z/w")
        return GammaPair(i2, j2, M, forward, backward)
    fwd = [(q1 ** r, 1) for r in range(1, d)]
    forward = HomFactor(1, len(fwd), 0, fwd, "w/z")
    num = [(q2 * q1 ** (-r), 1) for r in range(0, d + Ma)] + \
          [(q3 * q1 ** (-r), 1) for r in range(0, d - Ma)]
    den = [(q1 ** (-r), -1) for r in range(0, d + 1)]
    # (q2 qc2)^{-M/2} on the fixed branches
    if M >= 0:
        lq2, lqc2 = ctx.log_q2, ctx.log_qc2
    else:
        lq2, lqc2 = ctx.log_q3, ctx.log_qc3
    const = (-1) ** (Ma - 1) * cmath.exp(-(lq2 + lqc2) * Ma / 2) * q1 ** (d * (d - 1) / 2)
    backward = HomFactor(const, 0, len(num) - len(den), num + den, "z/w")
    return GammaPair(i2, j2, M, forward, backward)


# ---------------------------------------------------------------------------
# elliptic dynamical R matrix

def elliptic_R(u, beta, P, ctx: ParameterContext) -> np.ndarray:
    br = lambda x: theta_bracket(x, ctx)  # noqa: E731
    den_p = br(u + beta) * br(P)
    den_m = br(u + beta) * br(-P)
    if abs(den_p) == 0 or abs(den_m) == 0:
        raise PoleError("R matrix pole")
    b = br(beta)
    R = np.zeros((4, 4), dtype=complex)
    R[0, 0] = R[3, 3] = 1
    R[1, 1] = complex(br(u + P) * b / den_p)
    R[1, 2] = complex(br(u) * br(beta + P) / den_p)
    R[2, 1] = complex(br(u) * br(beta - P) / den_m)
    R[2, 2] = complex(br(u - P) * b / den_m)
    return R
