"""Vectorized exact floors and fractional parts of alpha*n + beta.

The irrational path steps alpha*n + beta in 64-bit fixed point: integer
arithmetic never drifts, and the approximation error is bounded by
(|n| + 2) / 2^64.  Entries whose fractional part lands within that margin of
an integer are flagged and recomputed with exact field arithmetic, so every
returned floor is exact.  Rational alpha and beta take a pure integer path.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .realfield import ExactReal, eval_interval, floor_exact

_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
TWO64 = 1 << 64


def _value_fraction(x, width=Fraction(1, 1 << 72)) -> Fraction:
    """A rational within `width` of x (exact when x is rational)."""
    if isinstance(x, ExactReal):
        if x.is_rational():
            return x.as_rational()
        lo, hi = eval_interval(x, width)
        return (lo + hi) / 2
    return Fraction(x)


def fixed64(x) -> int:
    """round(2^64 * x) for x in [0, 1); absolute error <= 1 vs 2^64 x."""
    v = _value_fraction(x)
    a = round(v * TWO64)
    return min(max(a, 0), TWO64 - 1)


def _mulhi_lo(A: int, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full 128-bit product of scalar A (0 <= A < 2^64) with uint64 array m."""
    Ah = np.uint64(A >> 32)
    Al = np.uint64(A & 0xFFFFFFFF)
    mh = m >> _SH32
    ml = m & _MASK32
    t = Al * ml
    u = Ah * ml + (t >> _SH32)
    v = Al * mh + (u & _MASK32)
    hi = Ah * mh + (u >> _SH32) + (v >> _SH32)
    lo = np.uint64(A) * m
    return hi, lo


def fixed_affine(A: int, B: int, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean split A*n + B = q * 2^64 + r for signed int64 n.

    Returns (q as int64, r as uint64), computed exactly.
    """
    n = np.asarray(n, dtype=np.int64)
    Bu = np.uint64(B)
    if n.size == 0 or n.min() >= 0:
        hi, lo = _mulhi_lo(A, n.astype(np.uint64))
        r = lo + Bu
        q = (hi + (r < lo)).astype(np.int64)
        return q, r
    m = np.abs(n).astype(np.uint64)
    hi, lo = _mulhi_lo(A, m)
    neg = n < 0
    # n >= 0: r = lo + B with carry into hi.
    r_pos = lo + Bu
    q_pos = hi + (r_pos < lo)
    # n < 0: B - (hi*2^64 + lo), with borrow.
    r_neg = Bu - lo
    q_neg_mag = hi + (Bu < lo)  # magnitude of the negative quotient
    q = np.where(neg, -(q_neg_mag.astype(np.int64)), q_pos.astype(np.int64))
    r = np.where(neg, r_neg, r_pos)
    return q, r


class LinearFloor:
    """Exact vectorized evaluator for floor(alpha*n + beta) and the
    fixed-point image of {alpha*n + beta}."""

    def __init__(self, alpha, beta=0):
        self.alpha = alpha
        self.beta = beta
        self.alpha_rational = not isinstance(alpha, ExactReal) or alpha.is_rational()
        self.beta_rational = not isinstance(beta, ExactReal) or beta.is_rational()
        self.rational = self.alpha_rational and self.beta_rational
        if self.rational:
            fa = _value_fraction(alpha)
            fb = _value_fraction(beta)
            L = math.lcm(fa.denominator, fb.denominator)
            self.num_a = fa.numerator * (L // fa.denominator)
            self.num_b = fb.numerator * (L // fb.denominator)
            self.den = L
        else:
            self.ifloor_a = _exact_floor_any(alpha)
            self.ifloor_b = _exact_floor_any(beta)
            self.A = fixed64(_frac_any(alpha))
            self.B = fixed64(_frac_any(beta))

    # -- exact scalar path ----------------------------------------------------

    def floor_at(self, n: int) -> int:
        if self.rational:
            return (self.num_a * n + self.num_b) // self.den
        return _exact_floor_any(_affine(self.alpha, self.beta, n))

    def value_at(self, n: int):
        """alpha*n + beta as an exact object (ExactReal or Fraction)."""
        return _affine(self.alpha, self.beta, n)

    # -- vectorized paths --------------------------------------------------------

    def floors(self, n: np.ndarray) -> np.ndarray:
        """Exact floor(alpha*n + beta) for an int64 array n."""
        n = np.asarray(n, dtype=np.int64)
        if self.rational:
            lim = np.abs(n).max(initial=0)
            if abs(self.num_a) * int(lim) + abs(self.num_b) < 2**62:
                return (self.num_a * n + self.num_b) // self.den
            return np.array(
                [(self.num_a * int(v) + self.num_b) // self.den for v in n],
                dtype=np.int64,
            )
        q, r = fixed_affine(self.A, self.B, n)
        out = self.ifloor_a * n + self.ifloor_b + q
        margin = np.abs(n).astype(np.uint64) + np.uint64(4)
        flagged = (r <= margin) | (r >= np.uint64(0) - margin)
        if flagged.any():
            idx = np.flatnonzero(flagged)
            out[idx] = [self.floor_at(int(n[i])) for i in idx]
        return out

    def frac_fixed(self, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """({alpha*n + beta} in 2^-64 units, undecided-near-boundary mask).

        The fixed-point value is within (|n| + 2) * 2^-64 of the true
        fractional part except possibly on flagged entries.
        """
        n = np.asarray(n, dtype=np.int64)
        if self.rational:
            rem = np.mod(self.num_a * n + self.num_b, self.den)
            if self.den <= 1 << 20:
                table = np.array(
                    [(v * TWO64) // self.den for v in range(self.den)],
                    dtype=np.uint64,
                )
                r = table[rem]
            else:
                r = (rem.astype(object) * TWO64 // self.den).astype(np.uint64)
            return r, np.zeros(len(n), dtype=bool)
        _, r = fixed_affine(self.A, self.B, n)
        margin = np.abs(n).astype(np.uint64) + np.uint64(4)
        flagged = (r <= margin) | (r >= np.uint64(0) - margin)
        return r, flagged

    def residues(self, n: np.ndarray) -> tuple[np.ndarray, int]:
        """Rational path only: ((num_a*n + num_b) mod den, den); the exact
        fractional part of alpha*n + beta is residue/den."""
        if not self.rational:
            raise ValueError("residues() requires rational alpha and beta")
        n = np.asarray(n, dtype=np.int64)
        return np.mod(self.num_a * n + self.num_b, self.den), self.den


def _affine(alpha, beta, n: int):
    if isinstance(alpha, ExactReal):
        return alpha * n + (beta if isinstance(beta, ExactReal) else alpha.field.rational(Fraction(beta)))
    if isinstance(beta, ExactReal):
        return beta.field.rational(Fraction(alpha)) * n + beta
    return Fraction(alpha) * n + Fraction(beta)


def _exact_floor_any(x) -> int:
    if isinstance(x, ExactReal):
        return floor_exact(x)
    return math.floor(Fraction(x))


def _frac_any(x):
    if isinstance(x, ExactReal):
        return x - floor_exact(x)
    f = Fraction(x)
    return f - math.floor(f)
