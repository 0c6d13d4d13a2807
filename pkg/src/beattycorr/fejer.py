"""Fejer-kernel smoothing of torus indicators and bounded-variation
functions, with computable L1 error certificates.

For an interval I of length L, F = 1_I * Fej_K is a [0,1]-valued trig
polynomial of degree < K whose Fourier coefficients are (1 - |k|/K) * hat1_I(k)
and whose L1 distance to 1_I is at most

    integral Fej_K(t) * 2*min(||t||, L) dt,

a quantity with an explicit Fourier expansion evaluated by `interval_l1_bound`.
The analogous bound for a BV function g uses integral Fej_K(t) ||t|| dt times
the total variation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceLimit

_SAFETY = 1e-9


def interval_hat(a: float, b: float, k: int) -> complex:
    """Fourier coefficient of the indicator of [a, b) on the torus."""
    if k == 0:
        return complex(b - a)
    w = 2j * math.pi * k
    return (np.exp(-w * a) - np.exp(-w * b)) / w


def interval_l1_bound(K: int, length: float) -> float:
    """Upper bound on ||1_I - 1_I * Fej_K||_{L1(torus)} for |I| = length.

    Equals sum over |k| < K of (1 - |k|/K) * m_hat(k) with
    m(t) = 2*min(||t||, length), m_hat(0) = 2(L - L^2),
    m_hat(k) = -2 sin^2(pi k L) / (pi k)^2.
    """
    L = min(max(length, 0.0), 1.0)
    if L in (0.0, 1.0):
        return 0.0
    ks = np.arange(1, K, dtype=np.float64)
    total = 2.0 * (L - L * L)
    if len(ks):
        terms = (1.0 - ks / K) * 2.0 * np.sin(np.pi * ks * L) ** 2 / (np.pi * ks) ** 2
        total -= 2.0 * float(terms.sum())  # +-k pairs
    return max(total, 0.0) * (1 + _SAFETY) + 1e-15


def mean_abs_bound(K: int) -> float:
    """integral Fej_K(t) * ||t|| dt, exactly in Fourier form."""
    ks = np.arange(1, K, dtype=np.float64)
    total = 0.25
    if len(ks):
        odd = ks[::2]  # k = 1, 3, 5, ...
        terms = (1.0 - odd / K) * 2.0 / (np.pi * odd) ** 2
        total -= float(terms.sum())
    return max(total, 0.0) * (1 + _SAFETY) + 1e-15


def bv_l1_bound(K: int, variation: float) -> float:
    """L1 Fejer-approximation bound for a function of bounded variation."""
    return variation * mean_abs_bound(K)


def choose_K(budget: float, bound_fn, k_max: int = 1 << 20) -> int:
    """Least power of two K with bound_fn(K) <= budget."""
    K = 2
    while bound_fn(K) > budget:
        K *= 2
        if K > k_max:
            raise ResourceLimit(
                f"Fejer order exceeded {k_max} chasing budget {budget:g}"
            )
    return K


def smoothed_interval_coeffs(a: float, b: float, K: int) -> dict[int, complex]:
    """Fourier coefficients of 1_[a,b) * Fej_K, keyed by frequency index."""
    out = {}
    for k in range(-K + 1, K):
        c = (1.0 - abs(k) / K) * interval_hat(a, b, k)
        if abs(c) > 1e-18:
            out[k] = complex(c)
    return out


def smoothed_bv_coeffs(ghat, K: int) -> dict[int, complex]:
    """Fourier coefficients of g * Fej_K for g given by its coefficients."""
    out = {}
    for k in range(-K + 1, K):
        c = (1.0 - abs(k) / K) * ghat(k)
        if abs(c) > 1e-18:
            out[k] = complex(c)
    return out


def ceiling_phase_hat(zeta_frac: float):
    """Fourier coefficients of g(s) = e(zeta * (1 - s)) on s in [0, 1).

    g has one wraparound jump; hat g(k) integrates exactly:
    hat g(k) = e(zeta) * (1 - e(-(zeta + k))) / (2 pi i (zeta + k)), and the
    k = -zeta degenerate case cannot occur for 0 < zeta < 1.
    """
    front = np.exp(2j * math.pi * zeta_frac)

    def ghat(k: int) -> complex:
        u = zeta_frac + k
        if abs(u) < 1e-300:
            return front
        w = 2j * math.pi * u
        return front * (1.0 - np.exp(-w)) / w

    return ghat


def ceiling_phase_variation(zeta_frac: float) -> float:
    """Total variation of e(zeta (1 - s)) over one period (arc + jump)."""
    return 2 * math.pi * zeta_frac + abs(1 - np.exp(-2j * math.pi * zeta_frac))


class SampledTorusFunction:
    """FFT-sampled trig polynomial with linear interpolation, evaluated at
    64-bit fixed-point torus points."""

    def __init__(self, coeffs: dict[int, complex], grid_bits: int = 18):
        m = 1 << grid_bits
        spectrum = np.zeros(m, dtype=np.complex128)
        for k, c in coeffs.items():
            spectrum[k % m] += c
        table = np.fft.ifft(spectrum) * m
        self.grid_bits = grid_bits
        self.table = np.concatenate([table, table[:1]])  # wrap for interp
        self.is_real = bool(np.abs(table.imag).max(initial=0.0) < 1e-9)

    def eval_fixed(self, frac_fixed: np.ndarray) -> np.ndarray:
        shift = np.uint64(64 - self.grid_bits)
        j = (frac_fixed >> shift).astype(np.int64)
        rem = frac_fixed - (j.astype(np.uint64) << shift)
        t = rem.astype(np.float64) / float(1 << (64 - self.grid_bits))
        vals = self.table[j] * (1.0 - t) + self.table[j + 1] * t
        return vals.real if self.is_real else vals
