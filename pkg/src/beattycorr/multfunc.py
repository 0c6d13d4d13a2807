"""Multiplicative functions: the Liouville sieve, generic evaluation,
Dirichlet characters, and the pretentious distance series."""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from .errors import ResourceLimit

MAGIC = b"LIOUSGN1"
DEFAULT_MEMORY_BUDGET = 2 << 30
MEMORY_BUDGET_ENV = "BEATTYCORR_MEMORY_BUDGET"


def memory_budget() -> int:
    return int(os.environ.get(MEMORY_BUDGET_ENV, DEFAULT_MEMORY_BUDGET))


def primes_upto(n: int) -> np.ndarray:
    """All primes <= n, ascending."""
    if n < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization by trial division, ascending primes."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


# -- the Liouville sieve ---------------------------------------------------------


class SieveTable:
    """Bit-packed lambda(n) for 1 <= n <= limit; bit (n-1) set means +1.
    Immutable after construction."""

    def __init__(self, limit: int, packed: np.ndarray, segment_size: int):
        self.limit = int(limit)
        self.packed = packed
        self.segment_size = int(segment_size)

    def values(self, n: np.ndarray) -> np.ndarray:
        """lambda at positive integer arguments, as an int8 array of +-1."""
        n = np.asarray(n)
        if n.size and (n.min() < 1 or n.max() > self.limit):
            raise ValueError("argument outside sieve range")
        idx = (n - 1).astype(np.int64)
        bits = (self.packed[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1
        return (2 * bits.astype(np.int8)) - 1

    def value(self, n: int) -> int:
        return int(self.values(np.array([n]))[0])

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", self.limit))
            fh.write(self.packed.tobytes())

    @classmethod
    def load(cls, path) -> "SieveTable":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != MAGIC:
                raise ValueError(f"bad sieve cache magic {magic!r}")
            (limit,) = struct.unpack("<Q", fh.read(8))
            data = np.frombuffer(fh.read(), dtype=np.uint8)
        expect = (limit + 7) // 8
        if len(data) != expect:
            raise ValueError("sieve cache truncated")
        return cls(limit, data.copy(), segment_size=1 << 22)


def liouville_sieve(
    limit: int, segment_size: int = 1 << 22, budget: int | None = None
) -> SieveTable:
    """Segmented sieve for the parity of Omega(n), bit-packed one bit per n."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if segment_size < 2:
        raise ValueError("segment_size must be >= 2")
    budget = memory_budget() if budget is None else budget
    if limit // 8 > budget:
        raise ResourceLimit(
            f"sieve of {limit} needs {limit // 8} bytes, budget {budget}"
        )
    segment_size = max(8, (segment_size // 8) * 8)
    base = primes_upto(math.isqrt(limit))
    packed = np.zeros((limit + 7) // 8, dtype=np.uint8)
    for lo in range(1, limit + 1, segment_size):
        hi = min(lo + segment_size, limit + 1)
        size = hi - lo
        parity = np.zeros(size, dtype=bool)
        remaining = np.arange(lo, hi, dtype=np.int64)
        for p in map(int, base):
            pe = p
            while pe < hi:
                start = ((lo + pe - 1) // pe) * pe
                if start < hi:
                    sl = slice(start - lo, size, pe)
                    parity[sl] ^= True
                    remaining[sl] //= p
                pe *= p
        parity ^= remaining > 1  # one prime factor above sqrt(limit) remains
        lam_plus = ~parity
        chunk = np.packbits(lam_plus, bitorder="little")
        packed[(lo - 1) // 8 : (lo - 1) // 8 + len(chunk)] = chunk
    return SieveTable(limit, packed, segment_size)


# -- multiplicative functions ------------------------------------------------------


@dataclass(frozen=True)
class MultiplicativeFunction:
    """Real multiplicative function given on prime powers, with a declared
    constant extension to n <= 0."""

    name: str
    prime_power_rule: Callable[[int, int], float]
    completely_multiplicative: bool = False
    extension_to_nonpositive: float = 1.0
    block_rule: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def eval(self, n: int) -> float:
        if n <= 0:
            return self.extension_to_nonpositive
        out = 1.0
        for p, e in factorize(n):
            if self.completely_multiplicative:
                v = self.prime_power_rule(p, 1) ** e
            else:
                v = self.prime_power_rule(p, e)
            if abs(v) > 1 + 1e-12:
                raise ValueError(f"{self.name}({p}^{e}) = {v} escapes [-1, 1]")
            out *= v
        return out

    __call__ = eval

    def values_block(self, n: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; falls back to per-element eval."""
        n = np.asarray(n, dtype=np.int64)
        if self.block_rule is not None:
            pos = n > 0
            if pos.all():
                return np.asarray(self.block_rule(n), dtype=np.float64)
            out = np.full(n.shape, self.extension_to_nonpositive, dtype=np.float64)
            if pos.any():
                out[pos] = self.block_rule(n[pos])
            return out
        return np.array([self.eval(int(v)) for v in n], dtype=np.float64)


def unit_function() -> MultiplicativeFunction:
    return MultiplicativeFunction(
        name="one",
        prime_power_rule=lambda p, k: 1.0,
        completely_multiplicative=True,
        block_rule=lambda n: np.ones(len(n)),
    )


def liouville(table: SieveTable | None = None) -> MultiplicativeFunction:
    """The Liouville function; attach a SieveTable for fast bulk evaluation."""
    block = None
    if table is not None:
        block = lambda n: table.values(n).astype(np.float64)  # noqa: E731
    return MultiplicativeFunction(
        name="liouville",
        prime_power_rule=lambda p, k: (-1.0) ** k,
        completely_multiplicative=True,
        block_rule=block,
    )


def coprime_indicator(m: int) -> MultiplicativeFunction:
    """1 when gcd(n, m) = 1, else 0.  Pretentious (periodic type)."""
    if m < 1:
        raise ValueError("modulus must be positive")
    table = np.array([1.0 if math.gcd(r, m) == 1 else 0.0 for r in range(m)])
    return MultiplicativeFunction(
        name=f"coprime_to_{m}",
        prime_power_rule=lambda p, k: 0.0 if m % p == 0 else 1.0,
        completely_multiplicative=True,
        block_rule=lambda n: table[np.mod(n, m)],
    )


def from_real_character(chi: "DirichletCharacter") -> MultiplicativeFunction:
    """A real Dirichlet character as a multiplicative function."""
    vals = chi.table.real
    if np.abs(chi.table.imag).max() > 1e-12:
        raise ValueError("character is not real-valued")
    table = vals.copy()
    return MultiplicativeFunction(
        name=f"character_mod_{chi.modulus}",
        prime_power_rule=lambda p, k: float(table[pow(p, k, chi.modulus)]),
        completely_multiplicative=True,
        block_rule=lambda n: table[np.mod(n, chi.modulus)],
    )


# -- Dirichlet characters ------------------------------------------------------------


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    table: np.ndarray  # complex values on residues, zero off (Z/q)^*
    is_principal: bool
    label: str = ""

    def value(self, n: int) -> complex:
        return complex(self.table[n % self.modulus])

    __call__ = value


def _primitive_root(p: int, e: int) -> int:
    """Primitive root modulo p^e for odd prime p."""
    fac = [f for f, _ in factorize(p - 1)]
    g = 2
    while True:
        if all(pow(g, (p - 1) // f, p) != 1 for f in fac):
            break
        g += 1
    if e >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _crt_lift(g: int, pe: int, q: int) -> int:
    """x = g mod pe, x = 1 mod q/pe."""
    other = q // pe
    if other == 1:
        return g % q
    inv_other = pow(other, -1, pe)
    inv_pe = pow(pe, -1, other)
    return (g * other * inv_other + pe * inv_pe) % q


def characters_mod(q: int, bound: int = 10**4) -> list[DirichletCharacter]:
    """All phi(q) Dirichlet characters modulo q, built from the cyclic
    decomposition of (Z/qZ)^* via primitive roots."""
    if q < 1:
        raise ValueError("modulus must be >= 1")
    if q > bound:
        raise ResourceLimit(f"modulus {q} above configured bound {bound}")
    gens: list[tuple[int, int]] = []  # (residue mod q, order)
    for p, e in factorize(q):
        pe = p**e
        if p == 2:
            if e == 1:
                continue
            if e == 2:
                local = [(3, 2)]
            else:
                local = [(pe - 1, 2), (5, 1 << (e - 2))]
        else:
            local = [(_primitive_root(p, e), (p - 1) * p ** (e - 1))]
        gens.extend((_crt_lift(g, pe, q), order) for g, order in local)

    orders = [order for _, order in gens]
    exp_ranges = [range(order) for order in orders]
    residues = []
    logs = []
    for exps in product(*exp_ranges):
        r = 1
        for (g, _), k in zip(gens, exps):
            r = (r * pow(g, k, q)) % q
        residues.append(r)
        logs.append(exps)
    residues = np.array(residues, dtype=np.int64)
    logs = np.array(logs, dtype=np.float64).reshape(len(residues), len(gens))

    chars = []
    for cvec in product(*exp_ranges):
        table = np.zeros(q if q > 1 else 1, dtype=np.complex128)
        if gens:
            angles = logs @ (np.array(cvec, dtype=np.float64) / np.array(orders))
            table[residues] = np.exp(2j * np.pi * angles)
        else:
            table[residues if q > 1 else 0] = 1.0
        label = "principal" if not any(cvec) else "chi_" + "_".join(map(str, cvec))
        chars.append(
            DirichletCharacter(
                modulus=q, table=table, is_principal=not any(cvec), label=label
            )
        )
    return chars


# -- pretentious distance --------------------------------------------------------------


def pretentious_distance(
    f: MultiplicativeFunction, chi: DirichletCharacter, limit: int
) -> float:
    """Partial sum over p <= limit of (1 - Re(f(p) * conj(chi(p)))) / p."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    ps = primes_upto(limit)
    fvals = f.values_block(ps)
    cvals = np.conj(chi.table[np.mod(ps, chi.modulus)])
    terms = (1.0 - (fvals * cvals).real) / ps
    return float(terms.sum())


@dataclass
class PretentiousnessReport:
    function: str
    character: str
    series: list[tuple[int, float]]
    verdict: str
    caveat: str = (
        "finite partial sums cannot prove divergence; the verdict is heuristic"
    )


def pretentiousness_report(
    f: MultiplicativeFunction,
    chi: DirichletCharacter,
    limits: tuple[int, ...] = (10**3, 10**4, 10**5, 10**6),
    growth_threshold: float = 0.3,
) -> PretentiousnessReport:
    """Distance series over a limit ladder plus a heuristic verdict: a series
    still growing by more than `growth_threshold` per decade at the top of the
    ladder is reported as looking non-pretentious (toward this character)."""
    series = [(X, pretentious_distance(f, chi, X)) for X in limits]
    tail_growth = series[-1][1] - series[-2][1]
    verdict = (
        "looks non-pretentious (distance still growing)"
        if tail_growth > growth_threshold
        else "bounded so far (consistent with pretentious)"
    )
    return PretentiousnessReport(
        function=f.name, character=chi.label or f"mod {chi.modulus}", series=series,
        verdict=verdict,
    )
