"""Exact arithmetic in a declared real number field.

Elements are rational coordinate vectors over a user-declared Q-algebra basis
(first basis element is the unit).  A real embedding is attached to every
basis element as a refinable rational interval, which makes floors,
fractional parts and sign decisions of irrational expressions rigorous and
terminating (under the asserted Q-linear independence of the basis).
"""

from __future__ import annotations

import configparser
import math
import re
from fractions import Fraction
from typing import Callable, Sequence

from .errors import FieldClosure, FieldMismatch, IndependenceViolation
from .intlinalg import lll_reduce, solve_rational

Rat = Fraction

DEFAULT_MAX_DIGITS = 256
_START_DIGITS = 12


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational number")


class Embedding:
    """Refinable rational interval around the real value of a basis element.

    interval(digits) returns (lo, hi) with hi - lo <= 10**-digits * (1 + tiny)
    and refinements nested as digits grows.
    """

    max_digits: int | None = None

    def interval(self, digits: int) -> tuple[Fraction, Fraction]:
        raise NotImplementedError

    def width_at(self, digits: int) -> Fraction:
        lo, hi = self.interval(digits)
        return hi - lo

    def digits_for(self, width: Fraction) -> int:
        """Smallest digit count whose interval is at most `width` wide."""
        digits = _START_DIGITS
        cap = self.max_digits if self.max_digits is not None else 10**9
        while self.width_at(digits) > width:
            if digits >= cap:
                raise IndependenceViolation(
                    f"embedding cannot be refined below width {float(width):g}"
                )
            digits = min(2 * digits, cap)
        return digits


class RationalEmbedding(Embedding):
    def __init__(self, value):
        self.value = _as_fraction(value)

    def interval(self, digits: int):
        return self.value, self.value

    def width_at(self, digits: int):
        return Fraction(0)

    def digits_for(self, width: Fraction) -> int:
        return 0


class SqrtEmbedding(Embedding):
    """sqrt(m) via integer square roots; exact containment at any depth."""

    def __init__(self, m: int):
        if m <= 0:
            raise ValueError("sqrt embedding needs a positive integer")
        self.m = m
        self._cache: dict[int, tuple[Fraction, Fraction]] = {}

    def interval(self, digits: int):
        hit = self._cache.get(digits)
        if hit is not None:
            return hit
        scale = 10**digits
        root = math.isqrt(self.m * scale * scale)
        lo = Fraction(root, scale)
        hi = lo if root * root == self.m * scale * scale else Fraction(root + 1, scale)
        self._cache[digits] = (lo, hi)
        return lo, hi


class DecimalEmbedding(Embedding):
    """Driven by a decimal expansion accurate to its full printed length."""

    def __init__(self, text: str):
        text = text.strip()
        if not re.fullmatch(r"-?\d+(\.\d+)?", text):
            raise ValueError(f"not a decimal literal: {text!r}")
        self.value = Fraction(text)
        frac_digits = len(text.split(".")[1]) if "." in text else 0
        # Keep a guard band: the last printed digits absorb the unknown
        # rounding of the expansion itself.
        self.max_digits = max(frac_digits - 8, 1)
        self._guard = Fraction(1, 10 ** (self.max_digits + 4))

    def interval(self, digits: int):
        digits = min(digits, self.max_digits)
        scale = 10**digits
        lo = Fraction(math.floor(self.value * scale), scale)
        return lo - self._guard, lo + Fraction(1, scale) + self._guard


class NumberField:
    """A finite-dimensional Q-algebra with a chosen real embedding per basis
    element.  Immutable after construction; shareable across threads."""

    def __init__(
        self,
        basis_names: Sequence[str],
        product_table,
        embeddings: Sequence[Embedding],
        independence_asserted: bool = True,
        max_precision_digits: int = DEFAULT_MAX_DIGITS,
        validate: bool = True,
    ):
        self.basis_names = tuple(basis_names)
        if not self.basis_names:
            raise ValueError("basis must be nonempty")
        d = len(self.basis_names)
        self.dim = d
        self.product_table = tuple(
            tuple(tuple(_as_fraction(c) for c in product_table[i][j]) for j in range(d))
            for i in range(d)
        )
        self.embeddings = tuple(embeddings)
        if len(self.embeddings) != d:
            raise ValueError("one embedding per basis element required")
        self.independence_asserted = bool(independence_asserted)
        self.max_precision_digits = int(max_precision_digits)
        self._name_index = {name: i for i, name in enumerate(self.basis_names)}
        if validate:
            self._validate_table()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def rationals(cls) -> "NumberField":
        return cls(("1",), (((Fraction(1),),),), (RationalEmbedding(1),))

    @classmethod
    def quadratic(cls, d: int) -> "NumberField":
        return cls.sqrt_field([d])

    @classmethod
    def sqrt_field(cls, generators: Sequence[int]) -> "NumberField":
        """Field Q(sqrt(m_1), ..., sqrt(m_t)) for pairwise coprime squarefree
        generators; basis indexed by subset products."""
        gens = [int(m) for m in generators]
        for m in gens:
            if m <= 1:
                raise ValueError("generators must be > 1")
            if not _squarefree(m):
                raise ValueError(f"{m} is not squarefree")
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if math.gcd(gens[i], gens[j]) != 1:
                    raise ValueError("generators must be pairwise coprime")
        t = len(gens)
        n = 1 << t
        products = [
            math.prod(gens[i] for i in range(t) if mask >> i & 1) for mask in range(n)
        ]
        names = ["1"] + [f"sqrt{p}" for p in products[1:]]
        table = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                common = math.prod(gens[i] for i in range(t) if (a & b) >> i & 1)
                target = a ^ b
                vec = [Fraction(0)] * n
                vec[target] = Fraction(common)
                table[a][b] = tuple(vec)
        embeds = [RationalEmbedding(1)] + [SqrtEmbedding(p) for p in products[1:]]
        return cls(names, table, embeds)

    # -- elements --------------------------------------------------------------

    def element(self, coeffs) -> "ExactReal":
        vals = [_as_fraction(c) for c in coeffs]
        if len(vals) != self.dim:
            raise ValueError(f"expected {self.dim} coefficients, got {len(vals)}")
        return ExactReal(self, tuple(vals))

    def rational(self, q) -> "ExactReal":
        vec = [Fraction(0)] * self.dim
        vec[0] = _as_fraction(q)
        return ExactReal(self, tuple(vec))

    @property
    def zero(self) -> "ExactReal":
        return self.rational(0)

    @property
    def one(self) -> "ExactReal":
        return self.rational(1)

    def basis_element(self, name_or_index) -> "ExactReal":
        if isinstance(name_or_index, str):
            idx = self._name_index[name_or_index]
        else:
            idx = int(name_or_index)
        vec = [Fraction(0)] * self.dim
        vec[idx] = Fraction(1)
        return ExactReal(self, tuple(vec))

    def sqrt(self, m: int) -> "ExactReal":
        return self.basis_element(f"sqrt{m}")

    def coerce(self, x) -> "ExactReal":
        if isinstance(x, ExactReal):
            if x.field != self:
                raise FieldMismatch("element belongs to a different field")
            return x
        return self.rational(_as_fraction(x))

    # -- structure checks -------------------------------------------------------

    def _validate_table(self):
        d = self.dim
        for j in range(d):
            col = self.product_table[0][j]
            expect = tuple(Fraction(int(k == j)) for k in range(d))
            if col != expect or self.product_table[j][0] != expect:
                raise ValueError("first basis element must act as the unit")
        for i in range(d):
            for j in range(d):
                if self.product_table[i][j] != self.product_table[j][i]:
                    raise ValueError("product table is not commutative")
        # Associativity on all basis triples.
        for i in range(d):
            bi = self.basis_element(i)
            for j in range(d):
                bj = self.basis_element(j)
                left = bi * bj
                for k in range(d):
                    bk = self.basis_element(k)
                    if (left * bk).coeffs != (bi * (bj * bk)).coeffs:
                        raise ValueError(
                            f"product table not associative at triple ({i},{j},{k})"
                        )

    def check_embedding_consistency(self, width=Fraction(1, 10**12)) -> None:
        """Interval of b_i*b_j per the table must meet the product of the
        factor intervals."""
        for i in range(self.dim):
            lo_i, hi_i = self.embeddings[i].interval(20)
            for j in range(i, self.dim):
                lo_j, hi_j = self.embeddings[j].interval(20)
                cands = [lo_i * lo_j, lo_i * hi_j, hi_i * lo_j, hi_i * hi_j]
                plo, phi = min(cands), max(cands)
                elem = self.basis_element(i) * self.basis_element(j)
                elo, ehi = eval_interval(elem, width)
                if ehi < plo or phi < elo:
                    raise ValueError(
                        f"embedding inconsistent with product at ({i},{j})"
                    )

    def check_independence(self, height: int = 10**4, digits: int = 40) -> None:
        """Numeric sanity check: no small integer relation among the basis
        values at the stated precision.  Heuristic, not a proof."""
        if self.dim == 1:
            return
        scale = 10**digits
        mids = []
        for emb in self.embeddings:
            lo, hi = emb.interval(min(digits + 10, emb.max_digits or digits + 10))
            mids.append(round((lo + hi) / 2 * scale))
        rows = [
            [int(i == j) for j in range(self.dim)] + [mids[i]]
            for i in range(self.dim)
        ]
        for row in lll_reduce(rows):
            coeffs, tail = row[:-1], row[-1]
            if not any(coeffs):
                continue
            if max(abs(c) for c in coeffs) <= height and abs(tail) <= 8 * self.dim * height:
                value = abs(sum(c * m for c, m in zip(coeffs, mids)))
                if value <= 8 * self.dim * height:
                    raise IndependenceViolation(
                        f"numeric relation candidate {coeffs} among basis values"
                    )

    # -- misc -------------------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, NumberField)
            and self.basis_names == other.basis_names
            and self.product_table == other.product_table
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.basis_names)

    def __repr__(self):
        return f"NumberField({', '.join(self.basis_names)})"


def _squarefree(m: int) -> bool:
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        while m % d == 0:
            m //= d
        d += 1
    return True


class ExactReal:
    """Element of a NumberField: exact rational coordinates over the basis."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: NumberField, coeffs: tuple):
        self.field = field
        self.coeffs = coeffs

    # -- predicates ---------------------------------------------------------

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "ExactReal":
        if isinstance(other, ExactReal):
            if other.field != self.field:
                raise FieldMismatch(
                    f"cannot combine elements of {self.field!r} and {other.field!r}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.rational(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return ExactReal(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return ExactReal(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return ExactReal(self.field, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self.field.dim
        table = self.field.product_table
        out = [Fraction(0)] * d
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                if b == 0:
                    continue
                ab = a * b
                for k, t in enumerate(table[i][j]):
                    if t:
                        out[k] += ab * t
        return ExactReal(self.field, tuple(out))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("division by the zero field element")
        if o.is_rational():
            q = o.coeffs[0]
            return ExactReal(self.field, tuple(a / q for a in self.coeffs))
        d = self.field.dim
        table = self.field.product_table
        # Multiplication-by-o matrix: column j holds coords of o * b_j.
        M = [[Fraction(0)] * d for _ in range(d)]
        for i, a in enumerate(o.coeffs):
            if a == 0:
                continue
            for j in range(d):
                for k, t in enumerate(table[i][j]):
                    if t:
                        M[k][j] += a * t
        sol = solve_rational(M, list(self.coeffs))
        if sol is None:
            raise FieldClosure("divisor is a zero divisor in this algebra")
        return ExactReal(self.field, tuple(sol))

    def __rtruediv__(self, other):
        return self.field.coerce(other).__truediv__(self)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.field.one / self.__pow__(-n)
        out = self.field.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparisons -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.rational(other)
        return (
            isinstance(other, ExactReal)
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.field.basis_names, self.coeffs))

    def sign(self) -> int:
        """Exact sign in {-1, 0, +1}; refines intervals for irrationals."""
        if self.is_rational():
            q = self.coeffs[0]
            return (q > 0) - (q < 0)
        width = Fraction(1, 10**_START_DIGITS)
        floor_w = Fraction(1, 10**self.field.max_precision_digits)
        while True:
            lo, hi = eval_interval(self, width)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if width < floor_w:
                raise IndependenceViolation(
                    "sign undecided at maximum precision; asserted independence "
                    "of the basis is suspect"
                )
            width /= 2**16

    def __lt__(self, other):
        return (self - self._coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - self._coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - self._coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - self._coerce(other)).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self):
        lo, hi = eval_interval(self, Fraction(1, 10**25))
        return float((lo + hi) / 2)

    def __repr__(self):
        parts = []
        for c, name in zip(self.coeffs, self.field.basis_names):
            if c == 0:
                continue
            parts.append(str(c) if name == "1" else f"{c}*{name}")
        return " + ".join(parts) if parts else "0"


# -- module-level operations (the public contract) -----------------------------


def field_arith(x: ExactReal, y: ExactReal, op: str) -> ExactReal:
    """Exact +, -, *, / in the common field of x and y."""
    ops: dict[str, Callable] = {
        "add": ExactReal.__add__,
        "sub": ExactReal.__sub__,
        "mul": ExactReal.__mul__,
        "div": ExactReal.__truediv__,
    }
    try:
        fn = ops[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(x, y)


def eval_interval(x: ExactReal, width) -> tuple[Fraction, Fraction]:
    """Rational interval [lo, hi] containing x with hi - lo <= width.
    Refinements with smaller widths nest."""
    width = _as_fraction(width)
    if width <= 0:
        raise ValueError("width must be positive")
    if x.is_rational():
        q = x.coeffs[0]
        return q, q
    total = sum(abs(c) for c in x.coeffs[1:])
    per_basis = width / total
    lo = x.coeffs[0]
    hi = x.coeffs[0]
    for c, emb in zip(x.coeffs[1:], x.field.embeddings[1:]):
        if c == 0:
            continue
        digits = emb.digits_for(per_basis)
        blo, bhi = emb.interval(digits)
        if c >= 0:
            lo += c * blo
            hi += c * bhi
        else:
            lo += c * bhi
            hi += c * blo
    return lo, hi


def floor_exact(x: ExactReal) -> int:
    """Exact floor; adaptive interval refinement for irrational x."""
    if x.is_rational():
        return math.floor(x.coeffs[0])
    width = Fraction(1, 10**_START_DIGITS)
    floor_w = Fraction(1, 10**x.field.max_precision_digits)
    while True:
        lo, hi = eval_interval(x, width)
        flo, fhi = math.floor(lo), math.floor(hi)
        if flo == fhi:
            return flo
        if width < floor_w:
            raise IndependenceViolation(
                "floor undecided at maximum precision while the value straddles "
                "an integer; asserted independence of the basis is suspect"
            )
        width /= 2**16


def ceil_exact(x: ExactReal) -> int:
    return -floor_exact(-x)


def frac_exact(x: ExactReal) -> ExactReal:
    """x - floor(x), exactly, in [0, 1)."""
    return x - floor_exact(x)


def to_float(x, width_digits: int = 25) -> float:
    if isinstance(x, ExactReal):
        lo, hi = eval_interval(x, Fraction(1, 10**width_digits))
        return float((lo + hi) / 2)
    return float(x)


# -- field definition files -----------------------------------------------------

_FILE_DIGITS = 320


def save_field(field: NumberField, path) -> None:
    """Write a field definition file: basis, product table, decimal expansions."""
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    cp["field"] = {
        "schema": "1",
        "basis": " ".join(field.basis_names),
        "independence_asserted": str(field.independence_asserted).lower(),
        "max_precision_digits": str(field.max_precision_digits),
    }
    prods = {}
    for i in range(field.dim):
        for j in range(i, field.dim):
            prods[f"{i} {j}"] = " ".join(str(c) for c in field.product_table[i][j])
    cp["products"] = prods
    embeds = {}
    for name, emb in zip(field.basis_names, field.embeddings):
        if isinstance(emb, RationalEmbedding):
            embeds[name] = str(emb.value)
        else:
            digits = _FILE_DIGITS
            if emb.max_digits is not None:
                digits = min(digits, emb.max_digits)
            lo, hi = emb.interval(digits)
            mid = (lo + hi) / 2
            embeds[name] = _decimal_string(mid, digits)
    cp["embeddings"] = embeds
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def load_field(path) -> NumberField:
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    names = cp["field"]["basis"].split()
    d = len(names)
    table = [[None] * d for _ in range(d)]
    for key, value in cp["products"].items():
        i, j = (int(t) for t in key.split())
        vec = tuple(Fraction(t) for t in value.split())
        table[i][j] = vec
        table[j][i] = vec
    for i in range(d):
        for j in range(d):
            if table[i][j] is None:
                raise ValueError(f"product table missing entry ({i}, {j})")
    embeds: list[Embedding] = []
    for name in names:
        text = cp["embeddings"][name].strip()
        if "/" in text or "." not in text:
            embeds.append(RationalEmbedding(Fraction(text)))
        else:
            embeds.append(DecimalEmbedding(text))
    return NumberField(
        names,
        table,
        embeds,
        independence_asserted=cp["field"].getboolean("independence_asserted", True),
        max_precision_digits=cp["field"].getint(
            "max_precision_digits", DEFAULT_MAX_DIGITS
        ),
    )


def _decimal_string(q: Fraction, digits: int) -> str:
    sign = "-" if q < 0 else ""
    q = abs(q)
    scaled = math.floor(q * 10**digits)
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"
