"""Convex regions of the unit cube: boxes and H-polytopes with exact
membership, plus exact rational volumes via recursive cone triangulation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import VolumeUnsupported
from .intlinalg import solve_rational
from .realfield import ExactReal, to_float

Scalar = object  # Fraction | int | ExactReal


def is_rational_scalar(x) -> bool:
    if isinstance(x, ExactReal):
        return x.is_rational()
    return isinstance(x, (int, Fraction))


def as_fraction_scalar(x) -> Fraction:
    if isinstance(x, ExactReal):
        return x.as_rational()
    return Fraction(x)


def exact_cmp(x, y) -> int:
    """Sign of x - y for Fraction/int/ExactReal operands, exactly."""
    if isinstance(x, ExactReal) or isinstance(y, ExactReal):
        if not isinstance(x, ExactReal):
            x = y.field.rational(Fraction(x))
        if not isinstance(y, ExactReal):
            y = x.field.rational(Fraction(y))
        return (x - y).sign()
    d = Fraction(x) - Fraction(y)
    return (d > 0) - (d < 0)


@dataclass(frozen=True)
class Interval:
    """Interval inside [0, 1]; closedness of each end is explicit."""

    lo: Scalar
    hi: Scalar
    lo_closed: bool = True
    hi_closed: bool = False

    def contains(self, x) -> bool:
        c = exact_cmp(x, self.lo)
        if c < 0 or (c == 0 and not self.lo_closed):
            return False
        c = exact_cmp(x, self.hi)
        if c > 0 or (c == 0 and not self.hi_closed):
            return False
        return True

    def is_empty(self) -> bool:
        c = exact_cmp(self.lo, self.hi)
        if c > 0:
            return True
        return c == 0 and not (self.lo_closed and self.hi_closed)

    def length(self):
        if self.is_empty():
            return Fraction(0)
        if isinstance(self.lo, ExactReal) or isinstance(self.hi, ExactReal):
            lo, hi = self.lo, self.hi
            if not isinstance(lo, ExactReal):
                lo = hi.field.rational(Fraction(lo))
            if not isinstance(hi, ExactReal):
                hi = lo.field.rational(Fraction(hi))
            return hi - lo
        return Fraction(self.hi) - Fraction(self.lo)

    def intersect(self, other: "Interval") -> "Interval":
        lo, lo_closed = self.lo, self.lo_closed
        c = exact_cmp(other.lo, lo)
        if c > 0 or (c == 0 and not other.lo_closed):
            lo, lo_closed = other.lo, other.lo_closed
        hi, hi_closed = self.hi, self.hi_closed
        c = exact_cmp(other.hi, hi)
        if c < 0 or (c == 0 and not other.hi_closed):
            hi, hi_closed = other.hi, other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def is_rational(self) -> bool:
        return is_rational_scalar(self.lo) and is_rational_scalar(self.hi)


class Box:
    """Product of intervals; the default convex region."""

    def __init__(self, intervals):
        self.intervals = tuple(intervals)

    @classmethod
    def from_pairs(cls, pairs) -> "Box":
        return cls(Interval(lo, hi) for lo, hi in pairs)

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls(Interval(Fraction(0), Fraction(1)) for _ in range(d))

    @property
    def dimension(self) -> int:
        return len(self.intervals)

    def contains(self, point) -> bool:
        return all(iv.contains(x) for iv, x in zip(self.intervals, point))

    def is_empty(self) -> bool:
        return any(iv.is_empty() for iv in self.intervals)

    def is_rational(self) -> bool:
        return all(iv.is_rational() for iv in self.intervals)

    def volume(self):
        out = Fraction(1)
        for iv in self.intervals:
            out = iv.length() * out
        return out

    def volume_float(self) -> float:
        return to_float(self.volume()) if not isinstance(self.volume(), Fraction) else float(self.volume())

    def intersects(self, other: "Box") -> bool:
        """Exact nonemptiness of the intersection, strictness respected."""
        return not any(
            a.intersect(b).is_empty() for a, b in zip(self.intervals, other.intervals)
        )

    def constraints(self):
        """As half-space constraints (a, c, strict) meaning a.x <= c / < c."""
        d = self.dimension
        out = []
        for i, iv in enumerate(self.intervals):
            a_lo = tuple(Fraction(-1) if j == i else Fraction(0) for j in range(d))
            a_hi = tuple(Fraction(1) if j == i else Fraction(0) for j in range(d))
            out.append((a_lo, _negate(iv.lo), not iv.lo_closed))
            out.append((a_hi, iv.hi, not iv.hi_closed))
        return out

    def __repr__(self):
        parts = [
            f"{'[' if iv.lo_closed else '('}{iv.lo}, {iv.hi}{']' if iv.hi_closed else ')'}"
            for iv in self.intervals
        ]
        return "Box(" + " x ".join(parts) + ")"


def _negate(x):
    if isinstance(x, ExactReal):
        return -x
    return -Fraction(x)


class HPolytope:
    """Intersection of half-spaces a.x <= c (or < c) with the unit cube.
    Coefficients may be rational or field elements; volume needs rationals."""

    def __init__(self, dimension: int, constraints, clip_unit: bool = True):
        self.dimension = dimension
        cons = [
            (tuple(a), c, bool(strict)) for a, c, strict in constraints
        ]
        if clip_unit:
            cons.extend(Box.unit(dimension).constraints())
        self.halfspaces = cons

    def contains(self, point) -> bool:
        for a, c, strict in self.halfspaces:
            val = _dot(a, point)
            cmpres = exact_cmp(val, c)
            if cmpres > 0 or (cmpres == 0 and strict):
                return False
        return True

    def is_rational(self) -> bool:
        return all(
            all(is_rational_scalar(x) for x in a) and is_rational_scalar(c)
            for a, c, _ in self.halfspaces
        )

    def rational_constraints(self):
        if not self.is_rational():
            raise VolumeUnsupported("polytope has irrational facet data")
        return [
            (tuple(as_fraction_scalar(x) for x in a), as_fraction_scalar(c))
            for a, c, _ in self.halfspaces
        ]

    def vertices(self):
        return _vertices(self.rational_constraints(), self.dimension)

    def is_empty_closed(self) -> bool:
        """Emptiness of the closure (rational data only)."""
        return len(self.vertices()) == 0

    def volume(self) -> Fraction:
        return polytope_volume(self.rational_constraints(), self.dimension)

    def volume_float(self) -> float:
        return float(self.volume())

    def is_empty(self) -> bool:
        # Strictness-blind; callers treating boundary-only sets as nonempty
        # keep exact membership regardless.
        return self.is_empty_closed()

    def try_to_box(self) -> Box | None:
        """Convert to a Box when every constraint touches one coordinate."""
        d = self.dimension
        ivs = [
            Interval(Fraction(0), Fraction(1), True, False) for _ in range(d)
        ]
        for a, c, strict in self.halfspaces:
            nz = [j for j, x in enumerate(a) if exact_cmp(x, 0) != 0]
            if not nz:
                cmpres = exact_cmp(0, c)
                if cmpres > 0 or (cmpres == 0 and strict):
                    return Box([Interval(Fraction(1), Fraction(0))] * d)  # empty
                continue
            if len(nz) > 1:
                return None
            j = nz[0]
            coeff = a[j]
            bound = _divide(c, coeff)
            if exact_cmp(coeff, 0) > 0:
                cand = Interval(Fraction(0), bound, True, not strict)
            else:
                cand = Interval(bound, Fraction(1), not strict, False)
            ivs[j] = ivs[j].intersect(cand)
        return Box(ivs)

    def __repr__(self):
        return f"HPolytope(dim={self.dimension}, {len(self.halfspaces)} half-spaces)"


def _dot(a, x):
    out = None
    for ai, xi in zip(a, x):
        term = _mul(ai, xi)
        out = term if out is None else _add(out, term)
    return out if out is not None else Fraction(0)


def _mul(a, b):
    if isinstance(a, ExactReal) or isinstance(b, ExactReal):
        if not isinstance(a, ExactReal):
            a = b.field.rational(Fraction(a))
        return a * b
    return Fraction(a) * Fraction(b)


def _add(a, b):
    if isinstance(a, ExactReal) or isinstance(b, ExactReal):
        if not isinstance(a, ExactReal):
            a = b.field.rational(Fraction(a))
        return a + b
    return Fraction(a) + Fraction(b)


def _divide(c, coeff):
    if isinstance(c, ExactReal) or isinstance(coeff, ExactReal):
        if not isinstance(c, ExactReal):
            c = coeff.field.rational(Fraction(c))
        return c / coeff
    return Fraction(c) / Fraction(coeff)


# -- exact rational volume ---------------------------------------------------------


def _normalize_constraint(a, c):
    lead = next((x for x in a if x != 0), None)
    if lead is None:
        return None
    scale = abs(lead)
    return tuple(x / scale for x in a), c / scale


def _dedupe(constraints):
    seen = {}
    for a, c in constraints:
        norm = _normalize_constraint(a, c)
        if norm is None:
            if c < 0:
                return None  # 0 <= c violated: empty
            continue
        key = norm[0]
        if key in seen:
            seen[key] = min(seen[key], norm[1])
        else:
            seen[key] = norm[1]
    return [(a, c) for a, c in seen.items()]


def _vertices(constraints, dim):
    if dim == 0:
        return [()] if all(c >= 0 for a, c in constraints) else []
    cons = _dedupe(constraints)
    if cons is None:
        return []
    verts = set()
    for subset in combinations(range(len(cons)), dim):
        A = [list(cons[i][0]) for i in subset]
        b = [cons[i][1] for i in subset]
        x = solve_rational(A, b)
        if x is None:
            continue
        if all(_frac_dot(a, x) <= c for a, c in cons):
            verts.add(tuple(x))
    return sorted(verts)


def _frac_dot(a, x):
    return sum(ai * xi for ai, xi in zip(a, x))


def polytope_volume(constraints, dim) -> Fraction:
    """Exact volume of {x : a.x <= c for all (a, c)} in R^dim.

    Cone decomposition from a base vertex: each facet F on hyperplane
    a.x = c contributes |a.v0 - c| * vol(proj_j F) / (dim * |a_j|), where
    proj_j eliminates a coordinate j with a_j != 0.  All data stays rational.
    """
    if dim == 0:
        return Fraction(1) if all(c >= 0 for a, c in constraints) else Fraction(0)
    cons = _dedupe(constraints)
    if cons is None:
        return Fraction(0)
    if dim == 1:
        lo, hi = None, None
        for (a,), c in cons:
            if a > 0:
                bound = c / a
                hi = bound if hi is None else min(hi, bound)
            elif a < 0:
                bound = c / a
                lo = bound if lo is None else max(lo, bound)
        if lo is None or hi is None:
            raise VolumeUnsupported("unbounded 1-d polytope")
        return max(Fraction(0), hi - lo)
    verts = _vertices(cons, dim)
    if len(verts) <= dim:
        return Fraction(0)
    v0 = verts[0]
    total = Fraction(0)
    for a, c in cons:
        gap = c - _frac_dot(a, v0)
        if gap == 0:
            continue
        j = next(i for i, x in enumerate(a) if x != 0)
        sub = []
        for a2, c2 in cons:
            if a2 == a and c2 == c:
                continue
            factor = a2[j] / a[j]
            new_a = tuple(
                a2[i] - factor * a[i] for i in range(dim) if i != j
            )
            new_c = c2 - factor * c
            sub.append((new_a, new_c))
        face_vol = polytope_volume(sub, dim - 1)
        if face_vol:
            total += gap * face_vol / abs(a[j])
    return total / dim
