"""Inhomogeneous Bohr sets: exact membership, integer relation lattices,
removal of rational dependencies, densities, and trigonometric approximation
with a periodic part."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import product

import numpy as np

from . import fejer
from .convex import Box, HPolytope, Interval, exact_cmp, is_rational_scalar
from .errors import (
    FullyRationalPhase,
    ResourceLimit,
    UnsupportedRegion,
    VolumeUnsupported,
)
from .fastfloor import LinearFloor
from .intlinalg import (
    hnf_with_transform,
    integer_kernel,
    invert_unimodular,
    mat_vec,
    saturation,
    solve_rational,
    unimodular_with_last_rows,
)
from .realfield import ExactReal, frac_exact, to_float

DEFAULT_BLOCK = 1 << 18


def _mod1(x):
    """Exact fractional part of a Fraction or ExactReal."""
    if isinstance(x, ExactReal):
        if x.is_rational():
            f = x.as_rational()
            return f - math.floor(f)
        return frac_exact(x)
    f = Fraction(x)
    return f - math.floor(f)


def _is_rational(x) -> bool:
    return is_rational_scalar(x)


def _as_field(x, fld):
    if isinstance(x, ExactReal):
        return x
    return fld.rational(Fraction(x))


class BohrSet:
    """Integers n with {phase_i * n + offset_i} in a convex region, decided
    exactly.  offset defaults to zero (the homogeneous case)."""

    def __init__(self, phase, region, offset=None, label: str = ""):
        phase = tuple(phase)
        if offset is None:
            offset = tuple(Fraction(0) for _ in phase)
        offset = tuple(offset)
        if len(offset) != len(phase):
            raise ValueError("offset and phase dimensions differ")
        fld = next((p.field for p in phase if isinstance(p, ExactReal)), None)
        if fld is None:
            fld = next((o.field for o in offset if isinstance(o, ExactReal)), None)
        if fld is not None:
            phase = tuple(_as_field(p, fld) for p in phase)
            offset = tuple(_as_field(o, fld) for o in offset)
        self.phase = phase
        self.offset = offset
        self.field = fld
        self.region = region
        self.label = label
        rdim = region.dimension
        if rdim != len(phase):
            raise ValueError(f"region dimension {rdim} != phase dimension {len(phase)}")
        self._floors = [LinearFloor(p, o) for p, o in zip(phase, offset)]
        self._block_plan = None

    @property
    def dimension(self) -> int:
        return len(self.phase)

    def phase_is_rational(self) -> bool:
        return all(_is_rational(p) for p in self.phase)

    def point_at(self, n: int):
        """The exact torus point ({phase_i n + offset_i})_i."""
        return tuple(_mod1(lf.value_at(n)) for lf in self._floors)

    def membership(self, n: int) -> bool:
        return self.region.contains(self.point_at(n))

    __contains__ = membership

    # -- bulk evaluation -----------------------------------------------------

    def _plan(self):
        if self._block_plan is not None:
            return self._block_plan
        dims = []
        for lf in self._floors:
            if lf.rational:
                dims.append(("rational", lf))
            else:
                dims.append(("fixed", lf))
        if isinstance(self.region, Box):
            per_dim = []
            for (kind, lf), iv in zip(dims, self.region.intervals):
                if kind == "rational":
                    table = np.array(
                        [iv.contains(Fraction(r, lf.den)) for r in range(lf.den)],
                        dtype=bool,
                    )
                    per_dim.append(("table", lf, table))
                else:
                    lo_f = _fixed_of(iv.lo)
                    hi_f = _fixed_of(iv.hi)
                    per_dim.append(("fixed", lf, (lo_f, hi_f)))
            self._block_plan = ("box", per_dim)
        else:
            coeff_rows = []
            bounds = []
            stricts = []
            for a, c, strict in self.region.halfspaces:
                coeff_rows.append([to_float(x) for x in a])
                bounds.append(to_float(c))
                stricts.append(strict)
            self._block_plan = (
                "poly",
                dims,
                np.array(coeff_rows),
                np.array(bounds),
                stricts,
            )
        return self._block_plan

    def membership_block(self, n: np.ndarray) -> np.ndarray:
        """Exact membership for an int64 array; fixed-point fast path with
        per-element exact fallback near boundaries."""
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0, dtype=bool)
        plan = self._plan()
        if plan[0] == "box":
            inside = np.ones(len(n), dtype=bool)
            undecided = np.zeros(len(n), dtype=bool)
            for kind, lf, data in plan[1]:
                if kind == "table":
                    rem, den = lf.residues(n)
                    inside &= data[rem]
                else:
                    lo_f, hi_f = data
                    r, flag = lf.frac_fixed(n)
                    margin = np.abs(n).astype(np.uint64) + np.uint64(8)
                    near_lo = _near(r, lo_f, margin)
                    near_hi = _near(r, hi_f, margin)
                    undecided |= flag | near_lo | near_hi
                    inside &= _fixed_between(r, lo_f, hi_f)
            if undecided.any():
                idx = np.flatnonzero(undecided)
                inside[idx] = [self.membership(int(n[i])) for i in idx]
            return inside
        _, dims, A, b, stricts = plan
        coords = np.empty((len(dims), len(n)))
        err = np.empty(len(dims))
        for i, (kind, lf) in enumerate(dims):
            if kind == "rational":
                rem, den = lf.residues(n)
                coords[i] = rem / den
                err[i] = 2.0**-50
            else:
                r, _ = lf.frac_fixed(n)
                coords[i] = r.astype(np.float64) / 2.0**64
                err[i] = (np.abs(n).max(initial=0) + 8) * 2.0**-64
        vals = A @ coords
        margins = np.abs(A) @ err + 1e-12
        inside = np.ones(len(n), dtype=bool)
        undecided = np.zeros(len(n), dtype=bool)
        for row, (c, strict, m) in enumerate(zip(b, stricts, margins)):
            undecided |= np.abs(vals[row] - c) <= m
            inside &= vals[row] < c if strict else vals[row] <= c + m
        if undecided.any():
            idx = np.flatnonzero(undecided)
            inside[idx] = [self.membership(int(n[i])) for i in idx]
        return inside

    def members_upto(self, x: int, block: int = DEFAULT_BLOCK) -> np.ndarray:
        out = []
        for lo in range(1, x + 1, block):
            ns = np.arange(lo, min(lo + block, x + 1), dtype=np.int64)
            out.append(ns[self.membership_block(ns)])
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

    def __repr__(self):
        lbl = f" {self.label!r}" if self.label else ""
        return f"BohrSet(d={self.dimension}{lbl})"


def _fixed_of(x) -> int:
    from .fastfloor import fixed64

    v = _mod1(x)
    # endpoint 1 (or 0) both map to the wraparound point
    if isinstance(v, ExactReal):
        return fixed64(v)
    return fixed64(v)


def _near(r, endpoint: int, margin) -> np.ndarray:
    diff = r - np.uint64(endpoint)
    return (diff <= margin) | (diff >= np.uint64(0) - margin)


def _fixed_between(r, lo_f: int, hi_f: int) -> np.ndarray:
    if lo_f <= hi_f:
        return (r >= np.uint64(lo_f)) & (r < np.uint64(hi_f))
    return (r >= np.uint64(lo_f)) | (r < np.uint64(hi_f))


# -- integer relation lattice -------------------------------------------------------


def integer_relation_lattice(phase) -> list[list[int]]:
    """Basis of {k in Z^d : k . phase in Z}, via exact integer kernels and a
    congruence step for the rational parts.  Empty list when no relation."""
    phase = list(phase)
    d = len(phase)
    fld = next((p.field for p in phase if isinstance(p, ExactReal)), None)
    if fld is not None:
        phase = [_as_field(p, fld) for p in phase]
        coeffs = [list(p.coeffs) for p in phase]
    else:
        coeffs = [[Fraction(p)] for p in phase]
    c0 = [row[0] for row in coeffs]
    irr = [row[1:] for row in coeffs]
    ncols = len(irr[0]) if irr else 0
    if ncols and any(any(x != 0 for x in row) for row in irr):
        den = math.lcm(*[x.denominator for row in irr for x in row])
        Cint = [[int(x * den) for x in row] for row in irr]
        K1 = integer_kernel(Cint)
    else:
        K1 = [[int(i == j) for j in range(d)] for i in range(d)]
    if not K1:
        return []
    tvals = [sum(Fraction(k) * c for k, c in zip(row, c0)) for row in K1]
    Q = math.lcm(*[t.denominator for t in tvals]) if tvals else 1
    if Q == 1:
        combined = K1
    else:
        p = [int(t * Q) for t in tvals]
        M2 = [[pi] for pi in p] + [[-Q]]
        K2 = integer_kernel(M2)
        combined = []
        for row in K2:
            m = row[: len(K1)]
            combined.append(
                [sum(mi * K1[l][j] for l, mi in enumerate(m)) for j in range(d)]
            )
    combined = [row for row in combined if any(row)]
    if not combined:
        return []
    H, _ = hnf_with_transform(combined)
    return [row for row in H if any(row)]


# -- decomposition (removing rational dependencies) -----------------------------------


@dataclass
class BohrDecomposition:
    d_prime: int
    rho: tuple
    q: int
    pieces: dict  # residue -> list of convex regions in [0,1)^{d'}
    transform: list  # unimodular M with M(T) = leading-coordinate torus
    gamma_rational: tuple  # the rational part gamma'' (Fractions)
    directions: list  # N = first d' columns of M^-1 (integer d x d')
    source: BohrSet | None = None

    def piece_count(self) -> int:
        return sum(len(v) for v in self.pieces.values())

    def residue_sets(self, a: int) -> list[BohrSet]:
        return [
            BohrSet(self.rho, region, label=f"piece[{a},{i}]")
            for i, region in enumerate(self.pieces[a % self.q])
        ]

    def membership(self, n: int) -> bool:
        sets = self.pieces[n % self.q]
        if not sets:
            return False
        point = tuple(_mod1(r * n) for r in self.rho)
        return any(region.contains(point) for region in sets)

    def membership_block(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(len(n), dtype=bool)
        res = np.mod(n, self.q)
        cache = {}
        for a in range(self.q):
            idx = np.flatnonzero(res == a)
            if not len(idx):
                continue
            acc = np.zeros(len(idx), dtype=bool)
            for i, region in enumerate(self.pieces[a]):
                bs = cache.get((a, i))
                if bs is None:
                    bs = BohrSet(self.rho, region)
                    cache[(a, i)] = bs
                acc |= bs.membership_block(n[idx])
            out[idx] = acc
        return out


def _absorb_offset_box(region: Box, offset) -> list[Box]:
    """Rewrite {x + offset in region} as {x in union of boxes} on the torus."""
    per_dim: list[list[Interval]] = []
    for iv, off in zip(region.intervals, offset):
        if iv.is_empty():
            return []
        length = iv.length()
        if exact_cmp(length, 1) >= 0:
            per_dim.append([Interval(Fraction(0), Fraction(1), True, False)])
            continue
        lo = _mod1(_sub(iv.lo, off))
        hi = _add(lo, length)
        cmp1 = exact_cmp(hi, 1)
        if cmp1 <= 0:
            parts = [Interval(lo, hi, iv.lo_closed, iv.hi_closed)]
            if cmp1 == 0 and iv.hi_closed:
                parts = [
                    Interval(lo, Fraction(1), iv.lo_closed, False),
                    Interval(Fraction(0), Fraction(0), True, True),
                ]
        else:
            parts = [
                Interval(lo, Fraction(1), iv.lo_closed, False),
                Interval(Fraction(0), _sub(hi, 1), True, iv.hi_closed),
            ]
        per_dim.append([p for p in parts if not p.is_empty()])
    return [Box(list(combo)) for combo in product(*per_dim)]


def _simplify(x):
    """Collapse rational-valued field elements back to Fraction."""
    if isinstance(x, ExactReal) and x.is_rational():
        return x.as_rational()
    return x


def _sub(a, b):
    if isinstance(a, ExactReal) or isinstance(b, ExactReal):
        if not isinstance(a, ExactReal):
            a = b.field.rational(Fraction(a))
        return _simplify(a - b)
    return Fraction(a) - Fraction(b)


def _add(a, b):
    if isinstance(a, ExactReal) or isinstance(b, ExactReal):
        if not isinstance(a, ExactReal):
            a = b.field.rational(Fraction(a))
        return _simplify(a + b)
    return Fraction(a) + Fraction(b)


def _offset_is_zero(offset) -> bool:
    return all(exact_cmp(o, 0) == 0 for o in offset)


def _minimal_denominator_solution(V: list[list[int]], rhs: list[int], d: int):
    """Rational x with V x = rhs, supported on s pivot columns, minimizing the
    lcm of denominators (deterministic tie-break by column choice)."""
    from itertools import combinations

    s = len(V)
    best = None
    best_key = None
    for cols in combinations(range(d), s):
        A = [[Fraction(V[i][j]) for j in cols] for i in range(s)]
        x = solve_rational(A, rhs)
        if x is None:
            continue
        q = math.lcm(*[xi.denominator for xi in x]) if x else 1
        # Among minimal-q solutions prefer support on later coordinates, so
        # the leading phase coordinates stay untouched.
        key = (q, tuple(-c for c in cols))
        if best_key is None or key < best_key:
            full = [Fraction(0)] * d
            for j, xi in zip(cols, x):
                full[j] = xi
            best, best_key = full, key
    if best is None:
        raise ValueError("relation system unexpectedly inconsistent")
    return best, best_key[0]


def remove_rational_dependencies(B: BohrSet) -> BohrDecomposition:
    """Split the phase into rational and totally-equidistributing parts and
    rewrite the region per residue class, exactly."""
    if B.phase_is_rational():
        raise FullyRationalPhase(
            "phase is rational: the indicator is periodic, no decomposition needed"
        )
    d = B.dimension
    fld = B.field
    if isinstance(B.region, Box):
        pieces0 = _absorb_offset_box(B.region, B.offset)
    elif _offset_is_zero(B.offset):
        pieces0 = [B.region]
    else:
        raise UnsupportedRegion(
            "offset absorption is implemented for box regions only"
        )

    V = integer_relation_lattice(B.phase)
    s = len(V)
    if s == 0:
        return BohrDecomposition(
            d_prime=d,
            rho=B.phase,
            q=1,
            pieces={0: pieces0},
            transform=[[int(i == j) for j in range(d)] for i in range(d)],
            gamma_rational=tuple(Fraction(0) for _ in range(d)),
            directions=[[int(i == j) for j in range(d)] for i in range(d)],
            source=B,
        )

    rhs = []
    for v in V:
        val = sum(_as_field(p, fld) * int(k) for k, p in zip(v, B.phase))
        rhs.append(val.as_rational())  # v . phase is an integer by construction
    gamma_pp, _ = _minimal_denominator_solution(V, rhs, d)
    q = math.lcm(*[g.denominator for g in gamma_pp]) if gamma_pp else 1
    gamma_p = [
        _as_field(p, fld) - Fraction(g) for p, g in zip(B.phase, gamma_pp)
    ]

    satV = saturation(V, d)
    M = unimodular_with_last_rows(satV, d)
    Minv = invert_unimodular(M)
    d_prime = d - s
    rho_full = [
        sum((gamma_p[j] * M[i][j] for j in range(d)), fld.zero) for i in range(d)
    ]
    for tail in rho_full[d_prime:]:
        if not tail.is_zero():
            raise AssertionError("transform failed to flatten the subtorus")
    rho = tuple(rho_full[:d_prime])
    if integer_relation_lattice(rho):
        raise AssertionError("reduced phase retains an integer relation")
    N = [[Minv[i][j] for j in range(d_prime)] for i in range(d)]  # d x d'

    m_lo = [sum(min(N[j][i], 0) for i in range(d_prime)) for j in range(d)]
    m_hi = [sum(max(N[j][i], 0) for i in range(d_prime)) for j in range(d)]

    pieces: dict[int, list] = {}
    for a in range(q):
        shift = [Fraction(a) * g for g in gamma_pp]
        out = []
        for piece in pieces0:
            cons = piece.constraints() if isinstance(piece, Box) else piece.halfspaces
            z_ranges = []
            for j in range(d):
                zlo = math.ceil(m_lo[j] + shift[j] - 1)
                zhi = math.floor(m_hi[j] + shift[j] + 1)
                z_ranges.append(range(zlo, zhi + 1))
            for z in product(*z_ranges):
                new_cons = []
                for a_vec, cval, strict in cons:
                    row = [
                        _simplify(sum(_mulc(a_vec[j], N[j][i]) for j in range(d)))
                        for i in range(d_prime)
                    ]
                    adj = cval
                    for j in range(d):
                        adj = _sub(adj, _mulc(a_vec[j], shift[j] - z[j]))
                    new_cons.append((tuple(row), adj, strict))
                poly = HPolytope(d_prime, new_cons, clip_unit=True)
                if poly.is_rational() and poly.is_empty_closed():
                    continue
                box = poly.try_to_box()
                if box is not None:
                    if not box.is_empty():
                        out.append(box)
                else:
                    out.append(poly)
        pieces[a] = out

    return BohrDecomposition(
        d_prime=d_prime,
        rho=rho,
        q=q,
        pieces=pieces,
        transform=M,
        gamma_rational=tuple(gamma_pp),
        directions=N,
        source=B,
    )


def _mulc(a, k: int):
    if isinstance(a, ExactReal):
        return _simplify(a * k)
    return Fraction(a) * k


# -- density ---------------------------------------------------------------------------


@dataclass
class DensityResult:
    value: float
    exact: object  # Fraction, ExactReal, or None
    method: str
    note: str = ""

    def __float__(self):
        return self.value


def density(B: BohrSet, mode: str = "theoretical", x: int = 10**5) -> DensityResult:
    """Natural density of the Bohr set: exact volume arithmetic when the
    region data allows it, exact membership counting otherwise."""
    if mode == "empirical":
        return _empirical_density(B, x)
    if mode != "theoretical":
        raise ValueError("mode must be 'theoretical' or 'empirical'")
    if B.phase_is_rational():
        q = math.lcm(
            *[Fraction(p if not isinstance(p, ExactReal) else p.as_rational()).denominator for p in B.phase]
        )
        hits = sum(1 for a in range(q) if B.membership(a))
        val = Fraction(hits, q)
        return DensityResult(float(val), val, "periodic-exact")
    try:
        dec = remove_rational_dependencies(B)
        total = Fraction(0)
        exact_field = None
        for a in range(dec.q):
            for piece in dec.pieces[a]:
                vol = piece.volume()
                if isinstance(vol, ExactReal):
                    exact_field = (
                        vol if exact_field is None else exact_field + vol
                    )
                else:
                    total += vol
        if exact_field is not None:
            combined = exact_field + Fraction(total)
            value = to_float(combined) / dec.q
            return DensityResult(value, combined, "volume-exact-field")
        val = total / dec.q
        return DensityResult(float(val), val, "volume-exact")
    except VolumeUnsupported as exc:
        res = _empirical_density(B, x)
        res.note = f"fell back to empirical counting: {exc}"
        return res


def _empirical_density(B: BohrSet, x: int) -> DensityResult:
    if x < 10**3:
        raise ValueError("empirical density needs X >= 10^3")
    count = 0
    for lo in range(1, x + 1, DEFAULT_BLOCK):
        ns = np.arange(lo, min(lo + DEFAULT_BLOCK, x + 1), dtype=np.int64)
        count += int(B.membership_block(ns).sum())
    return DensityResult(count / x, None, f"empirical-exact-count(X={x})")


# -- trigonometric approximation ------------------------------------------------------


@dataclass
class TrigApproximation:
    """T(n) + sum_a t_a 1_{n = a mod q} approximating 1_B(n), with a certified
    asymptotic L1 error bound and an empirically validated residual."""

    frequencies: list
    coefficients: list
    q: int
    periodic: np.ndarray
    error_bound: float
    piece_count: int = 0
    fejer_orders: list = dc_field(default_factory=list)
    empirical_l1: float | None = None
    label: str = ""
    # sup-norm gap between the truncated symbolic frequency list and the
    # structured evaluator (0 when the list is complete)
    symbolic_tail: float = 0.0
    _bulk: object = None

    @property
    def coefficient_bound(self) -> float:
        return max((abs(c) for c in self.coefficients), default=0.0)

    def periodic_mass(self) -> float:
        return float(np.mean(self.periodic)) if len(self.periodic) else 0.0

    def trig_value(self, n: int) -> complex:
        total = 0j
        for f, c in zip(self._float_freqs(), self.coefficients):
            total += c * cmath.exp(2j * math.pi * ((f * n) % 1.0))
        return total

    def evaluate(self, n: int) -> complex:
        total = self.trig_value(n)
        if len(self.periodic):
            total += self.periodic[n % self.q]
        return total

    def _float_freqs(self):
        if not hasattr(self, "_ff"):
            self._ff = [to_float(f) for f in self.frequencies]
        return self._ff

    def evaluate_block(self, n: np.ndarray) -> np.ndarray:
        if self._bulk is not None:
            return self._bulk.evaluate_block(n)
        n = np.asarray(n, dtype=np.int64)
        total = np.zeros(len(n), dtype=np.complex128)
        for f, c in zip(self._float_freqs(), self.coefficients):
            total += c * np.exp(2j * np.pi * np.mod(f * n, 1.0))
        if len(self.periodic):
            total += self.periodic[np.mod(n, self.q)]
        return total

    def validate(self, B: BohrSet, x: int, block: int = DEFAULT_BLOCK) -> float:
        """Empirical mean of |1_B(n) - approx(n)| over n <= x."""
        total = 0.0
        for lo in range(1, x + 1, block):
            ns = np.arange(lo, min(lo + block, x + 1), dtype=np.int64)
            member = B.membership_block(ns).astype(np.float64)
            approx = self.evaluate_block(ns)
            total += float(np.abs(member - approx).sum())
        self.empirical_l1 = total / x
        return self.empirical_l1


class _BulkEvaluator:
    """Per-residue, per-piece tensor evaluation via FFT tables."""

    def __init__(self, rho, q: int, piece_tables: dict, periodic_only=None):
        self.floors = [LinearFloor(r) for r in rho]
        self.q = q
        self.piece_tables = piece_tables  # residue -> list of [table per dim]
        self.periodic_only = periodic_only

    def evaluate_block(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if self.periodic_only is not None:
            return self.periodic_only[np.mod(n, self.q)].astype(np.float64)
        fracs = [lf.frac_fixed(n)[0] for lf in self.floors]
        out = np.zeros(len(n), dtype=np.float64)
        if self.q == 1:
            for tables in self.piece_tables[0]:
                out += _tensor_eval(tables, fracs, slice(None))
            return out
        res = np.mod(n, self.q)
        for a, pieces in self.piece_tables.items():
            idx = np.flatnonzero(res == a)
            if not len(idx):
                continue
            sub = [f[idx] for f in fracs]
            acc = np.zeros(len(idx), dtype=np.float64)
            for tables in pieces:
                acc += _tensor_eval(tables, sub, slice(None))
            out[idx] = acc
        return out


def _tensor_eval(tables, fracs, sel):
    vals = None
    for table, frac in zip(tables, fracs):
        v = np.real(table.eval_fixed(frac[sel]))
        vals = v if vals is None else vals * v
    return vals


def trig_approximation(
    B: BohrSet,
    epsilon: float,
    max_terms: int = 1 << 21,
    grid_bits: int = 18,
) -> TrigApproximation:
    """Lemma-style decomposition 1_B = T + periodic + error with T a trig
    polynomial on irrational frequencies k.rho + r/q, nonnegative periodic
    weights, and certified error at most epsilon."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if B.phase_is_rational():
        q = 1
        for p in B.phase:
            pr = p.as_rational() if isinstance(p, ExactReal) else Fraction(p)
            q = math.lcm(q, pr.denominator)
        t = np.array([1.0 if B.membership(a) else 0.0 for a in range(q)])
        return TrigApproximation(
            frequencies=[],
            coefficients=[],
            q=q,
            periodic=t,
            error_bound=0.0,
            piece_count=0,
            label=B.label,
            _bulk=_BulkEvaluator((), q, {}, periodic_only=t),
        )

    dec = remove_rational_dependencies(B)
    boxes: dict[int, list[Box]] = {}
    for a in range(dec.q):
        row = []
        for piece in dec.pieces[a]:
            if isinstance(piece, Box):
                row.append(piece)
            else:
                box = piece.try_to_box()
                if box is None:
                    raise UnsupportedRegion(
                        "trig approximation needs box-decomposable pieces; "
                        f"residue {a} produced a genuine polytope"
                    )
                row.append(box)
        boxes[a] = row

    total_pieces = sum(len(v) for v in boxes.values())
    if total_pieces == 0:
        zero = np.zeros(max(dec.q, 1))
        return TrigApproximation(
            frequencies=[], coefficients=[], q=dec.q, periodic=zero,
            error_bound=0.0, piece_count=0, label=B.label,
            _bulk=_BulkEvaluator(dec.rho, dec.q, {a: [] for a in range(dec.q)}),
        )
    piece_budget = epsilon * dec.q / total_pieces
    dim_budget = piece_budget / dec.d_prime

    per_residue_coeffs: dict[int, dict] = {}
    piece_tables: dict[int, list] = {a: [] for a in range(dec.q)}
    orders = []
    achieved = 0.0
    for a in range(dec.q):
        agg: dict[tuple, complex] = {}
        for box in boxes[a]:
            dim_coeffs = []
            tables = []
            for iv in box.intervals:
                lo = to_float(iv.lo)
                length = to_float(iv.length())
                K = fejer.choose_K(
                    dim_budget, lambda k, L=length: fejer.interval_l1_bound(k, L)
                )
                orders.append(K)
                achieved += fejer.interval_l1_bound(K, length)
                co = fejer.smoothed_interval_coeffs(lo, lo + length, K)
                dim_coeffs.append(co)
                tables.append(fejer.SampledTorusFunction(co, grid_bits=grid_bits))
            piece_tables[a].append(tables)
            count = math.prod(len(c) for c in dim_coeffs)
            if count > max_terms:
                raise ResourceLimit(
                    f"{count} tensor coefficients exceed the {max_terms} budget"
                )
            for combo in product(*[c.items() for c in dim_coeffs]):
                k = tuple(item[0] for item in combo)
                coeff = math.prod((item[1] for item in combo), start=1.0 + 0j)
                agg[k] = agg.get(k, 0j) + coeff
        per_residue_coeffs[a] = agg

    periodic = np.array(
        [per_residue_coeffs[a].get((0,) * dec.d_prime, 0j).real for a in range(dec.q)]
    )
    periodic = np.maximum(periodic, 0.0)

    all_k = set()
    for agg in per_residue_coeffs.values():
        all_k.update(k for k in agg if any(k))
    freqs = []
    coeffs = []
    fld = dec.rho[0].field if dec.rho and isinstance(dec.rho[0], ExactReal) else None
    for k in sorted(all_k):
        base = None
        for ki, r in zip(k, dec.rho):
            term = _as_field(r, fld) * ki if fld is not None else Fraction(r) * ki
            base = term if base is None else base + term
        for r in range(dec.q):
            c = sum(
                cmath.exp(-2j * math.pi * r * a / dec.q)
                * per_residue_coeffs[a].get(k, 0j)
                for a in range(dec.q)
            ) / dec.q
            if abs(c) < 1e-15:
                continue
            freq = base + Fraction(r, dec.q)
            freqs.append(freq)
            coeffs.append(complex(c))
    if len(freqs) > max_terms:
        raise ResourceLimit(f"{len(freqs)} frequencies exceed the {max_terms} budget")

    return TrigApproximation(
        frequencies=freqs,
        coefficients=coeffs,
        q=dec.q,
        periodic=periodic,
        error_bound=achieved / dec.q,
        piece_count=total_pieces,
        fejer_orders=orders,
        label=B.label,
        _bulk=_BulkEvaluator(dec.rho, dec.q, piece_tables),
    )


def amalgamate(T: TrigApproximation) -> TrigApproximation:
    """Fold the periodic part into rational frequencies r/q via the finite
    Fourier expansion of the residue indicators; pointwise identical."""
    if not len(T.periodic) or not T.periodic.any():
        return TrigApproximation(
            frequencies=list(T.frequencies),
            coefficients=list(T.coefficients),
            q=1,
            periodic=np.zeros(1),
            error_bound=T.error_bound,
            piece_count=T.piece_count,
            fejer_orders=list(T.fejer_orders),
            empirical_l1=T.empirical_l1,
            label=T.label,
            _bulk=T._bulk,
        )
    q = T.q
    freqs = list(T.frequencies)
    coeffs = list(T.coefficients)
    for r in range(q):
        c = sum(
            T.periodic[a] * cmath.exp(-2j * math.pi * r * a / q) for a in range(q)
        ) / q
        if abs(c) < 1e-15:
            continue
        freqs.append(Fraction(r, q))
        coeffs.append(complex(c))
    return TrigApproximation(
        frequencies=freqs,
        coefficients=coeffs,
        q=1,
        periodic=np.zeros(1),
        error_bound=T.error_bound,
        piece_count=T.piece_count,
        fejer_orders=list(T.fejer_orders),
        empirical_l1=T.empirical_l1,
        label=T.label,
        _bulk=T._bulk,
    )
