"""Beatty sequences floor(alpha n + beta), the structural partitions for
irrational and rational alpha ratios, and the twisted multiplicity counting
function with its trigonometric decomposition."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import fejer
from .bohr import BohrSet, TrigApproximation, _mod1, amalgamate, trig_approximation
from .convex import Box, HPolytope, Interval, exact_cmp
from .errors import RationalRatio, ResourceLimit
from .fastfloor import LinearFloor
from .realfield import ExactReal, ceil_exact, floor_exact, frac_exact, to_float


class BeattySequence:
    """floor(alpha*n + beta) with alpha > 0 verified exactly."""

    def __init__(self, alpha, beta=0):
        self.alpha = alpha
        self.beta = beta
        if _sign_of(alpha) <= 0:
            raise ValueError("Beatty slope alpha must be positive")
        self._lf = LinearFloor(alpha, beta)

    def eval(self, n: int) -> int:
        return self._lf.floor_at(n)

    __call__ = eval

    def floors(self, n: np.ndarray) -> np.ndarray:
        return self._lf.floors(n)

    def __repr__(self):
        return f"BeattySequence({self.alpha!r}, {self.beta!r})"


def beatty_eval(seq: BeattySequence, n: int) -> int:
    return seq.eval(n)


def _sign_of(x) -> int:
    if isinstance(x, ExactReal):
        return x.sign()
    f = Fraction(x)
    return (f > 0) - (f < 0)


def _is_rational(x) -> bool:
    return not isinstance(x, ExactReal) or x.is_rational()


@dataclass
class PartitionPiece:
    offset: int  # the integer i (irrational kind) or r (rational kind)
    bohr: BohrSet
    linear_map: tuple | None = None  # (gamma, i): L(x) = gamma*x + i
    index_key: tuple | None = None  # rational kind: the (I, J) level pair
    grid_sets: list = dc_field(default_factory=list)
    grid_error_density: float | None = None
    empirical_density: float | None = None


@dataclass
class WindowReport:
    lo: int
    hi: int
    partition_exact: bool
    identity_exact: bool
    region_consistent: bool
    piece_counts: dict


@dataclass
class BeattyPartition:
    kind: str  # "irrational_ratio" | "rational_ratio"
    pieces: list
    params: dict
    verification: WindowReport | None = None

    def piece_of(self, n: int) -> int:
        """Index of the piece containing n (via the exact floor identities)."""
        idx = self._piece_indices(np.array([n], dtype=np.int64))[0]
        if idx < 0:
            raise AssertionError(f"n={n} fell outside the partition")
        return int(idx)

    def _piece_indices(self, ns: np.ndarray) -> np.ndarray:
        if self.kind == "irrational_ratio":
            s1: BeattySequence = self.params["s1"]
            s2: BeattySequence = self.params["s2"]
            gamma = self.params["gamma"]
            m = s1.floors(ns)
            target = s2.floors(ns)
            out = np.full(len(ns), -1, dtype=np.int64)
            seen = np.zeros(len(ns), dtype=np.int64)
            for pi, piece in enumerate(self.pieces):
                lf = LinearFloor(gamma, piece.offset)
                hit = lf.floors(m) == target
                out[hit & (out < 0)] = pi
                seen += hit
            self._last_multiplicity = seen
            return out
        p, q = self.params["p"], self.params["q"]
        theta, beta_p, beta_q = (
            self.params["theta"], self.params["beta_p"], self.params["beta_q"],
        )
        fp = LinearFloor(_scaled(theta, p), beta_p).floors(ns)
        fq = LinearFloor(_scaled(theta, q), beta_q).floors(ns)
        ft = LinearFloor(theta, 0).floors(ns)
        level_i = fp - p * ft
        level_j = fq - q * ft
        keymap = {piece.index_key: idx for idx, piece in enumerate(self.pieces)}
        out = np.full(len(ns), -1, dtype=np.int64)
        for (i, j), idx in keymap.items():
            out[(level_i == i) & (level_j == j)] = idx
        self._last_multiplicity = (out >= 0).astype(np.int64)
        return out

    def verify_window(self, lo: int = -(10**5), hi: int = 10**5,
                      region_window: int = 2000) -> WindowReport:
        """Exhaustive exactness check: every n in [lo, hi] sits in exactly one
        piece and satisfies its floor identity; region-based membership agrees
        with the identity on the smaller window."""
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        idx = self._piece_indices(ns)
        partition_exact = bool((idx >= 0).all()) and bool(
            (self._last_multiplicity == 1).all()
        )
        identity_exact = self._identity_holds(ns, idx)
        small = np.arange(-region_window, region_window + 1, dtype=np.int64)
        sidx = self._piece_indices(small)
        region_ok = True
        for pi, piece in enumerate(self.pieces):
            member = piece.bohr.membership_block(small)
            if not (member == (sidx == pi)).all():
                region_ok = False
                break
        counts = {
            pi: int((idx == pi).sum()) for pi in range(len(self.pieces))
        }
        report = WindowReport(lo, hi, partition_exact, identity_exact, region_ok, counts)
        self.verification = report
        for pi, piece in enumerate(self.pieces):
            piece.empirical_density = counts[pi] / len(ns)
        return report

    def _identity_holds(self, ns: np.ndarray, idx: np.ndarray) -> bool:
        if self.kind == "irrational_ratio":
            s1, s2 = self.params["s1"], self.params["s2"]
            gamma = self.params["gamma"]
            m = s1.floors(ns)
            target = s2.floors(ns)
            for pi, piece in enumerate(self.pieces):
                sel = idx == pi
                if not sel.any():
                    continue
                lf = LinearFloor(gamma, piece.offset)
                if not (lf.floors(m[sel]) == target[sel]).all():
                    return False
            return True
        p, q = self.params["p"], self.params["q"]
        theta = self.params["theta"]
        fp = LinearFloor(_scaled(theta, p), self.params["beta_p"]).floors(ns)
        fq = LinearFloor(_scaled(theta, q), self.params["beta_q"]).floors(ns)
        for pi, piece in enumerate(self.pieces):
            sel = idx == pi
            if not sel.any():
                continue
            lhs = p * fq[sel] - q * fp[sel]
            if not (lhs == piece.offset).all():
                return False
        return True


def _scaled(theta, k: int):
    if isinstance(theta, ExactReal):
        return theta * k
    return Fraction(theta) * k


# -- Lemma-style partition for an irrational ratio -------------------------------------


def partition_irrational_pair(
    s1: BeattySequence, s2: BeattySequence, epsilon: float = 0.1,
    verify: bool = True, window: int = 10**5,
) -> BeattyPartition:
    """Partition of Z into pieces A_i on which floor(alpha2 n + beta2) =
    floor(gamma * floor(alpha1 n + beta1) + i), gamma = alpha2/alpha1, with
    each A_i an explicit convex-region Bohr set and an epsilon-grid of box
    Bohr sets (boundary error retained as a reported density)."""
    alpha1, beta1 = s1.alpha, s1.beta
    alpha2, beta2 = s2.alpha, s2.beta
    fld = next(
        (x.field for x in (alpha1, alpha2, beta1, beta2) if isinstance(x, ExactReal)),
        None,
    )
    if fld is None:
        raise RationalRatio("both slopes are rational; use partition_rational_pair")
    a1 = _to_field(alpha1, fld)
    a2 = _to_field(alpha2, fld)
    b1 = _to_field(beta1, fld)
    b2 = _to_field(beta2, fld)
    gamma = a2 / a1
    if gamma.is_rational():
        raise RationalRatio(
            f"alpha2/alpha1 = {gamma.as_rational()} is rational; "
            "use partition_rational_pair"
        )
    # r_n = beta2 - gamma*beta1 + gamma*{alpha1 n + beta1} in [lo, lo + gamma)
    lo = b2 - gamma * b1
    i_min = floor_exact(lo) - 1
    i_max = floor_exact(lo + gamma) + 1
    K = max(2, math.ceil(1.0 / epsilon))
    pieces = []
    for i in range(i_min, i_max + 1):
        u = gamma * b1 - b2 + i  # floor identity holds iff 0 <= u - g*t1 + t2 < 1
        region = HPolytope(
            2,
            [
                ((gamma, Fraction(-1)), u, False),
                ((-gamma, Fraction(1)), fld.one - u, True),
            ],
        )
        bohr = BohrSet((a1, a2), region, offset=(b1, b2), label=f"A[{i}]")
        grid = []
        for k in range(K):
            cell_lo = Fraction(k, K)
            cell_hi = Fraction(k + 1, K)
            t1_lo = (u - 1 + cell_lo) / gamma
            t1_hi = (u + cell_lo) / gamma
            iv1 = Interval(Fraction(0), Fraction(1)).intersect(
                Interval(t1_lo, t1_hi, False, False)
            )
            if iv1.is_empty():
                continue
            grid.append(
                BohrSet(
                    (a1, a2),
                    Box([iv1, Interval(cell_lo, cell_hi)]),
                    offset=(b1, b2),
                    label=f"A[{i}]grid[{k}]",
                )
            )
        pieces.append(
            PartitionPiece(
                offset=i, bohr=bohr, linear_map=(gamma, i), grid_sets=grid
            )
        )
    part = BeattyPartition(
        kind="irrational_ratio",
        pieces=pieces,
        params={
            "s1": s1, "s2": s2, "gamma": gamma, "epsilon": epsilon, "grid_K": K,
            "r_lo": lo, "r_hi": lo + gamma,
        },
    )
    if verify:
        report = part.verify_window(-window, window)
        if not (report.partition_exact and report.identity_exact):
            raise AssertionError("partition failed its exhaustive window check")
        _measure_grid_error(part, window=min(window, 10**4))
    return part


def _measure_grid_error(part: BeattyPartition, window: int) -> None:
    ns = np.arange(-window, window + 1, dtype=np.int64)
    idx = part._piece_indices(ns)
    for pi, piece in enumerate(part.pieces):
        exact = idx == pi
        approx = np.zeros(len(ns), dtype=bool)
        for g in piece.grid_sets:
            approx |= g.membership_block(ns)
        piece.grid_error_density = float((exact != approx).mean())


def _to_field(x, fld):
    if isinstance(x, ExactReal):
        return x
    return fld.rational(Fraction(x))


# -- Lemma-style partition for a rational ratio ------------------------------------------


def partition_rational_pair(
    p: int, q: int, theta, beta_p=0, beta_q=0,
    verify: bool = True, window: int = 10**5,
) -> BeattyPartition:
    """Partition of Z into one-dimensional Bohr sets with phase theta on which
    p*floor(q theta n + beta_q) - q*floor(p theta n + beta_p) is the constant
    r = p*J - q*I; empty interval pieces are dropped exactly."""
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise ValueError("p, q must be coprime positive integers")
    theta_rational = _is_rational(theta)
    breaks = {Fraction(0), Fraction(1)}
    breaks |= _level_breaks(p, beta_p)
    breaks |= _level_breaks(q, beta_q)
    pts = _sorted_unique(breaks)
    pieces = []
    ip_base = _floor_any(beta_p)
    iq_base = _floor_any(beta_q)
    for lo, hi in zip(pts[:-1], pts[1:]):
        # level values on [lo, hi): floor(p*t + beta_p) is constant there
        level_i = ip_base + _count_levels(p, beta_p, lo)
        level_j = iq_base + _count_levels(q, beta_q, lo)
        r = p * level_j - q * level_i
        region = Box([Interval(lo, hi)])
        pieces.append(
            PartitionPiece(
                offset=r,
                bohr=BohrSet((theta,), region, label=f"B[{r}]@[{to_float(lo):.4f},{to_float(hi):.4f})"),
                index_key=(level_i, level_j),
            )
        )
    part = BeattyPartition(
        kind="rational_ratio",
        pieces=pieces,
        params={
            "p": p, "q": q, "theta": theta, "beta_p": beta_p, "beta_q": beta_q,
            "theta_rational": theta_rational,
        },
    )
    if verify:
        report = part.verify_window(-window, window)
        if not (report.partition_exact and report.identity_exact):
            raise AssertionError("partition failed its exhaustive window check")
    return part


def _level_breaks(p: int, beta) -> set:
    """Break points (j - {beta})/p in (0, 1) of t -> floor(p t + beta)."""
    frac = _mod1(beta)
    out = set()
    for j in range(0 if _cmp0(frac) else 1, p + 1):
        t = _div_int(_sub_any(j, frac), p)
        if _in_open_unit(t):
            out.add(t)
    return out


def _cmp0(x) -> bool:
    return exact_cmp(x, 0) != 0


def _sub_any(j, frac):
    if isinstance(frac, ExactReal):
        return frac.field.rational(j) - frac
    return Fraction(j) - Fraction(frac)


def _div_int(x, p: int):
    if isinstance(x, ExactReal):
        return x / p
    return Fraction(x) / p


def _in_open_unit(t) -> bool:
    return exact_cmp(t, 0) > 0 and exact_cmp(t, 1) < 0


def _sorted_unique(vals) -> list:
    out = []
    for v in sorted(vals, key=_SortKey):
        if not out or exact_cmp(out[-1], v) != 0:
            out.append(v)
    return out


class _SortKey:
    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return exact_cmp(self.v, other.v) < 0


def _count_levels(p: int, beta, t) -> int:
    """floor(p*t + beta) - floor(beta) at the segment starting point t."""
    if isinstance(t, ExactReal) or isinstance(beta, ExactReal):
        val = _mul_any(p, t)
        val = _add_any(val, beta)
        return _floor_any(val) - _floor_any(beta)
    return math.floor(p * Fraction(t) + Fraction(beta)) - math.floor(Fraction(beta))


def _mul_any(p: int, t):
    if isinstance(t, ExactReal):
        return t * p
    return Fraction(t) * p


def _add_any(a, b):
    if isinstance(a, ExactReal) or isinstance(b, ExactReal):
        if not isinstance(a, ExactReal):
            a = b.field.rational(Fraction(a))
        return a + b
    return Fraction(a) + Fraction(b)


def _floor_any(x) -> int:
    if isinstance(x, ExactReal):
        return floor_exact(x)
    return math.floor(Fraction(x))


# -- multiplicity counting function ------------------------------------------------------


class MultiplicityCounter:
    """N(m) = sum over n in B with floor(alpha n + beta) = m of e(gamma n)."""

    def __init__(self, B: BohrSet | None, alpha, beta=0, gamma_twist=0):
        if _sign_of(alpha) <= 0:
            raise ValueError("alpha must be positive")
        self.B = B
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma_twist
        inv = _invert(alpha)
        self.inv_alpha = inv
        self.N_floor = _floor_any(inv)
        self._gamma_lf = None
        if not _is_zero(gamma_twist):
            self._gamma_lf = LinearFloor(gamma_twist, 0)

    def count_range(self, m: int) -> tuple[int, int]:
        """Integers n with floor(alpha n + beta) = m: [start, stop)."""
        start = _ceil_any(_div_alpha(m, self.beta, self.alpha))
        stop = _ceil_any(_div_alpha(m + 1, self.beta, self.alpha))
        return start, stop

    def count(self, m: int) -> complex:
        start, stop = self.count_range(m)
        total = 0j
        for n in range(start, stop):
            if self.B is not None and not self.B.membership(n):
                continue
            if self._gamma_lf is None:
                total += 1.0
            else:
                frac = _mod1(self._gamma_lf.value_at(n))
                total += cmath.exp(2j * math.pi * to_float(frac))
        return total

    __call__ = count

    def counts_block(self, m_lo: int, m_hi: int) -> np.ndarray:
        """N(m) for m in [m_lo, m_hi), assembled by one sweep over n."""
        lf = LinearFloor(self.alpha, self.beta)
        n_lo, _ = self.count_range(m_lo)
        _, n_hi = self.count_range(m_hi - 1)
        ns = np.arange(n_lo, n_hi, dtype=np.int64)
        if not len(ns):
            return np.zeros(m_hi - m_lo, dtype=np.complex128)
        ms = lf.floors(ns)
        keep = (ms >= m_lo) & (ms < m_hi)
        if self.B is not None:
            keep &= self.B.membership_block(ns)
        ns, ms = ns[keep], ms[keep]
        if self._gamma_lf is None:
            weights = np.ones(len(ns), dtype=np.complex128)
        else:
            fr, _ = self._gamma_lf.frac_fixed(ns)
            weights = np.exp(2j * np.pi * (fr.astype(np.float64) / 2.0**64))
        out = np.zeros(m_hi - m_lo, dtype=np.complex128)
        np.add.at(out, ms - m_lo, weights)
        return out

    def multiplicity_interval_set(self) -> BohrSet:
        """The set A_2 of m with N_floor + 1 candidate integers (Lemma-style
        count split); a one-dimensional Bohr set with phase 1/alpha."""
        hfrac = _mod1(self.inv_alpha)
        lo = _sub_scalar(1, hfrac)
        region = Box([Interval(lo, Fraction(1), False, False)])
        return BohrSet(
            (self.inv_alpha,),
            region,
            offset=(_neg_div(self.beta, self.alpha),),
            label="A2",
        )

    def trig_decomposition(self, epsilon: float, **kw) -> TrigApproximation:
        return counter_trig_decomposition(self, epsilon, **kw)


def multiplicity_counter(B, alpha, beta, gamma_twist, m: int) -> complex:
    return MultiplicityCounter(B, alpha, beta, gamma_twist).count(m)


def _invert(alpha):
    if isinstance(alpha, ExactReal):
        return alpha.field.one / alpha
    return 1 / Fraction(alpha)


def _is_zero(x) -> bool:
    if isinstance(x, ExactReal):
        return x.is_zero()
    return Fraction(x) == 0


def _ceil_any(x) -> int:
    if isinstance(x, ExactReal):
        return ceil_exact(x)
    return math.ceil(Fraction(x))


def _div_alpha(m, beta, alpha):
    if isinstance(alpha, ExactReal):
        num = alpha.field.rational(m) - _to_field(beta, alpha.field)
        return num / alpha
    return (Fraction(m) - Fraction(beta)) / Fraction(alpha)


def _sub_scalar(a, b):
    if isinstance(b, ExactReal):
        return b.field.rational(a) - b
    return Fraction(a) - Fraction(b)


def _neg_div(beta, alpha):
    if isinstance(alpha, ExactReal):
        return -(_to_field(beta, alpha.field) / alpha)
    return -Fraction(beta) / Fraction(alpha)


# -- trig decomposition of the counter ----------------------------------------------------


class _CounterBulk:
    """Structured bulk evaluator: per-frequency ceiling phases are a unit
    phase in m times a Fejer table in s_m = {(m - beta)/alpha}."""

    def __init__(self, counter, const_term, plain_terms, a2_terms, a2_bulk):
        self.counter = counter
        self.const = const_term
        self.plain = plain_terms  # list of (coef, LinearFloor, table|None)
        self.a2 = a2_terms
        self.a2_bulk = a2_bulk
        self.s_lf = LinearFloor(counter.inv_alpha, _neg_div(counter.beta, counter.alpha))

    def evaluate_block(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64)
        s_fixed, _ = self.s_lf.frac_fixed(m)
        out = np.full(len(m), self.const, dtype=np.complex128)
        out += self._sum_terms(self.plain, m, s_fixed)
        if self.a2 is not None:
            gval = self._sum_terms(self.a2[0], m, s_fixed) + self.a2[1]
            out += self.a2_bulk.evaluate_block(m) * gval
        return out

    def _sum_terms(self, terms, m, s_fixed):
        total = np.zeros(len(m), dtype=np.complex128)
        for coef, lf, table in terms:
            phase = np.ones(len(m), dtype=np.complex128) if lf is None else np.exp(
                2j * np.pi * (lf.frac_fixed(m)[0].astype(np.float64) / 2.0**64)
            )
            if table is not None:
                phase = phase * table.eval_fixed(s_fixed)
            total += coef * phase
        return total


def counter_trig_decomposition(
    counter: MultiplicityCounter,
    epsilon: float,
    max_terms: int = 4096,
    coeff_floor: float = 1e-10,
) -> TrigApproximation:
    """Approximate N(m) by a trig polynomial with certified budget epsilon:
    the interval-count split A1/A2 goes through the Bohr-set approximation
    machinery, and each ceiling phase e(zeta * ceil((m-beta)/alpha)) is the
    pure frequency zeta/alpha times a Fejer-smoothed jump function of
    s_m = {(m-beta)/alpha}."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    alpha, beta, gamma = counter.alpha, counter.beta, counter.gamma
    if (
        _is_rational(alpha) and _is_rational(beta) and _is_rational(gamma)
        and (counter.B is None or counter.B.phase_is_rational())
    ):
        return _exact_periodic_counter(counter)

    N0 = counter.N_floor
    a2_set = counter.multiplicity_interval_set()

    if counter.B is None and _is_zero(gamma):
        # N = N0 + 1_{A2}: a single Bohr-set approximation suffices.
        ta2 = amalgamate(trig_approximation(a2_set, epsilon))
        freqs = list(ta2.frequencies)
        coeffs = list(ta2.coefficients)
        _bump_constant(freqs, coeffs, N0)
        out = TrigApproximation(
            frequencies=freqs, coefficients=coeffs, q=1,
            periodic=np.zeros(1), error_bound=ta2.error_bound,
            piece_count=ta2.piece_count, fejer_orders=list(ta2.fejer_orders),
            label="counter",
        )
        out._bulk = _ShiftedBulk(ta2, N0)
        return out

    # General path: B (or the twist) contributes ceiling phases.
    if counter.B is not None:
        tb = amalgamate(trig_approximation(counter.B, epsilon / (6.0 * (N0 + 1))))
        b_freqs = list(tb.frequencies)
        b_coeffs = list(tb.coefficients)
        base_error = tb.error_bound * (N0 + 1) * max(1.0, to_float(alpha))
    else:
        b_freqs = [Fraction(0)]
        b_coeffs = [1.0 + 0j]
        base_error = 0.0

    coef_mass = sum(abs(c) for c in b_coeffs)
    grid_budget = epsilon / (3.0 * max(1, N0 + 1) * max(coef_mass, 1.0))
    a2_budget = min(epsilon / (3.0 * max(coef_mass, 1.0)), 0.45)

    fld = alpha.field if isinstance(alpha, ExactReal) else None
    achieved = base_error

    # Per-frequency data for the ceiling phase e(zeta' * ceil((m-beta)/alpha)).
    zeta_parts = []
    for zeta, bcoef in zip(b_freqs, b_coeffs):
        zfrac = _mod1(_add_freq(zeta, gamma, fld))
        zfloat = to_float(zfrac)
        j_weight = sum(
            cmath.exp(2j * math.pi * ((zfloat * j) % 1.0)) for j in range(N0)
        )
        j_top = cmath.exp(2j * math.pi * ((zfloat * N0) % 1.0))
        if exact_cmp(zfrac, 0) == 0:
            zeta_parts.append(
                dict(bcoef=bcoef, j_weight=j_weight, j_top=j_top, constant=True)
            )
            continue
        variation = fejer.ceiling_phase_variation(zfloat)
        K = fejer.choose_K(grid_budget, lambda k, v=variation: fejer.bv_l1_bound(k, v))
        achieved += fejer.bv_l1_bound(K, variation) * abs(bcoef) * (N0 + 1)
        gco = fejer.smoothed_bv_coeffs(fejer.ceiling_phase_hat(zfloat), K)
        off = cmath.exp(-2j * math.pi * zfloat * to_float(beta) / to_float(alpha))
        zeta_parts.append(
            dict(
                bcoef=bcoef, j_weight=j_weight, j_top=j_top, constant=False,
                zfrac=zfrac, gco=gco,
                table=fejer.SampledTorusFunction(gco, grid_bits=16),
                off=off, freq_m=_div_freq(zfrac, alpha, fld),
            )
        )

    # Structured parts for the bulk evaluator.
    const_bulk = sum(p["bcoef"] * p["j_weight"] for p in zeta_parts if p["constant"])
    plain_terms = []
    a2_factor = []
    for p in zeta_parts:
        if p["constant"]:
            a2_factor.append((p["bcoef"] * p["j_top"], None, None))
            continue
        lf = LinearFloor(p["freq_m"], 0)
        if N0:
            plain_terms.append((p["bcoef"] * p["j_weight"] * p["off"], lf, p["table"]))
        a2_factor.append((p["bcoef"] * p["j_top"] * p["off"], lf, p["table"]))

    ta2 = amalgamate(trig_approximation(a2_set, a2_budget))
    achieved += ta2.error_bound * max(coef_mass, 1.0)

    # Flattened symbolic frequency list.  The tensor products are pruned by
    # coefficient magnitude; the discarded mass is an honest sup-norm gap
    # between the symbolic polynomial and the structured evaluator, and is
    # added to the reported error bound.
    beta_f = to_float(beta)
    alpha_f = to_float(alpha)
    candidates: list[tuple[float, object]] = []  # (|coef|, maker)
    flat: dict = {}

    def _emit(freq_maker, coef):
        candidates.append((abs(coef), (freq_maker, coef)))

    for p in zeta_parts:
        if p["constant"]:
            if N0 and abs(p["bcoef"] * p["j_weight"]) > coeff_floor:
                _merge(flat, Fraction(0), p["bcoef"] * p["j_weight"])
            continue
        p["u_arr"] = np.array(sorted(p["gco"]), dtype=np.int64)
        p["gc_arr"] = np.array([p["gco"][u] for u in p["u_arr"]])
        p["phase_arr"] = p["gc_arr"] * np.exp(
            -2j * np.pi * ((to_float(p["zfrac"]) + p["u_arr"]) * beta_f / alpha_f)
        )
        p["freq_cache"] = {}
        if not N0:
            continue
        base = p["bcoef"] * p["j_weight"]
        for u, c in zip(p["u_arr"], base * p["phase_arr"]):
            if abs(c) >= coeff_floor:
                _emit((p, int(u), None), complex(c))
    a2_fc = list(zip(ta2.frequencies, ta2.coefficients))
    for p in zeta_parts:
        if p["constant"]:
            for fa, ca in a2_fc:
                c = ca * p["bcoef"] * p["j_top"]
                if abs(c) > coeff_floor:
                    _merge(flat, fa, c)
            continue
        base = p["bcoef"] * p["j_top"]
        ca_arr = np.array([ca for _, ca in a2_fc])
        prod = np.outer(ca_arr, base * p["phase_arr"])
        keep = np.argwhere(np.abs(prod) >= coeff_floor)
        for ia, iu in keep:
            _emit((p, int(p["u_arr"][iu]), a2_fc[ia][0]), complex(prod[ia, iu]))

    candidates.sort(key=lambda t: -t[0])
    dropped_mass = sum(m for m, _ in candidates[max_terms:])
    for _, (maker, coef) in candidates[:max_terms]:
        p, u, fa = maker
        fr = p["freq_cache"].get(u)
        if fr is None:
            fr = _div_freq(_add_int(p["zfrac"], u, fld), alpha, fld)
            p["freq_cache"][u] = fr
        if fa is not None:
            fr = _add_freq(fa, fr, fld)
        _merge(flat, fr, coef)

    freqs = [Fraction(0)]
    coeffs = [0j]
    for fr, c in flat.items():
        if exact_cmp(_mod1(fr), 0) == 0:
            coeffs[0] += c
            continue
        freqs.append(fr)
        coeffs.append(c)

    out = TrigApproximation(
        frequencies=freqs, coefficients=coeffs, q=1, periodic=np.zeros(1),
        error_bound=achieved, piece_count=ta2.piece_count,
        symbolic_tail=float(dropped_mass), label="counter",
    )
    out._bulk = _CounterBulk(counter, const_bulk, plain_terms, (a2_factor, 0j), ta2)
    return out


class _ShiftedBulk:
    def __init__(self, inner: TrigApproximation, shift: float):
        self.inner = inner
        self.shift = shift

    def evaluate_block(self, m: np.ndarray) -> np.ndarray:
        return self.inner.evaluate_block(m) + self.shift


def _bump_constant(freqs, coeffs, add):
    for i, f in enumerate(freqs):
        if not isinstance(f, ExactReal) and Fraction(f) == 0:
            coeffs[i] = coeffs[i] + add
            return
    freqs.insert(0, Fraction(0))
    coeffs.insert(0, complex(add))


def _exact_periodic_counter(counter: MultiplicityCounter) -> TrigApproximation:
    """Everything rational: N is exactly periodic; return its finite Fourier
    expansion with zero error."""
    alpha = Fraction(counter.alpha) if not isinstance(counter.alpha, ExactReal) else counter.alpha.as_rational()
    beta = Fraction(counter.beta) if not isinstance(counter.beta, ExactReal) else counter.beta.as_rational()
    gamma = Fraction(counter.gamma) if not isinstance(counter.gamma, ExactReal) else counter.gamma.as_rational()
    a, b = alpha.numerator, alpha.denominator
    period = a
    shift = b  # m -> m + a moves the candidate window by exactly b
    t = 1
    if gamma != 0:
        g = Fraction(shift) * gamma
        t = math.lcm(t, g.denominator)
    if counter.B is not None:
        qb = 1
        for p in counter.B.phase:
            pr = p.as_rational() if isinstance(p, ExactReal) else Fraction(p)
            qb = math.lcm(qb, pr.denominator)
        t = math.lcm(t, qb // math.gcd(qb, shift))
    period *= t
    vals = np.array([counter.count(m) for m in range(period)])
    spec = np.fft.fft(vals) / period
    freqs = []
    coeffs = []
    for j, c in enumerate(spec):
        if abs(c) < 1e-12:
            continue
        freqs.append(Fraction(j, period))
        coeffs.append(complex(c))
    out = TrigApproximation(
        frequencies=freqs, coefficients=coeffs, q=1, periodic=np.zeros(1),
        error_bound=0.0, label="counter-periodic",
    )
    out._bulk = _PeriodicBulk(vals)
    return out


class _PeriodicBulk:
    def __init__(self, vals: np.ndarray):
        self.vals = vals

    def evaluate_block(self, m: np.ndarray) -> np.ndarray:
        return self.vals[np.mod(np.asarray(m, dtype=np.int64), len(self.vals))]


def _add_freq(a, b, fld):
    if _is_zero(b):
        return a
    if isinstance(a, ExactReal) or isinstance(b, ExactReal) or fld is not None:
        f = fld if fld is not None else (a.field if isinstance(a, ExactReal) else b.field)
        av = a if isinstance(a, ExactReal) else f.rational(Fraction(a))
        bv = b if isinstance(b, ExactReal) else f.rational(Fraction(b))
        return av + bv
    return Fraction(a) + Fraction(b)


def _add_int(a, u: int, fld):
    return _add_freq(a, Fraction(u), fld)


def _div_freq(a, alpha, fld):
    if isinstance(alpha, ExactReal):
        av = a if isinstance(a, ExactReal) else alpha.field.rational(Fraction(a))
        return av / alpha
    return _mod1_any_div(a, alpha)


def _mod1_any_div(a, alpha):
    if isinstance(a, ExactReal):
        return a / a.field.rational(Fraction(alpha))
    return Fraction(a) / Fraction(alpha)


def _merge(flat: dict, freq, coef):
    flat[freq] = flat.get(freq, 0j) + coef


def validate_counter(
    T: TrigApproximation, counter: MultiplicityCounter, m_max: int,
    block: int = 1 << 16,
) -> float:
    """Empirical mean of |N(m) - approx(m)| over 1 <= m <= m_max."""
    total = 0.0
    for lo in range(1, m_max + 1, block):
        hi = min(lo + block, m_max + 1)
        exact = counter.counts_block(lo, hi)
        approx = T.evaluate_block(np.arange(lo, hi, dtype=np.int64))
        total += float(np.abs(exact - approx).sum())
    T.empirical_l1 = total / m_max
    return T.empirical_l1
