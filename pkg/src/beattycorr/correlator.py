"""Logarithmic correlation experiments: the two-point and k-point sums,
the rational-ratio exact limit, the dilation orthogonality check, the
pretentious product comparison, and the k-point lattice scaffolding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .averaging import AverageSeries, StreamingAverager
from .beatty import BeattySequence, partition_rational_pair
from .bohr import BohrSet, density, integer_relation_lattice
from .convex import Box, Interval
from .errors import (
    DependentPhases,
    EmptyBohrSet,
    IrrationalRatio,
    NoValidW,
    ResourceLimit,
    VanishingFunction,
    WIsRequired,
)
from .fastfloor import LinearFloor
from .multfunc import MultiplicativeFunction, SieveTable, liouville, memory_budget
from .realfield import ExactReal, to_float

DEFAULT_BLOCK = 1 << 19


@dataclass
class CorrelationSpec:
    """Product of multiplicative functions along Beatty sequences, optionally
    twisted by e(gamma n) and restricted to a Bohr set."""

    factors: list  # (MultiplicativeFunction, BeattySequence) pairs
    twist: object = 0
    restriction: BohrSet | None = None
    x_max: int = 10**6
    checkpoint_ratio: float = 10.0
    label: str = ""

    def __post_init__(self):
        if not self.factors:
            raise ValueError("factors must be nonempty")

    def sieve_limit_needed(self) -> int:
        needed = 1
        for f, seq in self.factors:
            if f.name == "liouville":
                needed = max(needed, seq.eval(self.x_max) + 1)
        return needed


@dataclass
class CorrelationReport:
    series: AverageSeries
    final_value: complex  # harmonic-normalized log average at X_max
    final_natural: complex
    predicted_value: complex | None = None
    prediction_note: str = ""
    verdict: str = "inconclusive"
    tolerance: float = 0.05
    label: str = ""

    def log_series(self):
        return self.series.log_values_normalized


def _bind_sieves(factors, sieve: SieveTable | None, needed: int):
    """Attach a sieve-backed bulk rule to any unbound Liouville factor."""
    out = []
    table = sieve
    for f, seq in factors:
        if f.name == "liouville" and f.block_rule is None:
            if table is None or table.limit < needed:
                if needed // 8 > memory_budget():
                    raise ResourceLimit(
                        f"needed sieve of {needed} exceeds the memory budget"
                    )
                from .multfunc import liouville_sieve

                table = liouville_sieve(needed)
            f = liouville(table)
        out.append((f, seq))
    return out, table


def correlate(
    spec: CorrelationSpec,
    sieve: SieveTable | None = None,
    predicted: complex | None = None,
    prediction_note: str = "",
    tolerance: float = 0.05,
    trend_slack: float | None = None,
    block: int = DEFAULT_BLOCK,
) -> CorrelationReport:
    """Single streaming pass over n <= X_max computing the logarithmic and
    natural averages of the factor product at geometric checkpoints.

    Beatty floors are exact (fixed-point stepping with exact fallback); the
    reduction order is fixed by the block partition, so results are
    deterministic for a given block size.
    """
    factors, _ = _bind_sieves(spec.factors, sieve, spec.sieve_limit_needed())
    twist_lf = None
    tw = spec.twist
    if isinstance(tw, ExactReal):
        if not tw.is_zero():
            twist_lf = LinearFloor(tw, 0)
    elif Fraction(tw) != 0:
        twist_lf = LinearFloor(tw, 0)
    avg = StreamingAverager(spec.x_max, spec.checkpoint_ratio)
    n = 1
    while n <= spec.x_max:
        hi = min(n + block, spec.x_max + 1)
        ns = np.arange(n, hi, dtype=np.int64)
        prod = np.ones(len(ns), dtype=np.float64)
        for f, seq in factors:
            prod *= f.values_block(seq.floors(ns))
        if spec.restriction is not None:
            prod *= spec.restriction.membership_block(ns)
        if twist_lf is not None:
            fr, _ = twist_lf.frac_fixed(ns)
            vals = prod * np.exp(2j * np.pi * (fr.astype(np.float64) / 2.0**64))
        else:
            vals = prod.astype(np.complex128)
        avg.feed(vals)
        n = hi
    series = avg.finish()
    final = complex(series.log_values_normalized[-1])
    final_nat = complex(series.natural_values[-1])
    verdict = _assess(series, predicted, tolerance, trend_slack)
    return CorrelationReport(
        series=series,
        final_value=final,
        final_natural=final_nat,
        predicted_value=predicted,
        prediction_note=prediction_note,
        verdict=verdict,
        tolerance=tolerance,
        label=spec.label,
    )


def _assess(series: AverageSeries, predicted, tolerance, trend_slack) -> str:
    if predicted is None:
        return "inconclusive"
    final = complex(series.log_values_normalized[-1])
    err = abs(final - complex(predicted))
    if err > 2 * tolerance:
        return "inconsistent"
    verdict = "consistent" if err <= tolerance else "inconclusive"
    if trend_slack is not None and verdict == "consistent":
        vals = [abs(complex(v)) for v in series.log_values_normalized]
        xs = series.checkpoints
        decades = [vals[i] for i in range(len(xs))]
        tail = decades[-3:]
        if len(tail) == 3 and not (
            tail[0] + trend_slack >= tail[1] and tail[1] + trend_slack >= tail[2]
        ):
            verdict = "inconclusive"
    return verdict


# -- rational-ratio exact limit -----------------------------------------------------------


@dataclass
class RationalLimitPrediction:
    p: int
    q: int
    predicted: float
    piece_densities: list  # (r, density) for the r = 0 pieces
    limit_exists: bool = True
    nonzero: bool = False
    witnesses: list = dc_field(default_factory=list)
    note: str = ""


def rational_limit_predict(
    f: MultiplicativeFunction, s1: BeattySequence, s2: BeattySequence
) -> RationalLimitPrediction:
    """Predicted value of lim E^log f(floor(a1 n + b1)) f(floor(a2 n + b2))
    for a completely multiplicative non-vanishing f with a1/a2 rational:
    f(p) f(q) times the total density of the r = 0 partition pieces."""
    if not f.completely_multiplicative:
        raise VanishingFunction(
            "the rational-case limit needs a completely multiplicative function"
        )
    for pr in (2, 3, 5, 7, 11, 13):
        if f.prime_power_rule(pr, 1) == 0:
            raise VanishingFunction(f"{f.name} vanishes at {pr}")
    ratio = _exact_ratio(s1.alpha, s2.alpha)
    if ratio is None:
        raise IrrationalRatio("alpha1/alpha2 is irrational")
    p, q = ratio.numerator, ratio.denominator
    theta = _divide_by(s1.alpha, p)
    part = partition_rational_pair(
        p, q, theta, s1.beta, s2.beta, verify=True, window=10**4
    )
    dens = []
    witnesses = []
    total = Fraction(0)
    total_float = 0.0
    for piece in part.pieces:
        if piece.offset != 0:
            continue
        d = density(piece.bohr, mode="theoretical")
        dens.append((piece.offset, d))
        total_float += d.value
        members = piece.bohr.members_upto(2000)
        witnesses.extend(int(v) for v in members[:3])
    fp = f.eval(p)
    fq = f.eval(q)
    predicted = fp * fq * total_float
    nonzero = total_float > 0
    note = (
        f"floor(a1 m + b1) = (p/q) floor(a2 m + b2) holds for "
        f"{'infinitely many' if nonzero else 'at most finitely many'} m "
        f"(total r=0 density {total_float:.6g})"
    )
    return RationalLimitPrediction(
        p=p, q=q, predicted=predicted, piece_densities=dens,
        nonzero=nonzero, witnesses=sorted(set(witnesses))[:5], note=note,
    )


def _exact_ratio(a1, a2) -> Fraction | None:
    if isinstance(a1, ExactReal) or isinstance(a2, ExactReal):
        fld = a1.field if isinstance(a1, ExactReal) else a2.field
        x1 = a1 if isinstance(a1, ExactReal) else fld.rational(Fraction(a1))
        x2 = a2 if isinstance(a2, ExactReal) else fld.rational(Fraction(a2))
        ratio = x1 / x2
        return ratio.as_rational() if ratio.is_rational() else None
    return Fraction(a1) / Fraction(a2)


def _divide_by(alpha, p: int):
    if isinstance(alpha, ExactReal):
        return alpha / p
    return Fraction(alpha) / p


# -- orthogonality criterion check -----------------------------------------------------------


def kbsz_check(
    a_block, prime_pairs, x: int, ratio: float = 10.0, block: int = DEFAULT_BLOCK
) -> dict:
    """|E^log a(pn) conj(a(qn))| for each prime pair; purely diagnostic.

    a_block maps an int64 array to complex values of the sequence.
    """
    out = {}
    for p, q in prime_pairs:
        if p == q:
            raise ValueError("pairs must have p != q")
        avg = StreamingAverager(x, ratio)
        n = 1
        while n <= x:
            hi = min(n + block, x + 1)
            ns = np.arange(n, hi, dtype=np.int64)
            vals = a_block(p * ns) * np.conj(a_block(q * ns))
            avg.feed(np.asarray(vals, dtype=np.complex128))
            n = hi
        series = avg.finish()
        out[(p, q)] = abs(complex(series.log_values_normalized[-1]))
    return out


# -- pretentious product verification ---------------------------------------------------------


@dataclass
class PretentiousProductReport:
    joint: CorrelationReport
    marginal_logs: list
    marginal_naturals: list
    product_log: complex
    product_natural: complex
    independent: bool
    verdict: str
    note: str = ""


def verify_pretentious_product(
    f_list,
    alphas,
    betas=None,
    x: int = 10**6,
    tolerance: float = 0.02,
    strict: bool = True,
    ratio: float = 10.0,
) -> PretentiousProductReport:
    """Joint logarithmic mean of prod f_i(floor(alpha_i n + beta_i)) against
    the product of the marginal means of the f_i at the same X.

    The product formula is only predicted when 1, alpha_1, ..., alpha_k are
    Q-linearly independent; with strict=False a dependent tuple is still
    computed (reproducing counterexamples) and flagged in the report."""
    if betas is None:
        betas = [0] * len(alphas)
    relations = integer_relation_lattice(list(alphas))
    independent = not relations
    if not independent and strict:
        raise DependentPhases(
            f"1 and the slopes admit the integer relation(s) {relations}; "
            "pass strict=False to compute the counterexample anyway"
        )
    spec = CorrelationSpec(
        factors=[
            (f, BeattySequence(a, b)) for f, a, b in zip(f_list, alphas, betas)
        ],
        x_max=x,
        checkpoint_ratio=ratio,
        label="pretentious-product-joint",
    )
    joint = correlate(spec)
    marg_logs = []
    marg_nats = []
    for f in f_list:
        avg = StreamingAverager(x, ratio)
        n = 1
        while n <= x:
            hi = min(n + DEFAULT_BLOCK, x + 1)
            ns = np.arange(n, hi, dtype=np.int64)
            avg.feed(f.values_block(ns).astype(np.complex128))
            n = hi
        s = avg.finish()
        marg_logs.append(complex(s.log_values_normalized[-1]))
        marg_nats.append(complex(s.natural_values[-1]))
    prod_log = math.prod(marg_logs, start=1 + 0j)
    prod_nat = math.prod(marg_nats, start=1 + 0j)
    if independent:
        ok = abs(joint.final_natural - prod_nat) <= tolerance
        verdict = "consistent" if ok else "inconsistent"
        note = "independence hypothesis holds; product formula expected"
    else:
        verdict = "inconclusive"
        note = (
            "independence hypothesis fails; the product formula is not "
            "predicted for this tuple"
        )
    return PretentiousProductReport(
        joint=joint,
        marginal_logs=marg_logs,
        marginal_naturals=marg_nats,
        product_log=prod_log,
        product_natural=prod_nat,
        independent=independent,
        verdict=verdict,
        note=note,
    )


# -- k-point scaffolding --------------------------------------------------------------------


@dataclass
class KPointScaffold:
    alpha: tuple  # relabeled slopes (max-w first); original order in `alpha_input`
    alpha_input: tuple
    permutation: tuple
    v_basis: list
    q: int
    r: int
    kind: str  # "independent" (V = 0, D_r) or "dependent" (w needed, B_{q,r})
    w: tuple | None
    witness: tuple | None  # open interval (lo, hi) for the scaling c
    bohr: BohrSet
    density_theoretical: Fraction | None
    density_empirical: float

    def describe(self) -> str:
        lines = [
            f"kind: {self.kind}",
            f"relation lattice basis: {self.v_basis or 'empty'}",
            f"q = {self.q}, r = {self.r}",
        ]
        if self.w is not None:
            lines.append(f"w (relabeled) = {tuple(map(str, self.w))}")
        if self.witness is not None:
            lines.append(f"witness interval for c: ({self.witness[0]}, {self.witness[1]})")
        if self.density_theoretical is not None:
            lines.append(f"theoretical density = {self.density_theoretical}")
        lines.append(f"empirical density = {self.density_empirical:.6g}")
        return "\n".join(lines)


def kpoint_scaffold(
    alpha,
    w_hint=None,
    q_r=2,
    density_x: int = 10**5,
) -> KPointScaffold:
    """Lattice V, rational part q, the positivity witness c, and the Bohr set
    B_r (independent case) or B_{q,r} (dependent case, needs w).

    q_r is the prime r, or a pair (expected_q, r) cross-checking the computed
    least common multiple of the rational-part denominators."""
    alpha = tuple(alpha)
    k = len(alpha)
    if k < 2:
        raise ValueError("need at least two slopes")
    expected_q = None
    if isinstance(q_r, tuple):
        expected_q, r = q_r
    else:
        r = q_r
    r = int(r)
    if r < 2 or any(r % d == 0 for d in range(2, int(math.isqrt(r)) + 1)):
        raise ValueError("r must be prime")
    for a in alpha:
        sgn = a.sign() if isinstance(a, ExactReal) else (Fraction(a) > 0) - (Fraction(a) < 0)
        if sgn <= 0:
            raise ValueError("slopes must be positive")
    if all(not isinstance(a, ExactReal) or a.is_rational() for a in alpha):
        raise ValueError("alpha must not be entirely rational")

    V = integer_relation_lattice(alpha)
    if not V:
        if expected_q is not None and expected_q != 1:
            raise NoValidW(f"computed q = 1 but caller expected q = {expected_q}")
        one = Fraction(1)
        ivs = [Interval(Fraction(1, r * r), Fraction(2, r * r), False, False)]
        ivs += [
            Interval(Fraction(1, r), Fraction(1, r) + Fraction(1, r * r), False, False)
            for _ in range(k - 1)
        ]
        B = BohrSet(alpha, Box(ivs), label=f"B_r(r={r})")
        dens = Fraction(1, r ** (2 * k))
        emp = density(B, mode="empirical", x=density_x).value
        return KPointScaffold(
            alpha=alpha, alpha_input=alpha, permutation=tuple(range(k)),
            v_basis=[], q=1, r=r, kind="independent", w=None, witness=None,
            bohr=B, density_theoretical=dens, density_empirical=emp,
        )

    if w_hint is None:
        raise WIsRequired(
            f"the relation lattice is nontrivial (basis {V}); supply a positive "
            "vector w orthogonal to it"
        )
    w = tuple(Fraction(x) for x in w_hint)
    problems = []
    if len(w) != k:
        problems.append(f"w has length {len(w)}, expected {k}")
    elif any(x <= 0 for x in w):
        problems.append("w must be strictly positive in every coordinate")
    else:
        for v in V:
            dot = sum(Fraction(vi) * wi for vi, wi in zip(v, w))
            if dot != 0:
                problems.append(f"v . w = {dot} != 0 for v = {v}")
    if not problems:
        mx = max(w)
        if sum(1 for x in w if x == mx) > 1:
            problems.append("the maximal coefficient of w must be unique")
    if problems:
        raise NoValidW("; ".join(problems))

    perm = tuple(sorted(range(k), key=lambda i: (-w[i], i)))
    w_rel = tuple(w[i] for i in perm)
    alpha_rel = tuple(alpha[i] for i in perm)
    V_rel = [[v[i] for i in perm] for v in V]

    rhs = []
    fld = next(a.field for a in alpha_rel if isinstance(a, ExactReal))
    for v in V_rel:
        val = sum(
            (a if isinstance(a, ExactReal) else fld.rational(Fraction(a))) * int(c)
            for c, a in zip(v, alpha_rel)
        )
        rhs.append(val.as_rational())
    from .bohr import _minimal_denominator_solution

    alpha_pp, _ = _minimal_denominator_solution(V_rel, rhs, k)
    q = math.lcm(*[g.denominator for g in alpha_pp]) if alpha_pp else 1
    if expected_q is not None and q != expected_q:
        raise NoValidW(f"computed q = {q} but caller expected q = {expected_q}")
    alpha_prime = tuple(
        (a if isinstance(a, ExactReal) else fld.rational(Fraction(a))) - g
        for a, g in zip(alpha_rel, alpha_pp)
    )

    w1, w2 = w_rel[0], w_rel[1]
    lo = Fraction(1, q * r) / w1
    hi = min(Fraction(2, q * r) / w1, Fraction(1, q * r) / w2)
    witness = (lo, hi)

    ivs = [Interval(Fraction(1, q * r), Fraction(2, q * r), False, False)]
    ivs += [
        Interval(Fraction(0), Fraction(1, q * r), False, False) for _ in range(k - 1)
    ]
    B = BohrSet(alpha_prime, Box(ivs), label=f"B_qr(q={q},r={r})")
    emp = density(B, mode="empirical", x=density_x).value
    return KPointScaffold(
        alpha=alpha_rel, alpha_input=alpha, permutation=perm,
        v_basis=V, q=q, r=r, kind="dependent", w=w_rel, witness=witness,
        bohr=B, density_theoretical=None, density_empirical=emp,
    )


@dataclass
class KPointReport:
    members_checked: int
    identities_hold: bool
    identity_failures: list
    series: AverageSeries | None
    kpoint_final: complex | None
    reduced_final: complex | None
    bound_threshold: float
    within_bound: bool | None
    notes: list


def verify_kpoint(
    scaffold: KPointScaffold,
    f_list,
    x: int,
    sieve: SieveTable | None = None,
    identity_window: int = 10**5,
    bound_threshold: float = 0.99,
    ratio: float = 10.0,
) -> KPointReport:
    """(a) exhaustive floor identities on the scaffold's Bohr set members,
    (b) the k-point logarithmic average against the 99%-style bound, and
    (c) the reduced two-point correlation on the Bohr set."""
    alpha = scaffold.alpha
    k = len(alpha)
    q, r = scaffold.q, scaffold.r
    mult = r if scaffold.kind == "independent" else q
    members = scaffold.bohr.members_upto(identity_window)
    notes = []
    if not len(members):
        raise EmptyBohrSet(
            f"no member of {scaffold.bohr.label} below {identity_window}; "
            f"theoretical density {scaffold.density_theoretical}"
        )
    failures = []
    f1 = [LinearFloor(_scale(alpha[i], mult), 0) for i in range(k)]
    f2 = [LinearFloor(_scale(alpha[i], mult * r), 0) for i in range(k)]
    base = [lf.floors(members) for lf in f1]
    lift = [lf.floors(members) for lf in f2]
    for i in range(k):
        want = r * base[i] + (1 if i == 0 else 0)
        bad = lift[i] != want
        if bad.any():
            failures.append((f"floor identity coordinate {i}", int(bad.sum())))
    if scaffold.kind == "independent":
        for i in range(1, k):
            bad = np.mod(base[i], r) == 0
            if bad.any():
                failures.append((f"divisibility identity coordinate {i}", int(bad.sum())))
    identities_hold = not failures

    degenerate = all(f.name == "one" for f in f_list)
    spec = CorrelationSpec(
        factors=[(f, BeattySequence(a)) for f, a in zip(f_list, alpha)],
        x_max=x,
        checkpoint_ratio=ratio,
        label="k-point",
    )
    report = correlate(spec, sieve=sieve)
    kfinal = report.final_value
    within = abs(kfinal) <= bound_threshold
    if degenerate:
        notes.append(
            "all factors are the constant 1: the k-point average is ~1 and the "
            "cancellation bound is vacuous for this degenerate choice"
        )
        within = None

    reduced = _reduced_two_point(scaffold, f_list[0], x, sieve, ratio)
    return KPointReport(
        members_checked=len(members),
        identities_hold=identities_hold,
        identity_failures=failures,
        series=report.series,
        kpoint_final=kfinal,
        reduced_final=reduced,
        bound_threshold=bound_threshold,
        within_bound=within,
        notes=notes,
    )


def _scale(a, m: int):
    if isinstance(a, ExactReal):
        return a * m
    return Fraction(a) * m


def _reduced_two_point(scaffold, f1, x, sieve, ratio):
    mult = scaffold.r if scaffold.kind == "independent" else scaffold.q
    inner = LinearFloor(_scale(scaffold.alpha[0], mult), 0)
    needed = int(scaffold.r) * inner.floor_at(x) + 2
    if f1.name == "liouville" and f1.block_rule is None:
        bound, _ = _bind_sieves([(f1, BeattySequence(Fraction(1, 1)))], sieve, needed)
        f1 = bound[0][0]
    avg = StreamingAverager(x, ratio)
    n = 1
    while n <= x:
        hi = min(n + DEFAULT_BLOCK, x + 1)
        ns = np.arange(n, hi, dtype=np.int64)
        args = inner.floors(ns)
        vals = f1.values_block(args) * f1.values_block(scaffold.r * args + 1)
        vals = vals * scaffold.bohr.membership_block(ns)
        avg.feed(vals.astype(np.complex128))
        n = hi
    series = avg.finish()
    return complex(series.log_values_normalized[-1])
