"""Command-line front end: experiment configs, sieve cache management,
CSV/plot-script emission, and canned theorem-verification recipes.

Exit codes: 0 = verdict consistent, 2 = inconsistent, 3 = inconclusive,
1 = error (config parse errors name the offending key).
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .averaging import emit_csv_complex
from .beatty import BeattySequence, partition_irrational_pair, partition_rational_pair
from .bohr import BohrSet, density, remove_rational_dependencies, trig_approximation
from .correlator import (
    CorrelationReport,
    CorrelationSpec,
    correlate,
    kpoint_scaffold,
    rational_limit_predict,
    verify_kpoint,
    verify_pretentious_product,
)
from .errors import BeattycorrError, ConfigError, FullyRationalPhase
from .fileio import field_from_spec, load_bohr, parse_scalar
from .multfunc import (
    SieveTable,
    characters_mod,
    coprime_indicator,
    from_real_character,
    liouville,
    liouville_sieve,
    unit_function,
)

EXIT_BY_VERDICT = {"consistent": 0, "inconsistent": 2, "inconclusive": 3}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="beattycorr",
        description="Correlations of multiplicative functions along Beatty sequences",
    )
    parser.add_argument(
        "--seed", type=int, default=None,
        help="accepted and ignored: the primary pipelines are deterministic",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sieve = sub.add_parser("sieve", help="build a Liouville sieve cache file")
    p_sieve.add_argument("--limit", type=int, required=True)
    p_sieve.add_argument("--out", required=True)
    p_sieve.add_argument("--segment-size", type=int, default=1 << 22)

    for name in ("correlate", "bohr", "partition", "kpoint"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)

    p_verify = sub.add_parser("verify", help="canned theorem-verification recipes")
    p_verify.add_argument(
        "recipe",
        choices=[
            "rational-case", "two-point-irrational", "pretentious-product",
            "counterexample",
        ],
    )
    p_verify.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "sieve":
            return _cmd_sieve(args)
        cfg, base = _read_config(args.config)
        if args.command == "correlate":
            return _cmd_correlate(cfg, base)
        if args.command == "bohr":
            return _cmd_bohr(cfg, base)
        if args.command == "partition":
            return _cmd_partition(cfg, base)
        if args.command == "kpoint":
            return _cmd_kpoint(cfg, base)
        if args.command == "verify":
            return _cmd_verify(args.recipe, cfg, base)
        raise ConfigError(f"unknown command {args.command}")
    except BeattycorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def _cmd_sieve(args) -> int:
    table = liouville_sieve(args.limit, segment_size=args.segment_size)
    table.save(args.out)
    print(f"wrote lambda(n), n <= {args.limit}, to {args.out} "
          f"({16 + len(table.packed)} bytes)")
    return 0


# -- config plumbing ----------------------------------------------------------------


def _read_config(path):
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} not found") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from None
    if not cp.has_section("meta") or cp.get("meta", "schema", fallback=None) != "1":
        raise ConfigError("missing or unsupported [meta] schema key (expected 1)")
    return cp, os.path.dirname(os.path.abspath(path))


def _need(cp, section, key):
    if not cp.has_section(section) or key not in cp[section]:
        raise ConfigError(f"missing key [{section}] {key}")
    return cp[section][key]


def _field_of(cp, base):
    return field_from_spec(_need(cp, "field", "ref"), base_dir=base)


def _function_by_name(name: str, sieve: SieveTable | None):
    name = name.strip()
    if name == "liouville":
        return liouville(sieve)
    if name in ("one", "constant1", "unit"):
        return unit_function()
    if name.startswith("coprime:"):
        return coprime_indicator(int(name.split(":", 1)[1]))
    if name.startswith("character:"):
        _, q, idx = name.split(":")
        chars = characters_mod(int(q))
        return from_real_character(chars[int(idx)])
    raise ConfigError(f"unknown function name {name!r}")


def _factor_sections(cp):
    out = sorted(s for s in cp.sections() if s.startswith("factor."))
    if not out:
        raise ConfigError("missing key [factor.1] function")
    return out


def _build_spec(cp, base, sieve=None) -> CorrelationSpec:
    fld = _field_of(cp, base)
    x_max = int(_need(cp, "experiment", "x_max"))
    ratio = float(cp.get("experiment", "checkpoint_ratio", fallback="10"))
    factors = []
    for sec in _factor_sections(cp):
        fname = _need(cp, sec, "function")
        alpha = parse_scalar(_need(cp, sec, "alpha"), fld)
        beta = parse_scalar(cp.get(sec, "beta", fallback="0"), fld)
        factors.append((_function_by_name(fname, sieve), BeattySequence(alpha, beta)))
    twist = 0
    if cp.has_section("twist"):
        twist = parse_scalar(cp.get("twist", "gamma", fallback="0"), fld)
    restriction = None
    if cp.has_section("restriction") and cp.get("restriction", "bohr", fallback=""):
        restriction = load_bohr(
            os.path.join(base, cp["restriction"]["bohr"]), field=fld
        )
    return CorrelationSpec(
        factors=factors,
        twist=twist,
        restriction=restriction,
        x_max=x_max,
        checkpoint_ratio=ratio,
        label=cp.get("experiment", "label", fallback=""),
    )


def _out_paths(cp, base):
    csv = cp.get("experiment", "out_csv", fallback="series.csv")
    plot = cp.get("experiment", "out_plot", fallback="")
    csv = os.path.join(base, csv)
    plot = os.path.join(base, plot) if plot else ""
    return csv, plot


def emit_plot_script(report: CorrelationReport, csv_path: str, path: str) -> None:
    """Plain-text gnuplot commands for the checkpoint series; a horizontal
    line marks the predicted value when one exists."""
    xs = report.series.checkpoints
    rel_csv = os.path.basename(csv_path)
    lines = [
        "# beattycorr checkpoint series plot (gnuplot)",
        "set datafile separator ','",
        "set logscale x",
        f"set xrange [{xs[0]}:{xs[-1]}]",
        "set xlabel 'X'",
        "set ylabel 'average'",
    ]
    plot = f"plot '{rel_csv}' using 1:2 with linespoints title 'log average'"
    if report.predicted_value is not None:
        pv = complex(report.predicted_value).real
        lines.append(f"predicted(x) = {pv!r}")
        plot += ", predicted(x) with lines title 'predicted'"
    lines.append(plot)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary(report: CorrelationReport, extra: dict | None = None) -> str:
    rows = {
        "final_log_avg": _cfmt(report.final_value),
        "final_natural_avg": _cfmt(report.final_natural),
        "predicted": (
            _cfmt(report.predicted_value) if report.predicted_value is not None else "none"
        ),
        "tolerance": f"{report.tolerance:g}",
        "verdict": report.verdict,
    }
    if report.prediction_note:
        rows["prediction_note"] = report.prediction_note
    if extra:
        rows.update(extra)
    width = max(len(k) for k in rows)
    return "\n".join(f"{k.ljust(width)} : {v}" for k, v in rows.items())


def _cfmt(v) -> str:
    v = complex(v)
    if abs(v.imag) < 1e-12:
        return f"{v.real:.6f}"
    return f"{v.real:.6f}{v.imag:+.6f}i"


def _finish(report: CorrelationReport, cp, base, extra=None) -> int:
    csv, plot = _out_paths(cp, base)
    emit_csv_complex(report.series, csv)
    if plot:
        emit_plot_script(report, csv, plot)
    print(_summary(report, extra))
    return EXIT_BY_VERDICT[report.verdict]


def _load_sieve_if_any(cp, base) -> SieveTable | None:
    path = cp.get("experiment", "sieve_cache", fallback="")
    if not path:
        return None
    full = os.path.join(base, path)
    if os.path.exists(full):
        return SieveTable.load(full)
    return None


# -- commands ------------------------------------------------------------------------


def _cmd_correlate(cp, base) -> int:
    sieve = _load_sieve_if_any(cp, base)
    spec = _build_spec(cp, base, sieve)
    predicted = None
    note = ""
    if cp.has_section("prediction"):
        mode = cp.get("prediction", "mode", fallback="value")
        if mode == "value":
            predicted = complex(float(_need(cp, "prediction", "value")))
            note = "configured value"
        elif mode == "rational-case":
            f0 = spec.factors[0][0]
            pred = rational_limit_predict(f0, spec.factors[0][1], spec.factors[1][1])
            predicted = pred.predicted
            note = pred.note
        elif mode == "zero":
            predicted = 0j
            note = "irrational-ratio two-point limit"
        else:
            raise ConfigError(f"unknown prediction mode {mode!r}")
    tol = float(cp.get("experiment", "tolerance", fallback="0.05"))
    report = correlate(spec, sieve=sieve, predicted=predicted,
                       prediction_note=note, tolerance=tol)
    return _finish(report, cp, base)


def _cmd_bohr(cp, base) -> int:
    fld = _field_of(cp, base)
    B = load_bohr(os.path.join(base, _need(cp, "bohr", "file")), field=fld)
    eps = float(cp.get("bohr", "epsilon", fallback="0.1"))
    x = int(cp.get("bohr", "x", fallback="100000"))
    out = os.path.join(base, cp.get("bohr", "out_report", fallback="bohr_report.txt"))
    lines = [f"bohr set: {B.label or 'unnamed'} (dimension {B.dimension})"]
    th = density(B, mode="theoretical")
    emp = density(B, mode="empirical", x=x)
    lines.append(f"density theoretical : {th.value:.8f} [{th.method}] {th.note}")
    lines.append(f"density empirical   : {emp.value:.8f} [{emp.method}]")
    try:
        dec = remove_rational_dependencies(B)
        lines.append(
            f"decomposition: d' = {dec.d_prime}, q = {dec.q}, "
            f"pieces = {dec.piece_count()} (achieved piece bound)"
        )
    except FullyRationalPhase:
        lines.append("decomposition: phase is rational (purely periodic)")
    T = trig_approximation(B, eps)
    emp_l1 = T.validate(B, x)
    lines.append(
        f"trig approximation at eps = {eps:g}: {len(T.frequencies)} frequencies, "
        f"q = {T.q}, certified bound {T.error_bound:.5f}, "
        f"empirical L1 residual {emp_l1:.5f} at X = {x}"
    )
    ok = emp_l1 <= 1.5 * eps
    lines.append(f"residual within 1.5*eps: {ok}")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 3


def _cmd_partition(cp, base) -> int:
    fld = _field_of(cp, base)
    kind = _need(cp, "partition", "kind")
    window = int(cp.get("partition", "window", fallback="100000"))
    out = os.path.join(
        base, cp.get("partition", "out_report", fallback="partition_report.txt")
    )
    if kind == "rational":
        p = int(_need(cp, "partition", "p"))
        q = int(_need(cp, "partition", "q"))
        theta = parse_scalar(_need(cp, "partition", "theta"), fld)
        bp = parse_scalar(cp.get("partition", "beta_p", fallback="0"), fld)
        bq = parse_scalar(cp.get("partition", "beta_q", fallback="0"), fld)
        part = partition_rational_pair(p, q, theta, bp, bq, window=window)
    elif kind == "irrational":
        a1 = parse_scalar(_need(cp, "partition", "alpha1"), fld)
        a2 = parse_scalar(_need(cp, "partition", "alpha2"), fld)
        b1 = parse_scalar(cp.get("partition", "beta1", fallback="0"), fld)
        b2 = parse_scalar(cp.get("partition", "beta2", fallback="0"), fld)
        eps = float(cp.get("partition", "epsilon", fallback="0.1"))
        part = partition_irrational_pair(
            BeattySequence(a1, b1), BeattySequence(a2, b2), eps, window=window
        )
    else:
        raise ConfigError(f"unknown partition kind {kind!r}")
    rep = part.verification
    lines = [
        f"partition kind      : {part.kind}",
        f"window              : [{rep.lo}, {rep.hi}]",
        f"partition exact     : {rep.partition_exact}",
        f"floor identity exact: {rep.identity_exact}",
        f"region consistent   : {rep.region_consistent}",
        "pieces:",
    ]
    for piece in part.pieces:
        extra = ""
        if piece.grid_error_density is not None:
            extra = f", grid boundary density {piece.grid_error_density:.5f}"
        lines.append(
            f"  offset {piece.offset:+d}: region {piece.bohr.region!r}, "
            f"empirical density {piece.empirical_density:.6f}{extra}"
        )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    ok = rep.partition_exact and rep.identity_exact and rep.region_consistent
    return 0 if ok else 2


def _cmd_kpoint(cp, base) -> int:
    fld = _field_of(cp, base)
    alphas = [
        parse_scalar(t, fld) for t in _need(cp, "kpoint", "alphas").split(";")
    ]
    r = int(cp.get("kpoint", "r", fallback="2"))
    w = None
    if cp.get("kpoint", "w", fallback=""):
        w = [Fraction(t) for t in cp["kpoint"]["w"].split(",")]
    x = int(cp.get("kpoint", "x", fallback="1000000"))
    sieve = _load_sieve_if_any(cp, base)
    sc = kpoint_scaffold(alphas, w_hint=w, q_r=r)
    funcs = [
        _function_by_name(t.strip(), sieve)
        for t in cp.get("kpoint", "functions", fallback="liouville").split(";")
    ]
    if len(funcs) == 1:
        funcs = funcs * len(alphas)
    rep = verify_kpoint(sc, funcs, x, sieve=sieve)
    lines = [sc.describe()]
    lines.append(f"members checked     : {rep.members_checked}")
    lines.append(f"floor identities    : {'all hold' if rep.identities_hold else rep.identity_failures}")
    lines.append(f"k-point |E^log|     : {abs(rep.kpoint_final):.6f} (bound {rep.bound_threshold})")
    lines.append(f"reduced 2-pt |E^log|: {abs(rep.reduced_final):.6f}")
    for note in rep.notes:
        lines.append(f"note: {note}")
    out = os.path.join(base, cp.get("kpoint", "out_report", fallback="kpoint_report.txt"))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    if not rep.identities_hold:
        return 2
    if rep.within_bound is None:
        return 3
    return 0 if rep.within_bound else 2


def _cmd_verify(recipe: str, cp, base) -> int:
    if recipe == "rational-case":
        sieve = _load_sieve_if_any(cp, base)
        spec = _build_spec(cp, base, sieve)
        if len(spec.factors) != 2:
            raise ConfigError("rational-case needs exactly two [factor.*] sections")
        pred = rational_limit_predict(
            spec.factors[0][0], spec.factors[0][1], spec.factors[1][1]
        )
        tol = float(cp.get("experiment", "tolerance", fallback="0.05"))
        report = correlate(
            spec, sieve=sieve, predicted=pred.predicted,
            prediction_note=pred.note, tolerance=tol,
        )
        return _finish(report, cp, base, extra={"r0_pieces": str(pred.piece_densities)})
    if recipe == "two-point-irrational":
        sieve = _load_sieve_if_any(cp, base)
        spec = _build_spec(cp, base, sieve)
        tol = float(cp.get("experiment", "tolerance", fallback="0.1"))
        slack = float(cp.get("experiment", "trend_slack", fallback="0.02"))
        report = correlate(
            spec, sieve=sieve, predicted=0j, tolerance=tol, trend_slack=slack,
            prediction_note="irrational ratio: limit 0 with trend check",
        )
        return _finish(report, cp, base)
    if recipe in ("pretentious-product", "counterexample"):
        fld = _field_of(cp, base)
        sec = "pretentious"
        alphas = [parse_scalar(t, fld) for t in _need(cp, sec, "alphas").split(";")]
        funcs = [
            _function_by_name(t.strip(), None)
            for t in _need(cp, sec, "functions").split(";")
        ]
        x = int(cp.get(sec, "x", fallback="1000000"))
        tol = float(cp.get(sec, "tolerance", fallback="0.02"))
        strict = recipe == "pretentious-product"
        rep = verify_pretentious_product(
            funcs, alphas, x=x, tolerance=tol, strict=strict
        )
        print(f"joint natural mean    : {_cfmt(rep.joint.final_natural)}")
        print(f"marginal product mean : {_cfmt(rep.product_natural)}")
        print(f"independent tuple     : {rep.independent}")
        print(f"note                  : {rep.note}")
        if recipe == "counterexample":
            gap = abs(rep.joint.final_natural - rep.product_natural)
            reproduced = (not rep.independent) and gap > 2 * tol
            print(f"product formula gap   : {gap:.4f} "
                  f"({'counterexample reproduced' if reproduced else 'no gap found'})")
            return 0 if reproduced else 2
        print(f"verdict               : {rep.verdict}")
        return EXIT_BY_VERDICT[rep.verdict]
    raise ConfigError(f"unknown recipe {recipe!r}")


if __name__ == "__main__":
    sys.exit(main())
