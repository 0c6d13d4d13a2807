"""Structured-text file formats: field references, Bohr set descriptions,
and the scalar syntax shared by configuration files.

Scalars are written either as exact rationals ("3/4") or as comma-separated
rational coordinates over the referenced field basis ("0,1,0,0" is sqrt2 in
the basis 1, sqrt2, sqrt3, sqrt6).
"""

from __future__ import annotations

import configparser
import os
from fractions import Fraction

from .convex import Box, Interval
from .bohr import BohrSet
from .errors import ConfigError
from .realfield import ExactReal, NumberField, load_field


def field_from_spec(spec: str, base_dir: str = ".") -> NumberField:
    """Resolve a field reference: 'builtin:rationals', 'builtin:sqrt:2,3',
    or a path to a field definition file."""
    spec = spec.strip()
    if spec == "builtin:rationals":
        return NumberField.rationals()
    if spec.startswith("builtin:sqrt:"):
        gens = [int(t) for t in spec.split(":", 2)[2].split(",") if t]
        return NumberField.sqrt_field(gens)
    path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
    if not os.path.exists(path):
        raise ConfigError(f"field reference {spec!r} is neither builtin nor a file")
    return load_field(path)


def parse_scalar(text: str, field: NumberField):
    """'p/q' -> Fraction; 'c0,c1,...' -> field element."""
    text = text.strip()
    try:
        if "," in text:
            coeffs = [Fraction(t.strip()) for t in text.split(",")]
            if len(coeffs) != field.dim:
                raise ConfigError(
                    f"coefficient vector {text!r} has {len(coeffs)} entries, "
                    f"field dimension is {field.dim}"
                )
            return field.element(coeffs)
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse scalar {text!r}: {exc}") from None


def scalar_to_text(x) -> str:
    if isinstance(x, ExactReal):
        return ",".join(str(c) for c in x.coeffs)
    return str(Fraction(x))


_FLAGS = {(True, False): "co", (False, False): "oo", (True, True): "cc", (False, True): "oc"}
_FLAGS_BACK = {v: k for k, v in _FLAGS.items()}


def interval_to_text(iv: Interval) -> str:
    return f"{scalar_to_text(iv.lo)} | {scalar_to_text(iv.hi)} | {_FLAGS[(iv.lo_closed, iv.hi_closed)]}"


def interval_from_text(text: str, field: NumberField) -> Interval:
    parts = [p.strip() for p in text.split("|")]
    if len(parts) == 2:
        parts.append("co")
    if len(parts) != 3 or parts[2] not in _FLAGS_BACK:
        raise ConfigError(f"bad interval spec {text!r}")
    lo_closed, hi_closed = _FLAGS_BACK[parts[2]]
    return Interval(
        parse_scalar(parts[0], field), parse_scalar(parts[1], field),
        lo_closed, hi_closed,
    )


def save_bohr(B: BohrSet, path, field_spec: str) -> None:
    """Bohr set description file (box regions)."""
    if not isinstance(B.region, Box):
        raise ConfigError("description files support box regions only")
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    cp["bohr"] = {
        "schema": "1",
        "field": field_spec,
        "dimension": str(B.dimension),
        "label": B.label,
        "phase": "; ".join(scalar_to_text(p) for p in B.phase),
        "offset": "; ".join(scalar_to_text(o) for o in B.offset),
    }
    cp["region"] = {
        f"interval{i}": interval_to_text(iv)
        for i, iv in enumerate(B.region.intervals)
    }
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def load_bohr(path, field: NumberField | None = None) -> BohrSet:
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    try:
        sec = cp["bohr"]
        d = int(sec["dimension"])
        if field is None:
            field = field_from_spec(sec["field"], base_dir=os.path.dirname(path) or ".")
        phase = [parse_scalar(t, field) for t in sec["phase"].split(";")]
        offset = [parse_scalar(t, field) for t in sec.get("offset", "").split(";")] if sec.get("offset") else None
        intervals = [
            interval_from_text(cp["region"][f"interval{i}"], field) for i in range(d)
        ]
    except KeyError as exc:
        raise ConfigError(f"bohr description missing key {exc}") from None
    return BohrSet(phase, Box(intervals), offset=offset, label=sec.get("label", ""))
