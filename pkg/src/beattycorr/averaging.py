"""Logarithmic and natural averaging with checkpointed convergence series.

log_average follows the classical normalization (1/log X) * sum f(n)/n.
Reports that must stay inside [-1, 1] at finite X can use the
harmonic-normalized variant (sum f(n)/n) / (sum 1/n), which has the same
limit by partial summation; AverageSeries exposes both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class KahanSum:
    """Compensated accumulator; error O(eps) per term regardless of length."""

    __slots__ = ("total", "_c")

    def __init__(self, value=0.0):
        self.total = value
        self._c = 0.0 * value

    def add(self, x):
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t

    def value(self):
        return self.total


def checkpoints_for(x_max: int, ratio: float) -> list[int]:
    """ceil(ratio^k) checkpoints up to and including x_max."""
    if x_max < 10:
        raise ValueError("x_max must be >= 10")
    if not 1.0 < ratio <= 10.0:
        raise ValueError("ratio must lie in (1, 10]")
    out = []
    k = 1
    while True:
        c = math.ceil(ratio**k)
        if c > x_max:
            break
        if c >= 2 and (not out or c > out[-1]):
            out.append(c)
        k += 1
    if not out or out[-1] != x_max:
        out.append(x_max)
    return out


@dataclass
class AverageSeries:
    """Checkpointed raw sums of a sequence; averages derived on demand."""

    checkpoints: list[int] = field(default_factory=list)
    log_sums: list[complex] = field(default_factory=list)  # sum f(n)/n
    natural_sums: list[complex] = field(default_factory=list)  # sum f(n)
    harmonic_sums: list[float] = field(default_factory=list)  # sum 1/n
    kind: str = "both"

    def append(self, x: int, log_sum, natural_sum, harmonic_sum) -> None:
        if self.checkpoints and x <= self.checkpoints[-1]:
            raise ValueError("checkpoints must be strictly increasing")
        self.checkpoints.append(x)
        self.log_sums.append(log_sum)
        self.natural_sums.append(natural_sum)
        self.harmonic_sums.append(harmonic_sum)

    @property
    def log_values(self) -> list:
        """(1/log X) sum_{n<=X} f(n)/n."""
        return [s / math.log(x) for x, s in zip(self.checkpoints, self.log_sums)]

    @property
    def log_values_normalized(self) -> list:
        """(sum f(n)/n) / (sum 1/n); same limit, bounded by max|f| at every X."""
        return [s / h for s, h in zip(self.log_sums, self.harmonic_sums)]

    @property
    def natural_values(self) -> list:
        return [s / x for x, s in zip(self.checkpoints, self.natural_sums)]

    def is_real(self) -> bool:
        return all(
            abs(complex(v).imag) < 1e-15
            for v in list(self.log_sums) + list(self.natural_sums)
        )


def log_average(sequence: Callable[[int], float], x: int) -> float:
    """(1/log X) sum_{n<=X} f(n)/n with compensated summation."""
    if x < 2:
        raise ValueError("X must be >= 2")
    acc = KahanSum()
    for n in range(1, x + 1):
        acc.add(sequence(n) / n)
    return acc.value() / math.log(x)


def natural_average(sequence: Callable[[int], float], x: int) -> float:
    """(1/X) sum_{n<=X} f(n)."""
    if x < 1:
        raise ValueError("X must be >= 1")
    acc = KahanSum()
    for n in range(1, x + 1):
        acc.add(sequence(n))
    return acc.value() / x


class StreamingAverager:
    """Single-pass block accumulator emitting an AverageSeries at checkpoints.

    Feed values for n = next_n, next_n + 1, ... in order; block boundaries are
    the caller's partition, and the reduction is deterministic for a fixed
    partition (within a block numpy's pairwise summation is itself fixed).
    """

    def __init__(self, x_max: int, ratio: float, kind: str = "both"):
        self.series = AverageSeries(kind=kind)
        self.pending = [c for c in checkpoints_for(x_max, ratio)]
        self.next_n = 1
        self._log = KahanSum(0j)
        self._nat = KahanSum(0j)
        self._harm = KahanSum(0.0)

    def feed(self, values: np.ndarray) -> None:
        n0 = self.next_n
        self.next_n = n0 + len(values)
        while len(values):
            cut = len(values)
            if self.pending:
                to_cp = self.pending[0] - n0 + 1
                if 0 < to_cp < cut:
                    cut = to_cp
            chunk = values[:cut]
            ns = np.arange(n0, n0 + cut, dtype=np.float64)
            self._log.add(complex(np.sum(chunk / ns)))
            self._nat.add(complex(np.sum(chunk)))
            self._harm.add(float(np.sum(1.0 / ns)))
            n0 += cut
            values = values[cut:]
            if self.pending and n0 - 1 == self.pending[0]:
                self._emit(self.pending.pop(0))

    def _emit(self, x: int) -> None:
        self.series.append(
            x, self._log.value(), self._nat.value(), self._harm.value()
        )

    def finish(self) -> AverageSeries:
        if self.pending:
            raise ValueError(
                f"stream ended at n={self.next_n - 1} before checkpoint {self.pending[0]}"
            )
        return self.series


def checkpoint_series(
    sequence: Callable[[int], float],
    x_max: int,
    ratio: float,
    block: int = 1 << 15,
) -> AverageSeries:
    """Both averages of a scalar sequence at ceil(ratio^k) checkpoints,
    computed in one pass of x_max sequence evaluations."""
    avg = StreamingAverager(x_max, ratio)
    n = 1
    while n <= x_max:
        hi = min(n + block, x_max + 1)
        avg.feed(np.array([sequence(k) for k in range(n, hi)], dtype=np.complex128))
        n = hi
    return avg.finish()


def emit_csv(series: AverageSeries, path) -> None:
    """CSV with columns X, log_avg, natural_avg (real series)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("X,log_avg,natural_avg\n")
        for x, lv, nv in zip(series.checkpoints, series.log_values, series.natural_values):
            fh.write(f"{x},{_fmt(lv)},{_fmt(nv)}\n")


def emit_csv_complex(series: AverageSeries, path, normalized: bool = True) -> None:
    """CSV with re/im columns for complex correlation series."""
    log_vals = series.log_values_normalized if normalized else series.log_values
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("X,log_avg_re,log_avg_im,natural_avg_re,natural_avg_im\n")
        for x, lv, nv in zip(series.checkpoints, log_vals, series.natural_values):
            lv = complex(lv)
            nv = complex(nv)
            fh.write(
                f"{x},{_fmt(lv.real)},{_fmt(lv.imag)},{_fmt(nv.real)},{_fmt(nv.imag)}\n"
            )


def parse_csv(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.strip().split(",")
            rows.append({k: v for k, v in zip(header, vals)})
    return rows


def _fmt(v) -> str:
    v = complex(v)
    x = v.real if abs(v.imag) < 1e-300 else None
    if x is None:
        raise ValueError("use emit_csv_complex for complex series")
    return repr(float(v.real))
