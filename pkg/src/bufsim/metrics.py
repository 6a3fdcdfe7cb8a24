"""Per-flow and aggregate QoS measurement.

Loss ratios, the two jitter figures (session max delay variation and the
RFC 3550-style smoothed estimator), Student-t confidence intervals across
repetitions, and fixed-width histograms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

RFC3550_GAIN = 1.0 / 16.0


@dataclass
class FlowStats:
    """Measurement record of one flow over one simulation run.

    ``sent`` counts packets created inside the measurement window;
    ``residual`` are sent packets still in the system when the run ends
    (they count as neither delivered nor dropped).
    """

    flow_id: str
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    dropped_full: int = 0
    dropped_red: int = 0
    residual: int = 0
    delivered_bytes: int = 0
    dropped_bytes: int = 0
    delay_samples: list = field(default_factory=list)   # seconds, generation order

    @property
    def loss_ratio(self) -> Optional[float]:
        if self.sent == 0:
            return None
        return self.dropped / self.sent

    def check_conservation(self) -> None:
        if self.sent != self.delivered + self.dropped + self.residual:
            raise AssertionError(
                f"conservation violated for {self.flow_id}: sent={self.sent} "
                f"delivered={self.delivered} dropped={self.dropped} "
                f"residual={self.residual}"
            )

    def to_dict(self) -> dict:
        return {
            "flow_id": self.flow_id,
            "sent": self.sent,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "dropped_full": self.dropped_full,
            "dropped_red": self.dropped_red,
            "residual": self.residual,
            "delivered_bytes": self.delivered_bytes,
            "dropped_bytes": self.dropped_bytes,
            "delay_samples": list(self.delay_samples),
        }


def loss_ratio(stats: FlowStats) -> Optional[float]:
    """Dropped over sent; absent when nothing was sent."""
    return stats.loss_ratio


@dataclass(frozen=True)
class JitterResult:
    max_variation: float   # max(delay) - min(delay) over the session
    smoothed: float        # RFC 3550 running mean of |delta delay|, final value


def jitter(delays: Sequence[float]) -> Optional[JitterResult]:
    """Both jitter figures for a session's one-way delay series.

    The session figure is the maximum delay variation; the smoothed figure
    is J <- J + (|d_i - d_{i-1}| - J)/16 reported after the last sample.
    Absent with fewer than two samples.
    """
    if len(delays) < 2:
        return None
    j = 0.0
    prev = delays[0]
    lo = hi = delays[0]
    for d in delays[1:]:
        j += (abs(d - prev) - j) * RFC3550_GAIN
        prev = d
        lo = min(lo, d)
        hi = max(hi, d)
    return JitterResult(max_variation=hi - lo, smoothed=j)


@dataclass(frozen=True)
class RepetitionSummary:
    mean: float
    stddev: float
    half_width: float   # 95% confidence half-width (Student-t)
    n: int


def ci95(samples: Sequence[float]) -> Optional[RepetitionSummary]:
    """Mean, sample stddev and Student-t 95% half-width; absent for n < 2."""
    n = len(samples)
    if n < 2:
        return None
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    std = math.sqrt(var)
    from scipy.stats import t
    hw = float(t.ppf(0.975, n - 1)) * std / math.sqrt(n)
    return RepetitionSummary(mean=mean, stddev=std, half_width=hw, n=n)


@dataclass
class Histogram:
    """Fixed-width bins [k*w, (k+1)*w); fractions are per repetition."""

    bin_width: float
    counts: dict = field(default_factory=dict)   # bin index -> count
    total: int = 0

    def fractions(self) -> list[tuple[float, float, float]]:
        """Sorted (bin_lo, bin_hi, fraction) rows."""
        rows = []
        for k in sorted(self.counts):
            rows.append((k * self.bin_width, (k + 1) * self.bin_width,
                         self.counts[k] / self.total))
        return rows


def histogram(values: Sequence[float], bin_width: float) -> Histogram:
    """Histogram of values with fractions over the number of values."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    h = Histogram(bin_width=bin_width)
    for v in values:
        k = math.floor(v / bin_width)
        h.counts[k] = h.counts.get(k, 0) + 1
        h.total += 1
    return h
