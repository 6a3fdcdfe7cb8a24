"""Traffic source models: CBR voice, IP-camera bursts, trace replay and a
synthetic videoconference generator.

Generators return packet stubs as numpy arrays of generation instants
(integer nanoseconds), sizes (bytes) and per-packet classes. Packets of a
burst share one generation instant; spacing them out at the internal
network rate is the engine's job.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

NS = 1_000_000_000

FLOW_KINDS = ("cbr", "burst", "trace", "synthetic_video")

# Packets per burst observed for an AXIS 2120 IP camera at 1 Mbps, by
# resolution and JPEG compression level (KB). Keys: (resolution, level_kb).
CAMERA_BURST_PACKETS = {
    ("704x576", 50): 41,
    ("704x576", 32): 26,
    ("704x576", 16): 10,
    ("352x288", 13): 9,
    ("352x288", 4): 3,
}


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS))


@dataclass(frozen=True)
class CbrParams:
    packet_size: int     # bytes
    interval: float      # seconds

    def validate(self) -> list[str]:
        errors = []
        if self.packet_size < 1:
            errors.append("packet_size: must be >= 1 byte")
        if self.interval <= 0:
            errors.append("interval: must be positive")
        return errors


@dataclass(frozen=True)
class BurstParams:
    packets_per_burst: int
    packet_size: int
    inter_burst_mean: float      # seconds, start-to-start
    inter_burst_stddev: float    # seconds

    def validate(self) -> list[str]:
        errors = []
        if self.packets_per_burst < 1:
            errors.append("packets_per_burst: must be >= 1")
        if self.packet_size < 1:
            errors.append("packet_size: must be >= 1 byte")
        if self.inter_burst_mean <= 0:
            errors.append("inter_burst_mean: must be positive")
        if self.inter_burst_stddev < 0:
            errors.append("inter_burst_stddev: must be >= 0")
        return errors


@dataclass(frozen=True)
class TraceParams:
    path: str
    time_scale: float = 1.0

    def validate(self) -> list[str]:
        errors = []
        if self.time_scale <= 0:
            errors.append("time_scale: must be positive")
        if not Path(self.path).exists():
            errors.append(f"path: trace file {self.path!r} not found")
        return errors


@dataclass(frozen=True)
class SyntheticVideoParams:
    mean_bitrate: float      # bits/s
    frame_interval: float    # seconds
    frame_size_cv: float     # coefficient of variation of the frame size
    max_packet_size: int     # bytes

    def validate(self) -> list[str]:
        errors = []
        if self.mean_bitrate <= 0:
            errors.append("mean_bitrate: must be positive")
        if self.frame_interval <= 0:
            errors.append("frame_interval: must be positive")
        if self.frame_size_cv < 0:
            errors.append("frame_size_cv: must be >= 0")
        if self.max_packet_size < 1:
            errors.append("max_packet_size: must be >= 1 byte")
        return errors


_PARAM_TYPES = {
    "cbr": CbrParams,
    "burst": BurstParams,
    "trace": TraceParams,
    "synthetic_video": SyntheticVideoParams,
}


@dataclass(frozen=True)
class FlowSpec:
    flow_id: str
    kind: str
    params: object
    start_offset: float = 0.0   # seconds, fixed part of the flow's start
    cls: int = 1                # priority class 0..2 (0 highest)

    def validate(self) -> list[str]:
        errors = []
        if not self.flow_id:
            errors.append("flow_id: must be non-empty")
        if self.kind not in FLOW_KINDS:
            errors.append(f"kind: unknown {self.kind!r}")
            return errors
        expected = _PARAM_TYPES[self.kind]
        if not isinstance(self.params, expected):
            errors.append(f"params: kind {self.kind} needs {expected.__name__}")
            return errors
        errors.extend(f"{self.flow_id}.{e}" for e in self.params.validate())
        if self.start_offset < 0:
            errors.append("start_offset: must be >= 0")
        if not 0 <= self.cls <= 2:
            errors.append("class: must be 0, 1 or 2")
        return errors

    def mean_rate(self) -> float:
        """Long-run offered rate in bits/s (advisory, used for utilization)."""
        p = self.params
        if self.kind == "cbr":
            return p.packet_size * 8.0 / p.interval
        if self.kind == "burst":
            return p.packets_per_burst * p.packet_size * 8.0 / p.inter_burst_mean
        if self.kind == "synthetic_video":
            return p.mean_bitrate
        if self.kind == "trace":
            times, sizes, _ = read_trace(p.path, p.time_scale)
            span = float(times[-1]) if len(times) else 0.0
            if span <= 0:
                return 0.0
            return float(sizes.sum()) * 8.0 / span
        raise ValueError(self.kind)


@dataclass
class PacketStream:
    """Generated packets of one flow, ordered by generation instant."""

    times_ns: np.ndarray    # int64
    sizes: np.ndarray       # int64, bytes
    classes: np.ndarray     # int8

    def __len__(self) -> int:
        return len(self.times_ns)

    def total_bytes(self) -> int:
        return int(self.sizes.sum())


def gen_cbr(params: CbrParams, duration: float, start_offset: float = 0.0) -> PacketStream:
    """Fixed-size packets every ``interval`` starting at the offset.

    Packets are generated for instants t = offset + k*interval with
    k*interval strictly inside the duration window.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    interval_ns = to_ns(params.interval)
    duration_ns = to_ns(duration)
    n = -(-duration_ns // interval_ns)  # ceil
    times = to_ns(start_offset) + np.arange(n, dtype=np.int64) * interval_ns
    sizes = np.full(n, params.packet_size, dtype=np.int64)
    return PacketStream(times, sizes, np.full(n, -1, dtype=np.int8))


def sample_inter_burst_gaps(params: BurstParams, n: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Draw n start-to-start gaps from the truncated normal model.

    Gaps are resampled into [max(1 ms, mean-3*stddev), mean+3*stddev]; the
    symmetric bounds keep the sample mean on the model mean and bound the
    shortest possible burst period.
    """
    mean, std = params.inter_burst_mean, params.inter_burst_stddev
    if std == 0:
        return np.full(n, mean)
    lo = max(1e-3, mean - 3.0 * std)
    hi = mean + 3.0 * std
    gaps = rng.normal(mean, std, n)
    bad = (gaps < lo) | (gaps > hi)
    while bad.any():
        gaps[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = (gaps < lo) | (gaps > hi)
    return gaps


def gen_burst(params: BurstParams, duration: float, start_offset: float,
              rng: np.random.Generator) -> PacketStream:
    """Fixed-size bursts with random start-to-start gaps.

    All packets of a burst share the burst's generation instant; the engine
    serializes them at the internal network rate.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    starts = [0.0]
    # draw gaps in chunks until the timeline covers the duration
    while starts[-1] < duration:
        chunk = max(16, int((duration - starts[-1]) / params.inter_burst_mean * 1.2))
        gaps = sample_inter_burst_gaps(params, chunk, rng)
        base = starts[-1]
        starts.extend((base + np.cumsum(gaps)).tolist())
    starts_arr = np.asarray(starts)
    starts_arr = starts_arr[starts_arr < duration]
    burst_ns = (np.round(starts_arr * NS).astype(np.int64) + to_ns(start_offset))
    times = np.repeat(burst_ns, params.packets_per_burst)
    sizes = np.full(len(times), params.packet_size, dtype=np.int64)
    return PacketStream(times, sizes, np.full(len(times), -1, dtype=np.int8))


def burst_size_for_compression(resolution: str, compression_level_kb: int) -> int:
    """Packets per burst for a camera resolution / compression level pair."""
    key = (resolution.replace("×", "x").replace(" ", "").lower(), int(compression_level_kb))
    try:
        return CAMERA_BURST_PACKETS[key]
    except KeyError:
        known = ", ".join(f"{r}@{k}KB" for r, k in sorted(CAMERA_BURST_PACKETS))
        raise ValueError(
            f"no burst size tabulated for {resolution}@{compression_level_kb}KB "
            f"(known: {known})"
        ) from None


class TraceParseError(ValueError):
    """Malformed trace file; carries the offending line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def read_trace(path, time_scale: float = 1.0):
    """Parse a trace file into (times_s, sizes, classes) arrays.

    Format: one packet per line, ``<relative_timestamp_seconds> <size_bytes>
    [<class 0-2>]``; ``#`` starts a comment; timestamps must be nondecreasing
    and sizes >= 1. Class defaults to -1 (meaning "use the flow's class").
    """
    times: list[float] = []
    sizes: list[int] = []
    classes: list[int] = []
    prev = -math.inf
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise TraceParseError(path, lineno, f"expected 2 or 3 fields, got {len(parts)}")
            try:
                ts = float(parts[0])
                size = int(parts[1])
            except ValueError as exc:
                raise TraceParseError(path, lineno, str(exc)) from None
            cls = -1
            if len(parts) == 3:
                try:
                    cls = int(parts[2])
                except ValueError as exc:
                    raise TraceParseError(path, lineno, str(exc)) from None
                if not 0 <= cls <= 2:
                    raise TraceParseError(path, lineno, f"class {cls} out of range 0-2")
            if ts < 0:
                raise TraceParseError(path, lineno, f"negative timestamp {ts}")
            if ts < prev:
                raise TraceParseError(path, lineno, f"timestamp {ts} decreases")
            if size < 1:
                raise TraceParseError(path, lineno, f"size {size} must be >= 1")
            prev = ts
            times.append(ts * time_scale)
            sizes.append(size)
            classes.append(cls)
    return (np.asarray(times, dtype=np.float64),
            np.asarray(sizes, dtype=np.int64),
            np.asarray(classes, dtype=np.int8))


def write_trace(path, times_s, sizes, classes=None) -> None:
    """Write a (timestamp, size[, class]) trace in the replayable format."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, (t, s) in enumerate(zip(times_s, sizes)):
            if classes is not None and classes[i] >= 0:
                fh.write(f"{t:.9f} {int(s)} {int(classes[i])}\n")
            else:
                fh.write(f"{t:.9f} {int(s)}\n")


def gen_trace(params: TraceParams, duration: float, start_offset: float = 0.0) -> PacketStream:
    """Replay a trace, shifted by the offset and truncated at the duration.

    Truncation is inclusive (a packet recorded exactly at the duration still
    replays). A trace shorter than the duration loops; the loop period is
    the last timestamp of the (scaled) trace.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    times, sizes, classes = read_trace(params.path, params.time_scale)
    if len(times) == 0:
        raise ValueError(f"trace {params.path!r} contains no packets")
    span = float(times[-1])
    reps = 1
    if span < duration:
        if span <= 0:
            raise ValueError(
                f"trace {params.path!r} spans zero time and cannot be looped "
                f"over a {duration} s window"
            )
        reps = int(math.ceil(duration / span)) + 1
    all_times = (np.tile(times, reps)
                 + np.repeat(np.arange(reps, dtype=np.float64) * span, len(times)))
    keep = all_times <= duration
    all_times = all_times[keep]
    all_sizes = np.tile(sizes, reps)[keep]
    all_classes = np.tile(classes, reps)[keep]
    times_ns = np.round(all_times * NS).astype(np.int64) + to_ns(start_offset)
    return PacketStream(times_ns, all_sizes, all_classes)


def gen_synthetic_video(params: SyntheticVideoParams, duration: float,
                        start_offset: float, rng: np.random.Generator) -> PacketStream:
    """Frame-clocked video source with lognormal frame sizes.

    Every frame interval a frame size is drawn (mean = mean_bitrate *
    frame_interval / 8 bytes, given CV), fragmented into max_packet_size
    packets plus a remainder, and emitted as a mini-burst at the frame
    instant.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    frame_ns = to_ns(params.frame_interval)
    duration_ns = to_ns(duration)
    n_frames = int(-(-duration_ns // frame_ns))
    mean_bytes = params.mean_bitrate * params.frame_interval / 8.0
    if params.frame_size_cv == 0:
        frame_bytes = np.full(n_frames, max(1, round(mean_bytes)), dtype=np.int64)
    else:
        sigma2 = math.log(1.0 + params.frame_size_cv ** 2)
        mu = math.log(mean_bytes) - sigma2 / 2.0
        frame_bytes = np.maximum(
            1, np.round(rng.lognormal(mu, math.sqrt(sigma2), n_frames))
        ).astype(np.int64)

    mps = params.max_packet_size
    full = frame_bytes // mps
    rem = frame_bytes - full * mps
    counts = full + (rem > 0)
    frame_times = to_ns(start_offset) + np.arange(n_frames, dtype=np.int64) * frame_ns
    times = np.repeat(frame_times, counts)
    sizes = np.full(len(times), mps, dtype=np.int64)
    ends = np.cumsum(counts) - 1
    has_rem = rem > 0
    sizes[ends[has_rem]] = rem[has_rem]
    return PacketStream(times, sizes, np.full(len(times), -1, dtype=np.int8))


def generate(flow: FlowSpec, duration: float, extra_offset: float,
             rng: Optional[np.random.Generator]) -> PacketStream:
    """Generate a flow's stream; classes default to the flow's class."""
    offset = flow.start_offset + extra_offset
    if flow.kind == "cbr":
        stream = gen_cbr(flow.params, duration, offset)
    elif flow.kind == "burst":
        stream = gen_burst(flow.params, duration, offset, rng)
    elif flow.kind == "trace":
        stream = gen_trace(flow.params, duration, offset)
    elif flow.kind == "synthetic_video":
        stream = gen_synthetic_video(flow.params, duration, offset, rng)
    else:
        raise ValueError(f"unknown flow kind {flow.kind!r}")
    stream.classes = np.where(stream.classes >= 0, stream.classes,
                              np.int8(flow.cls)).astype(np.int8)
    return stream
