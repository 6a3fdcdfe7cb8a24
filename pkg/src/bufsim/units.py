"""Parsing and formatting of rates, times and sizes with unit suffixes.

Canonical internal units are bits/s, seconds and bytes (decimal prefixes:
1 KB = 1000 B, matching how link rates and buffer sizes are quoted).
"""
from __future__ import annotations

import math
import re

_NUM = r"([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"

_RATE_FACTORS = {
    "bps": 1.0,
    "kbps": 1e3,
    "mbps": 1e6,
    "gbps": 1e9,
}

_TIME_FACTORS = {
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "ns": 1e-9,
}

_SIZE_FACTORS = {
    "b": 1.0,
    "kb": 1e3,
    "mb": 1e6,
    "gb": 1e9,
}


def _parse(text: str | float | int, factors: dict[str, float], what: str,
           default_factor: float = 1.0) -> float:
    if isinstance(text, (int, float)):
        return float(text) * default_factor
    m = re.fullmatch(_NUM + r"\s*([a-zA-Z/]*)", text.strip())
    if not m:
        raise ValueError(f"cannot parse {what} from {text!r}")
    value, suffix = float(m.group(1)), m.group(2).strip().lower()
    if not suffix:
        return value * default_factor
    if suffix not in factors:
        raise ValueError(f"unknown {what} unit {m.group(2)!r} in {text!r}")
    return value * factors[suffix]


def parse_rate(text: str | float) -> float:
    """Parse a rate like ``"3.5Mbps"`` into bits per second."""
    return _parse(text, _RATE_FACTORS, "rate")


def parse_time(text: str | float) -> float:
    """Parse a time like ``"20ms"`` into seconds (bare numbers are seconds)."""
    return _parse(text, _TIME_FACTORS, "time")


def parse_size(text: str | float) -> float:
    """Parse a size like ``"32KB"`` into bytes (bare numbers are bytes)."""
    return _parse(text, _SIZE_FACTORS, "size")


def fmt6(x: float | int) -> str:
    """Fixed-decimal string with 6 significant digits (no exponent)."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if x != x:  # NaN
        return "nan"
    if x == 0:
        return "0"
    exp = math.floor(math.log10(abs(x)))
    x = round(x, 5 - exp)
    if abs(x) >= 10.0 ** (exp + 1):  # rounding carried into the next decade
        exp += 1
    decimals = max(0, 5 - exp)
    return f"{x:.{decimals}f}"


def fmt_rate(bps: float) -> str:
    """Human-readable rate with an auto-picked unit."""
    for unit, factor in (("Gbps", 1e9), ("Mbps", 1e6), ("kbps", 1e3)):
        if abs(bps) >= factor:
            return f"{fmt6(bps / factor)} {unit}"
    return f"{fmt6(bps)} bps"


def fmt_size(nbytes: float) -> str:
    """Human-readable size with an auto-picked decimal unit."""
    for unit, factor in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if abs(nbytes) >= factor:
            return f"{fmt6(nbytes / factor)} {unit}"
    return f"{fmt6(nbytes)} B"
