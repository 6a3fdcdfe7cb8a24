"""Closed-form QoS analytics.

Capacity at the IP layer, classical buffer-sizing rules, queue fill rate,
VoIP bandwidth, and the reduced-form ITU E-model chain (R-factor and its
MOS conversion) used to score VoIP calls from measured delay and loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Classical "tiny buffer" sizing range (packets); no closed formula exists,
# the literature quotes this range for 80-90% utilization with many flows.
TINY_BUFFER_RANGE_PACKETS = (20, 50)

# Fixed access-router buffering + receiver de-jitter budget added on top of
# the network one-way delay when scoring a call (ms).
ROUTER_AND_DEJITTER_DELAY_MS = 96.0

# Above this one-way delay (ms) conversations degrade markedly and the
# R-factor picks up an extra penalty slope.
INTERACTIVITY_KNEE_MS = 177.3


@dataclass(frozen=True)
class CapacityParams:
    """Layer-2 link rate plus framing sizes; ``l_l3`` includes the IP header."""

    c_l2: float   # bits/s
    h_l2: float   # layer-2 header bytes (0 means no framing overhead)
    l_l3: float   # IP packet size (payload + IP header) in bytes

    def __post_init__(self):
        if self.c_l2 <= 0 or self.l_l3 <= 0:
            raise ValueError("link rate and packet size must be positive")
        if self.h_l2 < 0:
            raise ValueError("header size must be nonnegative")


@dataclass(frozen=True)
class SizingParams:
    c: float            # link capacity, bits/s
    rtt: float          # round-trip time, seconds
    n_flows: int = 1

    def __post_init__(self):
        if self.c <= 0 or self.rtt < 0:
            raise ValueError("capacity must be positive and rtt nonnegative")
        if self.n_flows < 1:
            raise ValueError("n_flows must be >= 1")


@dataclass(frozen=True)
class EModelInput:
    delay_total: float  # one-way delay, ms
    loss: float         # fraction in [0, 1]

    def __post_init__(self):
        if self.delay_total < 0:
            raise ValueError("delay must be nonnegative")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError("loss must be a fraction in [0, 1]")


def capacity_l3(p: CapacityParams) -> float:
    """Usable IP-layer capacity of a link after layer-2 framing overhead."""
    return p.c_l2 / (1.0 + p.h_l2 / p.l_l3)


def bdp_buffer(p: SizingParams) -> float:
    """Bandwidth-delay-product buffer size, in bytes."""
    return p.c * p.rtt / 8.0


def stanford_buffer(p: SizingParams) -> float:
    """BDP divided by sqrt(N) for N desynchronized long-lived flows, bytes."""
    return bdp_buffer(p) / math.sqrt(p.n_flows)


def fill_rate(r_in: float, r_out: float) -> float:
    """Signed rate at which the bottleneck queue grows, bits/s.

    Negative values mean the queue drains.
    """
    if r_in <= 0 or r_out <= 0:
        raise ValueError("rates must be positive")
    return r_in - r_out


def voip_bandwidth(packet_size: float, interval: float) -> float:
    """IP-level bandwidth of a CBR voice stream, bits/s."""
    if packet_size <= 0 or interval <= 0:
        raise ValueError("packet size and interval must be positive")
    return packet_size * 8.0 / interval


def r_factor(inp: EModelInput) -> float:
    """Reduced-form E-model transmission rating from delay and loss.

    R = 94.2 - 0.024 d - 0.11 (d - 177.3) H(d - 177.3) - 11 - 40 ln(1 + 10 e)
    with d the one-way delay in ms, e the loss fraction and H the unit step.
    """
    d = inp.delay_total
    penalty = 0.11 * (d - INTERACTIVITY_KNEE_MS) if d >= INTERACTIVITY_KNEE_MS else 0.0
    return 94.2 - 0.024 * d - penalty - 11.0 - 40.0 * math.log(1.0 + 10.0 * inp.loss)


def mos_from_r(r: float) -> float:
    """Map an R-factor to a 1..4.5 estimated MOS (standard cubic conversion)."""
    if r <= 0:
        return 1.0
    if r >= 100:
        return 4.5
    mos = 1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r)
    return min(4.5, max(1.0, mos))


def total_delay(network_owd: float) -> float:
    """One-way delay of a call in ms: network OWD plus the fixed buffering budget."""
    if network_owd < 0:
        raise ValueError("network delay must be nonnegative")
    return network_owd + ROUTER_AND_DEJITTER_DELAY_MS


def mos_for_call(network_owd_ms: float, loss: float) -> float:
    """Convenience chain: network delay + loss -> total delay -> R -> MOS."""
    return mos_from_r(r_factor(EModelInput(total_delay(network_owd_ms), loss)))
