"""Queue disciplines for the bottleneck buffer.

Three disciplines: plain drop-tail FIFO, fifo_fast (three strict-priority
FIFO queues selected by packet class, 0 highest) and RED. Capacity is
counted in packets or in IP bytes; the packet currently being transmitted
on the access link does not occupy buffer capacity (the engine pops it out
of the queue when service starts).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

DISCIPLINES = ("drop_tail", "fifo_fast", "red")
CAPACITY_MODES = ("packets", "bytes")

DROP_FULL = "full"
DROP_RED = "red_probabilistic"

NUM_CLASSES = 3


@dataclass(frozen=True)
class RedParams:
    min_th: float            # occupancy threshold, in capacity-mode units
    max_th: float
    max_p: float
    weight: float = 0.002    # EWMA weight for the average occupancy

    def validate(self, capacity: float) -> list[str]:
        errors = []
        if not 0 < self.min_th < self.max_th:
            errors.append("buffer.red: need 0 < min_th < max_th")
        if self.max_th > capacity:
            errors.append("buffer.red.max_th: must not exceed capacity")
        if not 0 < self.max_p <= 1:
            errors.append("buffer.red.max_p: must be in (0, 1]")
        if not 0 < self.weight <= 1:
            errors.append("buffer.red.weight: must be in (0, 1]")
        return errors


@dataclass(frozen=True)
class BufferPolicy:
    discipline: str = "drop_tail"
    capacity_mode: str = "packets"
    capacity: float = 40
    red: Optional[RedParams] = None

    def validate(self) -> list[str]:
        errors = []
        if self.discipline not in DISCIPLINES:
            errors.append(f"buffer.discipline: unknown {self.discipline!r}")
        if self.capacity_mode not in CAPACITY_MODES:
            errors.append(f"buffer.capacity_mode: unknown {self.capacity_mode!r}")
        if self.capacity <= 0:
            errors.append("buffer.capacity: must be positive")
        if self.discipline == "red":
            if self.red is None:
                errors.append("buffer.red: parameters required for RED")
            else:
                errors.extend(self.red.validate(self.capacity))
        elif self.red is not None:
            errors.append("buffer.red: parameters only valid with discipline=red")
        return errors


def red_drop_probability(avg: float, p: RedParams) -> float:
    """Drop probability of the linear RED profile at average occupancy ``avg``.

    Zero below min_th, linear up to max_p on [min_th, max_th), and 1 at or
    above max_th (the full region dominates at the threshold itself).
    """
    if avg < 0:
        raise ValueError("average occupancy must be nonnegative")
    if avg < p.min_th:
        return 0.0
    if avg >= p.max_th:
        return 1.0
    return p.max_p * (avg - p.min_th) / (p.max_th - p.min_th)


def red_update_average(avg: float, occupancy: float, weight: float) -> float:
    """One EWMA step of the RED average queue size."""
    if not 0 < weight <= 1:
        raise ValueError("weight must be in (0, 1]")
    return (1.0 - weight) * avg + weight * occupancy


class _QueueBase:
    """Occupancy bookkeeping shared by all disciplines."""

    def __init__(self, policy: BufferPolicy):
        self.policy = policy
        self.queued_packets = 0
        self.queued_bytes = 0

    def occupancy_units(self) -> float:
        if self.policy.capacity_mode == "packets":
            return self.queued_packets
        return self.queued_bytes

    def _fits(self, size: int) -> bool:
        unit = 1 if self.policy.capacity_mode == "packets" else size
        return self.occupancy_units() + unit <= self.policy.capacity

    def _account_in(self, size: int) -> None:
        self.queued_packets += 1
        self.queued_bytes += size

    def _account_out(self, size: int) -> None:
        self.queued_packets -= 1
        self.queued_bytes -= size

    def __len__(self) -> int:
        return self.queued_packets


class DropTailQueue(_QueueBase):
    """Single FIFO; arrivals are dropped when the queue is full."""

    def __init__(self, policy: BufferPolicy):
        super().__init__(policy)
        self._q = deque()

    def offer(self, pkt, u: float = 0.0):
        if not self._fits(pkt.size):
            return False, DROP_FULL
        self._q.append(pkt)
        self._account_in(pkt.size)
        return True, None

    def pop(self):
        if not self._q:
            return None
        pkt = self._q.popleft()
        self._account_out(pkt.size)
        return pkt


class FifoFastQueue(_QueueBase):
    """Three strict-priority FIFOs by packet class; 0 is served first.

    The admission test is on total occupancy across the three queues.
    """

    def __init__(self, policy: BufferPolicy):
        super().__init__(policy)
        self._q = tuple(deque() for _ in range(NUM_CLASSES))

    def offer(self, pkt, u: float = 0.0):
        if not 0 <= pkt.cls < NUM_CLASSES:
            raise ValueError(f"packet class {pkt.cls} out of range")
        if not self._fits(pkt.size):
            return False, DROP_FULL
        self._q[pkt.cls].append(pkt)
        self._account_in(pkt.size)
        return True, None

    def pop(self):
        for q in self._q:
            if q:
                pkt = q.popleft()
                self._account_out(pkt.size)
                return pkt
        return None


class RedQueue(_QueueBase):
    """FIFO with random early detection on the EWMA of the occupancy.

    The average is updated on every arrival (no idle-time decay) using the
    instantaneous occupancy seen before the packet is admitted; each arrival
    consumes one uniform draw ``u`` and is dropped early when u < p. The
    hard capacity limit still applies after the probabilistic test.
    """

    def __init__(self, policy: BufferPolicy):
        super().__init__(policy)
        if policy.red is None:
            raise ValueError("RED queue requires red parameters")
        self._q = deque()
        self.avg = 0.0

    def offer(self, pkt, u: float = 0.0):
        params = self.policy.red
        self.avg = red_update_average(self.avg, self.occupancy_units(), params.weight)
        if u < red_drop_probability(self.avg, params):
            return False, DROP_RED
        if not self._fits(pkt.size):
            return False, DROP_FULL
        self._q.append(pkt)
        self._account_in(pkt.size)
        return True, None

    def pop(self):
        if not self._q:
            return None
        pkt = self._q.popleft()
        self._account_out(pkt.size)
        return pkt


def make_queue(policy: BufferPolicy):
    """Instantiate the queue object for a policy."""
    if policy.discipline == "drop_tail":
        return DropTailQueue(policy)
    if policy.discipline == "fifo_fast":
        return FifoFastQueue(policy)
    if policy.discipline == "red":
        return RedQueue(policy)
    raise ValueError(f"unknown discipline {policy.discipline!r}")
