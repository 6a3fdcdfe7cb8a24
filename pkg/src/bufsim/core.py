"""Deterministic discrete-event engine for the access-link bottleneck.

Topology: traffic sources feed an access router through internal links at
``r_in``; the router queues packets in one buffer and transmits them on the
access link at ``r_out``. A packet reaches the buffer when its last bit has
been serialized on its source's internal link; the packet being transmitted
on the access link does not occupy buffer capacity.

Times are integer nanoseconds throughout, so event ordering is exact.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .buffers import DROP_FULL, make_queue
from .config import ScenarioConfig, derive_seed
from .traffic import NS, generate, to_ns

# Event kinds; arrivals sort before departures at equal timestamps.
ARRIVAL = 0
DEPARTURE = 1

# Packet fates.
ST_DELIVERED = 0      # departed on the access link by the end of the run
ST_RESIDENT = 1       # accepted, still queued or in service at the end
ST_DROP_FULL = 2
ST_DROP_RED = 3
ST_INFLIGHT = 4       # still on its internal link when the run ended

_FAR_FUTURE = np.int64(1) << np.int64(62)


def serialization_time(size: int, rate: float) -> int:
    """Nanoseconds needed to put ``size`` bytes on a link at ``rate`` bits/s."""
    if size < 1:
        raise ValueError("packet size must be at least 1 byte")
    if rate <= 0:
        raise ValueError("rate must be positive")
    return int(round(size * 8 * NS / rate))


@dataclass(slots=True)
class Packet:
    """One packet; timestamps are ns, optional ones filled as it progresses."""

    pid: int            # per-flow sequence number
    flow_id: str
    size: int           # bytes
    cls: int            # priority class 0..2
    created_ns: int
    enqueued_ns: Optional[int] = None
    departed_ns: Optional[int] = None


class SchedulingError(ValueError):
    """Attempt to schedule an event in the simulated past."""


class EventQueue:
    """Time-ordered event set.

    Pop returns the globally minimum time; ties break by event kind
    (arrivals first), then insertion order.
    """

    def __init__(self):
        self._heap: list = []
        self._seq = 0
        self.now = 0

    def schedule(self, time_ns: int, kind: int, payload) -> None:
        if time_ns < self.now:
            raise SchedulingError(
                f"cannot schedule at {time_ns} ns: clock already at {self.now} ns"
            )
        self._seq += 1
        heapq.heappush(self._heap, (time_ns, kind, self._seq, payload))

    def pop(self):
        time_ns, kind, _, payload = heapq.heappop(self._heap)
        self.now = time_ns
        return time_ns, kind, payload

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


def ingress_arrival_times(gen_ns: np.ndarray, sizes: np.ndarray, r_in: float) -> np.ndarray:
    """Buffer-arrival instants of one flow's packets after its internal link.

    The link is a FIFO serializer: a packet's transmission starts when it is
    generated or when the previous packet's last bit left, whichever is
    later; it arrives at the buffer one serialization time after that.
    """
    if len(gen_ns) == 0:
        return gen_ns.copy()
    ser = np.rint(sizes * (8.0 * NS / r_in)).astype(np.int64)
    cum = np.cumsum(ser)
    # arrive[i] = max(gen[i], arrive[i-1]) + ser[i], unrolled as a prefix max
    return cum + np.maximum.accumulate(gen_ns - (cum - ser))


@dataclass
class RunInputs:
    """Merged, arrival-ordered packet arrays for one simulation run."""

    flow_ids: tuple              # sorted; flow_rank indexes into this
    arr_ns: np.ndarray           # buffer arrival instants, sorted
    created_ns: np.ndarray
    sizes: np.ndarray
    classes: np.ndarray
    flow_rank: np.ndarray
    pids: np.ndarray
    ser_out_ns: np.ndarray
    uniforms: np.ndarray         # per-arrival RED draws (zeros unless RED)
    t_end_ns: int
    warmup_ns: int
    config: ScenarioConfig
    rep: int


def prepare_run(config: ScenarioConfig, rep: int = 0,
                offsets: Optional[dict] = None) -> RunInputs:
    """Generate all flows and merge them into buffer-arrival order.

    Per-flow RNG streams and start offsets are derived from
    (seed, repetition, flow_id), so the flow list order is irrelevant.
    Simultaneous buffer arrivals order by (flow_id, packet id).
    """
    t_end_s = config.warmup + config.duration
    flows = sorted(config.flows, key=lambda f: f.flow_id)
    parts = []
    for rank, flow in enumerate(flows):
        if offsets is not None:
            extra = offsets[flow.flow_id]
        elif config.start_offset_window > 0:
            rng_off = np.random.default_rng(
                derive_seed(config.seed, "offset", rep, flow.flow_id))
            extra = float(rng_off.uniform(0.0, config.start_offset_window))
        else:
            extra = 0.0
        gen_duration = t_end_s - (flow.start_offset + extra)
        if gen_duration <= 0:
            continue
        rng = np.random.default_rng(
            derive_seed(config.seed, "traffic", rep, flow.flow_id))
        stream = generate(flow, gen_duration, extra, rng)
        if len(stream) == 0:
            continue
        arr = ingress_arrival_times(stream.times_ns, stream.sizes, config.link.r_in)
        parts.append((rank, stream, arr))

    if parts:
        arr_ns = np.concatenate([p[2] for p in parts])
        created = np.concatenate([p[1].times_ns for p in parts])
        sizes = np.concatenate([p[1].sizes for p in parts])
        classes = np.concatenate([p[1].classes for p in parts])
        ranks = np.concatenate([np.full(len(p[1]), p[0], dtype=np.int32) for p in parts])
        pids = np.concatenate([np.arange(len(p[1]), dtype=np.int64) for p in parts])
        order = np.lexsort((pids, ranks, arr_ns))
        arr_ns, created, sizes = arr_ns[order], created[order], sizes[order]
        classes, ranks, pids = classes[order], ranks[order], pids[order]
    else:
        arr_ns = created = sizes = pids = np.empty(0, dtype=np.int64)
        classes = np.empty(0, dtype=np.int8)
        ranks = np.empty(0, dtype=np.int32)

    ser_out = np.rint(sizes * (8.0 * NS / config.link.r_out)).astype(np.int64)
    if config.buffer.discipline == "red":
        rng_red = np.random.default_rng(derive_seed(config.seed, "red", rep))
        uniforms = rng_red.random(len(arr_ns))
    else:
        uniforms = np.zeros(len(arr_ns))

    return RunInputs(
        flow_ids=tuple(f.flow_id for f in flows),
        arr_ns=arr_ns, created_ns=created, sizes=sizes, classes=classes,
        flow_rank=ranks, pids=pids, ser_out_ns=ser_out, uniforms=uniforms,
        t_end_ns=to_ns(t_end_s), warmup_ns=to_ns(config.warmup),
        config=config, rep=rep,
    )


class Simulator:
    """Reference event-driven engine; exact but unoptimized."""

    def __init__(self, config: ScenarioConfig):
        self.config = config

    def run_prepared(self, inputs: RunInputs):
        """Run one simulation; returns (status, enqueued_ns, departed_ns)."""
        n = len(inputs.arr_ns)
        status = np.full(n, ST_INFLIGHT, dtype=np.uint8)
        enq = np.full(n, -1, dtype=np.int64)
        dep = np.full(n, -1, dtype=np.int64)
        packets = [
            Packet(pid=int(inputs.pids[i]),
                   flow_id=inputs.flow_ids[inputs.flow_rank[i]],
                   size=int(inputs.sizes[i]), cls=int(inputs.classes[i]),
                   created_ns=int(inputs.created_ns[i]))
            for i in range(n)
        ]
        queue = make_queue(self.config.buffer)
        evq = EventQueue()
        for i in range(n):
            evq.schedule(int(inputs.arr_ns[i]), ARRIVAL, i)

        t_end = inputs.t_end_ns
        ser_out = inputs.ser_out_ns
        in_service: Optional[int] = None
        while evq:
            t, kind, i = evq.pop()
            if t > t_end:
                break
            if kind == ARRIVAL:
                pkt = packets[i]
                accepted, reason = queue.offer(_QueuedRef(i, pkt.size, pkt.cls),
                                               float(inputs.uniforms[i]))
                if not accepted:
                    status[i] = ST_DROP_FULL if reason == DROP_FULL else ST_DROP_RED
                    continue
                pkt.enqueued_ns = t
                enq[i] = t
                status[i] = ST_RESIDENT
                if in_service is None:
                    ref = queue.pop()
                    in_service = ref.idx
                    evq.schedule(t + int(ser_out[ref.idx]), DEPARTURE, ref.idx)
            else:
                packets[i].departed_ns = t
                dep[i] = t
                status[i] = ST_DELIVERED
                ref = queue.pop()
                if ref is not None:
                    in_service = ref.idx
                    evq.schedule(t + int(ser_out[ref.idx]), DEPARTURE, ref.idx)
                else:
                    in_service = None
        self.packets = packets
        return status, enq, dep


class _QueuedRef:
    """Lightweight stand-in carrying what queue disciplines look at."""

    __slots__ = ("idx", "size", "cls")

    def __init__(self, idx: int, size: int, cls: int):
        self.idx = idx
        self.size = size
        self.cls = cls


@dataclass
class SimResult:
    """Per-flow statistics of one run plus the raw packet fate arrays."""

    flows: dict
    t_end_ns: int
    warmup_ns: int
    inputs: Optional[RunInputs] = field(default=None, repr=False)
    status: Optional[np.ndarray] = field(default=None, repr=False)
    enqueued_ns: Optional[np.ndarray] = field(default=None, repr=False)
    departed_ns: Optional[np.ndarray] = field(default=None, repr=False)

    def combined(self) -> metrics.FlowStats:
        total = metrics.FlowStats(flow_id="combined")
        for st in self.flows.values():
            total.sent += st.sent
            total.delivered += st.delivered
            total.dropped += st.dropped
            total.dropped_full += st.dropped_full
            total.dropped_red += st.dropped_red
            total.residual += st.residual
            total.delivered_bytes += st.delivered_bytes
            total.dropped_bytes += st.dropped_bytes
        return total

    def to_dict(self) -> dict:
        return {
            "t_end_ns": self.t_end_ns,
            "warmup_ns": self.warmup_ns,
            "flows": {fid: st.to_dict() for fid, st in sorted(self.flows.items())},
        }


def build_result(inputs: RunInputs, status, enq, dep) -> SimResult:
    """Reduce packet fate arrays to per-flow stats inside the counted window."""
    flows = {}
    counted = (inputs.created_ns >= inputs.warmup_ns) & (inputs.created_ns < inputs.t_end_ns)
    for rank, fid in enumerate(inputs.flow_ids):
        mine = (inputs.flow_rank == rank) & counted
        st = metrics.FlowStats(flow_id=fid)
        st.sent = int(mine.sum())
        delivered = mine & (status == ST_DELIVERED)
        full = mine & (status == ST_DROP_FULL)
        red = mine & (status == ST_DROP_RED)
        st.delivered = int(delivered.sum())
        st.dropped_full = int(full.sum())
        st.dropped_red = int(red.sum())
        st.dropped = st.dropped_full + st.dropped_red
        st.residual = st.sent - st.delivered - st.dropped
        st.delivered_bytes = int(inputs.sizes[delivered].sum())
        st.dropped_bytes = int(inputs.sizes[full | red].sum())
        delays_ns = dep[delivered] - inputs.created_ns[delivered]
        st.delay_samples = (delays_ns / NS).tolist()
        st.check_conservation()
        flows[fid] = st
    return SimResult(flows=flows, t_end_ns=inputs.t_end_ns,
                     warmup_ns=inputs.warmup_ns, inputs=inputs,
                     status=status, enqueued_ns=enq, departed_ns=dep)


def run(config: ScenarioConfig, rep: int = 0, engine: str = "fast",
        offsets: Optional[dict] = None) -> SimResult:
    """Run one simulation of the scenario (one repetition).

    ``engine="fast"`` uses the compiled kernel; ``engine="reference"`` the
    pure-Python event loop. Both produce identical results; the same seed
    always yields a bit-identical SimResult.
    """
    inputs = prepare_run(config, rep, offsets=offsets)
    if engine == "fast":
        from . import fastpath
        status, enq, dep = fastpath.simulate(inputs)
    elif engine == "reference":
        status, enq, dep = Simulator(config).run_prepared(inputs)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return build_result(inputs, status, enq, dep)
