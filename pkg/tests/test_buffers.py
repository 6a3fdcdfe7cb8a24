import random

import pytest
from hypothesis import given, strategies as st

from bufsim.buffers import (BufferPolicy, DROP_FULL, DROP_RED, DropTailQueue,
                            FifoFastQueue, RedParams, RedQueue, make_queue,
                            red_drop_probability, red_update_average)


class Pkt:
    def __init__(self, size=1500, cls=1, tag=None):
        self.size = size
        self.cls = cls
        self.tag = tag


def drop_tail(capacity, mode="packets"):
    return DropTailQueue(BufferPolicy("drop_tail", mode, capacity))


class TestDropTail:
    def test_accepts_into_empty(self):
        q = drop_tail(15)
        accepted, reason = q.offer(Pkt())
        assert accepted and reason is None

    def test_drops_when_full(self):
        q = drop_tail(15)
        for _ in range(15):
            assert q.offer(Pkt())[0]
        accepted, reason = q.offer(Pkt())
        assert not accepted and reason == DROP_FULL

    def test_byte_mode_favors_small_packets(self):
        q = drop_tail(3000, mode="bytes")
        assert q.offer(Pkt(size=2900))[0]
        assert q.offer(Pkt(size=200)) == (False, DROP_FULL)
        assert q.offer(Pkt(size=60))[0]  # VoIP-sized packet still fits

    def test_fifo_order(self):
        q = drop_tail(10)
        for tag in "ABC":
            q.offer(Pkt(tag=tag))
        assert [q.pop().tag for _ in range(3)] == ["A", "B", "C"]
        assert q.pop() is None

    def test_occupancy_tracks_bytes_and_packets(self):
        q = drop_tail(10)
        q.offer(Pkt(size=100))
        q.offer(Pkt(size=200))
        assert q.queued_packets == 2 and q.queued_bytes == 300
        q.pop()
        assert q.queued_packets == 1 and q.queued_bytes == 200


class TestFifoFast:
    def test_low_class_served_first(self):
        q = FifoFastQueue(BufferPolicy("fifo_fast", "packets", 10))
        q.offer(Pkt(cls=2, tag="low"))
        q.offer(Pkt(cls=1, tag="mid"))
        assert q.pop().tag == "mid"
        assert q.pop().tag == "low"

    def test_empty_returns_none(self):
        q = FifoFastQueue(BufferPolicy("fifo_fast", "packets", 10))
        assert q.pop() is None

    def test_admission_counts_all_classes(self):
        q = FifoFastQueue(BufferPolicy("fifo_fast", "packets", 2))
        assert q.offer(Pkt(cls=0))[0]
        assert q.offer(Pkt(cls=2))[0]
        assert q.offer(Pkt(cls=1)) == (False, DROP_FULL)

    def test_class_two_starvation(self):
        # a class-2 packet leaves only when classes 0 and 1 are empty
        q = FifoFastQueue(BufferPolicy("fifo_fast", "packets", 100))
        rng = random.Random(7)
        backlog = {0: 0, 1: 0, 2: 0}
        for _ in range(300):
            if rng.random() < 0.6:
                cls = rng.randrange(3)
                if q.offer(Pkt(cls=cls))[0]:
                    backlog[cls] += 1
            else:
                pkt = q.pop()
                if pkt is not None:
                    if pkt.cls == 2:
                        assert backlog[0] == 0 and backlog[1] == 0
                    if pkt.cls == 1:
                        assert backlog[0] == 0
                    backlog[pkt.cls] -= 1

    def test_rejects_out_of_range_class(self):
        q = FifoFastQueue(BufferPolicy("fifo_fast", "packets", 10))
        with pytest.raises(ValueError):
            q.offer(Pkt(cls=3))


class TestRedProfile:
    PARAMS = RedParams(min_th=5, max_th=15, max_p=0.1, weight=0.002)

    def test_below_min_threshold(self):
        assert red_drop_probability(4.999, self.PARAMS) == 0.0

    def test_at_max_threshold(self):
        assert red_drop_probability(15.0, self.PARAMS) == 1.0
        assert red_drop_probability(20.0, self.PARAMS) == 1.0

    def test_linear_midpoint(self):
        assert red_drop_probability(10.0, self.PARAMS) == pytest.approx(0.05)

    @given(st.floats(min_value=0, max_value=30), st.floats(min_value=0, max_value=30))
    def test_monotone_nondecreasing(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert red_drop_probability(lo, self.PARAMS) <= red_drop_probability(hi, self.PARAMS)

    @given(st.floats(min_value=0, max_value=14.999))
    def test_continuous_below_max(self, avg):
        eps = 1e-6
        p0 = red_drop_probability(avg, self.PARAMS)
        p1 = red_drop_probability(min(avg + eps, 15 - 1e-9), self.PARAMS)
        assert abs(p1 - p0) < 1e-5

    def test_rejects_negative_average(self):
        with pytest.raises(ValueError):
            red_drop_probability(-1, self.PARAMS)


class TestRedAverage:
    def test_weight_one_tracks_instantaneous(self):
        assert red_update_average(3.0, 11.0, 1.0) == 11.0

    def test_fixed_point(self):
        assert red_update_average(10.0, 10.0, 0.3) == pytest.approx(10.0)

    def test_geometric_convergence(self):
        # 1000 updates toward occupancy 10: avg = 10*(1 - 0.998^1000)
        avg = 0.0
        for _ in range(1000):
            avg = red_update_average(avg, 10.0, 0.002)
        assert avg == pytest.approx(10.0 * (1 - 0.998 ** 1000))
        assert avg == pytest.approx(8.65, abs=0.005)

    def test_rejects_bad_weight(self):
        with pytest.raises(ValueError):
            red_update_average(0.0, 1.0, 0.0)


class TestRedQueue:
    def policy(self, **kw):
        args = dict(min_th=2, max_th=8, max_p=0.5, weight=1.0)
        args.update(kw)
        return BufferPolicy("red", "packets", 10, red=RedParams(**args))

    def test_early_drop_consumes_uniform(self):
        q = RedQueue(self.policy())
        for _ in range(5):
            q.offer(Pkt(), u=1.0)  # u=1 never below p<1
        # avg now 5 -> p = 0.5*(5-2)/6 = 0.25; u below p drops early
        accepted, reason = q.offer(Pkt(), u=0.01)
        assert (accepted, reason) == (False, DROP_RED)
        accepted, reason = q.offer(Pkt(), u=0.99)
        assert accepted

    def test_hard_limit_still_applies(self):
        q = RedQueue(self.policy(min_th=9, max_th=10, max_p=1.0))
        for _ in range(10):
            assert q.offer(Pkt(), u=1.0)[0]
        accepted, reason = q.offer(Pkt(), u=1.0)
        assert (accepted, reason) == (False, DROP_FULL)

    def test_average_updates_every_arrival(self):
        q = RedQueue(self.policy(weight=0.5))
        q.offer(Pkt(), u=1.0)
        assert q.avg == 0.0          # updated with occupancy before enqueue
        q.offer(Pkt(), u=1.0)
        assert q.avg == 0.5


@given(st.lists(st.tuples(st.booleans(), st.integers(min_value=40, max_value=1500),
                          st.integers(min_value=0, max_value=2)), max_size=200))
def test_occupancy_never_exceeds_capacity(ops):
    for policy in (BufferPolicy("drop_tail", "packets", 7),
                   BufferPolicy("fifo_fast", "packets", 7),
                   BufferPolicy("drop_tail", "bytes", 4000),
                   BufferPolicy("red", "packets", 7,
                                red=RedParams(min_th=2, max_th=6, max_p=0.8))):
        q = make_queue(policy)
        cap = policy.capacity
        for is_offer, size, cls in ops:
            if is_offer:
                q.offer(Pkt(size=size, cls=cls), u=0.5)
            else:
                q.pop()
            assert q.occupancy_units() <= cap


def test_policy_validation():
    assert BufferPolicy("drop_tail", "packets", 30).validate() == []
    assert any("capacity" in e for e in BufferPolicy(capacity=0).validate())
    assert any("red" in e for e in BufferPolicy("red", "packets", 10).validate())
    bad_red = BufferPolicy("red", "packets", 10,
                           red=RedParams(min_th=8, max_th=4, max_p=0.5))
    assert any("min_th" in e for e in bad_red.validate())
    over = BufferPolicy("red", "packets", 10,
                        red=RedParams(min_th=2, max_th=40, max_p=0.5))
    assert any("max_th" in e for e in over.validate())
    tail_with_red = BufferPolicy("drop_tail", "packets", 10,
                                 red=RedParams(min_th=1, max_th=5, max_p=0.5))
    assert any("only valid" in e for e in tail_with_red.validate())
