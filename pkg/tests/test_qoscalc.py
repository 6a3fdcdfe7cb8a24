import math

import pytest
from hypothesis import given, strategies as st

from bufsim import qoscalc
from bufsim.qoscalc import (CapacityParams, EModelInput, SizingParams,
                            capacity_l3, bdp_buffer, fill_rate, mos_from_r,
                            r_factor, stanford_buffer, total_delay,
                            voip_bandwidth)


class TestCapacity:
    def test_10baset_small_packet(self):
        # 150 B IP packet over 10 Mbps Ethernet with 38 B of L2 framing
        value = capacity_l3(CapacityParams(c_l2=10e6, h_l2=38, l_l3=150))
        assert value == pytest.approx(7.97e6, abs=0.01e6)

    def test_10baset_full_packet(self):
        value = capacity_l3(CapacityParams(c_l2=10e6, h_l2=38, l_l3=1500))
        assert value == pytest.approx(9.75e6, abs=0.01e6)

    def test_no_overhead(self):
        assert capacity_l3(CapacityParams(c_l2=10e6, h_l2=0, l_l3=150)) == 10e6

    def test_always_below_l2_and_limits_to_l2(self):
        c = CapacityParams(c_l2=10e6, h_l2=38, l_l3=150)
        assert capacity_l3(c) < c.c_l2
        huge = CapacityParams(c_l2=10e6, h_l2=38, l_l3=1e9)
        assert capacity_l3(huge) == pytest.approx(10e6, rel=1e-6)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            CapacityParams(c_l2=0, h_l2=38, l_l3=150)
        with pytest.raises(ValueError):
            CapacityParams(c_l2=10e6, h_l2=-1, l_l3=150)


class TestBufferSizing:
    def test_bdp_backbone(self):
        # 40 Gbps x 250 ms = 10 Gbit = 1.25 GB
        assert bdp_buffer(SizingParams(c=40e9, rtt=0.250)) == 1.25e9

    def test_bdp_zero_rtt(self):
        assert bdp_buffer(SizingParams(c=40e9, rtt=0.0)) == 0.0

    def test_bdp_access_link(self):
        assert bdp_buffer(SizingParams(c=100e6, rtt=0.1)) == 1.25e6

    def test_stanford_100_flows(self):
        assert stanford_buffer(SizingParams(c=40e9, rtt=0.250, n_flows=100)) == 125e6

    def test_stanford_single_flow_equals_bdp(self):
        p = SizingParams(c=40e9, rtt=0.250, n_flows=1)
        assert stanford_buffer(p) == bdp_buffer(p)

    def test_stanford_four_flows_halves(self):
        p = SizingParams(c=40e9, rtt=0.250, n_flows=4)
        assert stanford_buffer(p) == bdp_buffer(p) / 2

    @given(st.integers(min_value=1, max_value=10000))
    def test_stanford_never_exceeds_bdp(self, n):
        p = SizingParams(c=1e9, rtt=0.05, n_flows=n)
        if n == 1:
            assert stanford_buffer(p) == bdp_buffer(p)
        else:
            assert stanford_buffer(p) < bdp_buffer(p)

    def test_tiny_buffer_range_documented(self):
        lo, hi = qoscalc.TINY_BUFFER_RANGE_PACKETS
        assert (lo, hi) == (20, 50)


class TestFillRate:
    def test_balanced(self):
        assert fill_rate(5e6, 5e6) == 0.0

    def test_overload(self):
        assert fill_rate(10e6, 5e6) == 5e6

    def test_draining_is_negative(self):
        assert fill_rate(5e6, 10e6) == -5e6

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fill_rate(0, 5e6)


class TestVoipBandwidth:
    def test_g729_two_samples(self):
        assert voip_bandwidth(60, 0.020) == 24000.0

    def test_proportional_scaling_invariance(self):
        assert voip_bandwidth(120, 0.040) == 24000.0

    def test_half_interval_doubles(self):
        assert voip_bandwidth(60, 0.010) == 48000.0


class TestRFactor:
    def test_zero_delay_zero_loss(self):
        assert r_factor(EModelInput(0.0, 0.0)) == pytest.approx(83.2)

    def test_below_knee_no_loss(self):
        # 94.2 - 0.024*116 - 11
        assert r_factor(EModelInput(116.0, 0.0)) == pytest.approx(80.416)

    def test_loss_penalty(self):
        # subtract 40*ln(1.3) = 10.4946 from the lossless value
        expected = 80.416 - 40 * math.log(1.3)
        assert r_factor(EModelInput(116.0, 0.03)) == pytest.approx(expected)
        assert expected == pytest.approx(69.92, abs=0.01)

    def test_continuous_at_knee(self):
        eps = 0.01
        below = r_factor(EModelInput(177.3 - eps, 0.0))
        above = r_factor(EModelInput(177.3 + eps, 0.0))
        assert abs(below - above) < 0.01

    def test_slope_steepens_above_knee(self):
        h = 0.5
        slope_below = (r_factor(EModelInput(100 + h, 0)) - r_factor(EModelInput(100, 0))) / h
        slope_above = (r_factor(EModelInput(200 + h, 0)) - r_factor(EModelInput(200, 0))) / h
        assert slope_below == pytest.approx(-0.024)
        assert slope_above == pytest.approx(-0.134)

    @given(st.floats(min_value=0, max_value=400),
           st.floats(min_value=0, max_value=400))
    def test_strictly_decreasing_in_delay(self, d1, d2):
        if abs(d1 - d2) < 1e-9:  # below float resolution of the formula
            return
        lo, hi = min(d1, d2), max(d1, d2)
        assert r_factor(EModelInput(hi, 0.01)) < r_factor(EModelInput(lo, 0.01))

    @given(st.floats(min_value=0, max_value=1),
           st.floats(min_value=0, max_value=1))
    def test_strictly_decreasing_in_loss(self, e1, e2):
        if abs(e1 - e2) < 1e-12:
            return
        lo, hi = min(e1, e2), max(e1, e2)
        assert r_factor(EModelInput(100, hi)) < r_factor(EModelInput(100, lo))

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            EModelInput(-1.0, 0.0)
        with pytest.raises(ValueError):
            EModelInput(10.0, 1.5)


class TestMos:
    def test_clamps(self):
        assert mos_from_r(0) == 1.0
        assert mos_from_r(-20) == 1.0
        assert mos_from_r(100) == 4.5
        assert mos_from_r(130) == 4.5

    def test_good_call(self):
        assert mos_from_r(80.416) == pytest.approx(4.04, abs=0.01)

    def test_nondecreasing_and_bounded(self):
        values = [mos_from_r(r / 10) for r in range(0, 1001)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert all(1.0 <= v <= 4.5 for v in values)


class TestTotalDelay:
    @pytest.mark.parametrize("network,total",
                             [(20, 116), (40, 136), (60, 156),
                              (100, 196), (120, 216), (140, 236), (0, 96)])
    def test_fixed_budget(self, network, total):
        assert total_delay(network) == total

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            total_delay(-5)
