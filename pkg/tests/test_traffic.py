import numpy as np
import pytest

from bufsim.traffic import (NS, BurstParams, CbrParams, FlowSpec,
                            SyntheticVideoParams, TraceParams, TraceParseError,
                            burst_size_for_compression, gen_burst, gen_cbr,
                            gen_synthetic_video, gen_trace,
                            sample_inter_burst_gaps, read_trace, write_trace)

G729 = CbrParams(packet_size=60, interval=0.020)
CAMERA = BurstParams(packets_per_burst=26, packet_size=1500,
                     inter_burst_mean=0.278, inter_burst_stddev=0.060)


class TestCbr:
    def test_g729_call_over_a_minute(self):
        stream = gen_cbr(G729, duration=60.0)
        assert len(stream) == 3000
        # IP-level rate is exactly size*8/interval = 24 kbps
        assert stream.total_bytes() * 8 / 60.0 == pytest.approx(24000.0)

    def test_single_interval_boundary(self):
        stream = gen_cbr(G729, duration=0.020, start_offset=1.0)
        assert len(stream) == 1
        assert stream.times_ns[0] == NS  # exactly at the offset

    def test_ten_mbps_source(self):
        stream = gen_cbr(CbrParams(packet_size=1500, interval=0.0012), duration=1.0)
        assert len(stream) == 834
        assert stream.total_bytes() * 8 / 1.0 == pytest.approx(10.0e6, rel=2e-3)

    def test_deterministic_spacing(self):
        stream = gen_cbr(G729, duration=1.0)
        gaps = np.diff(stream.times_ns)
        assert (gaps == 20_000_000).all()


class TestBurst:
    def test_camera_minute(self):
        rng = np.random.default_rng(1)
        stream = gen_burst(CAMERA, duration=60.0, start_offset=0.0, rng=rng)
        n_bursts = len(stream) // CAMERA.packets_per_burst
        assert len(stream) % CAMERA.packets_per_burst == 0
        assert 200 <= n_bursts <= 232  # ~216 expected
        rate = stream.total_bytes() * 8 / 60.0
        assert rate == pytest.approx(26 * 1500 * 8 / 0.278, rel=0.05)  # ~1.12 Mbps

    def test_all_bursts_full_size_and_back_to_back(self):
        rng = np.random.default_rng(2)
        stream = gen_burst(CAMERA, duration=10.0, start_offset=0.0, rng=rng)
        times = stream.times_ns.reshape(-1, CAMERA.packets_per_burst)
        # packets of one burst share the generation instant
        assert (times == times[:, :1]).all()
        assert (stream.sizes == 1500).all()

    def test_zero_stddev_is_periodic(self):
        params = BurstParams(26, 1500, 0.278, 0.0)
        stream = gen_burst(params, 5.0, 0.0, np.random.default_rng(3))
        starts = np.unique(stream.times_ns)
        gaps = np.diff(starts)
        assert (gaps == gaps[0]).all()

    def test_gap_sampler_mean(self):
        # Monte-Carlo: the empirical mean of 10^4 draws stays within
        # three standard errors of the model mean.
        rng = np.random.default_rng(4)
        gaps = sample_inter_burst_gaps(CAMERA, 10_000, rng)
        assert abs(gaps.mean() - 0.278) <= 3 * 0.060 / 100
        assert gaps.min() >= 0.001

    def test_nondecreasing_instants(self):
        rng = np.random.default_rng(5)
        stream = gen_burst(CAMERA, 30.0, 0.5, rng)
        assert (np.diff(stream.times_ns) >= 0).all()


class TestCameraTable:
    @pytest.mark.parametrize("resolution,level,packets", [
        ("704x576", 32, 26),
        ("704x576", 50, 41),
        ("704x576", 16, 10),
        ("352x288", 13, 9),
        ("352x288", 4, 3),
    ])
    def test_tabulated_pairs(self, resolution, level, packets):
        assert burst_size_for_compression(resolution, level) == packets

    def test_unicode_resolution_accepted(self):
        assert burst_size_for_compression("704×576", 32) == 26

    def test_unknown_pair_rejected(self):
        with pytest.raises(ValueError, match="704x576"):
            burst_size_for_compression("704x576", 99)


class TestTrace:
    def write(self, tmp_path, text, name="t.trace"):
        path = tmp_path / name
        path.write_text(text)
        return path

    def test_replay_shifts_by_offset(self, tmp_path):
        path = self.write(tmp_path, "0.0 1500\n0.1 200\n")
        stream = gen_trace(TraceParams(path=str(path)), duration=0.1, start_offset=1.0)
        assert stream.times_ns.tolist() == [1_000_000_000, 1_100_000_000]
        assert stream.sizes.tolist() == [1500, 200]

    def test_loops_when_shorter_than_duration(self, tmp_path):
        path = self.write(tmp_path, "0.0 100\n1.0 100\n2.0 100\n")
        stream = gen_trace(TraceParams(path=str(path)), duration=5.0)
        # 2 s trace over 5 s -> cycles at 0, 2 and 4 s: 2.5 replays
        assert (stream.times_ns / NS).tolist() == [0, 1, 2, 2, 3, 4, 4, 5]

    def test_comments_classes_and_blank_lines(self, tmp_path):
        path = self.write(tmp_path, "# header\n\n0.0 1500 0\n0.5 60\n")
        stream = gen_trace(TraceParams(path=str(path)), duration=0.5)
        assert stream.classes.tolist() == [0, -1]

    def test_parse_error_carries_line_number(self, tmp_path):
        path = self.write(tmp_path, "0.0 1500\nnot a line\n")
        with pytest.raises(TraceParseError, match=":2:"):
            read_trace(path)

    def test_decreasing_timestamp_rejected(self, tmp_path):
        path = self.write(tmp_path, "1.0 100\n0.5 100\n")
        with pytest.raises(TraceParseError, match="decreases"):
            read_trace(path)

    def test_zero_size_rejected(self, tmp_path):
        path = self.write(tmp_path, "0.0 0\n")
        with pytest.raises(TraceParseError, match="size"):
            read_trace(path)

    def test_round_trip_is_lossless(self, tmp_path):
        times = [0.0, 0.25, 0.25, 1.5]
        sizes = [100, 1500, 60, 900]
        classes = [0, 1, 2, 1]
        path = tmp_path / "rt.trace"
        write_trace(path, times, sizes, classes)
        t, s, c = read_trace(path)
        assert t.tolist() == times
        assert s.tolist() == sizes
        assert c.tolist() == classes

    def test_zero_span_trace_cannot_loop(self, tmp_path):
        path = self.write(tmp_path, "0.0 100\n0.0 100\n")
        with pytest.raises(ValueError, match="loop"):
            gen_trace(TraceParams(path=str(path)), duration=2.0)

    def test_time_scale(self, tmp_path):
        path = self.write(tmp_path, "0.0 100\n1.0 100\n")
        stream = gen_trace(TraceParams(path=str(path), time_scale=0.5), duration=0.5)
        assert stream.times_ns.tolist() == [0, 500_000_000]


VIDEO = SyntheticVideoParams(mean_bitrate=1.5e6, frame_interval=1 / 30,
                             frame_size_cv=0.0, max_packet_size=1500)


class TestSyntheticVideo:
    def test_deterministic_fragmentation(self):
        # 1.5 Mbps at 30 fps -> 6250 B frames -> 4 x 1500 B + 250 B
        stream = gen_synthetic_video(VIDEO, duration=1 / 30, start_offset=0.0,
                                     rng=np.random.default_rng(1))
        assert stream.sizes.tolist() == [1500, 1500, 1500, 1500, 250]
        assert (stream.times_ns == stream.times_ns[0]).all()

    def test_single_frame_window(self):
        stream = gen_synthetic_video(VIDEO, duration=1 / 30, start_offset=0.0,
                                     rng=np.random.default_rng(1))
        assert len(np.unique(stream.times_ns)) == 1

    def test_long_run_bitrate(self):
        params = SyntheticVideoParams(1.5e6, 1 / 30, 0.5, 1400)
        stream = gen_synthetic_video(params, duration=60.0, start_offset=0.0,
                                     rng=np.random.default_rng(2))
        rate = stream.total_bytes() * 8 / 60.0
        assert rate == pytest.approx(1.5e6, rel=0.05)

    def test_replayed_recording_keeps_bitrate(self, tmp_path):
        # round-trip through the trace format preserves the stream's rate
        params = SyntheticVideoParams(1.5e6, 1 / 30, 0.5, 1400)
        stream = gen_synthetic_video(params, duration=60.0, start_offset=0.0,
                                     rng=np.random.default_rng(3))
        path = tmp_path / "video.trace"
        write_trace(path, stream.times_ns / NS, stream.sizes)
        replay = gen_trace(TraceParams(path=str(path)), duration=60.0)
        original = stream.total_bytes() * 8 / 60.0
        replayed = replay.total_bytes() * 8 / 60.0
        assert replayed == pytest.approx(original, rel=0.05)


def test_flowspec_validation():
    ok = FlowSpec("voip", "cbr", G729)
    assert ok.validate() == []
    assert ok.mean_rate() == pytest.approx(24000.0)
    wrong_params = FlowSpec("x", "cbr", CAMERA)
    assert any("CbrParams" in e for e in wrong_params.validate())
    bad_kind = FlowSpec("x", "warp", G729)
    assert any("kind" in e for e in bad_kind.validate())
    bad_class = FlowSpec("x", "cbr", G729, cls=5)
    assert any("class" in e for e in bad_class.validate())
    camera = FlowSpec("cam", "burst", CAMERA)
    assert camera.mean_rate() == pytest.approx(1.122e6, rel=1e-3)
