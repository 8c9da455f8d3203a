"""Windowed detection: bucketing, alerting, and batch equivalence."""

from __future__ import annotations

import json

import numpy as np
import pytest

from rwdetect.capture import PacketRecord, write_packet_csv
from rwdetect.classifiers import (
    ClassifierKind,
    model_fingerprint,
    predict_many,
    train,
)
from rwdetect.conversation import aggregate
from rwdetect.detect import (
    Alert,
    DetectionSummary,
    WindowSpec,
    alert_to_json,
    alert_warning_line,
    detect_stream,
    read_packet_source,
    window_packets,
)
from rwdetect.errors import ClockSkew, SinkFailure
from rwdetect.features import FEATURE_NAMES, Dataset, Label, LabeledSample, encode

from conftest import build_pcap, make_packet, tcp_udp_frame


def bytes_threshold_model():
    """Tree that flags any conversation moving more than ~2.5 KB."""
    rows = []
    for total in (100.0, 300.0, 800.0):
        v = np.zeros(13)
        v[6] = total
        rows.append(LabeledSample(v, Label.BENIGN))
    for total in (4300.0, 5000.0, 9000.0):
        v = np.zeros(13)
        v[6] = total
        rows.append(LabeledSample(v, Label.RANSOMWARE))
    return train(ClassifierKind.J48, Dataset(rows))


def flow(t0, src, sport, dst, dport, n, size, spacing=0.1, protocol=6):
    return [
        make_packet(t0 + i * spacing, src=src, sport=sport, dst=dst,
                    dport=dport, protocol=protocol, wire_bytes=size)
        for i in range(n)
    ]


class TestWindowSpec:
    def test_default_interval(self):
        assert WindowSpec().interval == 60.0

    @pytest.mark.parametrize("bad", [0.0, -5.0])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(ValueError):
            WindowSpec(interval=bad)


class TestWindowPackets:
    def test_half_open_boundaries(self):
        spec = WindowSpec(interval=10.0)
        packets = [
            make_packet(100.0),
            make_packet(109.999999),
            make_packet(110.0),
        ]
        buckets = window_packets(packets, spec, capture_start=100.0)
        assert [(w, len(ps)) for w, ps in buckets] == [(0, 2), (1, 1)]

    def test_empty_windows_omitted(self):
        spec = WindowSpec(interval=10.0)
        packets = [make_packet(0.5), make_packet(57.0)]
        buckets = window_packets(packets, spec, capture_start=0.0)
        assert [w for w, _ in buckets] == [0, 5]

    def test_default_start_is_earliest_packet(self):
        spec = WindowSpec(interval=10.0)
        packets = [make_packet(1000.0), make_packet(995.0)]
        buckets = window_packets(packets, spec)
        assert [(w, len(ps)) for w, ps in buckets] == [(0, 2)]

    def test_clock_skew_reports_packet_index(self):
        packets = [make_packet(50.0), make_packet(49.0)]
        with pytest.raises(ClockSkew) as excinfo:
            window_packets(packets, WindowSpec(), capture_start=49.5)
        assert excinfo.value.index == 1

    def test_no_packets_no_windows(self):
        assert window_packets([], WindowSpec()) == []


class TestDetectStream:
    def run(self, packets, model=None, interval=10.0, capture_start=0.0):
        model = model or bytes_threshold_model()
        alerts: list[Alert] = []
        summary = detect_stream(packets, model, WindowSpec(interval),
                                alerts.append, capture_start=capture_start)
        return alerts, summary, model

    def test_only_positives_alert(self):
        packets = (
            flow(1.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=2, size=100)
            + flow(2.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                   n=6, size=600)
        )
        alerts, summary, model = self.run(packets)
        assert summary == DetectionSummary(
            windows=1, conversations=2, alerts=1, packets=8,
            skipped_malformed=0, skipped_unsupported=0)
        [alert] = alerts
        assert alert.conversation.address_a == "192.168.1.4"
        assert alert.prediction.label is Label.RANSOMWARE
        assert alert.model_fingerprint == model_fingerprint(model)

    def test_alert_order_within_window(self):
        packets = (
            flow(3.0, "192.168.1.4", 2222, "192.168.1.5", 443, n=6, size=600)
            + flow(1.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=6, size=700)
        )
        alerts, _, _ = self.run(packets)
        assert [a.conversation.address_a for a in alerts] == [
            "10.0.0.7", "192.168.1.4"]     # canonical key order, not arrival

    def test_windows_ordered_before_keys(self):
        packets = (
            flow(12.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=6, size=700)
            + flow(1.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                   n=6, size=600)
        )
        alerts, summary, _ = self.run(packets)
        assert summary.windows == 2
        assert [a.window_index for a in alerts] == [0, 1]
        assert alerts[0].conversation.address_a == "192.168.1.4"

    def test_emitted_at_is_window_close(self):
        packets = flow(23.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                       n=6, size=600)
        alerts, _, _ = self.run(packets, interval=10.0, capture_start=0.0)
        assert alerts[0].window_index == 2
        assert alerts[0].emitted_at == 30.0

    def test_flow_spanning_windows_alerts_twice(self):
        packets = flow(8.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                       n=8, size=700, spacing=0.5)    # 8.0 .. 11.5
        alerts, summary, _ = self.run(packets)
        assert summary.windows == 2
        assert [a.window_index for a in alerts] == [0, 1]
        keys = {a.conversation.key() for a in alerts}
        assert len(keys) == 1

    def test_unsupported_protocols_counted(self):
        packets = flow(1.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                       n=6, size=600)
        icmpish = PacketRecord(
            timestamp=2.0, src_addr="10.0.0.1", src_port=0,
            dst_addr="10.0.0.2", dst_port=0, protocol=1, wire_bytes=64)
        alerts, summary, _ = self.run(packets + [icmpish])
        assert summary.skipped_unsupported == 1
        assert summary.packets == 6
        assert len(alerts) == 1

    def test_skipped_malformed_passthrough(self):
        packets = flow(1.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=2, size=100)
        summary = detect_stream(packets, bytes_threshold_model(),
                                WindowSpec(10.0), lambda a: None,
                                capture_start=0.0, skipped_malformed=3)
        assert summary.skipped_malformed == 3

    def test_sink_failure_carries_partial_summary(self):
        packets = (
            flow(1.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=6, size=700)
            + flow(2.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                   n=6, size=600)
        )
        seen = []

        def sink(alert):
            if seen:
                raise OSError("pipe closed")
            seen.append(alert)

        with pytest.raises(SinkFailure) as excinfo:
            detect_stream(packets, bytes_threshold_model(), WindowSpec(10.0),
                          sink, capture_start=0.0)
        partial = excinfo.value.summary
        assert partial.alerts == 1
        assert partial.conversations == 2

    def test_empty_capture(self):
        alerts, summary, _ = self.run([])
        assert summary == DetectionSummary(0, 0, 0, 0, 0, 0)
        assert alerts == []


class TestBatchEquivalence:
    def confined_packets(self):
        return (
            flow(1.0, "10.0.0.7", 1111, "10.0.0.8", 80, n=2, size=100)
            + flow(2.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                   n=6, size=600)
            + flow(13.0, "172.16.0.9", 3333, "172.16.0.10", 53,
                   n=4, size=800, protocol=17)
        )

    def test_stream_matches_offline_batch(self):
        packets = self.confined_packets()
        model = bytes_threshold_model()

        batch = aggregate(packets, capture_start=0.0)
        vectors = np.stack([encode(c) for c in batch])
        labels01, _ = predict_many(model, vectors)
        batch_positive = {
            c.key() for c, hit in zip(batch, labels01) if hit
        }

        alerts: list[Alert] = []
        detect_stream(packets, model, WindowSpec(10.0), alerts.append,
                      capture_start=0.0)
        assert {a.conversation.key() for a in alerts} == batch_positive
        assert len(batch_positive) == 2

    def test_windowed_features_match_batch_for_confined_flows(self):
        packets = self.confined_packets()
        batch = {c.key(): c for c in aggregate(packets, capture_start=0.0)}
        alerts: list[Alert] = []
        detect_stream(packets, bytes_threshold_model(), WindowSpec(10.0),
                      alerts.append, capture_start=0.0)
        for alert in alerts:
            twin = batch[alert.conversation.key()]
            assert np.array_equal(encode(alert.conversation), encode(twin))

    def test_rerun_is_byte_identical(self):
        packets = self.confined_packets()
        model = bytes_threshold_model()

        def lines():
            out = []
            detect_stream(packets, model, WindowSpec(10.0),
                          lambda a: out.append(alert_to_json(a)),
                          capture_start=0.0)
            return out

        first, second = lines(), lines()
        assert first == second
        assert len(first) == 2


class TestPacketSource:
    def test_reads_pcap(self, tmp_path):
        frame = tcp_udp_frame("10.0.0.1", "10.0.0.2", 6, 1000, 80)
        data = build_pcap([(1.5, frame)])
        path = tmp_path / "wire.pcap"
        path.write_bytes(data)
        packets, malformed, unsupported = read_packet_source(path)
        assert len(packets) == 1
        assert (malformed, unsupported) == (0, 0)
        assert packets[0].src_addr == "10.0.0.1"

    def test_reads_csv(self, tmp_path):
        original = [make_packet(1.0), make_packet(2.0, protocol=17)]
        path = tmp_path / "packets.csv"
        path.write_text(write_packet_csv(original))
        packets, malformed, unsupported = read_packet_source(path)
        assert packets == original
        assert (malformed, unsupported) == (0, 0)

    def test_counts_malformed_csv_rows(self, tmp_path):
        original = [make_packet(1.0)]
        text = write_packet_csv(original) + "not,a,valid,row\n"
        path = tmp_path / "packets.csv"
        path.write_text(text)
        packets, malformed, _ = read_packet_source(path)
        assert len(packets) == 1
        assert malformed == 1

    def test_counts_unsupported_pcap_packets(self, tmp_path):
        tcp = tcp_udp_frame("10.0.0.1", "10.0.0.2", 6, 1000, 80)
        icmp = tcp_udp_frame("10.0.0.1", "10.0.0.2", 1, 0, 0)
        path = tmp_path / "wire.pcap"
        path.write_bytes(build_pcap([(1.0, tcp), (2.0, icmp)]))
        packets, _, unsupported = read_packet_source(path)
        assert len(packets) == 1
        assert unsupported == 1


class TestAlertRendering:
    def one_alert(self):
        packets = flow(2.0, "192.168.1.4", 2222, "192.168.1.5", 443,
                       n=6, size=600)
        alerts: list[Alert] = []
        detect_stream(packets, bytes_threshold_model(), WindowSpec(10.0),
                      alerts.append, capture_start=0.0)
        return alerts[0]

    def test_json_fields(self):
        alert = self.one_alert()
        payload = json.loads(alert_to_json(alert))
        assert payload["window"] == 0
        assert payload["label"] == "ransomware"
        assert payload["address_a"] == "192.168.1.4"
        assert payload["model_fingerprint"] == alert.model_fingerprint
        assert set(payload["features"]) == set(FEATURE_NAMES)
        assert payload["features"]["bytes"] == 3600.0

    def test_warning_line(self):
        line = alert_warning_line(self.one_alert())
        assert line.startswith("ALERT window=0 tcp ")
        assert "192.168.1.4:2222 <-> 192.168.1.5:443" in line
        assert "packets=6 bytes=3600" in line
