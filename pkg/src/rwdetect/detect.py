"""Windowed detection: segment traffic, classify flows, emit alerts.

Packets fall into half-open windows ``[start + w*i, start + (w+1)*i)``
aligned to the capture start.  Flows are aggregated per window but keep
capture-relative times, so a conversation confined to one window comes
out identical to a whole-capture aggregation.  Alerts fire only for
positive classifications, at most one per (window, conversation key),
ordered by window then canonical key.  ``emitted_at`` is the close time
of the window, a value derived from the data rather than the wall
clock, so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .capture import (
    PCAP_MAGICS,
    SUPPORTED_PROTOCOLS,
    TCP,
    PacketRecord,
    parse_packet_csv_lenient,
    parse_pcap,
)
from .classifiers import Prediction, TrainedModel, model_fingerprint, predict_many
from .conversation import Conversation, aggregate
from .errors import ClockSkew, SinkFailure
from .features import FEATURE_NAMES, Label, encode

import numpy as np


@dataclass(frozen=True)
class WindowSpec:
    interval: float = 60.0   # seconds

    def __post_init__(self):
        if not (self.interval > 0 and math.isfinite(self.interval)):
            raise ValueError("window interval must be a positive finite number")


@dataclass(frozen=True)
class Alert:
    window_index: int
    conversation: Conversation
    prediction: Prediction
    model_fingerprint: str
    emitted_at: float


@dataclass(frozen=True)
class DetectionSummary:
    windows: int
    conversations: int
    alerts: int
    packets: int
    skipped_malformed: int
    skipped_unsupported: int


def window_packets(packets: Sequence[PacketRecord], spec: WindowSpec,
                   capture_start: float | None = None,
                   ) -> list[tuple[int, list[PacketRecord]]]:
    """Bucket packets into windows; empty windows are omitted.

    With an explicit ``capture_start``, a packet stamped earlier than it
    raises ClockSkew carrying the offending input position.
    """
    if not packets:
        return []
    explicit = capture_start is not None
    start = capture_start if explicit else min(p.timestamp for p in packets)
    buckets: dict[int, list[PacketRecord]] = {}
    for i, packet in enumerate(packets):
        if explicit and packet.timestamp < start:
            raise ClockSkew(
                i, f"packet {i} at {packet.timestamp!r} precedes "
                   f"capture start {start!r}"
            )
        w = math.floor((packet.timestamp - start) / spec.interval)
        buckets.setdefault(w, []).append(packet)
    return sorted(buckets.items())


def detect_stream(packets: Sequence[PacketRecord], model: TrainedModel,
                  spec: WindowSpec, sink: Callable[[Alert], None],
                  capture_start: float | None = None,
                  skipped_malformed: int = 0) -> DetectionSummary:
    """Run windowed detection over packets, pushing alerts into ``sink``.

    Unsupported-protocol packets are counted and dropped up front.  A
    sink exception aborts the run with SinkFailure carrying the summary
    of everything processed before the failure.
    """
    supported = [p for p in packets if p.protocol in SUPPORTED_PROTOCOLS]
    skipped_unsupported = len(packets) - len(supported)
    if capture_start is None and supported:
        capture_start = min(p.timestamp for p in supported)

    fingerprint = model_fingerprint(model)
    windows = window_packets(supported, spec, capture_start)
    n_conversations = 0
    n_alerts = 0

    def summary(n_windows: int) -> DetectionSummary:
        return DetectionSummary(
            windows=n_windows, conversations=n_conversations,
            alerts=n_alerts, packets=len(supported),
            skipped_malformed=skipped_malformed,
            skipped_unsupported=skipped_unsupported,
        )

    for position, (w, bucket) in enumerate(windows):
        conversations = aggregate(bucket, capture_start=capture_start)
        n_conversations += len(conversations)
        vectors = np.stack([encode(c) for c in conversations])
        labels01, scores = predict_many(model, vectors)
        positives = [
            (conversations[j], float(scores[j]))
            for j in range(len(conversations)) if labels01[j]
        ]
        positives.sort(key=lambda item: item[0].key().sort_key())
        emitted_at = capture_start + (w + 1) * spec.interval
        for conv, score in positives:
            alert = Alert(
                window_index=w, conversation=conv,
                prediction=Prediction(label=Label.RANSOMWARE, score=score),
                model_fingerprint=fingerprint, emitted_at=emitted_at,
            )
            try:
                sink(alert)
            except Exception as exc:
                raise SinkFailure(
                    f"alert sink failed in window {w}: {exc}",
                    summary=summary(position + 1),
                ) from exc
            n_alerts += 1
    return summary(len(windows))


def read_packet_source(path: str | Path) -> tuple[list[PacketRecord], int, int]:
    """Load a capture file or packet CSV for detection.

    Returns (packets, skipped_malformed, skipped_unsupported).  The
    format is sniffed from the leading bytes; CSV parsing is lenient so
    a stream with stray bad rows still yields its good packets.
    """
    data = Path(path).read_bytes()
    if data[:4] in PCAP_MAGICS:
        records, summary = parse_pcap(data)
        skipped = (summary.packets_skipped_non_ip
                   + summary.packets_skipped_unsupported_protocol)
        return records, 0, skipped
    records, bad_rows = parse_packet_csv_lenient(data.decode("utf-8"))
    return records, bad_rows, 0


def alert_to_json(alert: Alert) -> str:
    """One-line JSON rendering of an alert."""
    conv = alert.conversation
    payload = {
        "window": alert.window_index,
        "emitted_at": alert.emitted_at,
        "protocol": conv.protocol,
        "address_a": conv.address_a,
        "port_a": conv.port_a,
        "address_b": conv.address_b,
        "port_b": conv.port_b,
        "label": alert.prediction.label.value,
        "score": alert.prediction.score,
        "model_fingerprint": alert.model_fingerprint,
        "features": {
            name: value
            for name, value in zip(FEATURE_NAMES, encode(conv).tolist())
        },
    }
    return json.dumps(payload, sort_keys=True)


def alert_warning_line(alert: Alert) -> str:
    """Terse human-readable alert line for logs."""
    conv = alert.conversation
    proto = "tcp" if conv.protocol == TCP else "udp"
    return (
        f"ALERT window={alert.window_index} {proto} "
        f"{conv.address_a}:{conv.port_a} <-> {conv.address_b}:{conv.port_b} "
        f"score={alert.prediction.score:.4f} packets={conv.packets} "
        f"bytes={conv.bytes}"
    )
