"""Shared builders: raw pcap bytes, packet records, synthetic datasets.

The pcap builder assembles files byte by byte with struct, independent
of the parser under test, so golden tests compare against a second
implementation of the format rather than the parser's own output.
"""

from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rwdetect.capture import PacketRecord
from rwdetect.conversation import Conversation
from rwdetect.features import Dataset, Label, LabeledSample

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")

MAGIC_MICROS = 0xA1B2C3D4
MAGIC_NANOS = 0xA1B23C4D


def global_header(order: str = "<", magic: int = MAGIC_MICROS,
                  network: int = 1, snaplen: int = 65535) -> bytes:
    return struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, snaplen, network)


def record_header(order: str, ts_sec: int, ts_frac: int, incl_len: int,
                  orig_len: int) -> bytes:
    return struct.pack(order + "IIII", ts_sec, ts_frac, incl_len, orig_len)


def build_pcap(records, order: str = "<", magic: int = MAGIC_MICROS,
               network: int = 1) -> bytes:
    """Assemble a classic pcap file from (timestamp, frame[, orig_len]) tuples."""
    unit = 1e9 if magic == MAGIC_NANOS else 1e6
    out = [global_header(order, magic, network)]
    for record in records:
        ts, frame = record[0], record[1]
        orig_len = record[2] if len(record) > 2 else len(frame)
        sec = int(ts)
        frac = round((ts - sec) * unit)
        out.append(record_header(order, sec, frac, len(frame), orig_len))
        out.append(frame)
    return b"".join(out)


def ipv4_header(src: str, dst: str, protocol: int, payload_len: int,
                ihl_words: int = 5, flags_frag: int = 0,
                version: int = 4) -> bytes:
    ihl = ihl_words * 4
    header = struct.pack(
        ">BBHHHBBH4s4s",
        (version << 4) | ihl_words, 0, ihl + payload_len, 1, flags_frag,
        64, protocol, 0,
        bytes(int(p) for p in src.split(".")),
        bytes(int(p) for p in dst.split(".")),
    )
    return header + bytes(ihl - 20)


def ether_frame(payload: bytes, ethertype: int = 0x0800,
                vlan_tags: int = 0) -> bytes:
    head = b"\x02" * 6 + b"\x04" * 6
    for _ in range(vlan_tags):
        payload = struct.pack(">HH", 0, ethertype) + payload
        ethertype = 0x8100
    return head + struct.pack(">H", ethertype) + payload


def tcp_udp_frame(src: str, dst: str, protocol: int, sport: int, dport: int,
                  extra: int = 16, ihl_words: int = 5, flags_frag: int = 0,
                  vlan_tags: int = 0) -> bytes:
    transport = struct.pack(">HH", sport, dport) + bytes(extra)
    ip = ipv4_header(src, dst, protocol, len(transport),
                     ihl_words=ihl_words, flags_frag=flags_frag)
    return ether_frame(ip + transport, vlan_tags=vlan_tags)


def make_packet(t: float, src: str = "10.0.0.1", sport: int = 1000,
                dst: str = "10.0.0.2", dport: int = 80, protocol: int = 6,
                wire_bytes: int = 100) -> PacketRecord:
    return PacketRecord(timestamp=t, src_addr=src, src_port=sport,
                        dst_addr=dst, dst_port=dport, protocol=protocol,
                        wire_bytes=wire_bytes)


def make_conversation(protocol: int = 6, address_a: str = "10.0.0.1",
                      port_a: int = 1000, address_b: str = "10.0.0.2",
                      port_b: int = 80, packets_ab: int = 2, bytes_ab: int = 200,
                      packets_ba: int = 1, bytes_ba: int = 80,
                      rel_start: float = 0.0, duration: float = 1.0,
                      ) -> Conversation:
    return Conversation(
        protocol=protocol, address_a=address_a, port_a=port_a,
        address_b=address_b, port_b=port_b,
        packets=packets_ab + packets_ba, bytes=bytes_ab + bytes_ba,
        packets_ab=packets_ab, bytes_ab=bytes_ab,
        packets_ba=packets_ba, bytes_ba=bytes_ba,
        rel_start=rel_start, duration=duration,
    )


def gaussian_dataset(n_pos: int = 396, n_neg: int = 420, seed: int = 42,
                     pos_center: float = 0.75, neg_center: float = 0.25,
                     spread: float = 0.08) -> Dataset:
    """Two well-separated 13-dimensional Gaussian clusters."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = rng.normal(pos_center, spread, size=(n_pos, 13))
    neg = rng.normal(neg_center, spread, size=(n_neg, 13))
    samples = [LabeledSample(v, Label.RANSOMWARE) for v in pos]
    samples += [LabeledSample(v, Label.BENIGN) for v in neg]
    return Dataset(samples)


def address_only_dataset(n_per_class: int = 40, seed: int = 5) -> Dataset:
    """Classes separable only through the two address features."""
    rng = np.random.Generator(np.random.PCG64(seed))
    base = rng.uniform(0.0, 1.0, size=(2 * n_per_class, 13))
    samples = []
    for i in range(2 * n_per_class):
        vec = base[i].copy()
        positive = i < n_per_class
        vec[1] = 3_000_000_000.0 if positive else 100_000.0
        vec[3] = 3_100_000_000.0 if positive else 200_000.0
        samples.append(LabeledSample(
            vec, Label.RANSOMWARE if positive else Label.BENIGN
        ))
    return Dataset(samples)


@pytest.fixture
def small_dataset() -> Dataset:
    return gaussian_dataset(n_pos=40, n_neg=50, seed=11)
