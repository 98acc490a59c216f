"""Shared builders for tests: quick records, planted and randomized scenarios."""

from __future__ import annotations

import random
from typing import List, Optional

from flowlens.ingest import PacketRecord, SynSignature
from flowlens.pcapio import PROTO_ICMP, PROTO_TCP, PROTO_UDP
from flowlens.synth import FlowPlan, HostSpec, ScenarioSpec

SRC_NET = "10.0.0.0/8"          # all scenario src-side hosts live here
FP_LABELS = ["Linux 2.4", "Windows 2000", "FreeBSD 4.x", "Solaris 8",
             "Windows 98", "MacOS 9", "Cisco IOS 12"]


def mk_packet(ts: float, src: str = "10.0.0.1", dst: str = "203.0.113.1",
              sport: int = 1024, dport: int = 80, proto: int = PROTO_TCP,
              ttl: int = 55, ip_len: int = 700,
              sig: Optional[SynSignature] = None,
              is_fragment: bool = False) -> PacketRecord:
    return PacketRecord(timestamp=ts, src_ip=src, dst_ip=dst, src_port=sport,
                        dst_port=dport, proto=proto, ttl=ttl, ip_len=ip_len,
                        is_fragment=is_fragment, syn_sig=sig)


def random_scenario(seed: int) -> ScenarioSpec:
    """A randomized but always-feasible scenario with known host ground truth."""
    r = random.Random(seed * 1_000_003 + 17)
    hosts: List[HostSpec] = []
    for i in range(r.randint(2, 5)):
        ip = f"10.0.{i // 200}.{i % 200 + 1}"
        if r.random() < 0.7:
            hosts.append(HostSpec(ip, r.randint(1, 20), "src",
                                  os_label=r.choice(FP_LABELS)))
        else:
            hosts.append(HostSpec(ip, r.randint(0, 15), "src",
                                  initial_ttl=r.choice([64, 128, 255])))
    for i in range(r.randint(2, 4)):
        ip = f"203.0.113.{i + 1}"
        if r.random() < 0.7:
            hosts.append(HostSpec(ip, r.randint(1, 20), "dst",
                                  os_label=r.choice(FP_LABELS)))
        else:
            hosts.append(HostSpec(ip, r.randint(0, 15), "dst",
                                  initial_ttl=r.choice([64, 128, 255])))
    return ScenarioSpec(duration=r.choice([0.5, 1.0, 1.5]), tau=0.1, seed=seed,
                        flows_per_block=f"poisson:{r.randint(2, 6)}",
                        flow_size_alpha=r.choice([1.2, 1.5, 2.0]),
                        flow_size_cap=500, packet_bytes=700, hosts=hosts,
                        key_repeat_prob=r.choice([0.0, 0.2, 0.4]))


def table1_scenario(seed: int = 1) -> ScenarioSpec:
    """100 planted flow records: 54/38/7/1 app mix, greedy subset 70% HTTP.

    Greedy records (packet count 25): 7 HTTP + 3 other-TCP; the remaining 90
    records stay small. All hosts carry fingerprints.
    """
    hosts = [
        HostSpec("10.0.0.1", 9, "src", os_label="Linux 2.4"),
        HostSpec("10.0.0.2", 12, "src", os_label="Windows 2000"),
        HostSpec("203.0.113.1", 8, "dst", os_label="FreeBSD 4.x"),
        HostSpec("203.0.113.2", 11, "dst", os_label="Solaris 8"),
    ]
    srcs = ["10.0.0.1", "10.0.0.2"]
    dsts = ["203.0.113.1", "203.0.113.2"]
    flows: List[FlowPlan] = []
    sport = 1024

    def add(n: int, proto: int, dport: int, n_packets: int):
        nonlocal sport
        for i in range(n):
            flows.append(FlowPlan(block=len(flows) % 10,
                                  src_ip=srcs[i % 2], dst_ip=dsts[(i // 2) % 2],
                                  src_port=sport, dst_port=dport,
                                  proto=proto, n_packets=n_packets))
            sport += 1

    add(7, PROTO_TCP, 80, 25)      # greedy HTTP
    add(3, PROTO_TCP, 21, 25)      # greedy other-TCP
    add(47, PROTO_TCP, 80, 3)      # small HTTP
    add(35, PROTO_TCP, 25, 3)      # small other-TCP
    add(7, PROTO_UDP, 53, 3)       # UDP
    # one ICMP flow ("other"); ports are zero so the host pair is the key
    flows.append(FlowPlan(block=3, src_ip="10.0.0.1", dst_ip="203.0.113.2",
                          src_port=0, dst_port=0, proto=PROTO_ICMP, n_packets=2))
    return ScenarioSpec(duration=1.0, tau=0.1, seed=seed, hosts=hosts, flows=flows)


def hop_means_scenario(seed: int = 1) -> ScenarioSpec:
    """500 planted records whose hop means are exactly 19.85 (all) and 17.92 (greedy).

    Greedy: 92 records at 18 hops + 8 at 17 -> 17.92. Non-greedy: 133 at 21 +
    267 at 20. Overall: (92*18 + 8*17 + 133*21 + 267*20)/500 = 19.85.
    """
    hosts = [
        HostSpec("10.0.1.9", 9, "src", os_label="Linux 2.4"),
        HostSpec("10.0.1.10", 10, "src", os_label="Windows 2000"),
        HostSpec("203.0.113.9", 9, "dst", os_label="FreeBSD 4.x"),
        HostSpec("203.0.113.8", 8, "dst", os_label="Solaris 8"),
        HostSpec("203.0.113.11", 11, "dst", os_label="MacOS 9"),
        HostSpec("203.0.113.10", 10, "dst", os_label="Windows 98"),
    ]
    flows: List[FlowPlan] = []
    sport = 2000

    def add(n: int, src: str, dst: str, n_packets: int):
        nonlocal sport
        for _ in range(n):
            flows.append(FlowPlan(block=len(flows) % 10, src_ip=src, dst_ip=dst,
                                  src_port=sport, dst_port=80, proto=PROTO_TCP,
                                  n_packets=n_packets))
            sport += 1

    add(92, "10.0.1.9", "203.0.113.9", 25)     # greedy, 9+9 = 18 hops
    add(8, "10.0.1.9", "203.0.113.8", 25)      # greedy, 9+8 = 17 hops
    add(133, "10.0.1.10", "203.0.113.11", 2)   # 10+11 = 21 hops
    add(267, "10.0.1.10", "203.0.113.10", 2)   # 10+10 = 20 hops
    return ScenarioSpec(duration=1.0, tau=0.1, seed=seed, hosts=hosts, flows=flows)
