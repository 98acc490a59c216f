"""Port-based application classification and breakdown tables."""

import pytest

from flowlens.apps import AppCategory, breakdown, classify
from flowlens.flows import BlockFlowRecord, FlowKey, greedy_subset
from flowlens.pcapio import PROTO_ICMP, PROTO_TCP, PROTO_UDP


def key(sport=34567, dport=80, proto=PROTO_TCP):
    return FlowKey("10.0.0.1", "192.0.2.5", sport, dport, proto)


def rec(k, n=3, greedy=False):
    return BlockFlowRecord(0, k, n, n * 700, greedy, 60)


def test_classify_port_80_both_sides():
    assert classify(key(dport=80)) is AppCategory.HTTP
    assert classify(key(sport=80, dport=34567)) is AppCategory.HTTP


def test_classify_other_tcp():
    assert classify(key(dport=21)) is AppCategory.OTHER_TCP
    assert classify(key(dport=443)) is AppCategory.OTHER_TCP   # default is 80 only


def test_classify_udp_and_other():
    assert classify(key(dport=53, proto=PROTO_UDP)) is AppCategory.UDP
    assert classify(key(sport=0, dport=0, proto=PROTO_ICMP)) is AppCategory.OTHER
    assert classify(key(proto=47)) is AppCategory.OTHER


def test_classify_custom_http_ports():
    ports = frozenset({80, 8080})
    assert classify(key(dport=8080), ports) is AppCategory.HTTP
    assert classify(key(dport=8080)) is AppCategory.OTHER_TCP


def _table1_records():
    records = []
    sport = 1000
    for _ in range(54):
        records.append(rec(key(sport=(sport := sport + 1), dport=80)))
    for _ in range(38):
        records.append(rec(key(sport=(sport := sport + 1), dport=21)))
    for _ in range(7):
        records.append(rec(key(sport=(sport := sport + 1), dport=53, proto=PROTO_UDP)))
    records.append(rec(key(sport=0, dport=0, proto=PROTO_ICMP)))
    return records


def test_breakdown_planted_table():
    b = breakdown(_table1_records())
    assert b.n_flows == 100
    assert b.proportions[AppCategory.HTTP] == pytest.approx(0.54)
    assert b.proportions[AppCategory.OTHER_TCP] == pytest.approx(0.38)
    assert b.proportions[AppCategory.UDP] == pytest.approx(0.07)
    assert b.proportions[AppCategory.OTHER] == pytest.approx(0.01)


def test_breakdown_all_http():
    b = breakdown([rec(key(sport=i, dport=80)) for i in range(1, 6)])
    assert b.proportions[AppCategory.HTTP] == 1.0
    assert all(b.proportions[c] == 0.0 for c in AppCategory if c is not AppCategory.HTTP)


def test_breakdown_greedy_only():
    records = [rec(key(sport=i, dport=80), n=25, greedy=True) for i in range(7)]
    records += [rec(key(sport=100 + i, dport=22), n=25, greedy=True) for i in range(3)]
    records += [rec(key(sport=200 + i, dport=80), n=2) for i in range(40)]
    b = breakdown(records, greedy_only=True)
    assert b.n_flows == 10
    assert b.proportions[AppCategory.HTTP] == pytest.approx(0.7)
    assert b.proportions[AppCategory.OTHER_TCP] == pytest.approx(0.3)


def test_breakdown_empty_errors():
    with pytest.raises(ValueError, match="no flows to classify"):
        breakdown([])
    with pytest.raises(ValueError, match="no flows to classify"):
        breakdown([rec(key())], greedy_only=True)


def test_proportions_sum_to_one():
    import random
    rng = random.Random(4)
    for _ in range(25):
        records = [rec(key(sport=i, dport=rng.choice([80, 21, 53]),
                           proto=rng.choice([PROTO_TCP, PROTO_UDP, PROTO_ICMP])),
                       n=rng.choice([2, 25]), greedy=rng.random() < 0.3)
                   for i in range(rng.randint(1, 60))]
        b = breakdown(records)
        assert sum(b.proportions.values()) == pytest.approx(1.0, abs=1e-9)


def test_filter_then_classify_commutes():
    records = _table1_records()
    for r in records[:10]:
        records[records.index(r)] = rec(r.key, n=25, greedy=True)
    via_subset = breakdown(greedy_subset(records))
    via_flag = breakdown(records, greedy_only=True)
    assert via_subset == via_flag
