"""Port-based application breakdown of per-block flows."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable

from .flows import BlockFlowRecord, FlowKey
from .pcapio import PROTO_TCP, PROTO_UDP

DEFAULT_HTTP_PORTS: FrozenSet[int] = frozenset({80})


class AppCategory(enum.Enum):
    HTTP = "http"
    OTHER_TCP = "other_tcp"
    UDP = "udp"
    OTHER = "other"


def classify(key: FlowKey, http_ports: FrozenSet[int] = DEFAULT_HTTP_PORTS) -> AppCategory:
    """Total, deterministic port/protocol classification of one flow key.

    Flows are unidirectional, so the server port can sit on either side.
    """
    if key.proto == PROTO_TCP:
        if key.src_port in http_ports or key.dst_port in http_ports:
            return AppCategory.HTTP
        return AppCategory.OTHER_TCP
    if key.proto == PROTO_UDP:
        return AppCategory.UDP
    return AppCategory.OTHER


@dataclass(frozen=True)
class AppBreakdown:
    proportions: Dict[AppCategory, float]   # sums to 1, every category present
    n_flows: int


def breakdown(records: Iterable[BlockFlowRecord], greedy_only: bool = False,
              http_ports: FrozenSet[int] = DEFAULT_HTTP_PORTS) -> AppBreakdown:
    counts = {cat: 0 for cat in AppCategory}
    n = 0
    for r in records:
        if greedy_only and not r.is_greedy:
            continue
        counts[classify(r.key, http_ports)] += 1
        n += 1
    if n == 0:
        raise ValueError("no flows to classify")
    return AppBreakdown(proportions={cat: c / n for cat, c in counts.items()},
                        n_flows=n)
