"""TTL-based hop estimation backed by a passive-fingerprint database.

A host's distance to the monitor is the difference between the TTL its
stack started with and the TTL we observe. The initial TTL is taken from a
SYN fingerprint match when one exists; otherwise it falls back to the
smallest standard initial value (32/64/128/255) at or above the modal
observed TTL. Summing the two monitor-relative distances of a flow's
endpoints gives the path hop count, under the assumption that forward and
reverse routes coincide.

Fingerprint database file format (UTF-8 text, one entry per line):

    window|initial_ttl|df|options|mss|os_label

  window   exact decimal window size, or * for any
  initial_ttl   one of 32, 64, 128, 255
  df       1, 0, or *
  options  comma-separated option kinds in on-wire order
           (MSS, SACK, TS, NOP, WS, EOL, or a decimal kind number),
           `-` for an empty option list, or * for any layout
  mss      exact decimal value, * for any, or `mtu` for the usual
           MTU-derived values (536, 966, 1452, 1460)
  os_label free text

`#` starts a comment; blank lines are ignored; the first matching line wins.
"""

from __future__ import annotations

import csv
import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

from .flows import BlockFlowRecord, FlowKey
from .ingest import PacketRecord, SynSignature

log = logging.getLogger(__name__)

STANDARD_INITIAL_TTLS = (32, 64, 128, 255)
MAX_PLAUSIBLE_HOPS = 64
MTU_DERIVED_MSS = frozenset({536, 966, 1452, 1460})

WILDCARD = "*"
MTU_TOKEN = "mtu"


class FingerprintFormatError(ValueError):
    """Database text failed validation; message lists the offending lines."""


@dataclass(frozen=True)
class FingerprintEntry:
    os_label: str
    initial_ttl: int
    window_size: Optional[int] = None                 # None = wildcard
    df_flag: Optional[bool] = None                    # None = wildcard
    options_layout: Optional[Tuple[str, ...]] = None  # None = wildcard
    mss: Union[int, str, None] = None                 # None wildcard, int exact, "mtu"

    def __post_init__(self):
        if self.initial_ttl not in STANDARD_INITIAL_TTLS:
            raise ValueError(f"initial_ttl {self.initial_ttl} not a standard value")
        if (self.window_size is None and self.df_flag is None
                and self.options_layout is None and self.mss is None):
            raise ValueError("entry needs at least one non-wildcard matcher field")

    def matches(self, sig: SynSignature) -> bool:
        if self.initial_ttl < sig.observed_ttl:
            return False
        if self.window_size is not None and self.window_size != sig.window_size:
            return False
        if self.df_flag is not None and self.df_flag != sig.df_flag:
            return False
        if self.options_layout is not None and self.options_layout != sig.options_layout:
            return False
        if self.mss is not None:
            if self.mss == MTU_TOKEN:
                if sig.mss not in MTU_DERIVED_MSS:
                    return False
            elif self.mss != sig.mss:
                return False
        return True


def _parse_entry(line: str) -> FingerprintEntry:
    parts = line.split("|")
    if len(parts) != 6:
        raise ValueError(f"expected 6 |-separated fields, got {len(parts)}")
    win_s, ttl_s, df_s, opt_s, mss_s, label = (p.strip() for p in parts)
    window = None if win_s == WILDCARD else int(win_s)
    initial_ttl = int(ttl_s)
    if df_s == WILDCARD:
        df = None
    elif df_s in ("0", "1"):
        df = df_s == "1"
    else:
        raise ValueError(f"df must be 0, 1 or *, got {df_s!r}")
    if opt_s == WILDCARD:
        layout: Optional[Tuple[str, ...]] = None
    elif opt_s == "-":
        layout = ()
    else:
        layout = tuple(tok.strip() for tok in opt_s.split(","))
    mss: Union[int, str, None]
    if mss_s == WILDCARD:
        mss = None
    elif mss_s == MTU_TOKEN:
        mss = MTU_TOKEN
    else:
        mss = int(mss_s)
    if not label:
        raise ValueError("os_label must not be empty")
    return FingerprintEntry(os_label=label, initial_ttl=initial_ttl,
                            window_size=window, df_flag=df,
                            options_layout=layout, mss=mss)


@dataclass(frozen=True)
class FingerprintDb:
    entries: Tuple[FingerprintEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("fingerprint database must not be empty")

    @classmethod
    def loads(cls, text: str) -> "FingerprintDb":
        entries = []
        errors = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                entries.append(_parse_entry(line))
            except ValueError as exc:
                errors.append(f"line {lineno}: {exc}")
        if errors:
            raise FingerprintFormatError("; ".join(errors))
        if not entries:
            raise FingerprintFormatError("no entries found")
        return cls(entries=tuple(entries))

    @classmethod
    def load(cls, path) -> "FingerprintDb":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def default(cls) -> "FingerprintDb":
        """The built-in table of common year-2001 stacks (see data/)."""
        text = resources.files("flowlens.data").joinpath("fingerprints.default").read_text()
        return cls.loads(text)

    def find(self, os_label: str) -> Optional[FingerprintEntry]:
        for e in self.entries:
            if e.os_label == os_label:
                return e
        return None


def match_fingerprint(sig: SynSignature, db: FingerprintDb) -> Optional[FingerprintEntry]:
    """First entry whose non-wildcard fields all match; None otherwise."""
    for entry in db.entries:
        if entry.matches(sig):
            return entry
    return None


def infer_initial_ttl(observed_ttl: int) -> int:
    """Smallest standard initial TTL at or above the observed value."""
    if observed_ttl < 1:
        raise ValueError("observed TTL of 0 cannot have reached the monitor")
    if observed_ttl > 255:
        raise ValueError(f"TTL {observed_ttl} out of range")
    for candidate in STANDARD_INITIAL_TTLS:
        if candidate >= observed_ttl:
            return candidate
    raise AssertionError("unreachable: 255 covers the full range")


class EstimateMethod(enum.Enum):
    FINGERPRINT_MATCH = "fingerprint"
    NEAREST_STANDARD_TTL = "nearest_standard"


@dataclass(frozen=True)
class HostTtlEstimate:
    ip: str
    initial_ttl: int
    hops_to_monitor: int
    method: EstimateMethod
    os_label: Optional[str] = None
    ttl_conflict: bool = False   # more than one distinct TTL seen from this host


@dataclass
class HostEstimates:
    """Per-source-IP estimates plus coverage accounting.

    Hosts whose arithmetic lands outside [0, 64] hops are implausible
    (usually a fallback guess one initial-TTL tier too high) and are
    excluded from by_ip but still counted in n_hosts.
    """

    by_ip: Dict[str, HostTtlEstimate] = field(default_factory=dict)
    n_hosts: int = 0
    rejected: Tuple[str, ...] = ()

    @property
    def n_fingerprint(self) -> int:
        return sum(1 for e in self.by_ip.values()
                   if e.method is EstimateMethod.FINGERPRINT_MATCH)

    @property
    def n_fallback(self) -> int:
        return sum(1 for e in self.by_ip.values()
                   if e.method is EstimateMethod.NEAREST_STANDARD_TTL)

    @property
    def fingerprint_fraction(self) -> float:
        return self.n_fingerprint / self.n_hosts if self.n_hosts else 0.0

    @property
    def fallback_fraction(self) -> float:
        return self.n_fallback / self.n_hosts if self.n_hosts else 0.0

    def get(self, ip: str) -> Optional[HostTtlEstimate]:
        return self.by_ip.get(ip)


def estimate_hosts(packets: Iterable[PacketRecord], db: FingerprintDb) -> HostEstimates:
    """One TTL-distance estimate per source IP seen in the stream.

    The modal TTL is the anchor (ties toward the larger TTL, i.e. the
    shorter path); a host emitting several distinct TTLs is flagged since
    its route apparently changed mid-trace.
    """
    ttls: Dict[str, Counter] = {}
    matched: Dict[str, FingerprintEntry] = {}
    for p in packets:
        ttls.setdefault(p.src_ip, Counter())[p.ttl] += 1
        if p.syn_sig is not None and p.src_ip not in matched:
            entry = match_fingerprint(p.syn_sig, db)
            if entry is not None:
                matched[p.src_ip] = entry

    result = HostEstimates(n_hosts=len(ttls))
    rejected = []
    for ip, counter in ttls.items():
        modal_ttl = max(counter.items(), key=lambda kv: (kv[1], kv[0]))[0]
        conflict = len(counter) > 1
        entry = matched.get(ip)
        if entry is not None:
            initial, method, label = entry.initial_ttl, EstimateMethod.FINGERPRINT_MATCH, entry.os_label
        else:
            if modal_ttl < 1:
                log.warning("host %s: modal TTL 0, rejected", ip)
                rejected.append(ip)
                continue
            initial, method, label = infer_initial_ttl(modal_ttl), EstimateMethod.NEAREST_STANDARD_TTL, None
        hops = initial - modal_ttl
        if hops < 0 or hops > MAX_PLAUSIBLE_HOPS:
            log.warning("host %s: implausible hop estimate %d (initial %d, modal TTL %d), rejected",
                        ip, hops, initial, modal_ttl)
            rejected.append(ip)
            continue
        result.by_ip[ip] = HostTtlEstimate(ip=ip, initial_ttl=initial,
                                           hops_to_monitor=hops, method=method,
                                           os_label=label, ttl_conflict=conflict)
    result.rejected = tuple(rejected)
    return result


@dataclass(frozen=True)
class HopEstimate:
    key: FlowKey
    src_hops: int
    dst_hops: int
    path_hops: int   # always src_hops + dst_hops (symmetric-routing assumption)


def path_hops(key: FlowKey, host_map_fwd: HostEstimates,
              host_map_rev: HostEstimates) -> Optional[HopEstimate]:
    """Path hop count for one flow; None unless both endpoints are estimated.

    The destination's distance comes from reverse-direction traffic, where
    that host appears as a source.
    """
    src = host_map_fwd.get(key.src_ip)
    dst = host_map_rev.get(key.dst_ip)
    if src is None or dst is None:
        return None
    return HopEstimate(key=key, src_hops=src.hops_to_monitor,
                       dst_hops=dst.hops_to_monitor,
                       path_hops=src.hops_to_monitor + dst.hops_to_monitor)


def flow_hop_estimates(records: Iterable[BlockFlowRecord],
                       host_map_fwd: HostEstimates,
                       host_map_rev: HostEstimates) -> Dict[FlowKey, HopEstimate]:
    """Resolve every distinct flow key in the records to a path estimate."""
    out: Dict[FlowKey, HopEstimate] = {}
    for r in records:
        if r.key in out:
            continue
        est = path_hops(r.key, host_map_fwd, host_map_rev)
        if est is not None:
            out[r.key] = est
    return out


@dataclass(frozen=True)
class HopHistogram:
    counts: Tuple[Tuple[int, int], ...]   # (hop count, frequency), hops increasing
    mean: Optional[float]
    n: int

    def as_dict(self) -> Dict[int, int]:
        return dict(self.counts)


def hop_histogram(records: Iterable[BlockFlowRecord],
                  estimates: Mapping[FlowKey, HopEstimate],
                  greedy_only: bool = False) -> HopHistogram:
    """Histogram of path hop counts, one entry per per-block flow record.

    Weighting is per flow instance: a 5-tuple active in ten blocks
    contributes ten entries (weighting unique keys once would be the other
    option). Records without an estimate are skipped; the caller reports
    coverage alongside.
    """
    counter: Counter = Counter()
    for r in records:
        if greedy_only and not r.is_greedy:
            continue
        est = estimates.get(r.key)
        if est is None:
            continue
        counter[est.path_hops] += 1
    n = sum(counter.values())
    if n == 0:
        log.warning("hop histogram is empty (no estimable %sflows)",
                    "greedy " if greedy_only else "")
        return HopHistogram(counts=(), mean=None, n=0)
    mean = sum(h * c for h, c in counter.items()) / n
    return HopHistogram(counts=tuple(sorted(counter.items())), mean=mean, n=n)


def write_hops_csv(hist: HopHistogram, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hops", "count"])
        for hops, count in hist.counts:
            w.writerow([hops, count])
