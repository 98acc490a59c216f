"""Minimal classic-pcap reader/writer and IPv4 packet parsing/crafting.

Supported on the read side:
  * classic pcap global header, magic 0xa1b2c3d4 (microseconds) or
    0xa1b23c4d (nanoseconds), in either byte order
  * link types: Ethernet (1, optionally one 802.1Q tag) and raw IPv4 (101)
  * truncated captures (caplen < wire length); a cut-off final record ends
    the stream with a warning instead of an error

pcapng files (magic 0x0a0d0d0a) are rejected with a pointed error since the
format is block-based and not trivially convertible in-process.
"""

from __future__ import annotations

import logging
import socket
import struct
from dataclasses import dataclass
from typing import Iterator, Optional

log = logging.getLogger(__name__)

MAGIC_US = 0xA1B2C3D4
MAGIC_NS = 0xA1B23C4D
PCAPNG_MAGIC = 0x0A0D0D0A

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_IP = 101

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17

IP_FLAG_DF = 0x4000
IP_FLAG_MF = 0x2000

TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_RST = 0x04
TCP_PSH = 0x08
TCP_ACK = 0x10


class PcapFormatError(Exception):
    """File is not a readable classic pcap capture."""


@dataclass(frozen=True)
class RawFrame:
    ts_us: int      # absolute capture timestamp in integer microseconds
    caplen: int
    origlen: int
    data: bytes     # captured link-layer bytes (len == caplen)


@dataclass(frozen=True)
class ParsedIPv4:
    """Fields pulled from one IPv4 datagram (transport parsed for TCP/UDP)."""

    src_ip: str
    dst_ip: str
    proto: int
    ttl: int
    ip_len: int
    df_flag: bool
    is_fragment: bool           # True for a non-first fragment (no transport header)
    src_port: int = 0
    dst_port: int = 0
    tcp_flags: int = 0
    tcp_window: int = 0
    tcp_options: Optional[bytes] = None   # raw option bytes as captured (may be cut short)


class PcapReader:
    """Iterates RawFrames out of a classic pcap file."""

    def __init__(self, path):
        self._fh = open(path, "rb")
        header = self._fh.read(24)
        if len(header) < 24:
            self._fh.close()
            raise PcapFormatError(f"{path}: too short to be a pcap file")
        magic = struct.unpack("<I", header[:4])[0]
        if magic == PCAPNG_MAGIC or struct.unpack(">I", header[:4])[0] == PCAPNG_MAGIC:
            self._fh.close()
            raise PcapFormatError(
                f"{path}: pcapng is not supported; convert to classic pcap first"
            )
        if magic == MAGIC_US:
            self._endian, self._ts_divisor = "<", 1
        elif magic == MAGIC_NS:
            self._endian, self._ts_divisor = "<", 1000
        else:
            magic_be = struct.unpack(">I", header[:4])[0]
            if magic_be == MAGIC_US:
                self._endian, self._ts_divisor = ">", 1
            elif magic_be == MAGIC_NS:
                self._endian, self._ts_divisor = ">", 1000
            else:
                self._fh.close()
                raise PcapFormatError(f"{path}: unrecognized magic 0x{magic:08x}")
        _, _, _, _, _, network = struct.unpack(self._endian + "HHiIII", header[4:])
        self.linktype = network
        self._rec_hdr = struct.Struct(self._endian + "IIII")
        self._path = path

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._fh.close()

    def __iter__(self) -> Iterator[RawFrame]:
        read = self._fh.read
        unpack = self._rec_hdr.unpack
        while True:
            hdr = read(16)
            if not hdr:
                return
            if len(hdr) < 16:
                log.warning("%s: truncated record header at end of file", self._path)
                return
            ts_sec, ts_frac, caplen, origlen = unpack(hdr)
            data = read(caplen)
            if len(data) < caplen:
                log.warning("%s: truncated final record (%d of %d bytes)",
                            self._path, len(data), caplen)
                return
            ts_us = ts_sec * 1_000_000 + ts_frac // self._ts_divisor
            yield RawFrame(ts_us=ts_us, caplen=caplen, origlen=origlen, data=data)


def ipv4_payload(frame: bytes, linktype: int) -> Optional[bytes]:
    """Strip the link layer; None when the frame does not carry IPv4."""
    if linktype == LINKTYPE_RAW_IP:
        if frame and (frame[0] >> 4) == 4:
            return frame
        return None
    if linktype == LINKTYPE_ETHERNET:
        if len(frame) < 14:
            return None
        ethertype = (frame[12] << 8) | frame[13]
        offset = 14
        if ethertype == ETHERTYPE_VLAN and len(frame) >= 18:
            ethertype = (frame[16] << 8) | frame[17]
            offset = 18
        if ethertype != ETHERTYPE_IPV4:
            return None
        return frame[offset:]
    raise PcapFormatError(f"unsupported link type {linktype}")


def parse_ipv4(buf: bytes) -> Optional[ParsedIPv4]:
    """Parse one IPv4 datagram (possibly truncated by the snap length).

    Returns None for malformed or non-IPv4 data. A non-first fragment gets
    ports 0 and is_fragment=True; its transport payload is opaque.
    """
    if len(buf) < 20:
        return None
    ver_ihl = buf[0]
    if ver_ihl >> 4 != 4:
        return None
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20 or len(buf) < ihl:
        return None
    ip_len = (buf[2] << 8) | buf[3]
    if ip_len < 20:
        return None
    flags_frag = (buf[6] << 8) | buf[7]
    df = bool(flags_frag & IP_FLAG_DF)
    frag_offset = flags_frag & 0x1FFF
    ttl = buf[8]
    proto = buf[9]
    src_ip = socket.inet_ntoa(buf[12:16])
    dst_ip = socket.inet_ntoa(buf[16:20])

    if frag_offset != 0:
        return ParsedIPv4(src_ip, dst_ip, proto, ttl, ip_len, df, is_fragment=True)

    sport = dport = 0
    tcp_flags = tcp_window = 0
    tcp_options: Optional[bytes] = None
    transport = buf[ihl:]
    if proto == PROTO_TCP and len(transport) >= 14:
        sport = (transport[0] << 8) | transport[1]
        dport = (transport[2] << 8) | transport[3]
        data_offset = (transport[12] >> 4) * 4
        tcp_flags = transport[13]
        if len(transport) >= 16:
            tcp_window = (transport[14] << 8) | transport[15]
        if data_offset > 20:
            tcp_options = transport[20:data_offset]  # may be short in snapped captures
    elif proto == PROTO_UDP and len(transport) >= 4:
        sport = (transport[0] << 8) | transport[1]
        dport = (transport[2] << 8) | transport[3]

    return ParsedIPv4(src_ip, dst_ip, proto, ttl, ip_len, df, False,
                      sport, dport, tcp_flags, tcp_window, tcp_options)


class PcapWriter:
    """Writes a classic pcap file (microsecond timestamps)."""

    def __init__(self, path, linktype: int = LINKTYPE_ETHERNET,
                 snaplen: int = 65535, endian: str = "<"):
        if endian not in ("<", ">"):
            raise ValueError("endian must be '<' or '>'")
        self.linktype = linktype
        self.snaplen = snaplen
        self._endian = endian
        self._rec_hdr = struct.Struct(endian + "IIII")
        self._fh = open(path, "wb")
        self._fh.write(struct.pack(endian + "IHHiIII",
                                   MAGIC_US, 2, 4, 0, 0, snaplen, linktype))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._fh.close()

    def write(self, ts_us: int, packet: bytes, orig_len: Optional[int] = None):
        """Write one frame; bytes beyond the snap length are dropped."""
        if orig_len is None:
            orig_len = len(packet)
        data = packet[: self.snaplen]
        self._fh.write(self._rec_hdr.pack(ts_us // 1_000_000, ts_us % 1_000_000,
                                          len(data), orig_len))
        self._fh.write(data)


def _checksum16(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum((data[i] << 8) | data[i + 1] for i in range(0, len(data), 2))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


# TCP option kinds used when crafting SYN options.
_OPT_KIND = {"EOL": 0, "NOP": 1, "MSS": 2, "WS": 3, "SACK": 4, "TS": 8}


def build_tcp_options(layout, mss: Optional[int]) -> bytes:
    """Encode a SYN option layout given as symbolic kind names."""
    out = bytearray()
    for name in layout:
        kind = _OPT_KIND.get(name)
        if kind is None:
            raise ValueError(f"unknown TCP option token {name!r}")
        if kind == 0:
            out.append(0)
        elif kind == 1:
            out.append(1)
        elif kind == 2:
            if mss is None:
                raise ValueError("layout names MSS but no mss value given")
            out += struct.pack("!BBH", 2, 4, mss)
        elif kind == 3:
            out += struct.pack("!BBB", 3, 3, 0)
        elif kind == 4:
            out += struct.pack("!BB", 4, 2)
        elif kind == 8:
            out += struct.pack("!BBII", 8, 10, 0, 0)
    while len(out) % 4:
        out.append(1)  # pad with NOP to a 4-byte boundary
    return bytes(out)


def build_ipv4_packet(src_ip: str, dst_ip: str, proto: int, ttl: int,
                      ip_len: int, df: bool = True,
                      src_port: int = 0, dst_port: int = 0,
                      tcp_flags: int = TCP_ACK, tcp_window: int = 0,
                      tcp_options: bytes = b"",
                      frag_offset: int = 0,
                      max_bytes: Optional[int] = None) -> bytes:
    """Craft an IPv4 datagram with the right headers and zero-filled payload.

    ip_len is what goes in the total-length field; the returned buffer is
    min(ip_len, max_bytes) bytes, so captures can be pre-snapped at build
    time instead of storing payload padding.
    """
    if proto == PROTO_TCP and frag_offset == 0:
        header_need = 20 + 20 + len(tcp_options)
    elif proto == PROTO_UDP and frag_offset == 0:
        header_need = 28
    elif proto == PROTO_ICMP and frag_offset == 0:
        header_need = 28
    else:
        header_need = 20
    if ip_len < header_need:
        raise ValueError(f"ip_len {ip_len} too small for headers ({header_need})")

    flags_frag = (IP_FLAG_DF if df else 0) | (frag_offset & 0x1FFF)
    if frag_offset:
        flags_frag |= IP_FLAG_MF
    ip = bytearray(struct.pack("!BBHHHBBH4s4s",
                               0x45, 0, ip_len, 0, flags_frag, ttl, proto, 0,
                               socket.inet_aton(src_ip), socket.inet_aton(dst_ip)))
    struct.pack_into("!H", ip, 10, _checksum16(bytes(ip)))

    if frag_offset:
        transport = b""
    elif proto == PROTO_TCP:
        data_offset = (20 + len(tcp_options)) // 4
        transport = struct.pack("!HHIIBBHHH", src_port, dst_port, 0, 0,
                                data_offset << 4, tcp_flags, tcp_window, 0, 0)
        transport += tcp_options
    elif proto == PROTO_UDP:
        transport = struct.pack("!HHHH", src_port, dst_port, max(8, ip_len - 20), 0)
    elif proto == PROTO_ICMP:
        transport = struct.pack("!BBHHH", 8, 0, 0, 0, 0)
    else:
        transport = b""

    packet = bytes(ip) + transport
    fill_to = ip_len if max_bytes is None else min(ip_len, max_bytes)
    if len(packet) < fill_to:
        packet += bytes(fill_to - len(packet))
    return packet[:fill_to] if max_bytes is not None else packet


_ETH_HEADER = bytes.fromhex("020000000002") + bytes.fromhex("020000000001") + b"\x08\x00"


def wrap_ethernet(ip_packet: bytes) -> bytes:
    return _ETH_HEADER + ip_packet
