"""Length-prefixed binary wire protocol.

Frame layout (both directions):

    4 bytes  magic "MAVA"
    u8       protocol version (1)
    u8       call id: 1=Insert 2=Sample 3=TableInfo 4=GetVariables 5=Ping
    u32 LE   payload length
    payload

Responses echo the request's call id; their payload begins with one status
byte (0=ok, 1=not ready, 2=error). An unknown call id produces an error
reply; a bad magic or version closes the connection.
"""

from __future__ import annotations

import enum
import socket
import struct

MAGIC = b"MAVA"
VERSION = 1
_HEADER = struct.Struct("<4sBBI")
MAX_PAYLOAD = 1 << 30


class CallID(enum.IntEnum):
    INSERT = 1
    SAMPLE = 2
    TABLE_INFO = 3
    GET_VARIABLES = 4
    PING = 5


class Status(enum.IntEnum):
    OK = 0
    NOT_READY = 1
    ERROR = 2


class ProtocolError(RuntimeError):
    pass


def encode_message(call_id: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload too large: {len(payload)}")
    return _HEADER.pack(MAGIC, VERSION, int(call_id), len(payload)) + payload


def decode_message(buf: bytes) -> tuple[int, bytes]:
    if len(buf) < _HEADER.size:
        raise ProtocolError("truncated header")
    magic, version, call_id, length = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    if len(buf) != _HEADER.size + length:
        raise ProtocolError(f"length mismatch: header says {length}, have {len(buf) - _HEADER.size}")
    return call_id, buf[_HEADER.size :]


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n:
        chunk = sock.recv(min(n, 1 << 20))
        if not chunk:
            raise ConnectionError("connection closed mid-message")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def read_message(sock: socket.socket) -> tuple[int, bytes]:
    header = _recv_exact(sock, _HEADER.size)
    magic, version, call_id, length = _HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"payload too large: {length}")
    return call_id, _recv_exact(sock, length) if length else b""


def write_message(sock: socket.socket, call_id: int, payload: bytes) -> None:
    sock.sendall(encode_message(call_id, payload))
