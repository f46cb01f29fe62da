"""RPC services: replay tables, trainer variables, metric sinks.

Servers are threaded; handlers must be reentrant-safe, which the replay
table guarantees with its internal lock and the variable source with an
atomic (version, blob) pair.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading

from ..numerics import Tensor, decode_params, encode_params
from ..replay import NotReadyError, ReplayTable
from .codec import decode_item, encode_item
from .protocol import CallID, ProtocolError, Status, read_message, write_message


class VariableSource:
    """Versioned parameter store; readers never observe a torn blob."""

    def __init__(self):
        self._lock = threading.Lock()
        self._version = 0
        self._params: list[tuple[str, "object"]] | None = None
        self._blob: bytes | None = None

    def publish(self, named_params: list[tuple[str, Tensor]]) -> int:
        params = [(name, t.data.copy()) for name, t in named_params]
        blob = encode_params(named_params)
        with self._lock:
            self._version += 1
            self._params = params
            self._blob = blob
            return self._version

    def get(self):
        """(version, list of (name, array)); arrays are frozen copies."""
        with self._lock:
            return self._version, self._params

    def get_blob(self):
        with self._lock:
            return self._version, self._blob

    @property
    def version(self) -> int:
        with self._lock:
            return self._version


class CallbackSink:
    """Table-shaped endpoint that forwards inserted items to a callback."""

    def __init__(self, callback):
        self._callback = callback
        self._count = 0
        self._lock = threading.Lock()

    def insert(self, item, priority: float = 1.0) -> int:
        with self._lock:
            self._count += 1
            n = self._count
        self._callback(item)
        return n

    def info(self) -> dict:
        return {"size": 0, "capacity": 0, "sampler": "sink", "insert_count": self._count,
                "sample_count": 0, "min_size_to_sample": 0}

    def sample(self, batch: int):
        raise NotReadyError("sinks do not serve samples")


_INFO_STRUCT = struct.Struct("<IIQQI")


def _pack_info(info: dict) -> bytes:
    return _INFO_STRUCT.pack(
        info["size"], info["capacity"], info["insert_count"], info["sample_count"],
        info["min_size_to_sample"],
    )


def _unpack_info(buf: bytes) -> dict:
    size, capacity, inserts, samples, min_size = _INFO_STRUCT.unpack(buf)
    return {"size": size, "capacity": capacity, "insert_count": inserts,
            "sample_count": samples, "min_size_to_sample": min_size}


def _read_name(payload: bytes) -> tuple[str, int]:
    (n,) = struct.unpack_from("<H", payload, 0)
    return payload[2 : 2 + n].decode("utf-8"), 2 + n


def _with_name(name: str, body: bytes = b"") -> bytes:
    raw = name.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw + body


class RpcService:
    """Dispatches decoded calls; subclasses fill in the handlers."""

    def __init__(self, tables: dict[str, object] | None = None, variables: VariableSource | None = None):
        self.tables = tables or {}
        self.variables = variables

    def handle(self, call_id: int, payload: bytes) -> tuple[int, bytes]:
        try:
            if call_id == CallID.PING:
                return Status.OK, b""
            if call_id == CallID.INSERT:
                name, off = _read_name(payload)
                table = self.tables.get(name)
                if table is None:
                    return Status.ERROR, f"no table {name!r}".encode()
                item_id = table.insert(decode_item(payload[off:]))
                return Status.OK, struct.pack("<Q", item_id)
            if call_id == CallID.SAMPLE:
                name, off = _read_name(payload)
                table = self.tables.get(name)
                if table is None:
                    return Status.ERROR, f"no table {name!r}".encode()
                (batch,) = struct.unpack_from("<I", payload, off)
                try:
                    items = table.sample(batch)
                except NotReadyError as exc:
                    return Status.NOT_READY, str(exc).encode()
                parts = [struct.pack("<I", len(items))]
                for item in items:
                    raw = encode_item(item)
                    parts.append(struct.pack("<I", len(raw)))
                    parts.append(raw)
                return Status.OK, b"".join(parts)
            if call_id == CallID.TABLE_INFO:
                name, _ = _read_name(payload)
                table = self.tables.get(name)
                if table is None:
                    return Status.ERROR, f"no table {name!r}".encode()
                return Status.OK, _pack_info(table.info())
            if call_id == CallID.GET_VARIABLES:
                if self.variables is None:
                    return Status.ERROR, b"no variable source here"
                (known_version,) = struct.unpack_from("<I", payload, 0)
                version, blob = self.variables.get_blob()
                if blob is None:
                    return Status.NOT_READY, b"nothing published yet"
                if version == known_version:
                    return Status.OK, struct.pack("<IB", version, 0)
                return Status.OK, struct.pack("<IB", version, 1) + blob
            return Status.ERROR, f"unknown call id {call_id}".encode()
        except ProtocolError:
            raise
        except Exception as exc:  # handler errors become error replies, not crashes
            return Status.ERROR, f"{type(exc).__name__}: {exc}".encode()


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        service: RpcService = self.server.service
        while True:
            try:
                call_id, payload = read_message(self.request)
            except (ConnectionError, OSError):
                return
            except ProtocolError:
                return  # malformed framing: drop the connection
            status, body = service.handle(call_id, payload)
            try:
                write_message(self.request, call_id, bytes([status]) + body)
            except (ConnectionError, OSError):
                return


class RpcServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service: RpcService, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.service = service
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "RpcServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


class RpcClient:
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._lock = threading.Lock()

    def _connect(self) -> socket.socket:
        if self._sock is None:
            sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._sock = sock
        return self._sock

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def call(self, call_id: int, payload: bytes) -> tuple[int, bytes]:
        with self._lock:
            for attempt in (0, 1):
                try:
                    sock = self._connect()
                    write_message(sock, call_id, payload)
                    rid, body = read_message(sock)
                    if rid != call_id:
                        raise ProtocolError(f"response call id {rid} != request {call_id}")
                    return body[0], body[1:]
                except (ConnectionError, OSError):
                    self.close()
                    if attempt:
                        raise
        raise ConnectionError("unreachable")

    def _check(self, status: int, body: bytes):
        if status == Status.NOT_READY:
            raise NotReadyError(body.decode(errors="replace"))
        if status == Status.ERROR:
            raise RuntimeError(f"remote error: {body.decode(errors='replace')}")

    # -- typed calls -----------------------------------------------------------

    def ping(self) -> bool:
        status, _ = self.call(CallID.PING, b"")
        return status == Status.OK

    def insert(self, item, table: str = "default") -> int:
        status, body = self.call(CallID.INSERT, _with_name(table, encode_item(item)))
        self._check(status, body)
        return struct.unpack("<Q", body)[0]

    def sample(self, batch: int, table: str = "default") -> list:
        status, body = self.call(CallID.SAMPLE, _with_name(table, struct.pack("<I", batch)))
        self._check(status, body)
        (count,) = struct.unpack_from("<I", body, 0)
        offset = 4
        items = []
        for _ in range(count):
            (n,) = struct.unpack_from("<I", body, offset)
            offset += 4
            items.append(decode_item(body[offset : offset + n]))
            offset += n
        return items

    def table_info(self, table: str = "default") -> dict:
        status, body = self.call(CallID.TABLE_INFO, _with_name(table))
        self._check(status, body)
        return _unpack_info(body)

    def get_variables(self, known_version: int = 0):
        """Returns (version, decoded params or None when unchanged/unpublished)."""
        status, body = self.call(CallID.GET_VARIABLES, struct.pack("<I", known_version))
        if status == Status.NOT_READY:
            return 0, None
        self._check(status, body)
        version, changed = struct.unpack_from("<IB", body, 0)
        if not changed:
            return version, None
        return version, decode_params(body[5:])


def serve_replay(table: ReplayTable, host: str = "127.0.0.1", port: int = 0) -> RpcServer:
    return RpcServer(RpcService(tables={"default": table}), host, port).start()


def serve_variables(source: VariableSource, host: str = "127.0.0.1", port: int = 0) -> RpcServer:
    return RpcServer(RpcService(variables=source), host, port).start()


def serve_metrics(callback, host: str = "127.0.0.1", port: int = 0) -> RpcServer:
    return RpcServer(RpcService(tables={"metrics": CallbackSink(callback)}), host, port).start()
