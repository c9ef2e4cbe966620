"""Minimal RFC 6455 WebSocket framing: enough for JSON text frames.

The gateway streams session events over an upgraded HTTP connection; the
console (a browser) speaks native WebSocket. This module implements the
handshake digest and unfragmented text/control frames -- no extensions, no
continuation frames -- plus a small blocking client used by tests and
scripts.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def encode_frame(payload: bytes, opcode: int = OP_TEXT, mask: bool = False) -> bytes:
    head = bytes([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if length < 126:
        head += bytes([mask_bit | length])
    elif length < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", length)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + masked
    return head + payload


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("socket closed mid-frame")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    """Read one unfragmented frame, unmasking if needed: (opcode, payload)."""
    header = _read_exact(sock, 2)
    fin = header[0] & 0x80
    opcode = header[0] & 0x0F
    if not fin or opcode == 0x0:
        raise ConnectionError("fragmented frames are not supported")
    masked = header[1] & 0x80
    length = header[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", _read_exact(sock, 2))[0]
    elif length == 127:
        length = struct.unpack(">Q", _read_exact(sock, 8))[0]
    key = _read_exact(sock, 4) if masked else None
    payload = _read_exact(sock, length) if length else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, payload


class WSClient:
    """Blocking WebSocket client for talking to the gateway's stream endpoint."""

    def __init__(self, host: str, port: int, path: str, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET {path} HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode())
        status = self._read_headers()
        if "101" not in status:
            raise ConnectionError(f"websocket handshake rejected: {status.strip()}")

    def _read_headers(self) -> str:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(1024)
            if not chunk:
                raise ConnectionError("connection closed during handshake")
            data += chunk
        return data.split(b"\r\n", 1)[0].decode()

    def recv_text(self) -> str | None:
        """Next text payload, answering pings; None when the server closes."""
        while True:
            opcode, payload = read_frame(self.sock)
            if opcode == OP_TEXT:
                return payload.decode()
            if opcode == OP_PING:
                self.sock.sendall(encode_frame(payload, OP_PONG, mask=True))
            elif opcode == OP_CLOSE:
                return None

    def send_text(self, text: str) -> None:
        self.sock.sendall(encode_frame(text.encode(), OP_TEXT, mask=True))

    def close(self) -> None:
        try:
            self.sock.sendall(encode_frame(b"", OP_CLOSE, mask=True))
        except OSError:
            pass
        self.sock.close()
