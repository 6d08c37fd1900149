"""Length-prefixed binary frames between coordinator, workers and ranks.

Frame layout (big-endian)::

    b"QV" | version u8 (=1) | message_type u8 | payload_length u32 | payload

Request payload (Ping, LoadProblem, EvaluateEnergy, EvaluateBatchElement)::

    job_id u64 | kind u8 | count u32 | count × f64 [| blob_len u32 | blob]   (blob: LoadProblem only)

Shutdown carries an empty payload.  Result payload::

    job_id u64 | kind u8 | count u32 | count × f64 | status u16 | msg_len u32 | msg utf-8

Amplitude exchange payload (partitioned engine)::

    job_id u64 | kind u8 | count u32 | count × f64 (re, im interleaved) | src u32 | dst u32
"""
from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

MAGIC = b"QV"
VERSION = 1
HEADER = struct.Struct(">2sBBI")
_HEAD = struct.Struct(">QBI")  # job_id, kind, count
MAX_PAYLOAD = 2**32 - 1


class MessageType(IntEnum):
    PING = 0x01
    LOAD_PROBLEM = 0x02
    EVALUATE_ENERGY = 0x03
    EVALUATE_BATCH_ELEMENT = 0x04
    SHUTDOWN = 0x05
    RESULT = 0x10
    AMPLITUDES = 0x11


REQUEST_KINDS = {
    MessageType.PING,
    MessageType.LOAD_PROBLEM,
    MessageType.EVALUATE_ENERGY,
    MessageType.EVALUATE_BATCH_ELEMENT,
    MessageType.SHUTDOWN,
}


class Status(IntEnum):
    OK = 0
    NO_PROBLEM = 1
    EVALUATION_FAILED = 2
    BAD_REQUEST = 3


class FrameError(ValueError):
    """Base class; every decode failure is one of the subclasses below."""


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class UnknownMessageType(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class TrailingBytes(FrameError):
    pass


class MalformedPayload(FrameError):
    pass


@dataclass(frozen=True)
class JobRequest:
    job_id: int
    kind: MessageType
    theta: tuple[float, ...] = ()
    blob: bytes = b""


@dataclass(frozen=True)
class JobResult:
    job_id: int
    kind: MessageType
    values: tuple[float, ...] = ()
    status: Status = Status.OK
    message: str = ""

    @property
    def energy(self) -> float:
        return self.values[0]


@dataclass(frozen=True)
class AmplitudeMessage:
    job_id: int
    src: int
    dst: int
    amplitudes: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, AmplitudeMessage)
            and (self.job_id, self.src, self.dst) == (other.job_id, other.src, other.dst)
            and np.array_equal(self.amplitudes, other.amplitudes)
        )


Message = JobRequest | JobResult | AmplitudeMessage


def _floats(values) -> bytes:
    return np.asarray(values, dtype=">f8").tobytes()


def encode_payload(msg: Message) -> tuple[MessageType, bytes]:
    if isinstance(msg, JobRequest):
        kind = MessageType(msg.kind)
        if kind not in REQUEST_KINDS:
            raise ValueError(f"{kind!r} is not a request kind")
        if kind is MessageType.SHUTDOWN:
            return kind, b""
        body = _HEAD.pack(msg.job_id, kind, len(msg.theta)) + _floats(msg.theta)
        if kind is MessageType.LOAD_PROBLEM:
            body += struct.pack(">I", len(msg.blob)) + msg.blob
        elif msg.blob:
            raise ValueError("only LoadProblem carries a blob")
        return kind, body
    if isinstance(msg, JobResult):
        text = msg.message.encode()
        body = (
            _HEAD.pack(msg.job_id, MessageType(msg.kind), len(msg.values))
            + _floats(msg.values)
            + struct.pack(">HI", int(msg.status), len(text))
            + text
        )
        return MessageType.RESULT, body
    if isinstance(msg, AmplitudeMessage):
        amps = np.asarray(msg.amplitudes, dtype=np.complex128)
        flat = np.empty(2 * len(amps), dtype=">f8")
        flat[0::2], flat[1::2] = amps.real, amps.imag
        body = (
            _HEAD.pack(msg.job_id, MessageType.AMPLITUDES, len(flat))
            + flat.tobytes()
            + struct.pack(">II", msg.src, msg.dst)
        )
        return MessageType.AMPLITUDES, body
    raise TypeError(f"cannot encode {type(msg).__name__}")


def encode_frame(msg: Message) -> bytes:
    mtype, payload = encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise ValueError("payload exceeds 2**32 - 1 bytes")
    return HEADER.pack(MAGIC, VERSION, mtype, len(payload)) + payload


def decode_header(head: bytes) -> tuple[MessageType, int]:
    if len(head) < HEADER.size:
        raise TruncatedFrame(f"header needs {HEADER.size} bytes, got {len(head)}")
    magic, version, mtype, length = HEADER.unpack_from(head)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        mtype = MessageType(mtype)
    except ValueError:
        raise UnknownMessageType(f"unknown message type 0x{mtype:02x}") from None
    return mtype, length


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedPayload("payload shorter than its declared fields")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: struct.Struct | str):
        st = fmt if isinstance(fmt, struct.Struct) else struct.Struct(fmt)
        return st.unpack(self.take(st.size))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype=">f8").astype(np.float64)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedPayload(f"{len(self.data) - self.pos} unread payload bytes")


def decode_payload(mtype: MessageType, payload: bytes) -> Message:
    if mtype is MessageType.SHUTDOWN:
        if payload:
            raise MalformedPayload("Shutdown carries no payload")
        return JobRequest(0, MessageType.SHUTDOWN)
    r = _Reader(payload)
    job_id, kind, count = r.unpack(_HEAD)
    try:
        kind = MessageType(kind)
    except ValueError:
        raise MalformedPayload(f"unknown kind byte 0x{kind:02x}") from None
    if mtype in REQUEST_KINDS:
        if kind is not mtype:
            raise MalformedPayload(f"kind {kind.name} inside a {mtype.name} frame")
        theta = tuple(r.floats(count).tolist())
        blob = b""
        if mtype is MessageType.LOAD_PROBLEM:
            (n,) = r.unpack(">I")
            blob = r.take(n)
        r.done()
        return JobRequest(job_id, mtype, theta, blob)
    if mtype is MessageType.RESULT:
        if kind not in REQUEST_KINDS:
            raise MalformedPayload(f"result echoes non-request kind {kind.name}")
        values = tuple(r.floats(count).tolist())
        status, n = r.unpack(">HI")
        try:
            status = Status(status)
            text = r.take(n).decode()
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedPayload(str(exc)) from None
        r.done()
        return JobResult(job_id, kind, values, status, text)
    # AMPLITUDES
    if kind is not MessageType.AMPLITUDES or count % 2:
        raise MalformedPayload("bad amplitude block")
    flat = r.floats(count)
    src, dst = r.unpack(">II")
    r.done()
    return AmplitudeMessage(job_id, src, dst, flat[0::2] + 1j * flat[1::2])


def decode_frame(data: bytes) -> Message:
    """Decode exactly one frame; short or over-long input is an error."""
    mtype, length = decode_header(data)
    body = data[HEADER.size :]
    if len(body) < length:
        raise TruncatedFrame(f"payload declares {length} bytes, {len(body)} present")
    if len(body) > length:
        raise TrailingBytes(f"{len(body) - length} bytes after the frame")
    return decode_payload(mtype, bytes(body))


# -- socket helpers -----------------------------------------------------------


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if not buf:
                raise EOFError("connection closed")
            raise TruncatedFrame(f"connection closed after {len(buf)} of {n} bytes")
        buf += chunk
    return bytes(buf)


def read_message(sock: socket.socket) -> Message:
    head = _recv_exact(sock, HEADER.size)
    mtype, length = decode_header(head)
    return decode_payload(mtype, _recv_exact(sock, length) if length else b"")


def send_message(sock: socket.socket, msg: Message) -> None:
    sock.sendall(encode_frame(msg))


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host, int(port)
