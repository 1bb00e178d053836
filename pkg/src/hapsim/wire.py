"""Binary message codec and transports between the leader and follower nodes.

Wire format
-----------
Every frame starts with the 4-byte magic ``THB1`` (the trailing digit is the
format version) followed by a 1-byte message kind.  All multi-byte fields are
little-endian and fixed width:

kind 1, pose (leader -> follower), 23 bytes total::

    magic[4] kind[1] seq[u32] tick[u32] side[u8] name[u8] dz_leader[f64]

kind 2, force (follower -> leader), 131 bytes total::

    magic[4] kind[1] seq[u32] tick[u32] side[u8] name[u8]
    z[4 x f64] xy[4 x 2 x f64] reading_tick[u32] f_aggregate[f64] dz_follower[f64]

kind 3, feedback (leader local), 40 bytes total::

    magic[4] kind[1] seq[u32] tick[u32] side[u8] name[u8]
    method1[f64] method2[f64] k_hat[f64] has_k_hat[u8]

Side codes: 0 leader, 1 follower.  Name codes: 0 thumb, 1 index, 2 middle,
3 ring.  Decoding rejects anything else, as well as short/overlong frames
and non-finite floats, with ``MalformedFrame``.
"""

from __future__ import annotations

import math
import queue
import socket
import struct
from dataclasses import dataclass

from .feedback import FeedbackForce
from .retarget import NAME_CODES, SIDE_CODES, FingerId
from .samples import FingertipReading

MAGIC = b"THB1"

KIND_POSE = 1
KIND_FORCE = 2
KIND_FEEDBACK = 3

_CODE_TO_SIDE = {v: k for k, v in SIDE_CODES.items()}
_CODE_TO_NAME = {v: k for k, v in NAME_CODES.items()}

_POSE = struct.Struct("<4sBIIBBd")
_FORCE = struct.Struct("<4sBIIBB4d8dIdd")
_FEEDBACK = struct.Struct("<4sBIIBBdddB")


class MalformedFrame(ValueError):
    """Raised when a byte sequence cannot be decoded into a message."""


@dataclass(frozen=True)
class PoseMessage:
    seq: int
    tick: int
    finger: FingerId
    dz_leader: float


@dataclass(frozen=True)
class ForceMessage:
    seq: int
    tick: int
    finger: FingerId
    reading: FingertipReading
    f_aggregate: float
    dz_follower: float


@dataclass(frozen=True)
class FeedbackMessage:
    seq: int
    tick: int
    finger: FingerId
    rendered: FeedbackForce
    k_hat: float | None = None


Message = PoseMessage | ForceMessage | FeedbackMessage


def _finger_codes(finger: FingerId) -> tuple[int, int]:
    return SIDE_CODES[finger.side], NAME_CODES[finger.name]


def encode(message: Message) -> bytes:
    if isinstance(message, PoseMessage):
        side, name = _finger_codes(message.finger)
        return _POSE.pack(MAGIC, KIND_POSE, message.seq, message.tick, side, name, message.dz_leader)
    if isinstance(message, ForceMessage):
        side, name = _finger_codes(message.finger)
        r = message.reading
        xy_flat = [v for pair in r.xy_forces for v in pair]
        return _FORCE.pack(
            MAGIC,
            KIND_FORCE,
            message.seq,
            message.tick,
            side,
            name,
            *r.z_forces,
            *xy_flat,
            r.timestamp,
            message.f_aggregate,
            message.dz_follower,
        )
    if isinstance(message, FeedbackMessage):
        side, name = _finger_codes(message.finger)
        k = message.k_hat
        return _FEEDBACK.pack(
            MAGIC,
            KIND_FEEDBACK,
            message.seq,
            message.tick,
            side,
            name,
            message.rendered.method1,
            message.rendered.method2,
            0.0 if k is None else k,
            0 if k is None else 1,
        )
    raise TypeError(f"cannot encode {type(message).__name__}")


def _check_header(buf: bytes) -> int:
    if len(buf) < 5:
        raise MalformedFrame("truncated frame")
    if buf[:3] != MAGIC[:3]:
        raise MalformedFrame("bad magic")
    if buf[3:4] != MAGIC[3:4]:
        raise MalformedFrame(f"unsupported version byte {buf[3:4]!r}")
    return buf[4]


def _decode_finger(side_code: int, name_code: int) -> FingerId:
    try:
        finger = FingerId(_CODE_TO_SIDE[side_code], _CODE_TO_NAME[name_code])
    except (KeyError, ValueError) as exc:
        raise MalformedFrame(f"invalid finger encoding ({side_code}, {name_code})") from exc
    return finger


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise MalformedFrame("non-finite float field")


def decode(buf: bytes) -> Message:
    """Parse one frame; inverse of :func:`encode` on anything it produced."""
    kind = _check_header(buf)
    if kind == KIND_POSE:
        if len(buf) != _POSE.size:
            raise MalformedFrame(f"pose frame must be {_POSE.size} bytes, got {len(buf)}")
        _, _, seq, tick, side, name, dz = _POSE.unpack(buf)
        _require_finite(dz)
        return PoseMessage(seq, tick, _decode_finger(side, name), dz)
    if kind == KIND_FORCE:
        if len(buf) != _FORCE.size:
            raise MalformedFrame(f"force frame must be {_FORCE.size} bytes, got {len(buf)}")
        fields = _FORCE.unpack(buf)
        _, _, seq, tick, side, name = fields[:6]
        z = fields[6:10]
        xy_flat = fields[10:18]
        reading_tick = fields[18]
        f_aggregate, dz_follower = fields[19:]
        _require_finite(*z, *xy_flat, f_aggregate, dz_follower)
        finger = _decode_finger(side, name)
        reading = FingertipReading(
            finger=finger,
            z_forces=tuple(z),
            xy_forces=tuple((xy_flat[2 * i], xy_flat[2 * i + 1]) for i in range(4)),
            timestamp=reading_tick,
        )
        return ForceMessage(seq, tick, finger, reading, f_aggregate, dz_follower)
    if kind == KIND_FEEDBACK:
        if len(buf) != _FEEDBACK.size:
            raise MalformedFrame(f"feedback frame must be {_FEEDBACK.size} bytes, got {len(buf)}")
        _, _, seq, tick, side, name, m1, m2, k, has_k = _FEEDBACK.unpack(buf)
        _require_finite(m1, m2, k)
        if has_k not in (0, 1):
            raise MalformedFrame(f"invalid k_hat flag {has_k}")
        if has_k == 0 and k != 0.0:
            raise MalformedFrame("absent k_hat must encode as 0.0")
        finger = _decode_finger(side, name)
        rendered = FeedbackForce(finger=finger.name, method1=m1, method2=m2)
        return FeedbackMessage(seq, tick, finger, rendered, k if has_k else None)
    raise MalformedFrame(f"unknown message kind {kind}")


class ChannelClosed(RuntimeError):
    pass


class InProcessTransport:
    """FIFO byte-frame channel between two nodes in one process.

    Safe for one producer and one consumer; in the deterministic test mode
    both ends run on the same scheduler and recv never blocks.
    """

    def __init__(self) -> None:
        self._queue: queue.Queue[bytes] = queue.Queue()
        self._closed = False

    def send(self, frame: bytes) -> None:
        if self._closed:
            raise ChannelClosed("transport closed")
        self._queue.put(frame)

    def recv(self, timeout: float | None = 0.0) -> bytes | None:
        """Next frame, or None if none arrives within the timeout."""
        if self._closed and self._queue.empty():
            raise ChannelClosed("transport closed")
        try:
            if timeout == 0.0:
                return self._queue.get_nowait()
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._closed = True


class DatagramTransport:
    """UDP frame channel; drops are expected and left to the session policy."""

    MAX_FRAME = 2048

    def __init__(self, send_to: tuple[str, int], bind: tuple[str, int] | None = None) -> None:
        self._send_to = send_to
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        if bind is not None:
            self._sock.bind(bind)
        self._closed = False

    @property
    def bound_port(self) -> int:
        return self._sock.getsockname()[1]

    def send(self, frame: bytes) -> None:
        if self._closed:
            raise ChannelClosed("transport closed")
        self._sock.sendto(frame, self._send_to)

    def recv(self, timeout: float | None = 0.05) -> bytes | None:
        if self._closed:
            raise ChannelClosed("transport closed")
        self._sock.settimeout(timeout)
        try:
            frame, _ = self._sock.recvfrom(self.MAX_FRAME)
            return frame
        except (TimeoutError, socket.timeout):
            return None

    def close(self) -> None:
        self._closed = True
        self._sock.close()
