import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapsim.feedback import FeedbackForce
from hapsim.retarget import FingerId
from hapsim.samples import FingertipReading
from hapsim.wire import (
    FeedbackMessage,
    ForceMessage,
    InProcessTransport,
    MalformedFrame,
    PoseMessage,
    decode,
    encode,
)

LEADER = FingerId("leader", "index")
FOLLOWER = FingerId("follower", "ring")


def make_pose(seq=0, tick=0, dz=1.25):
    return PoseMessage(seq=seq, tick=tick, finger=LEADER, dz_leader=dz)


def make_force(seq=0, tick=0):
    reading = FingertipReading(
        finger=FOLLOWER,
        z_forces=(10.0, 20.5, 30.25, 0.125),
        xy_forces=((1.0, 2.0), (3.0, 4.0), (5.0, 6.0), (7.0, 8.0)),
        timestamp=tick,
    )
    return ForceMessage(
        seq=seq, tick=tick, finger=FOLLOWER, reading=reading, f_aggregate=30.25, dz_follower=2.5
    )


def make_feedback(seq=0, tick=0, k=12.5):
    return FeedbackMessage(
        seq=seq,
        tick=tick,
        finger=LEADER,
        rendered=FeedbackForce(finger="index", method1=1.5, method2=2.25),
        k_hat=k,
    )


@pytest.mark.parametrize("msg", [make_pose(), make_force(), make_feedback(), make_feedback(k=None)])
def test_round_trip_exact(msg):
    assert decode(encode(msg)) == msg


def test_round_trip_preserves_float_bits():
    # values with no short decimal representation survive bit-exactly
    msg = make_pose(dz=0.1 + 0.2)
    out = decode(encode(msg))
    assert out.dz_leader.hex() == (0.1 + 0.2).hex()


def test_empty_and_truncated_frames():
    with pytest.raises(MalformedFrame):
        decode(b"")
    with pytest.raises(MalformedFrame):
        decode(encode(make_pose())[:-1])
    with pytest.raises(MalformedFrame):
        decode(encode(make_force())[: len(encode(make_force())) // 2])


def test_trailing_bytes_rejected():
    with pytest.raises(MalformedFrame):
        decode(encode(make_pose()) + b"\x00")


def test_bad_magic_and_version():
    frame = bytearray(encode(make_pose()))
    frame[0] = ord("X")
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))
    frame = bytearray(encode(make_pose()))
    frame[3] = ord("2")  # future version
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))


def test_unknown_kind_rejected():
    frame = bytearray(encode(make_pose()))
    frame[4] = 99
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))


def test_invalid_finger_codes_rejected():
    frame = bytearray(encode(make_pose()))
    frame[14] = 7  # name code out of range
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))
    frame = bytearray(encode(make_pose()))
    frame[14] = 3  # "ring" is not a leader finger
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))
    frame = bytearray(encode(make_pose()))
    frame[13] = 5  # side code out of range
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))


def test_non_finite_floats_rejected():
    import struct

    frame = bytearray(encode(make_pose()))
    frame[-8:] = struct.pack("<d", float("nan"))
    with pytest.raises(MalformedFrame):
        decode(bytes(frame))


def _random_message(rng: np.random.Generator):
    kind = rng.integers(3)
    seq = int(rng.integers(0, 2**32))
    tick = int(rng.integers(0, 2**32))
    if kind == 0:
        name = ("thumb", "index", "middle")[rng.integers(3)]
        return PoseMessage(seq, tick, FingerId("leader", name), float(rng.normal()))
    if kind == 1:
        name = ("thumb", "index", "ring")[rng.integers(3)]
        finger = FingerId("follower", name)
        reading = FingertipReading(
            finger=finger,
            z_forces=tuple(float(v) for v in rng.uniform(0, 2000, 4)),
            xy_forces=tuple((float(a), float(b)) for a, b in rng.normal(size=(4, 2))),
            timestamp=int(rng.integers(0, 2**32)),
        )
        return ForceMessage(seq, tick, finger, reading, float(rng.uniform(0, 2000)), float(rng.uniform(0, 40)))
    name = ("thumb", "index", "middle")[rng.integers(3)]
    k = float(rng.uniform(0, 500)) if rng.random() < 0.8 else None
    return FeedbackMessage(
        seq,
        tick,
        FingerId("leader", name),
        FeedbackForce(finger=name, method1=float(rng.uniform(0, 5)), method2=float(rng.uniform(0, 5))),
        k,
    )


def test_fuzzed_messages_round_trip():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        msg = _random_message(rng)
        assert decode(encode(msg)) == msg


@settings(max_examples=300, deadline=None)
@given(st.binary(min_size=0, max_size=200))
def test_random_bytes_decode_or_error(buf):
    """Codec totality: arbitrary bytes either decode or raise MalformedFrame."""
    try:
        msg = decode(buf)
    except MalformedFrame:
        return
    assert encode(msg) == buf


@settings(max_examples=200, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**32 - 1),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
)
def test_pose_round_trip_property(seq, tick, dz):
    msg = PoseMessage(seq, tick, LEADER, dz)
    assert decode(encode(msg)) == msg


def test_transport_send_recv():
    chan = InProcessTransport()
    frame = encode(make_pose())
    chan.send(frame)
    assert chan.recv() == frame
    assert chan.recv() is None  # empty


def test_transport_preserves_per_finger_fifo_order():
    chan = InProcessTransport()
    fingers = ("thumb", "index", "middle")
    sent: dict[str, list[int]] = {f: [] for f in fingers}
    rng = np.random.default_rng(8)
    counters = {f: 0 for f in fingers}
    for _ in range(300):
        f = fingers[rng.integers(3)]
        msg = PoseMessage(counters[f], 0, FingerId("leader", f), 0.5)
        counters[f] += 1
        sent[f].append(msg.seq)
        chan.send(encode(msg))
    received: dict[str, list[int]] = {f: [] for f in fingers}
    while (frame := chan.recv()) is not None:
        msg = decode(frame)
        received[msg.finger.name].append(msg.seq)
    # per-finger sequence numbers arrive strictly increasing
    for f in fingers:
        assert received[f] == sent[f]
        assert all(a < b for a, b in zip(received[f], received[f][1:]))


def test_transport_closed():
    from hapsim.wire import ChannelClosed

    chan = InProcessTransport()
    chan.close()
    with pytest.raises(ChannelClosed):
        chan.send(b"x")


def test_datagram_transport_loopback():
    from hapsim.wire import DatagramTransport

    recv_side = DatagramTransport(("127.0.0.1", 0), bind=("127.0.0.1", 0))
    send_side = DatagramTransport(("127.0.0.1", recv_side.bound_port))
    frame = encode(make_force())
    send_side.send(frame)
    assert recv_side.recv(timeout=2.0) == frame
    assert recv_side.recv(timeout=0.01) is None  # timeout -> None
    send_side.close()
    recv_side.close()
