import pytest
from hypothesis import given, strategies as st

from skillcheck.eventlog import GENESIS_HASH, EventLog, LogFormatError, canonical_json, verify_bytes


def small_log():
    lg = EventLog()
    lg.append({"op": "genesis", "args": {"seed": 1}})
    lg.append({"op": "mint", "args": {"user": "a", "amount": 5}, "effects": {"x": 0.1}})
    lg.append({"op": "note", "args": {"text": "café"}})
    return lg


def test_chain_links():
    lg = small_log()
    assert lg[0].prev_hash == GENESIS_HASH
    assert all(lg[k].prev_hash == lg[k - 1].hash for k in range(1, len(lg)))
    assert lg.verify()


def test_roundtrip_bytes():
    lg = small_log()
    data = lg.to_bytes()
    back = EventLog.from_bytes(data)
    assert back.to_bytes() == data and back.verify()


def test_every_byte_flip_detected():
    data = small_log().to_bytes()
    for k in range(len(data)):
        for bit in (0x01, 0x80):
            bad = bytearray(data)
            bad[k] ^= bit
            assert not verify_bytes(bytes(bad)), f"flip at byte {k} undetected"


def test_truncation_detected():
    data = small_log().to_bytes()
    assert not verify_bytes(data[:-1])
    with pytest.raises(LogFormatError):
        EventLog.from_bytes(data[:3])


def test_reordered_entries_fail():
    lg = small_log()
    bad = EventLog()
    bad._entries = [lg[1], lg[0], lg[2]]
    assert not bad.verify()


def test_nan_rejected():
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


@given(st.recursive(st.none() | st.booleans() | st.integers() | st.text(max_size=5), lambda c: st.lists(c, max_size=3) | st.dictionaries(st.text(max_size=3), c, max_size=3), max_leaves=8))
def test_arbitrary_payload_roundtrip(payload):
    lg = EventLog()
    lg.append(payload)
    assert EventLog.from_bytes(lg.to_bytes()).verify()
