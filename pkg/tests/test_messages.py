from hypothesis import given, strategies as st

from ecreg.core import CodedSymbol, Replica, Tag
from ecreg.messages import (
    REQUESTS, Kind, Message, decode_message, encode_message, message_from_json, message_to_json,
)
import pytest

tags = st.one_of(st.none(), st.builds(Tag, st.integers(0, 2**40)),
                 st.builds(Tag, st.integers(0, 2**40), st.integers(0, 2**31)))
payloads = st.one_of(st.none(), st.builds(Replica, st.binary(max_size=40)),
                     st.builds(CodedSymbol, st.integers(1, 255), st.binary(max_size=20)))
messages = st.builds(Message, st.sampled_from(list(Kind)), st.integers(0, 2**31), st.integers(1, 255),
                     st.integers(0, 2**63), st.integers(0, 2**31), tags, payloads)


@given(messages)
def test_wire_round_trip(m):
    assert decode_message(encode_message(m)) == m


@given(messages)
def test_json_round_trip(m):
    assert message_from_json(message_to_json(m)) == m


@given(messages)
def test_payload_bytes_counts_only_value_data(m):
    raw = encode_message(m)
    header = len(encode_message(Message(m.kind, m.client, m.server, m.op, m.phase, m.tag, None)))
    assert len(raw) - header == m.payload_bytes


def test_truncated_wire_rejected():
    raw = encode_message(Message(Kind.PUT_REPLICA, 1, 2, 3, 1, Tag(4), Replica(b"abcd")))
    with pytest.raises(ValueError):
        decode_message(raw[:-1])
    with pytest.raises(ValueError):
        decode_message(raw + b"x")


def test_reply_keeps_correlation_token_and_channel_direction():
    m = Message(Kind.GET, 4, 2, 99, 3)
    r = m.reply(Kind.GET_RESP, Tag(1), CodedSymbol(2, b"z"))
    assert (r.client, r.server, r.op, r.phase) == (4, 2, 99, 3)
    assert m.to_server and not r.to_server
    assert m.channel == (4, 2, True) and r.channel == (4, 2, False)
    assert REQUESTS == {Kind.GET, Kind.GET_TAG, Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE}
