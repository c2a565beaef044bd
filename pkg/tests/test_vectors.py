"""The shared vector file is the cross-language contract: the browser
panel proves its codec against it, so the committed JSON must always
match what the Python codec actually does."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tedsim import protocol, vectors

VECTOR_PATH = Path(__file__).parent.parent / "shared" / \
    "protocol-vectors.json"


@pytest.fixture(scope="module")
def doc():
    return json.loads(VECTOR_PATH.read_text())


def test_committed_file_matches_generator():
    assert VECTOR_PATH.read_text() == vectors.render(), \
        "regenerate with: python3 -m tedsim.vectors " \
        "shared/protocol-vectors.json"


def test_crc_check_value(doc):
    data = doc["crc"]["check_input_ascii"].encode()
    assert protocol.crc16(data) == doc["crc"]["check_value"] == 0x29B1


def test_every_valid_vector_decodes_to_its_fields(doc):
    for entry in doc["commands"] + doc["replies"]:
        msg = protocol.decode(bytes.fromhex(entry["hex"]))
        assert type(msg).__name__ == entry["type"], entry["name"]
        assert vectors._fields(msg) == entry["fields"], entry["name"]


def test_every_valid_vector_reencodes_identically(doc):
    for entry in doc["commands"] + doc["replies"]:
        msg = protocol.decode(bytes.fromhex(entry["hex"]))
        assert protocol.encode(msg).hex() == entry["hex"], entry["name"]


def test_command_coverage_is_complete(doc):
    # The panel can emit every command type; the vectors must too.
    seen = {protocol.decode(bytes.fromhex(e["hex"])).__class__
            for e in doc["commands"]}
    assert seen == {protocol.Enable, protocol.SetMode, protocol.SetLevel,
                    protocol.SetHeatSetpoint, protocol.SetTempSetpoint,
                    protocol.SetPid, protocol.GetStatus}


def test_invalid_vectors_raise_named_errors(doc):
    for entry in doc["invalid"]:
        err_cls = getattr(protocol, entry["error"])
        with pytest.raises(err_cls) as exc_info:
            protocol.decode(bytes.fromhex(entry["hex"]))
        if entry["error"] == "RangeViolation":
            assert exc_info.value.minimum == entry["minimum"]
            assert exc_info.value.maximum == entry["maximum"]
