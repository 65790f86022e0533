"""
Unit tests for the tensor container format.
"""

import os
import struct
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.container import (
    METADATA_KEY,
    decode_container,
    encode_container,
    read_container,
    write_container,
)
from core.errors import CheckpointError


class TestContainer:
    """Test suite for container encoding and decoding."""

    def test_arrays_and_metadata_survive(self, tmp_path):
        """Test float and integer arrays plus metadata through a file."""
        tensors = {"weights": np.arange(6, dtype=np.float32).reshape(2, 3),
                   "labels": np.array([3, 1, 4], dtype=np.int64)}
        path = write_container(tmp_path / "nested" / "a.bin", tensors, {"step": 7})

        arrays, metadata = read_container(path)
        np.testing.assert_array_equal(arrays["weights"], tensors["weights"])
        assert arrays["labels"].dtype == np.int32
        np.testing.assert_array_equal(arrays["labels"], [3, 1, 4])
        assert metadata == {"step": 7}

    def test_encoding_is_deterministic(self):
        """Test that insertion order does not change the bytes."""
        a = encode_container({"b": np.ones(2), "a": np.zeros(3)})
        b = encode_container({"a": np.zeros(3), "b": np.ones(2)})
        assert a == b

    def test_header_layout(self):
        """Test the 8-byte little-endian index length prefix."""
        payload = encode_container({"x": np.ones(1)})
        (length,) = struct.unpack("<Q", payload[:8])
        assert payload[8 : 8 + length].startswith(b"{")
        assert len(payload) == 8 + length + 4

    def test_reserved_name_rejected(self):
        """Test that the metadata key cannot name a tensor."""
        with pytest.raises(CheckpointError, match="reserved"):
            encode_container({METADATA_KEY: np.ones(1)})

    def test_truncated_data(self):
        """Test that cutting off array bytes raises CheckpointError."""
        payload = encode_container({"x": np.ones(10)})
        with pytest.raises(CheckpointError, match="truncated data"):
            decode_container(payload[:-4])

    def test_truncated_index(self):
        """Test a header declaring more index bytes than present."""
        with pytest.raises(CheckpointError, match="truncated index"):
            decode_container(struct.pack("<Q", 1000) + b"{}")

    def test_too_short(self):
        """Test a payload shorter than the header."""
        with pytest.raises(CheckpointError):
            decode_container(b"abc")

    def test_corrupt_index(self):
        """Test an index that is not JSON."""
        with pytest.raises(CheckpointError, match="corrupt index"):
            decode_container(struct.pack("<Q", 3) + b"{{{")

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            read_container(tmp_path / "absent.bin")
