import os
import tempfile
from importlib.metadata import PackageNotFoundError
from pathlib import Path
from unittest.mock import patch

import pytest

from common.utils import armbench_version, atomic_write_bytes, atomic_write_text


def test_version_installed():
    """Test version retrieval when package is installed."""
    with patch("common.utils.version") as mock_version:
        mock_version.return_value = "1.2.3"
        assert armbench_version() == "1.2.3"
        mock_version.assert_called_once_with("armbench")


def test_version_not_installed():
    """Test version retrieval when package is not installed."""
    with patch("common.utils.version") as mock_version:
        mock_version.side_effect = PackageNotFoundError
        assert armbench_version() == "Unknown (package not installed)"
        mock_version.assert_called_once_with("armbench")


def test_atomic_write_creates_parents_and_replaces():
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "a" / "b" / "out.json"
        assert atomic_write_text(target, "first\n") == target
        atomic_write_text(target, "second\n")
        assert target.read_text(encoding="utf-8") == "second\n"
        assert os.listdir(target.parent) == ["out.json"]


def test_atomic_write_leaves_old_file_on_failure():
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "out.bin"
        atomic_write_bytes(target, b"old")
        with patch("common.utils.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError):
                atomic_write_bytes(target, b"new")
        assert target.read_bytes() == b"old"
        assert os.listdir(tmp) == ["out.bin"]
