import os
import tempfile
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path


def armbench_version() -> str:
    try:
        return version("armbench")
    except PackageNotFoundError:
        return "Unknown (package not installed)"


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """
    Write `data` to `path` so readers never observe a partial file.

    The bytes go to a temporary file in the destination directory first and are
    then renamed over the target, which is atomic on POSIX and Windows.

    Returns:
        Path: the destination path.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=".tmp", dir=target.parent
    )
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return target


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))
