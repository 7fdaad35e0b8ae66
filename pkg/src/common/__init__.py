from common.utils import armbench_version, atomic_write_bytes, atomic_write_text

__all__ = [
    "armbench_version",
    "atomic_write_bytes",
    "atomic_write_text",
]
