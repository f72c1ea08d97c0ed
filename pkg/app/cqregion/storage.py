from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path


class StorageError(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalStorage:
    """Output files under a root directory; writes are temp-file + rename."""

    root: Path

    def _path(self, key: str) -> Path:
        safe_key = key.lstrip("/").replace("\\", "/")
        # Reject keys containing path traversal attempts
        if ".." in safe_key.split("/"):
            raise StorageError(f"Invalid storage key (path traversal detected): {key}")
        if not safe_key:
            raise StorageError("Empty storage key.")
        return self.root / safe_key

    def put_bytes(self, key: str, data: bytes) -> Path:
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{p.name}.", suffix=".tmp", dir=p.parent)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp_name, p)
        except Exception:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise
        return p


def storage_for_output(out_path: str | os.PathLike) -> tuple[LocalStorage, str]:
    """Split an output path into a storage rooted at its directory and a key."""
    p = Path(out_path).resolve()
    return LocalStorage(root=p.parent), p.name
