"""Atomic file writing helpers.

Every artifact the package writes goes through :func:`atomic_write` so an
interrupted run never leaves a truncated file behind: content is written to
a temporary sibling and moved into place with ``os.replace``.
"""

from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path


@contextmanager
def atomic_write(path, mode: str = "w", encoding: str | None = "utf-8"):
    """Open a temporary file next to *path*; rename over *path* on success.

    ``mode`` must be a write mode ("w" or "wb"). On any exception the
    temporary file is removed and *path* is left untouched.
    """
    if mode not in ("w", "wb"):
        raise ValueError(f"atomic_write requires mode 'w' or 'wb', got {mode!r}")
    if "b" in mode:
        encoding = None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, encoding=encoding) as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
