"""CSV writing with a provenance header line."""

from __future__ import annotations

import csv
from pathlib import Path

from . import __version__


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def provenance_line(digest: str | None) -> str:
    return f"# superatom {__version__} config_sha256={digest or 'none'}"


def write_csv(path, columns, rows, digest: str | None = None) -> Path:
    """Write ``rows`` under a ``# superatom <version> config_sha256=...`` comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(provenance_line(digest) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    """Return ``(header_comment, columns, rows as lists of str)``."""
    with Path(path).open() as fh:
        comment = fh.readline().rstrip("\n")
        r = csv.reader(fh)
        columns = next(r)
        return comment, columns, list(r)
