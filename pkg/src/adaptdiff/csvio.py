"""CSV output with ``#`` metadata header lines and lossless reals."""
import csv
import io
import os
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = ["format_value", "write_csv", "read_csv"]


def format_value(v) -> str:
    """Reals with 17 significant digits; everything else via ``str``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence],
              meta: Optional[Mapping[str, object]] = None) -> None:
    """Write ``rows`` under ``header``; ``meta`` becomes ``# key: value`` lines.

    The file is assembled in memory and written in one go so a failure
    never leaves a partial artifact.
    """
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(v) for v in r])
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())


def read_csv(path):
    """Return ``(meta, header, rows)`` with all cells as strings."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]
