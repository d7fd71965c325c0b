"""CSV result files with a commented provenance header."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from pmbpqm import __version__


def format_value(x: Any) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float) or hasattr(x, "dtype") and x.dtype.kind == "f":
        return format(float(x), ".12g")
    return str(x)


def write_csv(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    params: dict,
    seed: int,
) -> Path:
    """
    Write rows under a header of '#' comment lines: tool version, parameters as
    JSON, and the seed. Floats keep 12 significant digits.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# pmbpqm {__version__}\n")
        fh.write(f"# params: {json.dumps(params, sort_keys=True)}\n")
        fh.write(f"# seed: {seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Return (comment lines, data rows as dicts)."""
    comments = []
    body = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for line in fh:
            (comments if line.startswith("#") else body).append(line)
    return comments, list(csv.DictReader(body))
