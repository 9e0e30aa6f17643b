# besselab/services/artifacts/csv_writer.py
# Deterministic CSV emission: header row, 17 significant digits, LF endings, atomic write.

import math
from pathlib import Path
from typing import Any, List, Mapping, Sequence

import numpy as np
import pandas as pd

from besselab.services.artifacts.atomic import PathLike, atomic_write_text


def format_value(v: Any) -> str:
    """Render one cell: bools as true/false, floats with 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if isinstance(v, (tuple, list)):
        return " ".join(format_value(c) for c in v)
    return str(v)


def render_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    """
    Rules:
      - every row must carry exactly the header's keys (rectangular table);
      - quoting follows RFC 4180 (minimal), line endings are LF.

    Examples:
      [{"m": 4, "I": 1.5}] -> "m,I\\n4,1.5\\n"
    """
    if not rows:
        raise ValueError("cannot emit an empty table")
    header: List[str] = list(rows[0].keys())
    for i, row in enumerate(rows):
        if set(row.keys()) != set(header):
            raise ValueError(f"non-rectangular table: row {i} keys {sorted(row)} != {sorted(header)}")
    frame = pd.DataFrame(
        [[format_value(row[k]) for k in header] for row in rows], columns=header, dtype=str
    )
    return frame.to_csv(index=False, lineterminator="\n")


def emit_csv(rows: Sequence[Mapping[str, Any]], path: PathLike) -> Path:
    return atomic_write_text(path, render_csv(rows))
