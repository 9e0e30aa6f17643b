# besselab/services/artifacts/manifest.py
# Plain-text run manifest. Everything but the last two lines (start time, wall time)
# is a pure function of the resolved configuration.

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional

from besselab import ARTIFACT_NAME, __version__
from besselab.services.artifacts.atomic import PathLike, atomic_write_text
from besselab.services.artifacts.csv_writer import format_value


def render_manifest(
    subcommand: str,
    params: Mapping[str, Any],
    seed: Optional[int],
    started_at: datetime,
    wall_time_s: float,
    outputs: Optional[Mapping[str, str]] = None,
) -> str:
    lines = [
        f"artifact={ARTIFACT_NAME}",
        f"version={__version__}",
        f"subcommand={subcommand}",
    ]
    for key in sorted(params):
        lines.append(f"param.{key}={format_value(params[key])}")
    lines.append(f"seed={'' if seed is None else seed}")
    for key in sorted(outputs or {}):
        lines.append(f"output.{key}={outputs[key]}")
    lines.append(f"started_at={started_at.astimezone(timezone.utc).isoformat()}")
    lines.append(f"wall_time_s={wall_time_s:.3f}")
    return "\n".join(lines) + "\n"


def write_manifest(path: PathLike, **kwargs: Any) -> Path:
    return atomic_write_text(path, render_manifest(**kwargs))
