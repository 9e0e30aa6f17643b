# besselab/config.py
# Purpose: environment-driven settings for the lab (.env aware, safe fallbacks).

import os
from typing import Dict

from dotenv import dotenv_values, load_dotenv

load_dotenv()  # load .env for local runs; real env vars win

DEFAULT_LOG_LEVEL = "INFO"


def threads() -> int:
    """Worker cap for sweeps and transforms (BESSELAB_THREADS, default: CPU count)."""
    raw = os.getenv("BESSELAB_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass  # fall through to hardware count
    return max(1, os.cpu_count() or 1)


def log_level() -> str:
    return os.getenv("BESSELAB_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper() or (
        DEFAULT_LOG_LEVEL
    )


def read_config_file(path: str) -> Dict[str, str]:
    """
    Parse a plain-text `key=value` experiment file.

    Keys are normalized to snake_case (`m-list` -> `m_list`); blank values are
    dropped so that they do not shadow defaults.
    """
    if not os.path.exists(path):
        raise ValueError(f"config file not found: {path}")
    out: Dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        if value is None or not value.strip():
            continue
        out[key.strip().replace("-", "_")] = value.strip()
    return out
