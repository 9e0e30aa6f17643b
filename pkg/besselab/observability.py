# besselab/observability.py
# Cross-cutting concerns: JSON logging for the `besselab` logger tree and stage timing.

import logging
import sys
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from besselab import config

try:
    from pythonjsonlogger import jsonlogger
except Exception:  # pragma: no cover
    jsonlogger = None  # fallback to plain logs if missing

LOGGER_NAME = "besselab"

_LOGGING_INIT = False


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever sys.stderr is at emit time (test runners swap it)."""

    @property
    def stream(self):  # type: ignore[override]
        return sys.stderr

    @stream.setter
    def stream(self, _value) -> None:
        pass


def _json_formatter() -> logging.Formatter:
    if jsonlogger is None:
        return logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s")
    return jsonlogger.JsonFormatter(
        "%(asctime)s %(levelname)s %(name)s %(message)s "
        "%(event)s %(stage)s %(latency_ms)s %(subcommand)s"
    )


def init_logging(level: Optional[str] = None) -> logging.Logger:
    """Attach one stderr JSON handler to the package logger (idempotent)."""
    global _LOGGING_INIT
    logger = logging.getLogger(LOGGER_NAME)
    if _LOGGING_INIT:
        if level:
            logger.setLevel(level.upper())
        return logger
    handler = _StderrHandler()
    handler.setFormatter(_json_formatter())
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel((level or config.log_level()).upper())
    logger.propagate = False
    _LOGGING_INIT = True
    return logger


@contextmanager
def stage(name: str, logger: Optional[logging.Logger] = None, **fields: Any) -> Iterator[Dict[str, Any]]:
    """
    Time a pipeline stage and log `<name>.done` with `latency_ms`.

    The yielded dict is merged into the final record, so callers can attach
    results (`rec["sup"] = ...`) while the stage runs.
    """
    log = logger or logging.getLogger(LOGGER_NAME)
    record: Dict[str, Any] = dict(fields)
    start = time.monotonic()
    yield record
    record["latency_ms"] = int((time.monotonic() - start) * 1000)
    record["stage"] = name
    record["event"] = f"{name}.done"
    log.info(f"{name}.done", extra=record)
