"""
Logging Setup
Configures loguru sinks for console, rotating files and training progress
"""

import os
import sys
from typing import Optional

from loguru import logger

from .settings import Settings, get_settings

PROGRESS_CHANNEL = "progress"


def _is_progress(record) -> bool:
    return record["extra"].get("channel") == PROGRESS_CHANNEL


def configure_logging(settings: Optional[Settings] = None, file_sink: bool = True) -> None:
    """
    Replace the default loguru sink with the package sinks

    Args:
        settings: Runtime settings (defaults to the cached instance)
        file_sink: Also write a rotating log file under settings.log_dir
    """
    settings = settings or get_settings()
    logger.remove()
    logger.add(
        sys.stderr,
        level=settings.log_level.upper(),
        filter=lambda record: not _is_progress(record),
    )
    if file_sink:
        os.makedirs(settings.log_dir, exist_ok=True)
        logger.add(
            os.path.join(settings.log_dir, "phsysid.log"),
            rotation="1 day",
            retention="7 days",
            level="DEBUG",
            filter=lambda record: not _is_progress(record),
        )


def add_progress_sink(path: str) -> int:
    """
    Write per-epoch training progress as line-delimited JSON

    Args:
        path: Output file

    Returns:
        Sink id, to be passed to logger.remove when the run ends
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return logger.add(path, serialize=True, filter=_is_progress, level="INFO")


progress_logger = logger.bind(channel=PROGRESS_CHANNEL)
