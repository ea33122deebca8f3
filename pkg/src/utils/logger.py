"""
Logging setup for handsyn runs
stdlib handlers on stderr (stdout carries result tables) with structlog on top
"""

import os
import sys
import logging
import logging.handlers
from pathlib import Path
from typing import List, Optional
import structlog

from config.constants import LoggingConfig

_PLAIN_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_HANDLER_TAG = '_handsyn'


def colors_enabled(use_colors: bool = True) -> bool:
    """Colour output only on a TTY and only when NO_COLOR is unset"""
    if not use_colors or os.environ.get(LoggingConfig.NO_COLOR_ENV):
        return False
    return sys.stderr.isatty()


def _plain_formatter() -> logging.Formatter:
    return logging.Formatter(_PLAIN_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')


def _build_handlers(
    log_level: int,
    colored: bool,
    file_path: Optional[str],
    max_bytes: int,
    backup_count: int
) -> List[logging.Handler]:
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter('%(message)s') if colored else _plain_formatter())
    handlers: List[logging.Handler] = [console]

    if file_path:
        Path(file_path).parent.mkdir(parents=True, exist_ok=True)
        rotating = logging.handlers.RotatingFileHandler(
            file_path, maxBytes=max_bytes, backupCount=backup_count, encoding='utf-8'
        )
        rotating.setFormatter(_plain_formatter())
        handlers.append(rotating)

    for handler in handlers:
        handler.setLevel(log_level)
        setattr(handler, _HANDLER_TAG, True)
    return handlers


def setup_logger(
    name: str = __name__,
    level: str = LoggingConfig.DEFAULT_LEVEL,
    file_path: Optional[str] = None,
    max_bytes: int = LoggingConfig.MAX_FILE_SIZE_MB * 1024 * 1024,
    backup_count: int = LoggingConfig.BACKUP_COUNT,
    use_colors: bool = True
) -> structlog.BoundLogger:
    """
    Configure stdlib logging and structlog for one CLI run

    Safe to call repeatedly in one process (tests invoke the CLI many
    times); handlers installed by an earlier call are replaced.

    Args:
        name: Logger name (usually __name__)
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        file_path: Optional rotating log file
        max_bytes: Maximum bytes per log file before rotation
        backup_count: Number of backup files to keep
        use_colors: Allow coloured console output (still subject to NO_COLOR/TTY)

    Returns:
        Configured structlog BoundLogger instance
    """
    log_level = getattr(logging, level.upper(), logging.INFO)
    colored = colors_enabled(use_colors)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in list(root_logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            root_logger.removeHandler(handler)
            handler.close()
    for handler in _build_handlers(log_level, colored, file_path, max_bytes, backup_count):
        root_logger.addHandler(handler)

    shared = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
    ]
    if colored:
        renderers = [structlog.dev.ConsoleRenderer(colors=True)]
    else:
        renderers = [
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.KeyValueRenderer(key_order=['event']),
        ]

    structlog.configure(
        processors=shared + renderers,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

    return structlog.get_logger(name)


def get_logger(name: str = __name__) -> structlog.BoundLogger:
    """
    Get a structlog logger (module-level in services, configured by setup_logger)

    Args:
        name: Logger name (usually __name__)

    Returns:
        structlog BoundLogger instance
    """
    return structlog.get_logger(name)
