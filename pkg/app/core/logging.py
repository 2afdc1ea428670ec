"""
Logging configuration for SPCA-SI Monitor.
"""

import logging
import sys
from typing import Any, Optional

import structlog
from structlog.typing import EventDict

from app.core.config import settings


def add_service_info(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """Add service information to log events."""
    event_dict["service"] = "spca-si-monitor"
    event_dict["version"] = settings.VERSION
    event_dict["environment"] = settings.ENVIRONMENT
    return event_dict


def setup_logging(level: Optional[str] = None, environment: Optional[str] = None) -> None:
    """Configure structured logging for the toolkit."""
    level = (level or settings.LOG_LEVEL).upper()
    environment = environment or settings.ENVIRONMENT

    shared_processors = [
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="ISO"),
        add_service_info,
        structlog.processors.format_exc_info,
        structlog.processors.StackInfoRenderer(),
    ]

    if environment == "development":
        # Pretty console output for development
        shared_processors.append(structlog.dev.ConsoleRenderer(colors=False))
    else:
        # JSON output for batch runs
        shared_processors.extend([
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer(),
        ])

    structlog.configure(
        processors=shared_processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )

    # Command output goes to stdout, logs to stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level, logging.INFO),
        force=True,
    )
