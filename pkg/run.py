"""
Tactile contour workbench launcher.

Configures structured logging from the environment settings, then hands the
command line to :func:`app.main.main`.
"""

import sys

import structlog

from app.core.config import settings
from app.core.logging_config import configure_logging
from app.main import main

logger = structlog.get_logger()


if __name__ == "__main__":
    configure_logging(settings.LOG_LEVEL, settings.LOG_FORMAT)
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(3)
