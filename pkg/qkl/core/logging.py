from loguru import logger
import sys

from .config import get_settings


def configure_logging(level: str | None = None) -> None:
    """(Re)install the single stderr sink; CLI calls this after parsing flags."""
    settings = get_settings()
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        serialize=settings.LOG_JSON,
        backtrace=False,
        diagnose=False,
    )


configure_logging()

__all__ = ["logger", "configure_logging"]
