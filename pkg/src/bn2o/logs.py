import logging
import sys
from typing import Optional

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"


def setup_logging(level: Optional[str] = None, stream=None) -> None:
    """
    Configure the ``bn2o`` logger.

    Status lines go to stderr so that stdout stays clean for JSON output.
    Calling this again replaces the handler rather than adding a second one.
    """
    from .config import get_settings

    level_name = (level or get_settings().log_level).upper()
    logger = logging.getLogger("bn2o")
    logger.setLevel(getattr(logging, level_name, logging.INFO))
    target = stream or sys.stderr

    for old in [h for h in logger.handlers if getattr(h, "_bn2o", False)]:
        logger.removeHandler(old)

    handler = logging.StreamHandler(target)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    handler._bn2o = True
    logger.addHandler(handler)
    logger.propagate = False
