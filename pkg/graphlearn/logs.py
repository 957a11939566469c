"""
Logging setup shared by the library and the command line.

Level comes from the SRGG_LOG environment variable (loaded through .env).
"""
import logging
import os

from dotenv import load_dotenv

load_dotenv()

_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
_configured = False


def configure(level: str = None) -> None:
    """
    Attach one stream handler to the package logger.

    Args:
        level: Log level name; falls back to SRGG_LOG, then INFO
    """
    global _configured
    level = (level or os.getenv("SRGG_LOG", "INFO")).upper()
    root = logging.getLogger("graphlearn")
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
        _configured = True
    root.setLevel(getattr(logging, level, logging.INFO))


def get_logger(name: str) -> logging.Logger:
    if not name.startswith("graphlearn"):
        name = f"graphlearn.{name}"
    return logging.getLogger(name)
