"""Logging configuration for spmvtune."""

import logging
import logging.handlers
import os
import sys
import time
from functools import wraps
from typing import Optional, Union

import numpy as np

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LOG_FILE_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 5

# thread-count variables that change kernel timings
THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

logger = logging.getLogger(__name__)


def _file_handler(log_file: str, formatter: logging.Formatter) -> Optional[logging.Handler]:
    """Rotating DEBUG handler, or None when the file cannot be opened."""
    try:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(
            log_file, maxBytes=LOG_FILE_BYTES, backupCount=LOG_FILE_BACKUPS, encoding='utf-8')
    except OSError as e:
        logger.error("Could not initialize file logging: %s", e)
        return None
    handler.setFormatter(formatter)
    handler.setLevel(logging.DEBUG)
    return handler


def setup_logging(log_level: Union[int, str] = logging.INFO,
                  log_file: str = None,
                  verbose: bool = False) -> logging.Logger:
    """Configure the root logger for a spmvtune command.

    Console records go to stderr so stdout only carries command results.
    ``verbose`` lowers the console to DEBUG; a ``log_file`` always gets DEBUG.

    Returns:
        The root logger
    """
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())
    console_level = logging.DEBUG if verbose else log_level
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(console_level)

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    console.setLevel(console_level)
    root.addHandler(console)

    if log_file:
        handler = _file_handler(log_file, formatter)
        if handler is None:
            logger.info("Using console logging only")
        else:
            root.setLevel(logging.DEBUG)
            root.addHandler(handler)
            logger.info("Logging to %s at %s", log_file, logging.getLevelName(log_level))
    return root


class MatrixLogAdapter(logging.LoggerAdapter):
    """Appends ``| key=value`` pairs for the matrix being swept."""

    def process(self, msg, kwargs):
        if self.extra:
            tags = " | ".join(f"{k}={v}" for k, v in self.extra.items())
            msg = f"{msg} | {tags}"
        return msg, kwargs


def get_logger(name: str, **context) -> MatrixLogAdapter:
    """Logger for ``name`` whose messages end in the given context."""
    return MatrixLogAdapter(logging.getLogger(name), context)


def log_system_info():
    """Log the host details a sweep's timings depend on."""
    import platform

    logger.info("=== System Information ===")
    logger.info("Platform: %s (%s)", platform.platform(), platform.processor() or "unknown")
    logger.info("Python %s, NumPy %s", platform.python_version(), np.__version__)
    threads = {var: os.environ[var] for var in THREAD_ENV_VARS if var in os.environ}
    if threads:
        logger.info("Thread settings: %s", threads)

    try:
        import psutil
    except ImportError:
        logger.info("CPU cores: %s (psutil not installed)", os.cpu_count())
    else:
        logger.info("CPU cores: %d physical, %d logical",
                    psutil.cpu_count(logical=False) or 0, psutil.cpu_count())
        logger.info("Memory: %.1f GB", psutil.virtual_memory().total / (1024**3))
    logger.info("=== End System Information ===")


def log_performance_metrics(func):
    """Decorator to log function wall time."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        log = logging.getLogger(func.__module__)
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            log.error("Function %s failed after %.3fs: %s", func.__name__,
                      time.perf_counter() - start, e)
            raise
        log.debug("Function %s completed in %.3fs", func.__name__, time.perf_counter() - start)
        return result

    return wrapper
