import os
import sys

from loguru import logger

from vlcsim.utils import paths


def setup_logging(level: str = "INFO", log_to_file: bool = True) -> None:
    """Configure the loguru sinks for one CLI invocation.

    The stderr sink follows `level`; the file sink always records TRACE
    so a failed run can be inspected after the fact.
    """
    # remove any existing log handlers
    logger.remove()

    # Add to sys.stderr with our own configuration
    logger.add(sys.stderr, level=level)

    # Add to a file-log
    if log_to_file:
        log_dir = paths.ensure_dir(paths.get_logging_dir_path())
        logger.add(
            os.path.join(log_dir, "vlcsim_{time}.log"),
            retention=50,  # Max. 50 logs
            level="TRACE",
        )
