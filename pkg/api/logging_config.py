import logging
import os
import sys

from .settings import Settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_HANDLER_TAG = "_twostep_handler"


def configure_logging(settings: Settings, verbose: bool = False) -> str:
    """Send twostep and api logs to the log file, and to stderr when verbose.

    Calling it again replaces the handlers installed earlier. Returns the log file path.
    """
    os.makedirs(settings.log_dir, exist_ok=True)
    log_file = os.path.join(settings.log_dir, settings.log_file)
    formatter = logging.Formatter(LOG_FORMAT)

    handlers = [logging.FileHandler(log_file, mode='a')]
    if verbose:
        handlers.append(logging.StreamHandler(sys.stderr))

    for name in ("twostep", "api"):
        logger = logging.getLogger(name)
        for handler in [h for h in logger.handlers if getattr(h, _HANDLER_TAG, False)]:
            logger.removeHandler(handler)
            handler.close()
        for handler in handlers:
            handler.setFormatter(formatter)
            setattr(handler, _HANDLER_TAG, True)
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG if verbose else settings.log_level)

    logging.getLogger(__name__).info(f"logging to {log_file}")
    return log_file
