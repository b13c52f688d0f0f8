"""Application wide logger.

Records go to stderr (stdout carries command results) and to a rotating
file in the cache directory when that directory is writable.
"""
import os
import logging
import logging.handlers

from meshloc import settings

LOG_FILENAME = os.path.join(settings.CACHE_DIR, "meshloc.log")
LOG_MAX_BYTES = 20971520
LOG_BACKUP_COUNT = 5

FILE_FORMAT = '[%(levelname)s:%(asctime)s:%(module)s]: %(message)s'
CONSOLE_FORMAT = '%(levelname)-8s %(asctime)s [%(module)s]:%(message)s'


def get_file_handler(path=LOG_FILENAME):
    """Rotating handler for `path`, None when it can't be created."""
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(path, maxBytes=LOG_MAX_BYTES,
                                                       backupCount=LOG_BACKUP_COUNT)
    except OSError:
        return None
    handler.setFormatter(logging.Formatter(FILE_FORMAT))
    return handler


def set_verbosity(debug=False):
    """Switch between INFO and DEBUG records."""
    logger.setLevel(logging.DEBUG if debug else logging.INFO)


logger = logging.getLogger('meshloc')

console = logging.StreamHandler()
console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
logger.addHandler(console)

file_handler = get_file_handler()
if file_handler:
    logger.addHandler(file_handler)

set_verbosity(False)
