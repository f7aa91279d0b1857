# Logging setup: a run-level EXP level for milestones and a per-run log file.
import logging

EXP = 22
logging.addLevelName(EXP, "EXP")

logger = logging.getLogger("dce")


def exp(msg, *args):
    logger.log(EXP, msg, *args)


def LogFile(path, level=logging.INFO, filemode="w"):
    """Attach a file handler for ``path`` to the package loggers and return it."""
    handler = logging.FileHandler(path, mode=filemode)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(asctime)s\t%(levelname)s\t%(name)s\t%(message)s"))
    for name in ("dce", "src"):
        logging.getLogger(name).addHandler(handler)
    return handler


def setup_console(level="INFO"):
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    root.setLevel(level)


def close(handler):
    for name in ("dce", "src"):
        logging.getLogger(name).removeHandler(handler)
    handler.close()
