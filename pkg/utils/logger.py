import logging

import colorlog


FORMAT = "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """Install a single coloured console handler on the root logger."""
    root = logging.getLogger()
    root.setLevel(level.upper())
    if any(getattr(handler, "_gamebridge", False) for handler in root.handlers):
        return
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(
        FORMAT,
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "bold_red",
        },
    ))
    handler._gamebridge = True
    root.addHandler(handler)
