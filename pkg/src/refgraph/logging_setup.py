"""
Logging configuration.

Interactive runs get rich's console handler; batch runs get one
``key=value`` line per record so logs can be grepped and parsed.
"""

import logging
import time

from rich.console import Console
from rich.logging import RichHandler


class KeyValueFormatter(logging.Formatter):
    """Format records as ``ts=... level=... logger=... msg="..."`` lines."""

    def format(self, record: logging.LogRecord) -> str:
        ts = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created))
        message = record.getMessage().replace("\\", "\\\\").replace('"', '\\"')
        message = message.replace("\n", "\\n")
        line = f'ts={ts}Z level={record.levelname.lower()} logger={record.name} msg="{message}"'
        if record.exc_info:
            exc = self.formatException(record.exc_info).replace("\n", "\\n")
            line += f' exc="{exc}"'
        return line


def setup_logging(level: str | int = "INFO", structured: bool = False) -> None:
    """
    Install a single handler on the root logger.

    Args:
        level: Logging level name or number
        structured: Emit key=value lines instead of rich console output
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler: logging.Handler
    if structured:
        handler = logging.StreamHandler()
        handler.setFormatter(KeyValueFormatter())
    else:
        handler = RichHandler(console=Console(stderr=True), show_path=False)
        handler.setFormatter(logging.Formatter("%(message)s"))

    root.addHandler(handler)
    root.setLevel(level if isinstance(level, int) else level.upper())
