"""
Logger Manager: a themed rich console on standard error plus a `plirls` logger whose records
are fanned out by a queue listener (thread-safe for batch solves) to a RichHandler on that
console and to an optional log file.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import logging
import logging.handlers
import os
import queue
from pathlib import Path
from threading import Lock
from typing import Iterable, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from plirls.config.config import c
from .custom_themes import ct


class LoggerManager:
    """
    Logger Manager class to manage logging and console output.
    """
    _instance = None
    _lock = Lock()

    def __new__(cls, *args, **kwargs):
        with cls._lock:
            if cls._instance is None:
                cls._instance = super(LoggerManager, cls).__new__(cls)
            return cls._instance

    def __init__(self):
        self.console = Console(theme=ct, stderr=True)  # Uses custom themes Class
        self.log_queue = queue.Queue(-1)  # No limit on size
        self.queue_handler = logging.handlers.QueueHandler(self.log_queue)
        self.file_handler: Optional[logging.Handler] = None
        self.console_handler = RichHandler(console=self.console, rich_tracebacks=True)  # Records not already printed
        self.console_handler.addFilter(lambda record: not getattr(record, "printed", False))
        self.listener: Optional[logging.handlers.QueueListener] = None
        self.logger = self.setup()
        self.lock = Lock()
        if c.PLIRLS_LOG_DIR:
            self.attach_log_dir(c.PLIRLS_LOG_DIR)

    def setup(self):
        """Set up the `plirls` logger; records go through the queue to the listener's handlers."""
        logger = logging.getLogger("plirls")
        logger.setLevel(logging.DEBUG)
        if self.queue_handler not in logger.handlers:
            logger.addHandler(self.queue_handler)
        logger.propagate = False
        self._restart_listener()
        return logger

    def _restart_listener(self):
        if self.listener is not None:
            self.listener.stop()
        self.console_handler.setLevel(self.console_level)
        handlers = [self.console_handler] + ([self.file_handler] if self.file_handler is not None else [])
        self.listener = logging.handlers.QueueListener(self.log_queue, *handlers, respect_handler_level=True)
        self.listener.start()

    def attach_log_dir(self, log_dir):
        """Write DEBUG and above to <log_dir>/plirls.log."""
        log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        log_directory = Path(log_dir)
        os.makedirs(log_directory, exist_ok=True)
        file_handler = logging.FileHandler(log_directory / "plirls.log", encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(log_format))
        with self._lock:
            if self.file_handler is not None:
                self.file_handler.close()
            self.file_handler = file_handler
            self._restart_listener()

    def flush(self):
        """Drain queued records to the handlers (the listener is restarted)."""
        with self._lock:
            self._restart_listener()

    @property
    def console_level(self) -> int:
        level = logging.getLevelName(str(c.PLIRLS_LOG_LEVEL).upper())
        return level if isinstance(level, int) else logging.INFO

    def tsp(self, *args, **kwargs):
        """Thread safe print."""
        with self.lock:
            self.console.print(*args, **kwargs)

    def lnp(self, message, style="info", level="info", **kwargs):
        """ Log n' print the message
        Log the message at the given level and print it to the console with the given style."""
        level_method = getattr(self.logger, level.lower(), self.logger.info)
        numeric = logging.getLevelName(level.upper())
        printed = not isinstance(numeric, int) or numeric >= self.console_level
        level_method(message, extra={"printed": printed})  # Console handler skips printed records
        if printed:
            self.tsp(message, style=style, **kwargs)

    def print_2_column_rich_table(self, data, title: str = "Table Name"):
        """
        Display data in a rich table format.
        """
        table = Table(title=title)
        table.add_column("Variable", justify="left", style="bright_white", width=30)
        table.add_column("Value", style="bright_white", width=60)

        for var_name, var_value in data:
            table.add_row(var_name, str(var_value) if var_value not in [None, ""] else "Not Set")
        self.tsp(table)

    def print_config_table(self, config_instance: object):
        config_data = [(name, value) for name, value in config_instance.env_vars.items()]
        self.print_2_column_rich_table(data=config_data, title="Settings & Environment")

    def display_list_as_rich_table(self, data_list, title, headers: Optional[Iterable[str]] = None):
        """Display a list of dictionaries in a rich table format."""
        if not data_list or not all(isinstance(item, dict) for item in data_list):
            self.tsp("Invalid data provided for the table.")
            return

        headers = list(headers or data_list[0].keys())
        table = Table(title=title)
        for header in headers:
            table.add_column(header, style="bright_white")

        self._add_rows_to_table(table, data_list, headers)
        self.tsp(table)

    def print_start_panel(self, app_name=""):
        self.tsp(Panel.fit(f'[bold bright_white]{app_name}[/bold bright_white]', title='Start', style='solver'))

    def print_exit_panel(self, status: str = "done", style: str = "success"):
        self.tsp(Panel.fit(f'[{style}]{status}[/{style}]', title='Exit', border_style=style))

    def _add_rows_to_table(self, table, data_list, headers):
        """Helper method to add rows to a table."""
        for item in data_list:
            row = [str(item.get(header, '')) for header in headers]
            table.add_row(*row)


lm = LoggerManager()
