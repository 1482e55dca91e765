"""
Structured logging framework for neural_weave.

JSON-structured log lines with correlation ids per run, keyword context
fields on every call, a timing decorator for heavy numerical stages and
a tqdm progress helper that stays quiet under structured logging.
"""

import json
import logging
import sys
import time
import uuid
from contextvars import ContextVar
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from tqdm import tqdm


# Context variables for run tracking
correlation_id: ContextVar[Optional[str]] = ContextVar('correlation_id', default=None)
run_context: ContextVar[Dict[str, Any]] = ContextVar('run_context', default={})

_RESERVED_ATTRS = frozenset({
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename',
    'module', 'exc_info', 'exc_text', 'stack_info', 'lineno', 'funcName',
    'created', 'msecs', 'relativeCreated', 'thread', 'threadName',
    'processName', 'process', 'message', 'extra_fields', 'taskName',
})


class StructuredFormatter(logging.Formatter):
    """
    JSON structured logging formatter.

    One JSON object per line: level, logger, message, source location,
    the active correlation id and run context, exception details and any
    keyword fields passed through ContextLogger.
    """

    def __init__(self, include_extra_fields: bool = True):
        super().__init__()
        self.include_extra_fields = include_extra_fields

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
            'process': record.process,
        }

        corr_id = correlation_id.get()
        if corr_id:
            entry['correlation_id'] = corr_id

        context = run_context.get()
        if context:
            entry['context'] = context

        if record.exc_info and record.exc_info[0] is not None:
            exc_type, exc_value, _ = record.exc_info
            entry['exception'] = {
                'type': exc_type.__name__,
                'message': str(exc_value) if exc_value else None,
                'traceback': self.formatException(record.exc_info),
            }

        if self.include_extra_fields and hasattr(record, 'extra_fields'):
            entry.update(record.extra_fields)

        extra_attrs = {k: v for k, v in record.__dict__.items() if k not in _RESERVED_ATTRS}
        if extra_attrs:
            entry['extra'] = extra_attrs

        return json.dumps(entry, default=self._json_serializer)

    def _json_serializer(self, obj: Any) -> Any:
        if isinstance(obj, datetime):
            return obj.isoformat()
        if hasattr(obj, 'tolist'):
            return obj.tolist()
        if hasattr(obj, 'value'):
            return obj.value
        return str(obj)


class SimpleFormatter(logging.Formatter):
    """Human-readable formatter that appends keyword fields as key=value."""

    def __init__(self):
        super().__init__('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        fields = getattr(record, 'extra_fields', None)
        if fields:
            text += " | " + " ".join(f"{k}={v}" for k, v in fields.items())
        return text


class ContextLogger:
    """
    Logger wrapper that accepts keyword context fields.

    ``logger.info("epoch done", epoch=3, loss=0.12)`` attaches ``epoch`` and
    ``loss`` as structured fields on the record.
    """

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def debug(self, message: str, **kwargs):
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs):
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs):
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, exc_info: bool = False, **kwargs):
        self._log(logging.ERROR, message, exc_info=exc_info, **kwargs)

    def critical(self, message: str, **kwargs):
        self._log(logging.CRITICAL, message, **kwargs)

    def isEnabledFor(self, level: int) -> bool:
        return self.logger.isEnabledFor(level)

    def _log(self, level: int, message: str, exc_info: bool = False, **kwargs):
        if not self.logger.isEnabledFor(level):
            return
        record = self.logger.makeRecord(
            self.logger.name, level, '', 0, message, (),
            sys.exc_info() if exc_info else None,
        )
        if kwargs:
            record.extra_fields = kwargs
        self.logger.handle(record)


class LoggerManager:
    """
    Manages logger configuration and provides factory methods.

    Centralizes handler setup so the CLI, the trainer and worker processes
    log with the same format.
    """

    _configured = False
    _structured = False
    _loggers: Dict[str, ContextLogger] = {}

    @classmethod
    def configure_logging(
        cls,
        log_level: str = "INFO",
        log_file: Optional[str] = None,
        enable_console: bool = True,
        structured_format: bool = True,
    ) -> None:
        """
        Configure application-wide logging.

        Args:
            log_level: Minimum log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            log_file: Optional file path for log output
            enable_console: Whether to log to stderr
            structured_format: Whether to use structured JSON format
        """
        if cls._configured:
            return

        level = getattr(logging, log_level.upper())
        root_logger = logging.getLogger()
        root_logger.setLevel(level)
        root_logger.handlers.clear()

        formatter: logging.Formatter = StructuredFormatter() if structured_format else SimpleFormatter()

        if enable_console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(level)
            console_handler.setFormatter(formatter)
            root_logger.addHandler(console_handler)

        if log_file:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_path)
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)

        cls._structured = structured_format
        cls._configured = True

    @classmethod
    def get_logger(cls, name: str) -> ContextLogger:
        if name not in cls._loggers:
            cls._loggers[name] = ContextLogger(logging.getLogger(name))
        return cls._loggers[name]

    @classmethod
    def is_structured(cls) -> bool:
        return cls._structured

    @classmethod
    def reset(cls):
        """Reset logger configuration (useful for testing)."""
        cls._configured = False
        cls._structured = False
        cls._loggers.clear()


class CorrelationContext:
    """
    Context manager for a correlation id and run context.

    The CLI opens one per command, the trainer one per run, so every line
    emitted inside carries the same id.
    """

    def __init__(self, correlation_id_value: Optional[str] = None, **context_data):
        self.correlation_id_value = correlation_id_value or uuid.uuid4().hex[:12]
        self.context_data = context_data
        self._tokens = None

    def __enter__(self) -> str:
        self._tokens = (
            correlation_id.set(self.correlation_id_value),
            run_context.set({**run_context.get(), **self.context_data}),
        )
        return self.correlation_id_value

    def __exit__(self, exc_type, exc_val, exc_tb):
        corr_token, ctx_token = self._tokens
        run_context.reset(ctx_token)
        correlation_id.reset(corr_token)


def log_performance(operation_name: str):
    """
    Decorator logging the wall time of an operation.

    Args:
        operation_name: Name of the operation being measured
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = LoggerManager.get_logger(func.__module__)
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    f"Performance: {operation_name} failed",
                    duration_seconds=time.perf_counter() - start_time,
                    operation=operation_name,
                    error=str(e),
                )
                raise
            logger.debug(
                f"Performance: {operation_name} completed",
                duration_seconds=time.perf_counter() - start_time,
                operation=operation_name,
            )
            return result

        return wrapper
    return decorator


def progress(iterable: Iterable, total: Optional[int] = None, desc: str = "", enabled: bool = True) -> Iterable:
    """Wrap an iterable in a tqdm bar unless logging is structured or stderr is not a TTY."""
    disable = (not enabled) or LoggerManager.is_structured() or not sys.stderr.isatty()
    return tqdm(iterable, total=total, desc=desc, disable=disable, leave=False)


# Convenience functions
def get_logger(name: str) -> ContextLogger:
    """Get a context-aware logger."""
    return LoggerManager.get_logger(name)


def configure_logging(**kwargs):
    """Configure application logging."""
    LoggerManager.configure_logging(**kwargs)
