"""
Observability setup for the NLS laboratory
Structured JSON logging and timed spans around solver and evolution runs
"""

import logging
import os
import time
from contextlib import contextmanager
from typing import Any, Dict, Optional

import structlog

_configured = False


def configure_logging(level: Optional[str] = None):
    """Configure structured logging with JSON output"""
    global _configured

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    logging.basicConfig(
        format="%(message)s",
        level=(level or os.getenv("LOG_LEVEL", "INFO")).upper(),
        handlers=[logging.StreamHandler()],
    )
    _configured = True


class LabLogger:
    """Structured logger for laboratory runs"""

    def __init__(self, service_name: str = "nls-lab"):
        self.service_name = service_name
        self.logger = structlog.get_logger(service=service_name)

    def log_solver_progress(self, solver: str, iteration: int, **fields):
        self.logger.debug(
            "solver_progress", solver=solver, iteration=iteration, **fields
        )

    def log_solver_converged(
        self, solver: str, iterations: int, residual: float, **fields
    ):
        self.logger.info(
            "solver_converged",
            solver=solver,
            iterations=iterations,
            residual=residual,
            **fields,
        )

    def log_run_completed(self, command: str, exit_code: int, **fields):
        self.logger.info(
            "run_completed", command=command, exit_code=exit_code, **fields
        )

    def log_blowup(self, t_star: float, reason: str, **fields):
        """Blow-up detection is an expected experiment outcome, not an error"""
        self.logger.warning(
            "blowup_detected",
            t_star=t_star,
            reason=reason,
            alert_type="blowup",
            **fields,
        )

    def log_error(
        self,
        error: Exception,
        context: Optional[Dict[str, Any]] = None,
        **kwargs,
    ):
        """Log errors with context"""
        self.logger.error(
            "nls_lab_error",
            error_type=type(error).__name__,
            error_message=str(error),
            context=context or {},
            **kwargs,
        )

    def log_slow_run(self, duration: float, threshold: float, name: str, **kwargs):
        if duration > threshold:
            self.logger.warning(
                "slow_run_detected",
                name=name,
                duration=duration,
                threshold=threshold,
                alert_type="slow_run",
                **kwargs,
            )


@contextmanager
def timed_span(name: str, **fields):
    """Log start/finish of an operation with its wall time"""
    logger = structlog.get_logger("nls_lab.span")
    logger.info(f"{name}_started", **fields)
    start_time = time.perf_counter()
    success = False
    try:
        yield
        success = True
    finally:
        logger.info(
            f"{name}_finished",
            duration=time.perf_counter() - start_time,
            success=success,
            **fields,
        )


lab_logger = None


def get_logger() -> LabLogger:
    """Get or create the laboratory logger"""
    global lab_logger
    if lab_logger is None:
        if not _configured:
            configure_logging()
        lab_logger = LabLogger()
    return lab_logger
