"""
semzk utilities package

This package contains the ambient modules shared by every service:
- config: toolkit settings and tolerances
- logger: structured logging and operation timing
- error_handlers: exception hierarchy and exit-code mapping
- performance_monitor: execution-time records
"""

from .config import (
    Settings,
    configure,
    get_settings,
    reset_settings,
)

from .error_handlers import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    AdmissibilityError,
    ConservationDriftError,
    DomainError,
    ErrorContext,
    InsufficientDataError,
    NonCompactSupportError,
    NonFiniteError,
    NumericalError,
    OverflowGuardError,
    SemzkError,
    SnapshotFormatError,
    SupportViolationError,
    ValidationError,
    create_error_report,
    format_reason,
)

from .logger import (
    JSONFormatter,
    LogPerformance,
    PerformanceLogger,
    setup_logging,
)

from .performance_monitor import (
    PerformanceMonitor,
    performance_monitor,
)

__all__ = [
    # Config
    'Settings',
    'configure',
    'get_settings',
    'reset_settings',

    # Errors
    'EXIT_OK',
    'EXIT_VALIDATION',
    'EXIT_NUMERICAL',
    'SemzkError',
    'ValidationError',
    'AdmissibilityError',
    'SupportViolationError',
    'NonCompactSupportError',
    'DomainError',
    'InsufficientDataError',
    'SnapshotFormatError',
    'NumericalError',
    'NonFiniteError',
    'OverflowGuardError',
    'ConservationDriftError',
    'ErrorContext',
    'create_error_report',
    'format_reason',

    # Logging
    'JSONFormatter',
    'LogPerformance',
    'PerformanceLogger',
    'setup_logging',

    # Timing
    'PerformanceMonitor',
    'performance_monitor',
]
