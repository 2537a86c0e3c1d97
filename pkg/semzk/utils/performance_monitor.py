"""
Timing of numerical operations.
"""

import logging
import threading
import time
from functools import wraps
from typing import Any, Dict, List, Optional

from semzk.utils.config import get_settings

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """Record execution times of decorated operations."""

    def __init__(self, max_entries: int = 1000):
        self.metrics: Dict[str, List[Dict[str, Any]]] = {}
        self.max_entries = max_entries
        self._lock = threading.Lock()

    def measure_time(self, func_name: Optional[str] = None):
        """Decorator to measure function execution time."""
        def decorator(func):
            name = func_name or func.__name__

            @wraps(func)
            def wrapper(*args, **kwargs):
                start_time = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    self._record_metric(name, {
                        'execution_time': time.perf_counter() - start_time,
                        'status': 'error',
                        'error': str(e),
                    })
                    raise

                execution_time = time.perf_counter() - start_time
                if execution_time > get_settings().slow_operation_seconds:
                    logger.warning(f"Slow operation: {name} took {execution_time:.2f}s")

                self._record_metric(name, {
                    'execution_time': execution_time,
                    'status': 'success',
                })
                return result
            return wrapper
        return decorator

    def _record_metric(self, name: str, data: Dict[str, Any]):
        """Record performance metric."""
        with self._lock:
            entries = self.metrics.setdefault(name, [])
            entries.append(data)
            # Keep only the most recent entries per metric
            if len(entries) > self.max_entries:
                del entries[:-self.max_entries]

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Per-operation call count, total and max time in seconds."""
        with self._lock:
            result = {}
            for name, entries in self.metrics.items():
                times = [e['execution_time'] for e in entries]
                result[name] = {
                    'calls': len(entries),
                    'errors': sum(1 for e in entries if e['status'] == 'error'),
                    'total_seconds': sum(times),
                    'max_seconds': max(times),
                }
            return result

    def reset(self):
        with self._lock:
            self.metrics.clear()


performance_monitor = PerformanceMonitor()
