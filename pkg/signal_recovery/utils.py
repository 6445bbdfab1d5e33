import hashlib
import json
import logging
import time
from functools import wraps
from typing import Any

logger = logging.getLogger(__name__)


def log_execution_time(subject="Total"):
    """Decorator to log the execution time of a function."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed_time = time.perf_counter() - start_time
                minutes, seconds = divmod(elapsed_time, 60)
                if minutes >= 1:
                    logger.info(f"{subject} execution time: {int(minutes)}m {seconds:.1f}s")
                else:
                    logger.info(f"{subject} execution time: {seconds:.2f}s")
        return wrapper
    return decorator


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def stable_hash(data: Any) -> str:
    """SHA-256 of the canonical JSON encoding; identical configs share a key."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()
