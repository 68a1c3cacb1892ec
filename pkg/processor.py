import os
import logging
import traceback
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


@dataclass
class RowResult:
    index: int
    item: object
    value: object = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def default_workers():
    """Worker count from GAUSSCAP_THREADS, falling back to the CPU count"""
    raw = os.getenv("GAUSSCAP_THREADS")
    if raw:
        try:
            return max(int(raw), 1)
        except ValueError:
            logger.warning(f"Ignoring invalid GAUSSCAP_THREADS={raw!r}")
    return os.cpu_count() or 1


class RowProcessor:
    """Evaluates one function over many rows; a failing row is recorded and skipped"""

    def __init__(self, max_workers=None, label="rows"):
        self.max_workers = max_workers or default_workers()
        self.label = label
        self.success_count = 0
        self.error_count = 0

    def _process_row(self, index, item, fn):
        """Process a single row"""
        try:
            return RowResult(index, item, value=fn(item))
        except Exception as e:
            logger.error(f"Error processing {self.label} row {index} ({item}): {str(e)}")
            logger.debug(f"Error details: {traceback.format_exc()}")
            return RowResult(index, item, error=f"{type(e).__name__}: {str(e)}")

    def process(self, items, fn):
        """Evaluate fn on every item; results come back in input order"""
        items = list(items)
        logger.info(f"Processing {len(items)} {self.label} on {self.max_workers} threads")
        if self.max_workers == 1:
            results = [self._process_row(i, item, fn) for i, item in enumerate(items)]
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                results = list(executor.map(lambda pair: self._process_row(pair[0], pair[1], fn), enumerate(items)))

        self.success_count = sum(1 for r in results if r.ok)
        self.error_count = len(results) - self.success_count
        if self.error_count:
            logger.warning(
                f"Completed {self.label}: {self.success_count} succeeded, {self.error_count} with errors"
            )
        else:
            logger.info(f"Completed {self.label}: {self.success_count} succeeded")
        return results
