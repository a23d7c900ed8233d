"""
Fan per-sample work out to a thread pool
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from finsler.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class SampleRunner:
    """Order-preserving map over samples"""

    def __init__(self, max_workers: Optional[int] = None, progress: Optional[bool] = None):
        self.max_workers = max_workers or settings.workers
        self.progress = settings.progress if progress is None else progress

    def map(self, fn: Callable[[T], R], items: Sequence[T], desc: str = "") -> List[R]:
        """Apply fn to every item; results come back in the order of items"""
        if self.max_workers <= 1:
            iterator = map(fn, items)
            if self.progress:
                iterator = tqdm(iterator, total=len(items), desc=desc, leave=False)
            return list(iterator)

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            iterator = executor.map(fn, items)
            if self.progress:
                iterator = tqdm(iterator, total=len(items), desc=desc, leave=False)
            results = list(iterator)
        logger.debug(f"{desc or 'map'}: {len(results)} item(s) on {self.max_workers} workers")
        return results
