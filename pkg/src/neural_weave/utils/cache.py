"""
In-process LRU cache with hit/miss statistics.

Geometry maps are expensive to synthesize and are requested repeatedly
by the dataset builder, the trainer and the editor for the same
material parameters; this cache keeps the most recent ones.
"""

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Dict, Generic, Hashable, Optional, TypeVar

from .logging import get_logger

logger = get_logger(__name__)

T = TypeVar('T')


@dataclass
class CacheStats:
    """Counters for a cache instance."""
    hits: int = 0
    misses: int = 0
    evictions: int = 0

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return (self.hits / total * 100.0) if total else 0.0


class LRUCache(Generic[T]):
    """
    Thread-safe least-recently-used cache.

    Features:
    - get_or_create with a factory callable
    - bounded size with LRU eviction
    - hit/miss/eviction statistics
    """

    def __init__(self, max_size: int = 16):
        if max_size <= 0:
            raise ValueError("Cache size must be positive")
        self._entries: "OrderedDict[Hashable, T]" = OrderedDict()
        self._lock = threading.RLock()
        self._max_size = max_size
        self._stats = CacheStats()

    def get(self, key: Hashable) -> Optional[T]:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self._stats.hits += 1
                return self._entries[key]
            self._stats.misses += 1
            return None

    def set(self, key: Hashable, value: T) -> None:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
            elif len(self._entries) >= self._max_size:
                evicted, _ = self._entries.popitem(last=False)
                self._stats.evictions += 1
                logger.debug("Evicted LRU cache entry", key=str(evicted))
            self._entries[key] = value

    def get_or_create(self, key: Hashable, factory: Callable[[], T]) -> T:
        """Return the cached value for ``key`` or build, store and return it."""
        with self._lock:
            value = self.get(key)
            if value is None:
                value = factory()
                self.set(key, value)
            return value

    def delete(self, key: Hashable) -> bool:
        with self._lock:
            return self._entries.pop(key, None) is not None

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def __contains__(self, key: Hashable) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            return {
                'size': len(self._entries),
                'max_size': self._max_size,
                'hits': self._stats.hits,
                'misses': self._stats.misses,
                'hit_rate': round(self._stats.hit_rate, 2),
                'evictions': self._stats.evictions,
            }

