"""
Fixed-capacity FIFO store of detached feature rows
"""
import numpy as np

from utils.errors import DimensionError, InvalidArgumentError


class MemoryBank:
    """Ring buffer of feature rows; the oldest rows are evicted first"""

    def __init__(self, capacity=1024, dtype=np.float64):
        if capacity < 1:
            raise InvalidArgumentError(f"bank capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.dtype = dtype
        self.width = None
        self._buffer = None
        self._cursor = 0
        self._count = 0

    def __len__(self):
        return self._count

    def push(self, rows):
        rows = np.asarray(rows)
        if rows.ndim != 2:
            raise DimensionError(f"bank rows must be 2-D, got shape {rows.shape}", axis=0)
        if rows.shape[0] == 0:
            return
        if self.width is None:
            self.width = rows.shape[1]
            self._buffer = np.zeros((self.capacity, self.width), dtype=self.dtype)
        elif rows.shape[1] != self.width:
            raise DimensionError(f"bank width is {self.width}, got rows of width {rows.shape[1]}", axis=1)

        # only the newest `capacity` rows can survive
        rows = rows[-self.capacity:]
        n = rows.shape[0]
        idx = (self._cursor + np.arange(n)) % self.capacity
        self._buffer[idx] = rows  # copies, so callers' arrays stay detached
        self._cursor = int((self._cursor + n) % self.capacity)
        self._count = min(self.capacity, self._count + n)

    def rows(self):
        """Stored rows, oldest first"""
        if self._count == 0:
            return np.zeros((0, self.width or 0), dtype=self.dtype)
        if self._count < self.capacity:
            return self._buffer[:self._count].copy()
        return np.concatenate([self._buffer[self._cursor:], self._buffer[:self._cursor]])

    def clear(self):
        self._cursor = 0
        self._count = 0
