"""Bounded FIFO with occupancy bookkeeping."""

from __future__ import annotations

from collections import deque


class FifoOverflowError(RuntimeError):
    """Push into a full FIFO under a no-backpressure configuration."""

    def __init__(self, unit: str, cycle: int):
        super().__init__(f"{unit} overflowed at cycle {cycle}")
        self.unit = unit
        self.cycle = cycle


class FifoModel:
    """First-in-first-out buffer of raw values with push/pop counters."""

    def __init__(self, depth: int, name: str = "fifo"):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        self.depth = depth
        self.name = name
        self.queue = deque()
        self.pushes = 0
        self.pops = 0
        self.high_water = 0

    @property
    def occupancy(self) -> int:
        return len(self.queue)

    def full(self) -> bool:
        return len(self.queue) >= self.depth

    def empty(self) -> bool:
        return not self.queue

    def push(self, value):
        if len(self.queue) >= self.depth:
            raise FifoOverflowError(self.name, -1)
        self.queue.append(value)
        self.pushes += 1
        if len(self.queue) > self.high_water:
            self.high_water = len(self.queue)

    def pop(self):
        if not self.queue:
            raise IndexError(f"{self.name} popped while empty")
        self.pops += 1
        return self.queue.popleft()
