"""Round-robin arbitration over the channel engines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ArbiterState:
    num_channels: int
    pointer: int = 0
    grant_log: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.num_channels < 1:
            raise ValueError("num_channels must be at least 1")
        if not 0 <= self.pointer < self.num_channels:
            raise ValueError("pointer out of range")


def arbiter_grant(state: ArbiterState, requests):
    """Grant the first requesting channel at or after the pointer.

    requests is a boolean sequence, one flag per channel. The pointer
    advances to granted+1 (cyclically); an empty mask grants nothing and
    leaves the pointer alone. Returns (granted index or None, state).
    """
    n = state.num_channels
    if len(requests) != n:
        raise ValueError(f"request mask width {len(requests)} != {n} channels")
    for step in range(n):
        ch = (state.pointer + step) % n
        if requests[ch]:
            state.pointer = (ch + 1) % n
            state.grant_log.append(ch)
            return ch, state
    return None, state
