"""Masking schedules for iterative decoding."""

import math
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class MaskSchedule:
    """ratio(tau) = fraction of positions still masked at progress tau in [0, 1].

    Must satisfy ratio(0) = 1, ratio(1) = 0, and be monotone non-increasing.
    """

    iterations: int
    ratio: Callable[[float], float]

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if abs(self.ratio(0.0) - 1.0) > 1e-9 or abs(self.ratio(1.0)) > 1e-9:
            raise ValueError("schedule must satisfy ratio(0) = 1 and ratio(1) = 0")
        last = 1.0
        for i in range(1, 101):
            r = self.ratio(i / 100)
            if r > last + 1e-9:
                raise ValueError("schedule ratio must be non-increasing")
            last = r

    def masked_count(self, step: int, length: int) -> int:
        """Positions that remain masked after `step` of `iterations` passes."""
        if not 0 <= step <= self.iterations:
            raise ValueError(f"step {step} outside [0, {self.iterations}]")
        # epsilon guards against float noise in ratio() at the endpoints
        return max(0, math.ceil(self.ratio(step / self.iterations) * length - 1e-9))


def cosine_schedule(iterations: int) -> MaskSchedule:
    return MaskSchedule(iterations, lambda tau: math.cos(math.pi * tau / 2))


def linear_schedule(iterations: int) -> MaskSchedule:
    return MaskSchedule(iterations, lambda tau: 1.0 - tau)
