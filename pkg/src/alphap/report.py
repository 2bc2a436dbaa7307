"""Bound reports shared by the verifier modules."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field


@dataclass
class BoundReport:
    value: float
    rhs: float
    params: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def __post_init__(self):
        if not self.rhs > 0:
            raise ValueError(f"bound right-hand side must be positive, got {self.rhs}")
        if self.value < 0 or math.isnan(self.value):
            raise ValueError(f"report value must be non-negative, got {self.value}")

    @property
    def ratio(self) -> float:
        return self.value / self.rhs

    def to_dict(self, timing: bool = False) -> dict:
        out = {"value": self.value, "rhs": self.rhs, "ratio": self.ratio, "params": self.params}
        if timing:
            out["elapsed"] = self.elapsed
        return out


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
