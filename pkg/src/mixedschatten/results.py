"""Result container shared by the solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class NormResult:
    """Certified interval ``[value_lo, value_hi]`` for a norm with an optimizer witness.

    ``value_lo`` is always attained by the witness; ``value_hi`` is a proven upper
    bound when ``certified_upper`` is true and a heuristic estimate otherwise.
    """

    value_lo: float
    value_hi: float
    optimizer: object = None
    iterations: int = 0
    method: str = ""
    converged: bool = True
    certified_upper: bool = True
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value_lo > self.value_hi:
            # rounding can flip a collapsed interval; anything larger is a bug
            if self.value_lo - self.value_hi > 1e-9 * max(1.0, abs(self.value_hi)):
                raise ValueError(f"inverted interval [{self.value_lo}, {self.value_hi}]")
            self.value_hi = self.value_lo

    @property
    def value(self) -> float:
        return 0.5 * (self.value_lo + self.value_hi)

    @property
    def rel_width(self) -> float:
        if self.value_hi == 0:
            return 0.0
        return (self.value_hi - self.value_lo) / self.value_hi

    def scaled(self, s: float) -> "NormResult":
        return NormResult(
            s * self.value_lo,
            s * self.value_hi,
            self.optimizer,
            self.iterations,
            self.method,
            self.converged,
            self.certified_upper,
            dict(self.diagnostics, scale=s),
        )

    def to_dict(self) -> dict:
        def jsonable(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: jsonable(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [jsonable(x) for x in v]
            return v

        return {
            "value": jsonable(float(self.value)),
            "value_lo": jsonable(float(self.value_lo)),
            "value_hi": jsonable(float(self.value_hi)),
            "iterations": int(self.iterations),
            "method": self.method,
            "converged": bool(self.converged),
            "certified_upper": bool(self.certified_upper),
            "diagnostics": jsonable(self.diagnostics),
        }
