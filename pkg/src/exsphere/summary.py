"""Residual statistics shared by every verification routine."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ResidualSummary:
    """Max/mean statistics of an identity's pointwise violation over a sample set."""

    name: str
    max: float
    mean: float
    count: int

    @classmethod
    def from_values(cls, name: str, values) -> "ResidualSummary":
        values = np.asarray(list(values), dtype=float).ravel()
        if values.size == 0:
            return cls(name, 0.0, 0.0, 0)
        return cls(name, float(values.max()), float(values.mean()), int(values.size))

    def passes(self, tol: float) -> bool:
        return self.max <= tol

    def to_dict(self) -> dict:
        return asdict(self)
