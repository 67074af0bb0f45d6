"""Chart validity domains and deterministic low-discrepancy sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

DEFAULT_SEED = 20240611
BOUNDARY_MARGIN = 0.05


@dataclass(frozen=True, eq=False)
class ChartDomain:
    """Axis-aligned box, optionally cut down by a predicate on points."""

    lo: np.ndarray
    hi: np.ndarray
    predicate: Optional[Callable[[np.ndarray], bool]] = None

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError(f"invalid chart box lo={self.lo}, hi={self.hi}")

    @classmethod
    def box(cls, lo, hi, dim: Optional[int] = None, predicate=None) -> "ChartDomain":
        if dim is None:
            dim = np.broadcast(np.asarray(lo), np.asarray(hi)).shape[0]
        return cls(np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy(),
                   np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy(), predicate)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lo.shape:
            return False
        if np.any(x < self.lo + margin) or np.any(x > self.hi - margin):
            return False
        return self.predicate is None or bool(self.predicate(x))

    def sample(self, count: int, seed: int = DEFAULT_SEED, margin: float = BOUNDARY_MARGIN) -> np.ndarray:
        """``count`` scrambled-Halton points at least ``margin`` inside the box."""
        lo, hi = self.lo + margin, self.hi - margin
        if np.any(hi <= lo):
            raise ValueError("chart box too small for the sampling margin")
        engine = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        out: list[np.ndarray] = []
        # predicate domains need rejection; cap the draws so a bad predicate fails loudly
        for _ in range(200):
            batch = qmc.scale(engine.random(max(count, 16)), lo, hi)
            out.extend(p for p in batch if self.predicate is None or self.predicate(p))
            if len(out) >= count:
                return np.array(out[:count])
        raise ValueError(f"could only draw {len(out)} of {count} points inside the chart predicate")
