"""Uniform rectangular grids in ``[t, x_1, ..., x_n]`` coordinates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """Grid ``origin + step * k`` for multi-indices ``0 <= k < shape``.

    Axis 0 is time. Points are enumerated in C order, so ``values.reshape(shape)``
    recovers the array layout.
    """

    origin: np.ndarray
    step: float
    shape: tuple[int, ...]

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).ravel()
        shape = tuple(int(s) for s in self.shape)
        if origin.size != len(shape) or origin.size < 2:
            raise ValueError("origin and shape must agree and cover at least 1+1 dimensions")
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if min(shape) < 1:
            raise ValueError("grid shape entries must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def centered(cls, center, step: float, radius: int) -> "UniformGrid":
        """Square grid with ``2*radius + 1`` nodes per axis and ``center`` as a node."""
        center = np.asarray(center, dtype=float)
        return cls(center - radius * step, step, (2 * radius + 1,) * center.size)

    @classmethod
    def from_bounds(cls, lower, upper, step: float) -> "UniformGrid":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        counts = np.floor((upper - lower) / step + 1e-9).astype(int) + 1
        return cls(lower, step, tuple(counts))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def axes(self) -> list[np.ndarray]:
        return [self.origin[k] + self.step * np.arange(n) for k, n in enumerate(self.shape)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def index_of(self, point) -> tuple[int, ...]:
        """Multi-index of the node nearest to ``point``."""
        k = np.rint((np.asarray(point, dtype=float) - self.origin) / self.step).astype(int)
        if np.any(k < 0) or np.any(k >= np.array(self.shape)):
            raise ValueError("point lies outside the grid")
        return tuple(int(v) for v in k)

    def to_json(self) -> dict:
        return {"origin": self.origin.tolist(), "step": self.step, "shape": list(self.shape)}

    @classmethod
    def from_json(cls, data: dict) -> "UniformGrid":
        unknown = set(data) - {"origin", "step", "shape"}
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(data["origin"], float(data["step"]), tuple(data["shape"]))
