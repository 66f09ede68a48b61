"""Named parameter containers and initializers."""

from __future__ import annotations

from typing import Iterator

import numpy as np


class ParamSet:
    """Named float64 parameter arrays, each paired with a gradient slot.

    Arrays are updated in place by optimizers, so a ParamSet built with
    :meth:`union` shares storage with the sets it was built from.
    """

    def __init__(self, values: dict[str, np.ndarray] | None = None):
        self.values: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        for name, value in (values or {}).items():
            self.add(name, value)

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.values:
            raise KeyError(f"duplicate parameter name {name!r}")
        arr = np.ascontiguousarray(value, dtype=np.float64)
        self.values[name] = arr
        self.grads[name] = np.zeros_like(arr)
        return arr

    @classmethod
    def union(cls, parts: dict[str, "ParamSet"]) -> "ParamSet":
        out = cls()
        for prefix, part in parts.items():
            for name in part.values:
                full = f"{prefix}/{name}"
                if full in out.values:
                    raise KeyError(f"duplicate parameter name {full!r}")
                out.values[full] = part.values[name]
                out.grads[full] = part.grads[name]
        return out

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def items(self):
        return self.values.items()

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def count(self) -> int:
        """Total number of scalar parameters."""
        return int(sum(v.size for v in self.values.values()))

    def load(self, values: dict[str, np.ndarray]) -> None:
        """Copy ``values`` into the existing arrays (names and shapes must match)."""
        from ..errors import ShapeMismatch

        if set(values) != set(self.values):
            missing = sorted(set(self.values) - set(values))
            extra = sorted(set(values) - set(self.values))
            raise ShapeMismatch(f"parameter names differ: missing {missing}, unexpected {extra}")
        for name, arr in values.items():
            dst = self.values[name]
            if dst.shape != np.shape(arr):
                raise ShapeMismatch(f"{name}: expected {dst.shape}, got {np.shape(arr)}")
        for name, arr in values.items():
            self.values[name][...] = arr

    def copy_values(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.values.items()}


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
