"""Named float32 parameter container shared by all learned modules."""

import numpy as np


class ParamSet:
    """Ordered mapping of unique names to float32 arrays.

    Insertion order is part of the contract: checkpoints, optimizer state
    and gradient accumulators all mirror it.
    """

    def __init__(self):
        self._entries: dict[str, np.ndarray] = {}

    def add(self, name: str, values) -> np.ndarray:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name: {name!r}")
        arr = np.asarray(values, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in parameter {name!r}")
        self._entries[name] = arr
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __setitem__(self, name: str, values) -> None:
        arr = np.asarray(values, dtype=np.float32)
        if name in self._entries and self._entries[name].shape != arr.shape:
            raise ValueError(
                f"shape mismatch for {name!r}: {self._entries[name].shape} vs {arr.shape}"
            )
        self._entries[name] = arr

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for name, arr in self._entries.items():
            out.add(name, arr.copy())
        return out

    def zeros_like(self) -> "ParamSet":
        out = ParamSet()
        for name, arr in self._entries.items():
            out.add(name, np.zeros_like(arr))
        return out

    def validate_finite(self) -> None:
        for name, arr in self._entries.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in parameter {name!r}")

    def same_structure(self, other: "ParamSet") -> bool:
        if self.names() != other.names():
            return False
        return all(self._entries[n].shape == other._entries[n].shape for n in self._entries)

    def num_values(self) -> int:
        return int(sum(arr.size for arr in self._entries.values()))

    def equals_bitwise(self, other: "ParamSet") -> bool:
        if not self.same_structure(other):
            return False
        return all(
            self._entries[n].tobytes() == other._entries[n].tobytes() for n in self._entries
        )
