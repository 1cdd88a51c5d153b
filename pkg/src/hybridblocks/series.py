"""Time-stamped vector samples, the carrier type between modules."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Strictly increasing timestamps with one vector-valued sample each.

    ``values`` has shape (n_samples, dim); scalar signals use dim == 1.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.ndim != 2:
            raise ValueError("times must be 1-D and values 2-D (n, dim)")
        if times.shape[0] != values.shape[0]:
            raise ValueError(
                f"length mismatch: {times.shape[0]} times vs {values.shape[0]} samples"
            )
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            k = int(np.argmin(np.diff(times) > 0))
            raise ValueError(f"timestamps not strictly increasing at index {k + 1}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]

    def is_uniform(self, rel_tol: float = 1e-9) -> bool:
        """True when sample spacing is constant to within rel_tol."""
        if len(self) < 3:
            return True
        dt = np.diff(self.times)
        return bool(np.all(np.abs(dt - dt[0]) <= rel_tol * abs(dt[0])))

    def column(self, k: int) -> np.ndarray:
        return self.values[:, k]
