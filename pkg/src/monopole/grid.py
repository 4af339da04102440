"""Regular 3D sampling grids."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    spacing: tuple
    counts: tuple

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        spacing = tuple(float(v) for v in self.spacing)
        counts = tuple(int(v) for v in self.counts)
        if len(origin) != 3 or len(spacing) != 3 or len(counts) != 3:
            raise ValidationError("grid needs three origins, spacings and counts")
        if any(n < 2 for n in counts):
            raise ValidationError(f"grid counts must be at least 2 per axis, got {counts}")
        if any(not s > 0 for s in spacing):
            raise ValidationError(f"grid spacing must be positive, got {spacing}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def cube(cls, lo, hi, n):
        """``n`` points per axis on ``[lo, hi]^3``."""
        if not hi > lo:
            raise ValidationError("grid bounds must satisfy lo < hi")
        step = (hi - lo) / (n - 1)
        return cls((lo,) * 3, (step,) * 3, (n,) * 3)

    @property
    def shape(self):
        return self.counts

    @property
    def size(self):
        return int(np.prod(self.counts))

    def axes(self):
        return tuple(o + s * np.arange(n) for o, s, n in zip(self.origin, self.spacing, self.counts))

    def points(self):
        """``(nx, ny, nz, 3)`` array of grid points."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def contains(self, x, pad=0.0):
        x = np.asarray(x, dtype=float)
        lo = np.array(self.origin) + pad
        hi = np.array(self.origin) + np.array(self.spacing) * (np.array(self.counts) - 1) - pad
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def to_json(self):
        return {"origin": list(self.origin), "spacing": list(self.spacing), "counts": list(self.counts)}
