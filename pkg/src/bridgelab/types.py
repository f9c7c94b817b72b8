"""Shared record types.

Planar points are plain Python/numpy complex numbers throughout; ``re``/``im``
are the real and imaginary parts.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class PolylineCurve:
    """Time-ordered planar polyline (complex vertices)."""

    points: np.ndarray
    dt: float
    seed: int = 0
    times: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128)
        if self.points.ndim != 1 or len(self.points) < 2:
            raise ValueError("a curve needs at least two vertices")
        if self.times is None:
            self.times = self.dt * np.arange(len(self.points), dtype=np.float64)
        else:
            self.times = np.asarray(self.times, dtype=np.float64)

    def __len__(self):
        return len(self.points)

    @property
    def re(self) -> np.ndarray:
        return self.points.real

    @property
    def im(self) -> np.ndarray:
        return self.points.imag

    def height(self) -> float:
        return float(self.points.imag.max())


@dataclass(frozen=True)
class GapLine:
    """Horizontal line through ``center`` with the gap ``|Re(w - center)| < half_width`` removed."""

    center: complex
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if self.half_width <= 0:
            raise ValueError("gap half-width must be positive")
        if self.center.imag <= 0:
            raise ValueError("gap line must sit strictly above the real axis")

    @property
    def height(self) -> float:
        return self.center.imag


@dataclass
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    dt: float = float("nan")
    bias_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PowerLawFit:
    exponent: float
    intercept: float
    r_squared: float
    scale_range: tuple[float, float]
    n_inputs: int = 0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "scale_min": self.scale_range[0],
            "scale_max": self.scale_range[1],
            "n_inputs": self.n_inputs,
            "flags": list(self.flags),
        }
