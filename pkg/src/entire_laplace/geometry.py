"""Rectangles in the complex plane and axis-aligned singular sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .quadrature import lobatto_points


@dataclass(frozen=True)
class Rectangle:
    """Closed rectangle ``[alpha, 1] x i[-r, r]``."""

    alpha: float
    r: float

    def __post_init__(self):
        if not self.alpha < 0:
            raise ParameterError(f"rectangle needs alpha < 0, got {self.alpha}")
        if not self.r > 0:
            raise ParameterError(f"rectangle needs r > 0, got {self.r}")

    right = 1.0

    def contains(self, s) -> np.ndarray | bool:
        s = np.asarray(s, dtype=complex)
        inside = (s.real >= self.alpha) & (s.real <= 1.0) & (np.abs(s.imag) <= self.r)
        return bool(inside) if inside.ndim == 0 else inside

    def contains_rect(self, other: "Rectangle") -> bool:
        return self.alpha <= other.alpha and self.r >= other.r

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        a, r = self.alpha, self.r
        return (complex(a, -r), complex(1.0, -r), complex(1.0, r), complex(a, r))

    def edge_points(self, n: int) -> list[np.ndarray]:
        """Chebyshev-Lobatto samples on the four edges (bottom, right, top, left)."""
        c = self.corners
        t = lobatto_points(n, 0.0, 1.0)
        return [c[k] + t * (c[(k + 1) % 4] - c[k]) for k in range(4)]

    def edge_point(self, k: int, t: float) -> complex:
        c = self.corners
        return c[k] + t * (c[(k + 1) % 4] - c[k])


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned set ``[x_lo, x_hi] x i[y_lo, y_hi]`` (``x_lo`` may be -inf).

    Points, horizontal cuts and vertically smeared copies of both are all boxes,
    and the family is closed under the maps the function algebra needs
    (translation, positive scaling, vertical thickening).
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    label: str = "pole"

    @classmethod
    def point(cls, z: complex, label: str = "pole") -> "Box":
        z = complex(z)
        return cls(z.real, z.real, z.imag, z.imag, label)

    def shift(self, w: complex) -> "Box":
        w = complex(w)
        return Box(self.x_lo + w.real, self.x_hi + w.real,
                   self.y_lo + w.imag, self.y_hi + w.imag, self.label)

    def scale(self, c: float) -> "Box":
        return Box(c * self.x_lo, c * self.x_hi, c * self.y_lo, c * self.y_hi, self.label)

    def thicken(self, dy: float) -> "Box":
        return Box(self.x_lo, self.x_hi, self.y_lo - dy, self.y_hi + dy, self.label)

    def contains(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return ((s.real >= self.x_lo) & (s.real <= self.x_hi)
                & (s.imag >= self.y_lo) & (s.imag <= self.y_hi))

    def intersects(self, rect: Rectangle, margin: float = 0.0) -> bool:
        return not (self.x_hi < rect.alpha - margin or self.x_lo > 1.0 + margin
                    or self.y_hi < -rect.r - margin or self.y_lo > rect.r + margin)

    def representative(self) -> complex:
        x = self.x_hi if math.isinf(self.x_lo) else 0.5 * (self.x_lo + self.x_hi)
        return complex(x, 0.5 * (self.y_lo + self.y_hi))

    def describe(self) -> str:
        if self.x_lo == self.x_hi and self.y_lo == self.y_hi:
            return f"{self.label} at {complex(self.x_lo, self.y_lo)}"
        return (f"{self.label} region Re in [{self.x_lo}, {self.x_hi}], "
                f"Im in [{self.y_lo}, {self.y_hi}]")


def check_points(boxes, s) -> None:
    """Raise :class:`DomainError` if any point of ``s`` lies in a singular box."""
    s = np.asarray(s, dtype=complex)
    for box in boxes:
        hit = box.contains(s)
        if np.any(hit):
            bad = complex(s[hit].ravel()[0]) if s.ndim else complex(s)
            raise DomainError(f"s = {bad} meets {box.describe()}", location=bad)


def check_rectangle(boxes, rect: Rectangle) -> None:
    """Raise :class:`DomainError` if a singular box meets the closed rectangle."""
    for box in boxes:
        if box.intersects(rect):
            raise DomainError(
                f"{box.describe()} lies inside or on the rectangle "
                f"[{rect.alpha}, 1] x i[-{rect.r}, {rect.r}]",
                location=box.representative(),
            )
