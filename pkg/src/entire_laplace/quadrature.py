"""Gauss-Legendre rules, Chebyshev grids and small adaptive drivers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import ConvergenceError


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the ``n``-point Gauss-Legendre rule on [-1, 1] (read-only arrays)."""
    x, w = roots_legendre(n)
    # symmetrize so mirrored panels give bitwise-mirrored nodes
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_interval(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def panel_rule(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule over consecutive panels.

    ``breaks`` has shape ``(..., P + 1)`` and must be sorted along the last
    axis; zero-length panels are allowed and get zero weight. Returns nodes
    and weights of shape ``(..., P * n)``.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(n)
    a = breaks[..., :-1, None]
    half = 0.5 * (breaks[..., 1:, None] - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def lobatto_points(n: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """Chebyshev-Lobatto points, ascending, endpoints included.

    Grids with ``n = 2**k + 1`` points are nested under ``n -> 2n - 1``.
    """
    if n < 2:
        raise ValueError("need at least two Lobatto points")
    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    return a + 0.5 * (b - a) * (t + 1.0)


def adaptive_gl(integrand, a: float, b: float, *, n0: int = 64, tol: float = 1e-12,
                n_max: int = 2 ** 14):
    """Integrate by Gauss-Legendre doubling until successive estimates agree.

    ``integrand`` maps a 1-D node array of length ``n`` to an array whose last
    axis has length ``n``; the result keeps the leading axes. Convergence is
    declared when every entry changes by at most ``tol * max(1, |I|)``.

    Returns ``(value, n_used)``.
    """
    n = n0
    x, w = gl_interval(a, b, n)
    prev = integrand(x) @ w
    while True:
        n *= 2
        if n > n_max:
            raise ConvergenceError(f"Gauss-Legendre did not converge with {n // 2} nodes")
        x, w = gl_interval(a, b, n)
        cur = integrand(x) @ w
        err = np.abs(cur - prev)
        if np.all(err <= tol * np.maximum(1.0, np.abs(cur))):
            return cur, n
        prev = cur
