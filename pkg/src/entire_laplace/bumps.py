"""The two fixed smooth bumps: a band-limited window and a mollifier.

Both are built from ``b(t) = exp(-1 / (1 - t**2))`` on (-1, 1).

* Window: ``phi`` has Fourier transform ``phi_hat(xi) = (2*pi/Z) * b(xi)``,
  which is even, C-infinity and supported in [-1, 1]; hence ``phi(0) = 1``.
* Mollifier: ``m(u) = b(2u - 1) / (Z/2)`` on [0, 1], unit integral.

``Z`` is the integral of ``b`` over [-1, 1]. Derived constants (L1 norms of
derivatives, sup norms) are computed once and cached.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy.optimize import brentq

from .quadrature import adaptive_gl, gauss_legendre, gl_interval

_EDGE = 1e-6      # beyond 1 - _EDGE the bump and its derivatives underflow to 0
_KMAX = 8         # highest derivative order tabulated for envelopes
_L1_SAFETY = 1.0 + 1e-8


def bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0 - _EDGE
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def bump_derivatives(t, kmax: int) -> np.ndarray:
    """Derivatives ``b^(0..kmax)`` at ``t``; shape ``(kmax + 1,) + t.shape``.

    Uses ``b = exp(g)``, ``g = -(1/2) (1/(1-t) + 1/(1+t))`` and the recursion
    ``b^(n) = sum_k C(n-1, k) g^(k+1) b^(n-1-k)``.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros((kmax + 1,) + t.shape)
    inside = np.abs(t) < 1.0 - _EDGE
    ti = t[inside]
    g = np.empty((kmax + 1,) + ti.shape)
    for m in range(1, kmax + 1):
        fm = factorial(m)
        g[m] = -0.5 * (fm / (1.0 - ti) ** (m + 1) + (-1) ** m * fm / (1.0 + ti) ** (m + 1))
    d = np.empty((kmax + 1,) + ti.shape)
    d[0] = np.exp(-1.0 / (1.0 - ti * ti))
    for n in range(1, kmax + 1):
        d[n] = sum(comb(n - 1, k) * g[k + 1] * d[n - 1 - k] for k in range(n))
    out[:, inside] = d
    return out


@lru_cache(maxsize=None)
def bump_integral() -> float:
    x, w = gauss_legendre(1024)
    return float(bump(x) @ w)


def _sign_change_roots(fn, grid):
    """Roots of ``fn`` located by sign changes on ``grid`` and refined by Brent."""
    v = fn(grid)
    roots = list(grid[v == 0.0])
    idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    roots += [brentq(lambda t: float(fn(np.array([t]))[0]), grid[i], grid[i + 1], xtol=1e-15)
              for i in idx]
    return sorted(roots)


@lru_cache(maxsize=None)
def _bump_l1_table() -> tuple[tuple[float, ...], tuple[float, ...]]:
    """L1 norms over [-1, 1] of ``b^(k)`` and of ``(t b)^(k)``, k = 0.._KMAX.

    Between consecutive sign changes of a derivative its integral is a
    difference of the antiderivative, so each norm is a finite sum of exact
    point values (up to root location).
    """
    x, w = gauss_legendre(1024)
    grid = np.linspace(-1.0 + _EDGE, 1.0 - _EDGE, 40001)

    def der(k):
        return lambda t: bump_derivatives(t, k)[k]

    def tb_der(k):
        # (t b)^(k) = t b^(k) + k b^(k-1)
        def fn(t):
            d = bump_derivatives(t, k)
            return t * d[k] + (k * d[k - 1] if k else 0.0)
        return fn

    def l1(fn, anti):
        pts = np.array([-1.0 + _EDGE] + _sign_change_roots(fn, grid) + [1.0 - _EDGE])
        vals = anti(pts)
        return float(np.abs(np.diff(vals)).sum()) * _L1_SAFETY

    plain = [float(bump(x) @ w)]
    times_t = [float(np.abs(x * bump(x)) @ w)]
    for k in range(1, _KMAX + 1):
        plain.append(l1(der(k), der(k - 1)))
        times_t.append(l1(tb_der(k), tb_der(k - 1)))
    return tuple(plain), tuple(times_t)


# ---------------------------------------------------------------- window

def window_hat(xi):
    """Fourier transform of the window, ``(2 pi / Z) b(xi)``."""
    return (2.0 * np.pi / bump_integral()) * bump(xi)


def _window_nodes(xmax: float) -> int:
    n = 256 + int(np.ceil(0.5 * xmax))
    return 64 * int(np.ceil(n / 64))


def _window_eval(x, with_derivative: bool):
    x = np.asarray(x, dtype=float)
    flat = np.abs(x.ravel())
    val = np.empty_like(flat)
    der = np.empty_like(flat)
    scale = 2.0 / bump_integral()
    # group by required node count so small arguments stay cheap
    groups = np.array([_window_nodes(v) for v in flat]) if flat.size else np.array([], int)
    for n in np.unique(groups):
        idx = groups == n
        xi, w = gl_interval(0.0, 1.0, int(n))
        bw = bump(xi) * w
        ang = np.outer(flat[idx], xi)
        val[idx] = scale * (np.cos(ang) @ bw)
        if with_derivative:
            der[idx] = -scale * (np.sin(ang) @ (xi * bw))
    sign = np.sign(x.ravel())
    if with_derivative:
        return val.reshape(x.shape), (sign * der).reshape(x.shape)
    return val.reshape(x.shape)


def window(x):
    """The window ``phi(x) = (1/2pi) int phi_hat(xi) e^{i xi x} dxi``."""
    return _window_eval(x, False)


def window_and_derivative(x):
    return _window_eval(x, True)


@lru_cache(maxsize=None)
def _window_constants() -> tuple[np.ndarray, np.ndarray]:
    plain, times_t = _bump_l1_table()
    z = bump_integral()
    # |phi(x)| <= (1/2pi) ||phi_hat^(k)||_1 / |x|^k, same for phi' with xi*phi_hat
    a = np.array([p / z for p in plain])
    b = np.array([p / z for p in times_t])
    return a, b


def _min_over_orders(consts: np.ndarray, x) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    k = np.arange(consts.size)
    with np.errstate(divide="ignore"):
        terms = consts[:, None] / np.power.outer(x.ravel(), k).T
    terms[0] = consts[0]
    return terms.min(axis=0).reshape(x.shape)


def window_envelope(x):
    """Nonincreasing bound on ``sup_{|y| >= |x|} |phi(y)|``."""
    return _min_over_orders(_window_constants()[0], x)


def window_derivative_envelope(x):
    """Nonincreasing bound on ``sup_{|y| >= |x|} |phi'(y)|``."""
    return _min_over_orders(_window_constants()[1], x)


# ------------------------------------------------------------- mollifier

def mollifier(u):
    """Unit-mass bump on [0, 1]."""
    u = np.asarray(u, dtype=float)
    return bump(2.0 * u - 1.0) * (2.0 / bump_integral())


def mollifier_sup() -> float:
    return float(np.exp(-1.0) * 2.0 / bump_integral())


def mollifier_l1_derivative(k: int) -> float:
    """``||m^(k)||_1`` on [0, 1] (upper estimate)."""
    if k > _KMAX:
        raise ValueError(f"derivative order {k} exceeds tabulated order {_KMAX}")
    plain, _ = _bump_l1_table()
    return 2.0 ** k * plain[k] / bump_integral()


def mollifier_laplace(s, lam: float, tol: float = 1e-12):
    """Laplace transform of ``m_lam(x) = m(x / lam) / lam`` at ``s``.

    Equals ``int_0^1 m(u) exp(-lam s u) du``; entire in ``s``.
    """
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    z = bump_integral()

    def integrand(t):
        # u = (1 + t) / 2, du = dt / 2, m(u) = 2 b(t) / Z
        return np.exp(-lam * np.outer(flat, 0.5 * (1.0 + t))) * (bump(t) / z)

    n0 = 64 + 32 * int(np.ceil(lam * np.max(np.abs(flat), initial=0.0) / 16.0))
    val, _ = adaptive_gl(integrand, -1.0, 1.0, n0=min(n0, 4096), tol=tol)
    return val.reshape(s.shape)
