"""Laplace transforms, the rectangle norm and the Stieltjes transfer.

The norm of a function ``tau`` on [0, inf) with respect to a rectangle
``[alpha, 1] x i[-r, r]`` is

    ||tau||_{alpha,r} = ||tau'||_inf + max_{s in rect} |L{tau; s}|.

Both parts are sampled estimates: the derivative sup uses nested
Chebyshev-Lobatto grids on [0, X] plus the decay envelope beyond X, and the
rectangle sup is taken over the boundary only (maximum modulus principle,
valid because singular sets are rejected before sampling). Grids double until
successive estimates change by less than ``tol``; each level keeps the
running maximum, so estimates never decrease under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, DomainError, ParameterError
from .expr import FunctionExpr, evaluate, evaluate_deriv
from .geometry import Rectangle, check_points, check_rectangle
from .quadrature import lobatto_points, panel_rule

GRID_CAP = 2 ** 20


# ----------------------------------------------------------------- transforms

def laplace(f: FunctionExpr, s):
    """Analytically continued transform ``L{f; s}``.

    Raises :class:`DomainError` (with ``location``) when ``s`` meets a pole or
    branch set of the continuation rule.
    """
    arr = np.asarray(s, dtype=complex)
    if np.any(~np.isfinite(arr)):
        raise ParameterError("s must be finite")
    check_points(f.singularities(), arr)
    out = f._transform(arr)
    return complex(out) if arr.ndim == 0 else out


def _direct_cutoff(f: FunctionExpr, sigma: float, tol: float) -> float:
    end = f.support_end()
    if math.isfinite(end):
        return end
    if sigma <= 0:
        raise DomainError("direct quadrature needs Re s > 0 for infinitely supported functions")
    X = 16.0
    while float(f.value_envelope(X)) * math.exp(-sigma * X) / sigma > tol:
        X *= 2.0
        if X > 1e6:
            raise ConvergenceError("time-domain cutoff exceeds 1e6")
    return X


def direct_laplace(f: FunctionExpr, s, *, tol: float = 1e-12, X: float | None = None):
    """``int_0^X f(x) e^{-sx} dx`` by composite Gauss-Legendre in the time domain.

    An independent oracle for the continuation rules: it never touches
    ``f._transform``. ``X`` defaults to the support end, or to the point where
    the value envelope makes the remaining tail smaller than ``tol``.
    """
    arr = np.asarray(s, dtype=complex)
    flat = arr.ravel()
    if X is None:
        X = _direct_cutoff(f, float(flat.real.min()), tol)
    freq = float(np.abs(flat.imag).max(initial=0.0))
    width = min(1.0, 4.0 / max(freq, 1e-300))
    cuts = {0.0, float(X)} | {b for b in f.breakpoints() if 0.0 < b < X}
    grid = np.linspace(0.0, X, max(1, int(math.ceil(X / width))) + 1)
    breaks = np.unique(np.concatenate([grid, sorted(cuts)]))
    n = 16
    prev = None
    while True:
        x, w = panel_rule(breaks, n)
        fx = f._value(x) * w
        cur = np.exp(-np.outer(flat, x)) @ fx
        if prev is not None and np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            break
        if n >= 256:
            raise ConvergenceError("direct Laplace quadrature did not converge")
        prev, n = cur, 2 * n
    return complex(cur[0]) if arr.ndim == 0 else cur.reshape(arr.shape)


# -------------------------------------------------------------- sup machinery

@dataclass
class SupResult:
    value: float
    argmax: float
    grid_size: int
    history: list = field(default_factory=list)


def _polish(g, x, vals, top: int):
    """Bounded Brent refinement of the largest local maxima of a sampled ``g``."""
    best_v, best_x = float(vals.max()), float(x[int(vals.argmax())])
    if x.size < 3:
        return best_v, best_x
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    ends = [i for i in (0, x.size - 1)]
    cand = np.concatenate([interior, ends])
    cand = cand[np.argsort(-vals[cand], kind="stable")][:top]
    for i in cand:
        lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda t: -float(g(np.array([t]))[0]), bounds=(lo, hi),
                              method="bounded",
                              options={"xatol": 1e-13 * max(1.0, abs(hi))})
        v = -float(res.fun)
        if v > best_v:
            best_v, best_x = v, float(res.x)
    return best_v, best_x


def maximize(g, a: float, b: float, *, n0: int = 257, tol: float = 1e-8,
             n_max: int = GRID_CAP, extra=(), polish: int = 4) -> SupResult:
    """Estimate ``max_{[a, b]} g`` from below on nested Lobatto grids.

    ``g`` maps an array of points to real values. Grids have ``2^k + 1``
    points and double until the polished running maximum changes by less than
    ``tol``. ``extra`` points (kinks, support ends) are always sampled.
    """
    k = max(1, int(math.ceil(math.log2(max(n0 - 1, 2)))))
    n = 2 ** k + 1
    extra = np.array([e for e in extra if a <= e <= b], dtype=float)
    best = -math.inf
    arg = a
    if extra.size:
        ev = g(extra)
        best, arg = float(ev.max()), float(extra[int(ev.argmax())])
    x = lobatto_points(n, a, b)
    vals = np.asarray(g(x), dtype=float)
    v, xv = _polish(g, x, vals, polish)
    if v > best:
        best, arg = v, xv
    history = [(int(n), best)]
    while True:
        if n >= n_max + 1:
            raise ConvergenceError(f"sup estimate not converged at {n} points")
        n2 = 2 * (n - 1) + 1
        x2 = lobatto_points(n2, a, b)
        vals2 = np.empty(n2)
        vals2[0::2] = vals
        vals2[1::2] = g(x2[1::2])
        x, vals, n = x2, vals2, n2
        v, xv = _polish(g, x, vals, polish)
        prev = best
        if v > best:
            best, arg = v, xv
        history.append((int(n), best))
        if abs(best - prev) < tol:
            return SupResult(best, arg, int(n), history)


# --------------------------------------------------------- derivative sup norm

@dataclass
class DerivSup:
    value: float
    tail: float
    cutoff: float
    grid_size: int
    argmax: float
    history: list


def _auto_cutoff(f: FunctionExpr) -> float:
    end = f.support_end()
    if math.isfinite(end):
        return max(end, 1e-12)
    X = max(8.0, 2.0 * max(f.breakpoints(), default=0.0))
    while True:
        rough = float(np.abs(f._deriv(np.linspace(0.0, X, 513))).max())
        tail = float(f.deriv_envelope(X))
        if tail <= max(0.5 * rough, 1e-15) or X >= 1e6:
            return X
        X *= 2.0


def deriv_sup_details(f: FunctionExpr, X: float | None = None, grid_n: int = 257,
                      tol: float = 1e-8) -> DerivSup:
    if X is None:
        X = _auto_cutoff(f)
    if not X > 0:
        raise ParameterError(f"cutoff X must be > 0, got {X}")
    if grid_n < 2:
        raise ParameterError("grid_n must be >= 2")
    tail = float(f.deriv_envelope(X))
    if not np.isfinite(tail):
        raise ParameterError("function carries no finite derivative envelope")
    res = maximize(lambda x: np.abs(f._deriv(x)), 0.0, X, n0=grid_n, tol=tol,
                   extra=f.breakpoints())
    return DerivSup(max(res.value, tail), tail, float(X), res.grid_size, res.argmax,
                    res.history)


def sup_deriv_norm(f: FunctionExpr, X: float | None = None, grid_n: int = 257,
                   tol: float = 1e-8) -> tuple[float, float]:
    """``(max(sampled sup_{[0,X]} |f'|, E(X)), E(X))`` with ``E`` the derivative envelope."""
    d = deriv_sup_details(f, X, grid_n, tol)
    return d.value, d.tail


# -------------------------------------------------------------- rectangle sup

@dataclass
class RectSup:
    value: float
    argmax: complex
    grid_size: int
    history: list


def rect_sup_details(f: FunctionExpr, rect: Rectangle, boundary_n: int = 64,
                     tol: float = 1e-8) -> RectSup:
    if boundary_n < 16:
        raise ParameterError("boundary_n must be >= 16")
    check_rectangle(f.singularities(), rect)
    best, arg, size, hist = -math.inf, complex(rect.alpha, 0.0), 0, []
    for k in range(4):
        c0 = rect.corners[k]
        d = rect.corners[(k + 1) % 4] - c0

        def g(t, c0=c0, d=d):
            return np.abs(f._transform(c0 + np.asarray(t) * d))

        res = maximize(g, 0.0, 1.0, n0=boundary_n + 1, tol=tol)
        size += res.grid_size
        hist.append(res.history)
        if res.value > best:
            best, arg = res.value, c0 + res.argmax * d
    # merge per-edge histories into (total points, running max) pairs
    depth = max(len(h) for h in hist)
    merged = []
    for i in range(depth):
        rows = [h[min(i, len(h) - 1)] for h in hist]
        merged.append((sum(r[0] for r in rows), max(r[1] for r in rows)))
    return RectSup(best, complex(arg), size, merged)


def rect_sup_norm(f: FunctionExpr, rect: Rectangle, boundary_n: int = 64,
                  tol: float = 1e-8) -> float:
    """Sampled ``max |L{f; s}|`` over the closed rectangle (boundary scan)."""
    return rect_sup_details(f, rect, boundary_n, tol).value


def boundary_trace(f: FunctionExpr, rect: Rectangle, n: int = 64):
    """Boundary samples ``(s, L{f; s})`` ordered counterclockwise from the lower-left corner."""
    check_rectangle(f.singularities(), rect)
    s = np.concatenate([e[:-1] for e in rect.edge_points(n)])
    return s, f._transform(s)


# --------------------------------------------------------------------- norm

@dataclass
class NormReport:
    alpha: float
    r: float
    deriv_sup: float
    rect_sup: float
    total: float
    deriv_cutoff: float
    deriv_tail_bound: float
    deriv_grid_size: int
    boundary_grid_size: int
    refinement_history: list
    deriv_history: list
    deriv_argmax: float
    rect_argmax: complex

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "r": self.r,
            "deriv_sup": self.deriv_sup, "rect_sup": self.rect_sup, "total": self.total,
            "deriv_cutoff": self.deriv_cutoff, "deriv_tail_bound": self.deriv_tail_bound,
            "deriv_grid_size": self.deriv_grid_size,
            "boundary_grid_size": self.boundary_grid_size,
            "refinement_history": [[int(n), float(v)] for n, v in self.refinement_history],
            "deriv_history": [[int(n), float(v)] for n, v in self.deriv_history],
            "deriv_argmax": self.deriv_argmax,
            "rect_argmax": [self.rect_argmax.real, self.rect_argmax.imag],
        }


def v_norm(f: FunctionExpr, alpha: float, r: float, *, X: float | None = None,
           deriv_n: int = 257, boundary_n: int = 64, tol: float = 1e-8) -> NormReport:
    """The norm ``||f'||_inf + max_{[alpha,1] x i[-r,r]} |L{f}|`` with diagnostics."""
    rect = Rectangle(alpha, r)
    rs = rect_sup_details(f, rect, boundary_n, tol)
    ds = deriv_sup_details(f, X, deriv_n, tol)
    return NormReport(float(alpha), float(r), ds.value, rs.value, ds.value + rs.value,
                      ds.cutoff, ds.tail, ds.grid_size, rs.grid_size, rs.history,
                      ds.history, ds.argmax, rs.argmax)


def e_zeta_norm_bound(zeta: complex, alpha: float, r: float, r_prime: float, h: float) -> float:
    """``1 / (r' - r) + h + |Im zeta|`` for ``zeta`` on the rays ``Re zeta = -h``, ``|Im zeta| >= r'``.

    ``alpha`` is only validated: the bound does not depend on it.
    """
    zeta = complex(zeta)
    Rectangle(alpha, r)
    if not r_prime > r:
        raise ParameterError(f"need r' > r, got r'={r_prime}, r={r}")
    if not h > 0:
        raise ParameterError(f"need h > 0, got {h}")
    if abs(zeta.real + h) > 1e-12 * max(1.0, h) or abs(zeta.imag) < r_prime * (1 - 1e-12):
        raise ParameterError(f"zeta={zeta} is not on the rays Re = -{h}, |Im| >= {r_prime}")
    return 1.0 / (r_prime - r) + h + abs(zeta.imag)


# ------------------------------------------------------------------ Stieltjes

def stieltjes_transform(tau: FunctionExpr, a: float, s):
    """``s L{tau; s - 1} + a / (s - 1)``, the transform of ``dS`` for ``S = (tau + a) e^x``.

    The measure includes the jump ``tau(0)`` at the origin (``S(0-) = a``).
    """
    arr = np.asarray(s, dtype=complex)
    if np.any(arr == 1):
        raise DomainError("the transform has a pole at s = 1", location=1.0)
    out = arr * laplace(tau, arr - 1.0) + a / (arr - 1.0)
    return complex(out) if arr.ndim == 0 else out


def check_monotone_margin(tau: FunctionExpr, X: float | None = None, grid_n: int = 4097,
                          tol: float = 1e-10) -> float:
    """Least ``a >= 0`` with ``tau + tau' + a >= 0``: sampled on [0, X], envelope beyond."""
    if not tau.is_real:
        raise ParameterError("monotone margin needs a real-valued function")
    if X is None:
        end = tau.support_end()
        if math.isfinite(end):
            X = max(end, 1e-12)
        else:
            X = 8.0
            while float(tau.lin_envelope(X, 1.0, 1.0)) > 1e-12 and X < 1e6:
                X *= 2.0
    tail = float(tau.lin_envelope(X, 1.0, 1.0))
    if not np.isfinite(tail):
        raise ParameterError("function carries no finite envelope")
    res = maximize(lambda x: -(tau._value(x) + tau._deriv(x)), 0.0, X, n0=grid_n, tol=tol,
                   extra=tau.breakpoints())
    return max(0.0, res.value, tail)


__all__ = [
    "laplace", "direct_laplace", "maximize", "sup_deriv_norm", "deriv_sup_details",
    "rect_sup_norm", "rect_sup_details", "boundary_trace", "NormReport", "v_norm",
    "e_zeta_norm_bound", "stieltjes_transform", "check_monotone_margin",
    "evaluate", "evaluate_deriv",
]
