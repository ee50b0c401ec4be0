"""Modulated families, the remainder probe and the Stieltjes transfer.

For ``L`` with a transform continuing to C minus (-inf, 0], the modulated
functions ``L_b(x) = L(x) sin(bx)`` have transforms
``(L{L; s - ib} - L{L; s + ib}) / 2i``, so for large ``b`` the shifted cut
clears any fixed rectangle. If an inequality ``sup |tau / rho| <= C ||tau||``
held on the rectangle norm, applying it to ``L_b`` at points where
``sin(bx) = 1`` would bound ``L(x) / rho(x)`` by ``C sup_b ||L_b||``; the probe
tabulates both sides and reports where the bound breaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientShift, ParameterError
from .expr import FunctionExpr, PowerDecay, SineModulated
from .laplace import check_monotone_margin, stieltjes_transform, v_norm
from .quadrature import panel_rule

MEMBERSHIP_MARGIN = 0.1


def make_lb(L: FunctionExpr, b: float) -> SineModulated:
    """``x -> L(x) sin(bx)``."""
    if not (isinstance(b, (int, float)) and b > 0):
        raise ParameterError(f"b must be > 0, got {b!r}")
    return SineModulated(L, float(b))


def lb_membership_M(L: FunctionExpr, alpha: float, r: float,
                    margin: float = MEMBERSHIP_MARGIN) -> float:
    """Least ``M`` such that for ``b >= M`` the shifted singular sets clear the rectangle.

    Each singular box meeting the strip ``alpha - margin <= Re <= 1 + margin``
    must, after shifting by ``+-ib``, stay at vertical distance ``>= margin``
    from ``[-r, r]``. For the cut ``(-inf, 0]`` this gives ``M = r + margin``.
    """
    if not alpha < 0 or not r > 0:
        raise ParameterError("need alpha < 0 and r > 0")
    boxes = L.singularities()
    if not boxes:
        raise ParameterError("unsupported family: no singular set to clear (the transform "
                             "is entire, every b works)")
    M = 0.0
    for box in boxes:
        if not (math.isfinite(box.y_lo) and math.isfinite(box.y_hi)):
            raise ParameterError(f"unsupported family: {box.describe()} is vertically unbounded")
        if box.x_hi < alpha - margin or box.x_lo > 1.0 + margin:
            continue
        M = max(M, r + margin + max(box.y_hi, -box.y_lo))
    return M


# ---------------------------------------------------------------- rho

@dataclass(frozen=True)
class LogDecay:
    """``rho(x) = 1 / log(e + x)``."""

    tag = "log"

    def __call__(self, x):
        return 1.0 / np.log(math.e + np.asarray(x, dtype=float))

    def to_dict(self):
        return {"type": self.tag}


def _rho_values(rho, x):
    if isinstance(rho, FunctionExpr):
        return np.asarray(rho._value(x), dtype=float)
    return np.asarray(rho(x), dtype=float)


def analytic_windowed_ratio(L, rho, X):
    """Closed form of ``sup_{x <= X} L / rho`` where one is known, else ``None``."""
    if isinstance(L, PowerDecay) and isinstance(rho, PowerDecay) and L.c == rho.c:
        # L / rho = (c + x)^(p_rho - p_L): sup over [0, X] at X or at 0
        expo = rho.p - L.p
        X = np.asarray(X, dtype=float)
        if expo >= 0:
            return (L.c + X) ** expo
        return np.full(X.shape, L.c ** expo)
    return None


# -------------------------------------------------------------- probe

@dataclass
class ProbeReport:
    L_id: str
    rho_id: str
    alpha: float
    r: float
    M: float
    b_interval: tuple
    b_samples: int
    b_values: np.ndarray
    norms: np.ndarray
    norm_sup: float
    C: float
    X: np.ndarray
    windowed_ratio: np.ndarray
    modulated_ratio: np.ndarray
    crossing_X: float | None
    crossing_ratio: float | None
    analytic_ratio: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        return self.C * self.norm_sup

    def to_dict(self):
        return {
            "L_id": self.L_id, "rho_id": self.rho_id, "alpha": self.alpha, "r": self.r,
            "M": self.M, "b_interval": list(self.b_interval), "b_samples": self.b_samples,
            "norm_sup": self.norm_sup, "C": self.C, "threshold": self.threshold,
            "crossing_X": self.crossing_X, "crossing_ratio": self.crossing_ratio,
            "norms": [[float(b), float(n)] for b, n in zip(self.b_values, self.norms)],
            "table": [[float(x), float(w), float(m)] for x, w, m in
                      zip(self.X, self.windowed_ratio, self.modulated_ratio)],
            **self.extra,
        }

    def csv_rows(self):
        return [(float(x), float(w), self.threshold) for x, w in zip(self.X, self.windowed_ratio)]


def _cumulative_sup(values_fn, X, sub: int = 16):
    """``sup_{0 <= x <= X_k}`` of a sampled function, nondecreasing in ``k``."""
    out = np.empty(X.size)
    best = -math.inf
    lo = 0.0
    for k, hi in enumerate(X):
        pts = np.unique(np.concatenate([np.geomspace(max(lo, 1e-3), hi, sub) if hi > 0 else [],
                                        np.linspace(lo, hi, sub), [hi]]))
        best = max(best, float(np.max(values_fn(pts))))
        out[k] = best
        lo = hi
    return out


def remainder_probe(L: FunctionExpr, rho, alpha: float, r: float, b_samples: int = 16,
                    X_max: float = 1e4, *, C: float = 1.0, n_X: int = 41,
                    L_id: str = "L", rho_id: str = "rho", b_interval=None) -> ProbeReport:
    """Tabulate ``sup L / rho`` against ``C sup_b ||L_b||`` over ``b in [M, M + 1]``."""
    if b_samples < 1:
        raise ParameterError("b_samples must be >= 1")
    if not X_max > 0:
        raise ParameterError("X_max must be > 0")
    if C < 0:
        raise ParameterError("C must be >= 0")
    M = lb_membership_M(L, alpha, r)
    lo, hi = (M, M + 1.0) if b_interval is None else (float(b_interval[0]), float(b_interval[1]))
    if lo < M - 1e-12:
        raise DomainError(f"b interval starts at {lo} below the membership bound M = {M}")
    b_values = np.linspace(lo, hi, int(b_samples))
    norms = np.array([v_norm(make_lb(L, float(b)), alpha, r).total for b in b_values])
    norm_sup = float(norms.max())
    X = np.geomspace(1.0, X_max, int(n_X))

    def ratio(x):
        return np.asarray(L._value(x), dtype=float) / _rho_values(rho, x)

    def modulated(x):
        s = np.abs(np.sin(np.outer(x, b_values))).max(axis=1)
        return ratio(x) * s

    windowed = _cumulative_sup(ratio, X)
    mod = _cumulative_sup(modulated, X, sub=64)
    threshold = C * norm_sup
    above = np.flatnonzero(windowed > threshold)
    crossing = float(X[above[0]]) if above.size else None
    crossing_ratio = float(windowed[above[0]]) if above.size else None
    return ProbeReport(L_id, rho_id, float(alpha), float(r), float(M), (lo, hi), int(b_samples),
                       b_values, norms, norm_sup, float(C), X, windowed, mod, crossing,
                       crossing_ratio, analytic_windowed_ratio(L, rho, X))


# ------------------------------------------------------------ transfer

@dataclass
class WITransfer:
    """``S(x) = (tau(x) + a) e^x`` with ``S(0-) = a`` and its Laplace-Stieltjes transform."""

    tau: FunctionExpr
    a: float
    a_min: float

    def S(self, x):
        x = np.asarray(x, dtype=float)
        return (np.asarray(self.tau._value(x), dtype=float) + self.a) * np.exp(x)

    def transform(self, s):
        return stieltjes_transform(self.tau, self.a, s)

    def jump(self) -> float:
        return float(self.tau._value(np.zeros(1))[0])

    def direct(self, s: complex, tol: float = 1e-14):
        """``jump + int_0^X e^{-sx} S'(x) dx`` at ``Re s > 1``, with the tail bound beyond X."""
        s = complex(s)
        sigma = s.real - 1.0
        if sigma <= 0:
            raise DomainError("direct Stieltjes quadrature needs Re s > 1", location=s)
        end = self.tau.support_end()
        X = 8.0
        while True:
            env = float(self.tau.lin_envelope(X, 1.0, 1.0))
            tail_with = (env + abs(self.a)) * math.exp(-sigma * X) / sigma
            if tail_with <= tol or X >= 1e5:
                break
            X *= 2.0
        breaks = np.unique(np.concatenate([np.linspace(0.0, X, int(math.ceil(X)) + 1),
                                           [b for b in self.tau.breakpoints() if 0 < b < X],
                                           [end] if 0 < end < X else []]))
        prev = None
        n = 16
        while True:
            x, w = panel_rule(breaks, n)
            dens = self.tau._value(x) + self.tau._deriv(x) + self.a
            val = self.jump() + np.sum(w * dens * np.exp(-(s - 1.0) * x))
            if prev is not None and abs(val - prev) <= 1e-15 * max(1.0, abs(val)):
                break
            if n >= 128:
                break
            prev, n = val, 2 * n
        return complex(val), tail_with

    def residual_check(self, s: complex) -> dict:
        f = self.transform(s)
        d, tail = self.direct(s)
        return {"s": [complex(s).real, complex(s).imag], "formula": [f.real, f.imag],
                "direct": [d.real, d.imag], "residual": abs(f - d), "tail_bound": tail}

    def monotone_on_grid(self, X: float = 20.0, n: int = 100_000, rtol: float = 1e-12) -> bool:
        """``S(x_{k+1}) >= S(x_k)`` on an equispaced grid, up to rounding ``rtol |S|``."""
        x = np.linspace(0.0, X, n)
        S = self.S(x)
        slack = rtol * np.maximum(np.abs(S[1:]), np.abs(S[:-1]))
        return bool(np.all(np.diff(S) >= -slack))

    def to_dict(self):
        return {"tau": self.tau.to_dict(), "a": self.a, "a_min": self.a_min,
                "S_0_minus": self.a, "jump_at_0": self.jump()}


def wiener_ikehara_transfer(tau: FunctionExpr, a: float) -> WITransfer:
    """Build ``S = (tau + a) e^x`` after checking that ``a`` makes it non-decreasing."""
    a_min = check_monotone_margin(tau)
    if a < a_min:
        raise InsufficientShift(f"a = {a} is below the monotonicity margin a_min = {a_min}",
                                a_min)
    return WITransfer(tau, float(a), a_min)
