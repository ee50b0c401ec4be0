"""Function representations on [0, inf) with exact evaluation rules.

Every node of the algebra knows

* its value and first derivative at any ``x >= 0`` (per-node chain rule),
* the continuation rule of its Laplace transform and the singular set that
  rule cannot cross,
* decay envelopes ``V(x) >= sup_{y>=x} |f(y)|`` and ``E(x) >= sup_{y>=x} |f'(y)|``
  (both nonincreasing),
* a JSON form.

Wrappers mirror the smoothing steps used to push a function into smaller
spaces: dilation ``f((1+lam) x)``, windowing by a band-limited ``phi(lam x)``,
mollification ``f * m_lam``, damping ``e^{-hx} f`` and modulation
``f(x) sin(bx)``.
"""

from __future__ import annotations

import abc
import json
import math
from dataclasses import dataclass
from math import comb, factorial
from numbers import Number

import numpy as np
from numpy.polynomial import Polynomial

from . import bumps
from .errors import DomainError, ParameterError
from .geometry import Box
from .quadrature import adaptive_gl, panel_rule

SCHEMA = "entire_laplace.expr/1"
_CHUNK = 4096


def _as_float_array(x):
    return np.asarray(x, dtype=float)


class FunctionExpr(abc.ABC):
    """Base class of the function algebra. Instances are immutable."""

    tag: str = ""

    # ---- evaluation (x >= 0, any shape) -------------------------------
    @abc.abstractmethod
    def _value(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _deriv(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _transform(self, s: np.ndarray) -> np.ndarray:
        """Continued Laplace transform; no domain checks."""

    # ---- structure -----------------------------------------------------
    @abc.abstractmethod
    def singularities(self) -> tuple[Box, ...]: ...

    @abc.abstractmethod
    def value_envelope(self, x) -> np.ndarray: ...

    @abc.abstractmethod
    def deriv_envelope(self, x) -> np.ndarray: ...

    def lin_envelope(self, x, a: complex, b: complex) -> np.ndarray:
        """Bound on ``sup_{y>=x} |a f(y) + b f'(y)|``."""
        return abs(a) * self.value_envelope(x) + abs(b) * self.deriv_envelope(x)

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the function may fail to be smooth."""
        return ()

    def support_end(self) -> float:
        return math.inf

    def l1_deriv_norm(self, k: int) -> float | None:
        """Upper bound on ``||F^(k)||_{L1(R)}`` for the zero extension ``F``.

        ``None`` when the k-th distributional derivative is not certified to
        be an integrable function.
        """
        return None

    @property
    @abc.abstractmethod
    def is_real(self) -> bool: ...

    @abc.abstractmethod
    def to_dict(self) -> dict: ...

    # ---- conveniences --------------------------------------------------
    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other):
        if not isinstance(other, FunctionExpr):
            return NotImplemented
        if isinstance(self, ExpSum) and isinstance(other, ExpSum):
            return self.concat(other)
        return Combination(((1.0, self), (1.0, other)))

    def __neg__(self):
        return (-1.0) * self

    def __sub__(self, other):
        if not isinstance(other, FunctionExpr):
            return NotImplemented
        return self + (-1.0) * other

    def __rmul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return Combination(((complex(c), self),))

    __mul__ = __rmul__

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_dict())[:120]})"


def _real_or_complex(arr, real: bool):
    return np.real(arr) if real else arr


# ====================================================================== ExpSum

class ExpSum(FunctionExpr):
    """Finite sum ``sum_j c_j x^{k_j} e^{zeta_j x}`` with ``Re zeta_j < 0``.

    ``k_j`` is 0 for the exponential atoms; ``k_j = 1`` houses ``x e^{zeta x}``.
    Duplicate ``(zeta, k)`` pairs are merged. With ``real=True`` the term
    multiset must be closed under conjugation and the real part is returned;
    ``real=None`` detects closure.
    """

    tag = "expsum"

    def __init__(self, nodes=(), coeffs=(), powers=None, real: bool | None = None):
        nodes = np.atleast_1d(np.asarray(nodes, dtype=complex)).ravel()
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
        if powers is None:
            powers = np.zeros(nodes.size, dtype=int)
        powers = np.atleast_1d(np.asarray(powers, dtype=int)).ravel()
        if not (nodes.size == coeffs.size == powers.size):
            raise ParameterError("nodes, coeffs and powers must have equal length")
        if np.any(~np.isfinite(nodes)) or np.any(~np.isfinite(coeffs)):
            raise ParameterError("non-finite node or coefficient")
        if np.any(nodes.real >= 0):
            bad = nodes[nodes.real >= 0][0]
            raise ParameterError(f"node {bad} must satisfy Re < 0")
        if np.any(powers < 0):
            raise ParameterError("powers must be nonnegative")
        nodes, coeffs, powers = _merge_terms(nodes, coeffs, powers)
        closed = _conjugate_closed(nodes, coeffs, powers)
        if real is None:
            real = closed
        elif real and not closed:
            raise ParameterError("real=True requires a conjugation-closed term set")
        for arr in (nodes, coeffs, powers):
            arr.setflags(write=False)
        self._nodes, self._coeffs, self._powers = nodes, coeffs, powers
        self._real = bool(real)

    @classmethod
    def from_terms(cls, terms, real: bool | None = None) -> "ExpSum":
        """Build from ``[(zeta, c), ...]``."""
        terms = list(terms)
        if not terms:
            return cls(real=real)
        z, c = zip(*terms)
        return cls(z, c, real=real)

    @classmethod
    def zero(cls) -> "ExpSum":
        return cls()

    nodes = property(lambda self: self._nodes)
    coeffs = property(lambda self: self._coeffs)
    powers = property(lambda self: self._powers)

    @property
    def is_real(self) -> bool:
        return self._real

    def __len__(self):
        return self._nodes.size

    def concat(self, other: "ExpSum") -> "ExpSum":
        real = self._real and other._real
        return ExpSum(np.concatenate([self._nodes, other._nodes]),
                      np.concatenate([self._coeffs, other._coeffs]),
                      np.concatenate([self._powers, other._powers]),
                      real=real or None)

    def scaled(self, c: complex) -> "ExpSum":
        real = self._real and complex(c).imag == 0
        return ExpSum(self._nodes, complex(c) * self._coeffs, self._powers, real=real or None)

    def __rmul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return self.scaled(c)

    __mul__ = __rmul__

    def _eval_terms(self, x, deriv: bool):
        x = _as_float_array(x)
        flat = x.ravel()
        out = np.zeros(flat.size, dtype=complex)
        if self._nodes.size:
            z, c, k = self._nodes, self._coeffs, self._powers
            has_pow = bool(np.any(k))
            for lo in range(0, flat.size, _CHUNK):
                xs = flat[lo:lo + _CHUNK, None]
                e = np.exp(xs * z)
                if has_pow:
                    xp = np.where(k == 0, 1.0, xs ** k)
                    if deriv:
                        xm = np.where(k == 0, 0.0, k * xs ** np.maximum(k - 1, 0))
                        terms = (xm + z * xp) * e
                    else:
                        terms = xp * e
                else:
                    terms = z * e if deriv else e
                out[lo:lo + _CHUNK] = terms @ c
        return _real_or_complex(out, self._real).reshape(x.shape)

    def _value(self, x):
        return self._eval_terms(x, False)

    def _deriv(self, x):
        return self._eval_terms(x, True)

    def _transform(self, s):
        s = np.asarray(s, dtype=complex)
        flat = s.ravel()
        out = np.zeros(flat.size, dtype=complex)
        if self._nodes.size:
            z, k = self._nodes, self._powers
            num = self._coeffs * np.array([factorial(int(j)) for j in k])
            for lo in range(0, flat.size, _CHUNK):
                d = flat[lo:lo + _CHUNK, None] - z
                out[lo:lo + _CHUNK] = (1.0 / d ** (k + 1)) @ num
        return out.reshape(s.shape)

    def singularities(self):
        return tuple(Box.point(z) for z in np.unique(self._nodes))

    def _sup_pow_exp(self, x, powers=None):
        """``sup_{y>=x} y^k e^{a y}`` per term, shape ``x.shape + (J,)``."""
        x = _as_float_array(x)[..., None]
        a = self._nodes.real
        k = self._powers if powers is None else powers
        peak = np.where(k == 0, 0.0, k / -a)
        y = np.maximum(x, peak)
        return np.where(k == 0, 1.0, y ** k) * np.exp(a * y)

    def value_envelope(self, x):
        if not self._nodes.size:
            return np.zeros(np.shape(x))
        return self._sup_pow_exp(x) @ np.abs(self._coeffs)

    def deriv_envelope(self, x):
        return self.lin_envelope(x, 0.0, 1.0)

    def lin_envelope(self, x, a, b):
        if not self._nodes.size:
            return np.zeros(np.shape(x))
        # a f + b f' on the term c x^k e^{zx}: c e^{zx} ((a + b z) x^k + b k x^{k-1})
        m_k = self._sup_pow_exp(x)
        m_km1 = self._sup_pow_exp(x, np.maximum(self._powers - 1, 0))
        c = np.abs(self._coeffs)
        lead = c * np.abs(a + b * self._nodes)
        sub = c * abs(b) * self._powers
        return m_k @ lead + m_km1 @ sub

    def support_end(self):
        return 0.0 if not self._nodes.size else math.inf

    def l1_deriv_norm(self, k):
        if k == 0:
            a = -self._nodes.real
            j = self._powers
            return float(np.sum(np.abs(self._coeffs) * np.array(
                [factorial(int(p)) for p in j]) / a ** (j + 1)))
        return 0.0 if not self._nodes.size else None

    def to_dict(self):
        d = {"type": self.tag,
             "terms": [[z.real, z.imag, c.real, c.imag]
                       for z, c in zip(self._nodes.tolist(), self._coeffs.tolist())],
             "real": self._real}
        if np.any(self._powers):
            d["powers"] = [int(p) for p in self._powers]
        return d

    @classmethod
    def from_dict(cls, d):
        terms = np.asarray(d.get("terms", []), dtype=float).reshape(-1, 4)
        nodes = terms[:, 0] + 1j * terms[:, 1]
        coeffs = terms[:, 2] + 1j * terms[:, 3]
        return cls(nodes, coeffs, d.get("powers"), real=d.get("real"))


def _merge_terms(nodes, coeffs, powers):
    if nodes.size == 0:
        return nodes.copy(), coeffs.copy(), powers.copy()
    keys = {}
    order = []
    for z, c, k in zip(nodes.tolist(), coeffs.tolist(), powers.tolist()):
        key = (z.real, z.imag, k)
        if key in keys:
            keys[key] += c
        else:
            keys[key] = c
            order.append(key)
    n = np.array([complex(k[0], k[1]) for k in order])
    c = np.array([keys[k] for k in order], dtype=complex)
    p = np.array([k[2] for k in order], dtype=int)
    return n, c, p


def _conjugate_closed(nodes, coeffs, powers) -> bool:
    if nodes.size == 0:
        return True
    scale_z = 1e-12 * (1.0 + np.abs(nodes).max())
    scale_c = 1e-12 * (1e-300 + np.abs(coeffs).max())
    for z, c, k in zip(nodes, coeffs, powers):
        match = ((np.abs(nodes - np.conj(z)) <= scale_z) & (powers == k)
                 & (np.abs(coeffs - np.conj(c)) <= scale_c))
        if not np.any(match):
            return False
    return True


def exp_atom(zeta: complex, coeff: complex = 1.0) -> ExpSum:
    """The exponential ``x -> coeff * e^{zeta x}``."""
    return ExpSum([zeta], [coeff])


def tilde_exp(zeta: complex, coeff: complex = 1.0) -> ExpSum:
    """``x -> coeff * x e^{zeta x}``, the zeta-derivative of the exponential atom."""
    return ExpSum([zeta], [coeff], [1])


# ================================================================= CompactBump

def _poly_sup_tail(p: Polynomial, T: float, x):
    """``sup_{y in [x, T]} |p(y)|`` (0 for x >= T), exact via critical points."""
    x = _as_float_array(x)
    crit = np.sort(np.array([r.real for r in p.deriv().roots()
                             if abs(r.imag) < 1e-12 and 0.0 < r.real < T]))
    cvals = np.abs(p(crit)) if crit.size else np.zeros(0)
    suffix = np.maximum.accumulate(cvals[::-1])[::-1] if crit.size else cvals
    xc = np.clip(x, 0.0, T)
    out = np.maximum(np.abs(p(xc)), abs(p(T)))
    if crit.size:
        idx = np.searchsorted(crit, xc, side="left")
        has = idx < crit.size
        out = np.where(has, np.maximum(out, suffix[np.minimum(idx, crit.size - 1)]), out)
    return np.where(x >= T, 0.0, out)


def _poly_l1(p: Polynomial, T: float) -> float:
    roots = sorted(r.real for r in p.roots() if abs(r.imag) < 1e-12 and 0.0 < r.real < T)
    pts = [0.0] + roots + [T]
    P = p.integ()
    return float(sum(abs(P(b) - P(a)) for a, b in zip(pts[:-1], pts[1:])))


@dataclass(frozen=True, eq=False)
class CompactBump(FunctionExpr):
    """``(4 x (T - x) / T^2)^k`` on [0, T], zero beyond; peak value 1 at T/2.

    For ``k >= 2`` the function and its first derivative vanish at 0 (and at
    T), so the zero extension is ``C^{k-1}`` with a piecewise-polynomial k-th
    derivative.
    """

    T: float
    degree: int = 2
    tag = "bump"

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f"bump support endpoint must be > 0, got {self.T}")
        if int(self.degree) != self.degree or self.degree < 2:
            raise ParameterError("bump degree must be an integer >= 2")

    @property
    def poly(self) -> Polynomial:
        base = Polynomial([0.0, 4.0 / self.T, -4.0 / self.T ** 2])
        return base ** int(self.degree)

    @property
    def is_real(self):
        return True

    def _value(self, x):
        x = _as_float_array(x)
        return np.where(x < self.T, self.poly(np.minimum(x, self.T)), 0.0)

    def _deriv(self, x):
        x = _as_float_array(x)
        return np.where(x < self.T, self.poly.deriv()(np.minimum(x, self.T)), 0.0)

    def _transform(self, s):
        s = np.asarray(s, dtype=complex)
        flat = s.ravel()
        p = self.poly
        n0 = 32 + 16 * int(np.ceil(self.T * np.max(np.abs(flat.imag), initial=0.0) / 8.0))

        def integrand(x):
            return np.exp(-np.outer(flat, x)) * p(x)

        val, _ = adaptive_gl(integrand, 0.0, self.T, n0=min(n0, 8192), tol=1e-13,
                             n_max=2 ** 16)
        return val.reshape(s.shape)

    def singularities(self):
        return ()

    def value_envelope(self, x):
        return _poly_sup_tail(self.poly, self.T, x)

    def deriv_envelope(self, x):
        return _poly_sup_tail(self.poly.deriv(), self.T, x)

    def breakpoints(self):
        return (0.0, float(self.T))

    def support_end(self):
        return float(self.T)

    def l1_deriv_norm(self, k):
        if k > self.degree:
            return None
        return _poly_l1(self.poly.deriv(k) if k else self.poly, self.T)

    def to_dict(self):
        return {"type": self.tag, "T": self.T, "degree": int(self.degree)}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["T"]), int(d.get("degree", 2)))


# ================================================================== PowerDecay

_RAY_END = 50.0
_RAY_FIXED = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, _RAY_END])


def _powerdecay_laplace(s, p: float, c: float, n: int = 16):
    """Continuation of ``int_0^inf (c + x)^{-p} e^{-sx} dx`` to C minus (-inf, 0].

    The integration ray is turned to ``x = t e^{-i arg s}`` so that ``s x`` is
    real and positive; the rotation is legitimate because the integrand is
    analytic and decaying in the swept sector. With ``u = |s| t`` the value is
    ``e^{-i arg s} |s|^{p-1} int_0^inf e^{-u} (c|s| + u e^{-i arg s})^{-p} du``.
    The remaining integrand has one branch point, at ``u* = -c s``; panels are
    graded geometrically toward its projection onto the path.
    """
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    out = np.empty(flat.size, dtype=complex)
    for lo in range(0, flat.size, 1024):
        sc = flat[lo:lo + 1024]
        mod = np.abs(sc)
        rot = np.exp(-1j * np.angle(sc))
        ustar = -c * sc
        xstar = np.clip(ustar.real, 0.0, _RAY_END)
        delta = np.maximum(np.abs(ustar - xstar), 1e-300)
        levels = int(np.clip(np.ceil(np.log2(_RAY_END / delta.min())) + 1, 1, 60))
        grade = delta[:, None] * 2.0 ** np.arange(levels)
        pts = np.concatenate([
            np.broadcast_to(_RAY_FIXED, (sc.size, _RAY_FIXED.size)),
            xstar[:, None] - grade, xstar[:, None] + grade, xstar[:, None]], axis=1)
        pts = np.sort(np.clip(pts, 0.0, _RAY_END), axis=1)
        u, w = panel_rule(pts, n)
        g = np.exp(-u) * (c * mod[:, None] + u * rot[:, None]) ** (-p)
        out[lo:lo + 1024] = rot * mod ** (p - 1.0) * np.sum(g * w, axis=1)
    return out.reshape(s.shape)


@dataclass(frozen=True, eq=False)
class PowerDecay(FunctionExpr):
    """``(c + x)^{-p}`` with ``0 < p``, ``c > 0``; transform continues to C minus (-inf, 0]."""

    p: float
    c: float = 1.0
    tag = "powerdecay"

    def __post_init__(self):
        if not self.p > 0:
            raise ParameterError(f"power-decay exponent must be > 0, got {self.p}")
        if not self.c > 0:
            raise ParameterError(f"power-decay shift must be > 0, got {self.c}")

    @property
    def is_real(self):
        return True

    def _value(self, x):
        return (self.c + _as_float_array(x)) ** (-self.p)

    def _deriv(self, x):
        return -self.p * (self.c + _as_float_array(x)) ** (-self.p - 1.0)

    def _transform(self, s):
        return _powerdecay_laplace(s, self.p, self.c)

    def singularities(self):
        return (Box(-math.inf, 0.0, 0.0, 0.0, label="branch cut"),)

    def value_envelope(self, x):
        return (self.c + np.maximum(_as_float_array(x), 0.0)) ** (-self.p)

    def deriv_envelope(self, x):
        return self.p * (self.c + np.maximum(_as_float_array(x), 0.0)) ** (-self.p - 1.0)

    def l1_deriv_norm(self, k):
        if self.p > 1 and k == 0:
            return self.c ** (1.0 - self.p) / (self.p - 1.0)
        return None

    def to_dict(self):
        return {"type": self.tag, "p": self.p, "c": self.c}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["p"]), float(d.get("c", 1.0)))


# ==================================================================== wrappers

def _positive(name, value):
    if not (isinstance(value, Number) and np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive number, got {value!r}")


@dataclass(frozen=True, eq=False)
class Dilated(FunctionExpr):
    """``x -> inner((1 + lam) x)``."""

    inner: FunctionExpr
    lam: float
    tag = "dilated"

    def __post_init__(self):
        _positive("lam", self.lam)

    @property
    def is_real(self):
        return self.inner.is_real

    @property
    def factor(self):
        return 1.0 + self.lam

    def _value(self, x):
        return self.inner._value(self.factor * _as_float_array(x))

    def _deriv(self, x):
        return self.factor * self.inner._deriv(self.factor * _as_float_array(x))

    def _transform(self, s):
        return self.inner._transform(np.asarray(s, dtype=complex) / self.factor) / self.factor

    def singularities(self):
        return tuple(b.scale(self.factor) for b in self.inner.singularities())

    def value_envelope(self, x):
        return self.inner.value_envelope(self.factor * _as_float_array(x))

    def deriv_envelope(self, x):
        return self.factor * self.inner.deriv_envelope(self.factor * _as_float_array(x))

    def breakpoints(self):
        return tuple(b / self.factor for b in self.inner.breakpoints())

    def support_end(self):
        return self.inner.support_end() / self.factor

    def l1_deriv_norm(self, k):
        inner = self.inner.l1_deriv_norm(k)
        return None if inner is None else self.factor ** (k - 1) * inner

    def to_dict(self):
        return {"type": self.tag, "lam": self.lam, "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class Windowed(FunctionExpr):
    """``x -> inner(x) phi(lam x)`` with the band-limited window ``phi``.

    The transform follows from Plancherel:
    ``(1 / 2 pi) int_{-1}^{1} L{inner; s + i lam u} phi_hat(u) du``, so the inner
    singular set is smeared vertically by ``lam``.
    """

    inner: FunctionExpr
    lam: float
    window: str = "bump"
    tag = "windowed"

    def __post_init__(self):
        _positive("lam", self.lam)
        if self.window != "bump":
            raise ParameterError(f"unknown window {self.window!r}")

    @property
    def is_real(self):
        return self.inner.is_real

    def _value(self, x):
        x = _as_float_array(x)
        return self.inner._value(x) * bumps.window(self.lam * x)

    def _deriv(self, x):
        x = _as_float_array(x)
        ph, dph = bumps.window_and_derivative(self.lam * x)
        return self.inner._deriv(x) * ph + self.lam * self.inner._value(x) * dph

    def _transform(self, s):
        s = np.asarray(s, dtype=complex)
        flat = s.ravel()
        z = bumps.bump_integral()

        def integrand(u):
            shifted = flat[:, None] + 1j * self.lam * u[None, :]
            return self.inner._transform(shifted) * (bumps.bump(u) / z)

        val, _ = adaptive_gl(integrand, -1.0, 1.0, n0=128, tol=1e-10, n_max=2 ** 12)
        return val.reshape(s.shape)

    def singularities(self):
        return tuple(b.thicken(self.lam) for b in self.inner.singularities())

    def value_envelope(self, x):
        x = _as_float_array(x)
        return self.inner.value_envelope(x) * bumps.window_envelope(self.lam * x)

    def deriv_envelope(self, x):
        x = _as_float_array(x)
        return (self.inner.deriv_envelope(x) * bumps.window_envelope(self.lam * x)
                + self.lam * self.inner.value_envelope(x)
                * bumps.window_derivative_envelope(self.lam * x))

    def breakpoints(self):
        return self.inner.breakpoints()

    def support_end(self):
        return self.inner.support_end()

    def to_dict(self):
        return {"type": self.tag, "lam": self.lam, "window": self.window,
                "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class Mollified(FunctionExpr):
    """``x -> (inner * m_lam)(x)`` with ``m_lam(y) = m(y / lam) / lam`` on [0, lam].

    ``inner`` is extended by zero to the negative axis, so the result is
    ``C^inf`` and all its derivatives vanish at 0. Values are computed by
    Gauss-Legendre over the mollifier support (64 nodes, doubled until
    successive values agree to 1e-12), split at the inner breakpoints.
    """

    inner: FunctionExpr
    lam: float
    mollifier: str = "bump"
    tag = "mollified"

    def __post_init__(self):
        _positive("lam", self.lam)
        if self.mollifier != "bump":
            raise ParameterError(f"unknown mollifier {self.mollifier!r}")

    @property
    def is_real(self):
        return self.inner.is_real

    def _convolve(self, x, inner_fn):
        x = _as_float_array(x)
        flat = x.ravel()
        out = np.zeros(flat.size, dtype=float if self.is_real else complex)
        bps = np.array(sorted(set(self.inner.breakpoints()) | {0.0}))
        for lo in range(0, flat.size, 512):
            xs = flat[lo:lo + 512]
            top = np.minimum(xs / self.lam, 1.0)
            cuts = np.clip((xs[:, None] - bps[None, :]) / self.lam, 0.0, top[:, None])
            pts = np.sort(np.concatenate([np.zeros((xs.size, 1)), top[:, None], cuts], axis=1),
                          axis=1)

            def integrate(n):
                u, w = panel_rule(pts, n)
                arg = np.maximum(xs[:, None] - self.lam * u, 0.0)
                return np.sum(inner_fn(arg) * bumps.mollifier(u) * w, axis=1)

            n = 64
            prev = integrate(n)
            while True:
                n *= 2
                cur = integrate(n)
                if np.all(np.abs(cur - prev) <= 1e-12 * np.maximum(1.0, np.abs(cur))):
                    break
                if n >= 4096:
                    break
                prev = cur
            out[lo:lo + 512] = cur
        return out.reshape(x.shape)

    def _value(self, x):
        return self._convolve(x, self.inner._value)

    def _deriv(self, x):
        x = _as_float_array(x)
        d = self._convolve(x, self.inner._deriv)
        f0 = self.inner._value(np.zeros(1))[0]
        if f0 != 0:
            d = d + f0 * np.where(x < self.lam, bumps.mollifier(x / self.lam) / self.lam, 0.0)
        return d

    def _transform(self, s):
        s = np.asarray(s, dtype=complex)
        return self.inner._transform(s) * bumps.mollifier_laplace(s, self.lam)

    def singularities(self):
        return self.inner.singularities()

    def value_envelope(self, x):
        x = _as_float_array(x)
        return self.inner.value_envelope(np.maximum(x - self.lam, 0.0))

    def deriv_envelope(self, x):
        x = _as_float_array(x)
        env = self.inner.deriv_envelope(np.maximum(x - self.lam, 0.0))
        f0 = abs(self.inner._value(np.zeros(1))[0])
        if f0:
            env = env + np.where(x < self.lam, f0 * bumps.mollifier_sup() / self.lam, 0.0)
        return env

    def breakpoints(self):
        # smooth, but the convolution changes form where x - lam u crosses an inner breakpoint
        base = {0.0, *self.inner.breakpoints()}
        return tuple(sorted({b + d for b in base for d in (0.0, self.lam)} - {0.0}))

    def support_end(self):
        return self.inner.support_end() + self.lam

    def l1_deriv_norm(self, k):
        # (F * m_lam)^(k) = F^(j) * m_lam^(k-j) for every admissible j
        best = None
        for j in range(k + 1):
            fj = self.inner.l1_deriv_norm(j)
            if fj is None:
                continue
            bound = fj * bumps.mollifier_l1_derivative(k - j) / self.lam ** (k - j)
            best = bound if best is None else min(best, bound)
        return best

    def to_dict(self):
        return {"type": self.tag, "lam": self.lam, "mollifier": self.mollifier,
                "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class Damped(FunctionExpr):
    """``x -> e^{-hx} inner(x)``; the transform is shifted, ``L{inner; s + h}``."""

    inner: FunctionExpr
    h: float
    tag = "damped"

    def __post_init__(self):
        _positive("h", self.h)

    @property
    def is_real(self):
        return self.inner.is_real

    def _value(self, x):
        x = _as_float_array(x)
        return np.exp(-self.h * x) * self.inner._value(x)

    def _deriv(self, x):
        x = _as_float_array(x)
        return np.exp(-self.h * x) * (self.inner._deriv(x) - self.h * self.inner._value(x))

    def _transform(self, s):
        return self.inner._transform(np.asarray(s, dtype=complex) + self.h)

    def singularities(self):
        return tuple(b.shift(-self.h) for b in self.inner.singularities())

    def value_envelope(self, x):
        x = _as_float_array(x)
        return np.exp(-self.h * np.maximum(x, 0.0)) * self.inner.value_envelope(x)

    def deriv_envelope(self, x):
        x = _as_float_array(x)
        return np.exp(-self.h * np.maximum(x, 0.0)) * (
            self.inner.deriv_envelope(x) + self.h * self.inner.value_envelope(x))

    def breakpoints(self):
        return self.inner.breakpoints()

    def support_end(self):
        return self.inner.support_end()

    def l1_deriv_norm(self, k):
        total = 0.0
        for j in range(k + 1):
            fj = self.inner.l1_deriv_norm(j)
            if fj is None:
                return None
            total += comb(k, j) * self.h ** (k - j) * fj
        return total

    def to_dict(self):
        return {"type": self.tag, "h": self.h, "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class SineModulated(FunctionExpr):
    """``x -> inner(x) sin(bx)``; transform ``(L(s - ib) - L(s + ib)) / 2i``."""

    inner: FunctionExpr
    b: float
    tag = "sine"

    def __post_init__(self):
        _positive("b", self.b)

    @property
    def is_real(self):
        return self.inner.is_real

    def _value(self, x):
        x = _as_float_array(x)
        return self.inner._value(x) * np.sin(self.b * x)

    def _deriv(self, x):
        x = _as_float_array(x)
        return (self.inner._deriv(x) * np.sin(self.b * x)
                + self.b * self.inner._value(x) * np.cos(self.b * x))

    def _transform(self, s):
        s = np.asarray(s, dtype=complex)
        ib = 1j * self.b
        return (self.inner._transform(s - ib) - self.inner._transform(s + ib)) / 2j

    def singularities(self):
        sing = self.inner.singularities()
        return (tuple(b.shift(1j * self.b) for b in sing)
                + tuple(b.shift(-1j * self.b) for b in sing))

    def value_envelope(self, x):
        return self.inner.value_envelope(x)

    def deriv_envelope(self, x):
        return self.inner.deriv_envelope(x) + self.b * self.inner.value_envelope(x)

    def breakpoints(self):
        return self.inner.breakpoints()

    def support_end(self):
        return self.inner.support_end()

    def l1_deriv_norm(self, k):
        total = 0.0
        for j in range(k + 1):
            fj = self.inner.l1_deriv_norm(j)
            if fj is None:
                return None
            total += comb(k, j) * self.b ** (k - j) * fj
        return total

    def to_dict(self):
        return {"type": self.tag, "b": self.b, "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class Combination(FunctionExpr):
    """Finite linear combination ``sum_i a_i f_i``."""

    terms: tuple
    tag = "combination"

    def __post_init__(self):
        flat = []
        for coeff, expr in self.terms:
            if not isinstance(expr, FunctionExpr):
                raise ParameterError("combination terms must be FunctionExpr instances")
            if isinstance(expr, Combination):
                flat.extend((complex(coeff) * c, e) for c, e in expr.terms)
            else:
                flat.append((complex(coeff), expr))
        object.__setattr__(self, "terms", tuple(flat))

    @property
    def is_real(self):
        return all(c.imag == 0 and e.is_real for c, e in self.terms)

    def _combine(self, method, x):
        acc = None
        for c, e in self.terms:
            v = getattr(e, method)(x)
            v = (c.real * v) if c.imag == 0 else (c * v)
            acc = v if acc is None else acc + v
        if acc is None:
            shape = np.shape(x)
            return np.zeros(shape, dtype=complex if method == "_transform" else float)
        return acc

    def _value(self, x):
        return _real_or_complex(self._combine("_value", x), self.is_real)

    def _deriv(self, x):
        return _real_or_complex(self._combine("_deriv", x), self.is_real)

    def _transform(self, s):
        return np.asarray(self._combine("_transform", np.asarray(s, dtype=complex)),
                          dtype=complex)

    def singularities(self):
        return tuple(b for _, e in self.terms for b in e.singularities())

    def value_envelope(self, x):
        return sum((abs(c) * e.value_envelope(x) for c, e in self.terms),
                   np.zeros(np.shape(x)))

    def deriv_envelope(self, x):
        return sum((abs(c) * e.deriv_envelope(x) for c, e in self.terms),
                   np.zeros(np.shape(x)))

    def lin_envelope(self, x, a, b):
        return sum((e.lin_envelope(x, c * a, c * b) for c, e in self.terms),
                   np.zeros(np.shape(x)))

    def breakpoints(self):
        return tuple(sorted({b for _, e in self.terms for b in e.breakpoints()}))

    def support_end(self):
        return max((e.support_end() for _, e in self.terms), default=0.0)

    def l1_deriv_norm(self, k):
        total = 0.0
        for c, e in self.terms:
            fk = e.l1_deriv_norm(k)
            if fk is None:
                return None
            total += abs(c) * fk
        return total

    def to_dict(self):
        return {"type": self.tag,
                "terms": [{"coeff": [c.real, c.imag], "expr": e.to_dict()}
                          for c, e in self.terms]}


# ================================================================ public API

def _check_x(x):
    arr = _as_float_array(x)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("functions are defined on [0, inf); got a negative or "
                          "non-finite argument")
    return arr


def evaluate(f: FunctionExpr, x):
    """Value ``f(x)`` for ``x >= 0`` (scalar in, scalar out)."""
    arr = _check_x(x)
    out = f._value(arr)
    return out.item() if np.ndim(x) == 0 else out


def evaluate_deriv(f: FunctionExpr, x):
    """Derivative ``f'(x)`` for ``x >= 0`` via the per-node chain rule."""
    arr = _check_x(x)
    out = f._deriv(arr)
    return out.item() if np.ndim(x) == 0 else out


def dilate(f: FunctionExpr, lam: float) -> Dilated:
    return Dilated(f, lam)


def window(f: FunctionExpr, lam: float) -> Windowed:
    return Windowed(f, lam)


def mollify(f: FunctionExpr, lam: float) -> Mollified:
    return Mollified(f, lam)


def damp(f: FunctionExpr, h: float) -> Damped:
    return Damped(f, h)


def sine_modulate(f: FunctionExpr, b: float) -> SineModulated:
    return SineModulated(f, b)


# ============================================================== serialization

def _from_dict(d: dict) -> FunctionExpr:
    kind = d.get("type")
    if kind == ExpSum.tag:
        return ExpSum.from_dict(d)
    if kind == CompactBump.tag:
        return CompactBump.from_dict(d)
    if kind == PowerDecay.tag:
        return PowerDecay.from_dict(d)
    if kind == Dilated.tag:
        return Dilated(_from_dict(d["inner"]), float(d["lam"]))
    if kind == Windowed.tag:
        return Windowed(_from_dict(d["inner"]), float(d["lam"]), d.get("window", "bump"))
    if kind == Mollified.tag:
        return Mollified(_from_dict(d["inner"]), float(d["lam"]), d.get("mollifier", "bump"))
    if kind == Damped.tag:
        return Damped(_from_dict(d["inner"]), float(d["h"]))
    if kind == SineModulated.tag:
        return SineModulated(_from_dict(d["inner"]), float(d["b"]))
    if kind == Combination.tag:
        return Combination(tuple((complex(t["coeff"][0], t["coeff"][1]), _from_dict(t["expr"]))
                                 for t in d["terms"]))
    raise ParameterError(f"unknown expression type {kind!r}")


def to_json(f: FunctionExpr, **kwargs) -> str:
    return json.dumps({"schema": SCHEMA, "expr": f.to_dict()}, **kwargs)


def from_json(text: str) -> FunctionExpr:
    doc = json.loads(text)
    if "expr" in doc:
        if doc.get("schema", SCHEMA) != SCHEMA:
            raise ParameterError(f"unsupported schema {doc.get('schema')!r}")
        doc = doc["expr"]
    return _from_dict(doc)


def from_dict(d: dict) -> FunctionExpr:
    return _from_dict(d["expr"] if "expr" in d else d)
