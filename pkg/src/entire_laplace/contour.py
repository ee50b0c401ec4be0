"""The truncated contour ``Gamma_h`` and the exponential-sum discretization.

``Gamma_h`` runs upward: the ray ``-h + i(-Xi, -r']``, then the part of the
boundary of ``R' = [alpha', 1] x i[-r', r']`` lying in ``Re <= -h`` (bottom
edge leftward, left edge upward, top edge rightward), then the ray
``-h + i[r', Xi)``. Functions whose transform is analytic to the right of the
contour satisfy

    L{f; s} = (1 / 2 pi i) int L{f; zeta} / (s - zeta) d zeta,
    f(x)    = (1 / 2 pi i) int L{f; zeta} e^{zeta x} d zeta,

and discretizing the second integral with the quadrature nodes ``zeta_k``
gives an exponential sum with coefficients ``w_k L{f; zeta_k} / (2 pi i)``.

The upper half is built once and mirrored, so weights satisfy
``w(conj zeta) = -conj(w(zeta))`` exactly and the sum is real for real ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .expr import Combination, Damped, ExpSum, FunctionExpr
from .laplace import NormReport, direct_laplace, laplace, v_norm
from .quadrature import gauss_legendre

SEGMENTS = ("ray-lower", "bottom", "left", "top", "ray-upper")
SEGMENT_KIND = {"ray-lower": "ray-lower", "bottom": "rectangle-arc", "left": "rectangle-arc",
                "top": "rectangle-arc", "ray-upper": "ray-upper"}


@dataclass(frozen=True, eq=False)
class ContourSpec:
    h: float
    alpha_prime: float
    r_prime: float
    xi: float
    nodes_per_unit: int
    panel_order: int
    nodes: np.ndarray
    weights: np.ndarray
    segment: np.ndarray

    @property
    def directions(self) -> np.ndarray:
        """Unit tangent at each node (orientation of ``d zeta``)."""
        return self.weights / np.abs(self.weights)

    def segment_arclength(self, name: str) -> float:
        return float(np.abs(self.weights[self.segment == name]).sum())

    def analytic_arclength(self, name: str) -> float:
        rect = {"bottom": -self.h - self.alpha_prime, "top": -self.h - self.alpha_prime,
                "left": 2.0 * self.r_prime}
        return rect.get(name, self.xi - self.r_prime)

    @property
    def total_arclength(self) -> float:
        return 2.0 * (self.xi - self.r_prime) + 2.0 * (-self.h - self.alpha_prime) + 2.0 * self.r_prime

    def right_of(self, s) -> np.ndarray:
        """True where ``s`` lies strictly in the open region to the right of the contour."""
        s = np.asarray(s, dtype=complex)
        inner = (np.abs(s.imag) < self.r_prime) & (s.real > self.alpha_prime)
        return (inner | (s.real > -self.h)) & (np.abs(s.imag) < self.xi)

    def to_dict(self, include_nodes: bool = False) -> dict:
        d = {"h": self.h, "alpha_prime": self.alpha_prime, "r_prime": self.r_prime,
             "xi": self.xi, "nodes_per_unit": self.nodes_per_unit,
             "panel_order": self.panel_order, "n_nodes": int(self.nodes.size)}
        if include_nodes:
            d["nodes"] = [[z.real, z.imag, w.real, w.imag, g] for z, w, g in
                          zip(self.nodes.tolist(), self.weights.tolist(), self.segment.tolist())]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ContourSpec":
        return build_gamma(d["h"], d["alpha_prime"], d["r_prime"], d["xi"],
                           d["nodes_per_unit"], panel_order=d.get("panel_order", 16))


def _segment_rule(a: complex, b: complex, npu: int, order: int):
    length = abs(b - a)
    panels = max(1, int(math.ceil(length * npu / order)))
    t, w = gauss_legendre(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    lo, hi = a + (b - a) * edges[:-1], a + (b - a) * edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    z = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return z, wt


def build_gamma(h: float, alpha_prime: float, r_prime: float, xi: float,
                nodes_per_unit: int = 8, *, panel_order: int = 16) -> ContourSpec:
    """Composite Gauss-Legendre discretization of the truncated contour.

    Each straight piece gets ``ceil(length * nodes_per_unit / panel_order)``
    panels of ``panel_order`` nodes; no panel crosses a corner, and the left
    edge is split at the real axis so that the two halves mirror exactly.
    """
    for name, v in (("h", h), ("r_prime", r_prime), ("xi", xi)):
        if not (np.isfinite(v) and v > 0):
            raise ParameterError(f"{name} must be positive, got {v}")
    if not alpha_prime < 0:
        raise ParameterError(f"alpha_prime must be < 0, got {alpha_prime}")
    if not h < -alpha_prime:
        raise ParameterError(f"need 0 < h < -alpha_prime, got h={h}, alpha_prime={alpha_prime}")
    if not xi > r_prime:
        raise ParameterError(f"need xi > r_prime, got xi={xi}, r_prime={r_prime}")
    if int(nodes_per_unit) != nodes_per_unit or nodes_per_unit < 1:
        raise ParameterError("nodes_per_unit must be a positive integer")
    if int(panel_order) != panel_order or panel_order < 2:
        raise ParameterError("panel_order must be an integer >= 2")
    npu, q = int(nodes_per_unit), int(panel_order)
    pieces = [("left", complex(alpha_prime, 0.0), complex(alpha_prime, r_prime)),
              ("top", complex(alpha_prime, r_prime), complex(-h, r_prime)),
              ("ray-upper", complex(-h, r_prime), complex(-h, xi))]
    zs, ws, gs = [], [], []
    for name, a, b in pieces:
        z, w = _segment_rule(a, b, npu, q)
        zs.append(z)
        ws.append(w)
        gs.append(np.full(z.size, name, dtype=object))
    z_up, w_up, g_up = np.concatenate(zs), np.concatenate(ws), np.concatenate(gs)
    # pin the exact geometry: real parts on rays and edges
    on_ray = g_up == "ray-upper"
    z_up = np.where(on_ray, -h + 1j * z_up.imag, z_up)
    z_up = np.where(g_up == "left", alpha_prime + 1j * z_up.imag, z_up)
    z_up = np.where(g_up == "top", z_up.real + 1j * r_prime, z_up)
    mirror = {"left": "left", "top": "bottom", "ray-upper": "ray-lower"}
    z_lo = np.conj(z_up)[::-1]
    w_lo = -np.conj(w_up)[::-1]
    g_lo = np.array([mirror[g] for g in g_up[::-1]], dtype=object)
    nodes = np.concatenate([z_lo, z_up])
    weights = np.concatenate([w_lo, w_up])
    segment = np.concatenate([g_lo, g_up])
    for arr in (nodes, weights, segment):
        arr.setflags(write=False)
    return ContourSpec(float(h), float(alpha_prime), float(r_prime), float(xi), npu, q,
                       nodes, weights, segment)


# --------------------------------------------------------------- tail bounds

def _is_zero(f: FunctionExpr) -> bool:
    if isinstance(f, ExpSum):
        return len(f) == 0 or not np.any(f.coeffs)
    if isinstance(f, Combination):
        return all(c == 0 or _is_zero(e) for c, e in f.terms)
    return False


def ray_decay_constant(f: FunctionExpr, h: float) -> float:
    """``C`` with ``|L{f; -h + i xi}| <= C / xi^4`` on the rays.

    For ``f = e^{-hx} g`` the ray values are the Fourier transform of ``g``,
    bounded through four integrations by parts by ``||g''''||_1``.
    """
    if _is_zero(f):
        return 0.0
    if isinstance(f, Combination):
        return sum(abs(c) * ray_decay_constant(e, h) for c, e in f.terms)
    if not (isinstance(f, Damped) and abs(f.h - h) <= 1e-12 * max(1.0, h)):
        raise ParameterError(f"ray decay needs a damped function with h = {h}")
    c4 = f.inner.l1_deriv_norm(4)
    if c4 is None:
        raise ParameterError("missing smoothness certificate: the fourth derivative of the "
                             "undamped function is not certified integrable")
    return float(c4)


def ray_tail_bound(f: FunctionExpr, spec: ContourSpec, r: float = 0.0) -> float:
    """Bound on the norm of the discarded ray integrals beyond ``|Im zeta| = Xi``.

    With ``||e_zeta|| <= K + |Im zeta|``, ``K = 1 / (r' - r) + h``, the two rays
    contribute at most ``(C / pi) (K / (3 Xi^3) + 1 / (2 Xi^2))``.
    """
    if not 0 <= r < spec.r_prime:
        raise ParameterError(f"need 0 <= r < r' = {spec.r_prime}, got {r}")
    c4 = ray_decay_constant(f, spec.h)
    k = 1.0 / (spec.r_prime - r) + spec.h
    xi = spec.xi
    return c4 / math.pi * (k / (3.0 * xi ** 3) + 1.0 / (2.0 * xi ** 2))


def pointwise_tail_bound(f: FunctionExpr, spec: ContourSpec, x: float = 0.0) -> float:
    """Bound on ``|discarded ray part of f(x)|``: ``(C / pi) e^{-hx} / (3 Xi^3)``."""
    c4 = ray_decay_constant(f, spec.h)
    return c4 / math.pi * math.exp(-spec.h * x) / (3.0 * spec.xi ** 3)


def choose_truncation(f: FunctionExpr, h: float, r_prime: float, tol: float,
                      r: float = 0.0) -> float:
    """Smallest ``Xi`` (to 1e-6 relative) with ``ray_tail_bound <= 0.1 tol``."""
    c4 = ray_decay_constant(f, h)
    if c4 == 0.0:
        return 2.0 * r_prime
    k = 1.0 / (r_prime - r) + h

    def bound(xi):
        return c4 / math.pi * (k / (3.0 * xi ** 3) + 1.0 / (2.0 * xi ** 2))

    lo = r_prime * (1.0 + 1e-9)
    hi = 2.0 * r_prime
    while bound(hi) > 0.1 * tol:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if bound(mid) > 0.1 * tol else (lo, mid)
    return hi


# ------------------------------------------------------------- Cauchy check

def _check_contour_domain(f: FunctionExpr, spec: ContourSpec):
    """The closed region to the right of the contour must avoid every singular box."""
    for box in f.singularities():
        if box.x_hi < spec.alpha_prime:
            continue
        upper = box.y_lo <= spec.r_prime and box.y_hi >= -spec.r_prime
        if box.x_hi >= -spec.h or upper:
            raise DomainError(f"{box.describe()} lies right of the contour",
                              location=box.representative())


def _fsum_complex(terms) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


@dataclass
class CauchyReport:
    s: complex
    lhs: complex
    rhs: complex
    residual: float
    tail_bound: float
    budget: float

    def to_dict(self):
        return {"s": [self.s.real, self.s.imag], "lhs": [self.lhs.real, self.lhs.imag],
                "rhs": [self.rhs.real, self.rhs.imag], "residual": self.residual,
                "tail_bound": self.tail_bound, "budget": self.budget}


def cauchy_check(f: FunctionExpr, spec: ContourSpec, s, reference: str = "direct"):
    """Compare ``L{f; s}`` with the truncated contour quadrature of the Cauchy integral.

    ``reference="direct"`` takes the left side from time-domain quadrature
    (independent of the continuation rules); ``"transform"`` uses
    :func:`laplace`. ``budget`` is the tail bound beyond ``Xi`` plus the
    difference from the rule with half the nodes per unit. Returns a
    :class:`CauchyReport` (a list of them for array input).
    """
    arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if not np.all(spec.right_of(arr)):
        bad = complex(arr[~spec.right_of(arr)][0])
        raise DomainError(f"s = {bad} is not strictly right of the contour", location=bad)
    if reference not in ("direct", "transform"):
        raise ParameterError(f"unknown reference {reference!r}")
    if _is_zero(f):
        reports = [CauchyReport(complex(z), 0j, 0j, 0.0, 0.0, 0.0) for z in arr]
        return reports if np.ndim(s) else reports[0]
    _check_contour_domain(f, spec)
    c4 = ray_decay_constant(f, spec.h)
    coarse = None
    if spec.nodes_per_unit >= 2:
        coarse = build_gamma(spec.h, spec.alpha_prime, spec.r_prime, spec.xi,
                             spec.nodes_per_unit // 2, panel_order=spec.panel_order)
        lz_c = f._transform(coarse.nodes)
    lz = f._transform(spec.nodes)
    lhs = direct_laplace(f, arr) if reference == "direct" else laplace(f, arr)
    reports = []
    for z, left in zip(arr, lhs):
        rhs = _fsum_complex(spec.weights * lz / (z - spec.nodes)) / (2j * math.pi)
        d = math.hypot(z.real + spec.h, spec.xi - abs(z.imag))
        tail = c4 / math.pi / (3.0 * spec.xi ** 3) / d
        quad = 0.0
        if coarse is not None:
            rc = _fsum_complex(coarse.weights * lz_c / (z - coarse.nodes)) / (2j * math.pi)
            quad = abs(rc - rhs)
        reports.append(CauchyReport(complex(z), complex(left), rhs, abs(left - rhs), tail,
                                    tail + quad))
    return reports if np.ndim(s) else reports[0]


# ---------------------------------------------------------- reconstruction

@dataclass
class Reconstruction:
    expsum: ExpSum
    tail_bound: float
    pointwise_tail: float
    quadrature_estimate: float
    budget: float
    spec: ContourSpec

    def to_dict(self):
        return {"contour": self.spec.to_dict(), "tail_bound": self.tail_bound,
                "pointwise_tail": self.pointwise_tail,
                "quadrature_estimate": self.quadrature_estimate, "budget": self.budget,
                "expsum": self.expsum.to_dict()}


def _coefficients(f: FunctionExpr, spec: ContourSpec) -> ExpSum:
    c = spec.weights * f._transform(spec.nodes) / (2j * math.pi)
    return ExpSum(spec.nodes, c, real=f.is_real or None)


def contour_to_expsum(f: FunctionExpr, spec: ContourSpec, *, alpha: float | None = None,
                      r: float | None = None, estimate: bool = True) -> Reconstruction:
    """Exponential sum from the quadrature nodes of the contour.

    With ``alpha`` and ``r`` the budget is stated in the norm of that
    rectangle: tail bound plus ``||S_n - S_{n/2}||`` for the rule with half
    the nodes per unit (an overestimate of the error of ``S_n``). Otherwise
    the pointwise tail bound at ``x = 0`` and a sampled sup difference are
    used.
    """
    if _is_zero(f):
        return Reconstruction(ExpSum(), 0.0, 0.0, 0.0, 0.0, spec)
    _check_contour_domain(f, spec)
    es = _coefficients(f, spec)
    rr = 0.0 if r is None else r
    tail = ray_tail_bound(f, spec, rr)
    ptail = pointwise_tail_bound(f, spec)
    quad = 0.0
    if estimate and spec.nodes_per_unit >= 2:
        coarse = build_gamma(spec.h, spec.alpha_prime, spec.r_prime, spec.xi,
                             spec.nodes_per_unit // 2, panel_order=spec.panel_order)
        diff = es.concat(_coefficients(f, coarse).scaled(-1.0))
        if alpha is not None and r is not None:
            quad = v_norm(diff, alpha, r).total
        else:
            xs = np.linspace(0.0, 40.0, 2001)
            quad = float(np.abs(diff._value(xs)).max())
    budget = (tail if alpha is not None and r is not None else ptail) + quad
    return Reconstruction(es, tail, ptail, quad, budget, spec)


def holomorphy_defect(zeta: complex, eta: float, alpha: float, r: float) -> NormReport:
    """Norm of ``(e_{zeta+eta} - e_zeta) / eta - x e^{zeta x}``."""
    zeta = complex(zeta)
    if eta == 0:
        raise ParameterError("eta must be nonzero")
    q = ExpSum([zeta + eta, zeta, zeta], [1.0 / eta, -1.0 / eta, -1.0], [0, 0, 1], real=False)
    return v_norm(q, alpha, r)


def contour_csv_rows(spec: ContourSpec):
    """Rows ``(re, im, w_re, w_im, segment)`` in traversal order."""
    return [(z.real, z.imag, w.real, w.imag, g) for z, w, g in
            zip(spec.nodes.tolist(), spec.weights.tolist(), spec.segment.tolist())]
