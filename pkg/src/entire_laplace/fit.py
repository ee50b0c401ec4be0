"""Exponential-sum fitting with nodes confined to a half-plane ``Re zeta < beta``.

The norm distance ``||target - sum c_j e_{zeta_j}||_{alpha,r}`` is discretized
into two residual blocks that are linear in the coefficients:

* ``a_i = target'(x_i) - sum c_j zeta_j e^{zeta_j x_i}`` at Chebyshev points on [0, X],
* ``b_k = L{target; s_k} - sum c_j / (s_k - zeta_j)`` on the rectangle boundary.

The minimax surrogate ``max |a| + max |b|`` is minimized by a two-block Lawson
iteration (iteratively reweighted least squares); the least-squares path
minimizes mean squares with Tikhonov regularization. Either way the reported
error is recomputed afterwards with :func:`laplace.v_norm` on the difference
formed in the function algebra, never taken from the optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contour import build_gamma, contour_to_expsum, ray_decay_constant
from .errors import CertificateError, ParameterError
from .expr import ExpSum, FunctionExpr, damp
from .geometry import Rectangle, check_rectangle
from .laplace import NormReport, v_norm
from .quadrature import lobatto_points

CERT_SCHEMA = "entire_laplace.certificate/1"


# -------------------------------------------------------------------- nodes

@dataclass(frozen=True, eq=False)
class NodeSet:
    beta: float
    delta: float
    nodes: np.ndarray
    rule: str = "user"

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.nodes, dtype=complex)).ravel()
        if z.size == 0:
            raise ParameterError("node set is empty")
        if np.any(z.real >= self.beta):
            raise ParameterError(f"all nodes need Re < beta = {self.beta}")
        z = _unique_complex(z)
        z.setflags(write=False)
        object.__setattr__(self, "nodes", z)

    def __len__(self):
        return self.nodes.size

    @property
    def conjugate_closed(self) -> bool:
        a = _sort_key(self.nodes)
        b = _sort_key(np.conj(self.nodes))
        return bool(np.array_equal(a, b))

    def union(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(min(self.beta, other.beta), min(self.delta, other.delta),
                       np.concatenate([self.nodes, other.nodes]), "union")

    def to_dict(self):
        return {"beta": self.beta, "delta": self.delta, "rule": self.rule,
                "nodes": [[z.real, z.imag] for z in self.nodes.tolist()]}


def _sort_key(z):
    z = np.round(z.real, 12) + 1j * np.round(z.imag, 12)
    return np.sort_complex(z)


def _unique_complex(z):
    out = []
    for v in z.tolist():
        if not any(abs(v - u) <= 1e-13 * (1 + abs(v)) for u in out):
            out.append(v)
    return np.array(sorted(out, key=lambda c: (c.real, c.imag)), dtype=complex)


def node_grid(beta: float, delta: float, n_lines: int, n_per_line: int,
              im_range=(-6.0, 6.0)) -> NodeSet:
    """Nodes ``beta - k delta + i t``, ``k = 1..n_lines``, ``t`` equispaced in ``im_range``.

    Conjugates are added when the range is not symmetric, so the set is
    always conjugate-closed.
    """
    if not beta < 0:
        raise ParameterError(f"beta must be < 0, got {beta}")
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta}")
    if n_lines < 1 or n_per_line < 1:
        raise ParameterError("empty node grid")
    lo, hi = float(im_range[0]), float(im_range[1])
    if hi < lo:
        raise ParameterError("empty imaginary range")
    t = np.linspace(lo, hi, int(n_per_line)) if n_per_line > 1 else np.array([0.5 * (lo + hi)])
    re = beta - delta * np.arange(1, int(n_lines) + 1)
    z = (re[:, None] + 1j * t[None, :]).ravel()
    z = np.concatenate([z, np.conj(z)])
    return NodeSet(beta, delta, z, f"grid:{n_lines}x{n_per_line}")


# --------------------------------------------------------------- design

@dataclass
class _Design:
    A1: np.ndarray      # derivative rows (m1, P)
    t1: np.ndarray
    A2: np.ndarray      # transform rows (m2, P)
    t2: np.ndarray
    M: np.ndarray       # parameters -> coefficients (J, P)
    X: float
    m1: int
    m2: int


def _parameter_map(nodes: np.ndarray, real: bool) -> np.ndarray:
    J = nodes.size
    if not real:
        return np.hstack([np.eye(J), 1j * np.eye(J)])
    cols = []
    used = set()
    for j, z in enumerate(nodes):
        if j in used:
            continue
        if abs(z.imag) <= 1e-14 * (1 + abs(z)):
            col = np.zeros(J, dtype=complex)
            col[j] = 1.0
            cols.append(col)
            used.add(j)
            continue
        k = int(np.argmin(np.abs(nodes - np.conj(z))))
        u = np.zeros(J, dtype=complex)
        v = np.zeros(J, dtype=complex)
        u[j], u[k] = 1.0, 1.0
        v[j], v[k] = 1j, -1j
        cols += [u, v]
        used |= {j, k}
    return np.array(cols).T


def _fit_cutoff(target: FunctionExpr, eps: float) -> float:
    end = target.support_end()
    if math.isfinite(end):
        return max(end, 1.0)
    X = 8.0
    while X < 1e3 and float(target.deriv_envelope(X)) > 0.1 * eps:
        X *= 2.0
    return X


def _design(target, nodes, alpha, r, X, m1, m2, real) -> _Design:
    # resolve the fastest oscillation on [0, X] and the sharpest pole peak on the boundary
    m1 = max(m1, 2 * int(math.ceil(X * float(np.abs(nodes).max()))) + 1)
    x = lobatto_points(m1, 0.0, X)
    rect = Rectangle(alpha, r)
    gap = float(np.min(alpha - nodes.real))
    per_edge = max(4, m2 // 4, int(math.ceil(4.0 * max(1.0 - alpha, 2.0 * r) / gap)))
    s = np.concatenate([e[:-1] for e in rect.edge_points(per_edge + 1)])
    E = np.exp(np.outer(x, nodes))
    B1 = E * nodes[None, :]
    B2 = 1.0 / (s[:, None] - nodes[None, :])
    M = _parameter_map(nodes, real)
    return _Design(B1 @ M, np.asarray(target._deriv(x), dtype=complex), B2 @ M,
                   np.asarray(target._transform(s), dtype=complex), M, X, x.size, s.size)


def _stack_real(A):
    return np.vstack([A.real, A.imag])


def _weighted_solve(d: _Design, w1, w2, scale, rcond=1e-13, tikhonov=None):
    rows1 = np.sqrt(w1)[:, None]
    rows2 = np.sqrt(w2)[:, None]
    A = np.vstack([_stack_real(rows1 * d.A1 / scale), _stack_real(rows2 * d.A2 / scale)])
    t = np.concatenate([np.concatenate([(np.sqrt(w1) * d.t1).real, (np.sqrt(w1) * d.t1).imag]),
                        np.concatenate([(np.sqrt(w2) * d.t2).real, (np.sqrt(w2) * d.t2).imag])])
    if tikhonov is not None:
        A = np.vstack([A, math.sqrt(tikhonov) * np.eye(A.shape[1])])
        t = np.concatenate([t, np.zeros(A.shape[1])])
        q = np.linalg.lstsq(A, t, rcond=None)[0]
    else:
        q = np.linalg.lstsq(A, t, rcond=rcond)[0]
    return q / scale


def _residuals(d: _Design, p):
    return d.t1 - d.A1 @ p, d.t2 - d.A2 @ p


def _objective(d: _Design, p) -> float:
    a, b = _residuals(d, p)
    return float(np.abs(a).max(initial=0.0) + np.abs(b).max(initial=0.0))


def _lawson(d: _Design, scale, p0=None, max_iter: int = 400, tol: float = 1e-10):
    """Two-block Lawson iteration for ``min max|a| + max|b|``.

    Row weights ``w / A`` and ``v / B`` (``A``, ``B`` the current block maxima)
    make the weighted least-squares objective a local model of the sum of the
    two maxima; weights are then multiplied by ``|residual|^gamma``. A step
    that raises the objective is rejected and ``gamma`` halved, so the
    accepted trace is nonincreasing.
    """
    w = np.full(d.m1, 1.0 / d.m1)
    v = np.full(d.m2, 1.0 / d.m2)
    p = _weighted_solve(d, w, v, scale)
    if p0 is not None and _objective(d, p0) < _objective(d, p):
        p = p0
    obj = _objective(d, p)
    trace = [obj]
    gamma = 1.0
    converged = False
    for _ in range(max_iter):
        if obj == 0.0:
            converged = True
            break
        a, b = _residuals(d, p)
        A, B = np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0)
        wn = w * np.abs(a) ** gamma
        vn = v * np.abs(b) ** gamma
        if wn.sum() == 0 or vn.sum() == 0:
            converged = True
            break
        wn, vn = wn / wn.sum(), vn / vn.sum()
        pn = _weighted_solve(d, wn / max(A, 1e-300), vn / max(B, 1e-300), scale)
        on = _objective(d, pn)
        if on <= obj:
            rel = (obj - on) / obj
            w, v, p, obj = wn, vn, pn, on
            trace.append(obj)
            if rel < tol:
                converged = True
                break
        else:
            gamma *= 0.5
            if gamma < 1e-4:
                converged = True
                break
    return p, trace, converged


# ---------------------------------------------------------------- results

@dataclass
class FitResult:
    expsum: ExpSum
    achieved_error: float
    norm_report: NormReport | None
    surrogate_error: float
    objective_trace: list
    sigma_max: float
    sigma_min: float
    rank: int
    converged: bool
    method: str
    nodes: NodeSet | None
    grid: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "achieved_error": self.achieved_error,
            "surrogate_error": self.surrogate_error,
            "method": self.method, "converged": self.converged,
            "conditioning": {"sigma_max": self.sigma_max, "sigma_min": self.sigma_min,
                             "rank": self.rank},
            "objective_trace": {"iterations": len(self.objective_trace),
                                "first": self.objective_trace[0] if self.objective_trace else None,
                                "last": self.objective_trace[-1] if self.objective_trace else None},
            "grid": self.grid,
            "nodes": self.nodes.to_dict() if self.nodes is not None else None,
            "expsum": self.expsum.to_dict(),
            "norm": self.norm_report.to_dict() if self.norm_report is not None else None,
        }


def certify(target: FunctionExpr, expsum: ExpSum, alpha: float, r: float) -> NormReport:
    """``v_norm(target - expsum)`` with the difference built in the function algebra."""
    return v_norm(target - expsum, alpha, r)


def _embed(initial, nodes: np.ndarray) -> np.ndarray:
    """Coefficient vector on ``nodes`` from an ExpSum whose nodes are among them."""
    c = np.zeros(nodes.size, dtype=complex)
    if initial is None:
        return c
    for z, cz in zip(initial.nodes, initial.coeffs):
        k = int(np.argmin(np.abs(nodes - z)))
        if abs(nodes[k] - z) > 1e-12 * (1 + abs(z)):
            raise ParameterError(f"initial node {z} is not in the node set")
        c[k] += cz
    return c


def _in_span(target: FunctionExpr, nodes: np.ndarray) -> bool:
    if not isinstance(target, ExpSum) or len(target) == 0 or np.any(target.powers != 0):
        return False
    return all(np.min(np.abs(nodes - zt)) <= 1e-12 * (1 + abs(zt)) for zt in target.nodes)


def fit_coefficients(target: FunctionExpr, nodes: NodeSet, alpha: float, r: float,
                     method: str = "minimax", *, X: float | None = None, m1: int = 257,
                     m2: int = 256, initial: ExpSum | None = None, max_iter: int = 400,
                     eps_hint: float = 1e-2, tikhonov: float = 1e-12) -> FitResult:
    """Coefficients on a fixed node set minimizing the discretized norm distance.

    ``initial`` (an ExpSum on a subset of the nodes) seeds the iteration and
    is also certified: the better of the two certified results is returned,
    so enlarging a node set with the previous fit as seed never loses accuracy.
    """
    if method not in ("minimax", "least-squares"):
        raise ParameterError(f"unknown method {method!r}")
    if not isinstance(nodes, NodeSet):
        raise ParameterError("nodes must be a NodeSet")
    rect = Rectangle(alpha, r)
    check_rectangle(target.singularities(), rect)
    if nodes.beta >= alpha:
        raise ParameterError(f"need beta < alpha, got beta={nodes.beta}, alpha={alpha}")
    z = nodes.nodes
    real = bool(target.is_real and nodes.conjugate_closed)
    if X is None:
        # beyond X every admissible term is below e^{-36} of its size at 0
        X = max(_fit_cutoff(target, eps_hint), 36.0 / float(np.min(-z.real)))
    d = _design(target, z, alpha, r, X, m1, m2, real)
    stacked = np.vstack([_stack_real(d.A1), _stack_real(d.A2)])
    scale = np.linalg.norm(stacked, axis=0)
    scale[scale == 0] = 1.0
    sv = np.linalg.svd(stacked / scale, compute_uv=False)
    rank = int(np.sum(sv > 1e-13 * sv[0])) if sv.size else 0

    if initial is None and _in_span(target, z):
        # the target itself is the unique optimum; seed with it so rounding in the
        # solve cannot perturb the coefficients
        initial = target
    p_init = None
    if initial is not None:
        c0 = _embed(initial, z)
        p_init = np.linalg.lstsq(_stack_real(d.M), np.concatenate([c0.real, c0.imag]),
                                 rcond=None)[0]
    if method == "minimax":
        p, trace, converged = _lawson(d, scale, p_init, max_iter=max_iter)
    else:
        w1 = np.full(d.m1, 1.0 / d.m1)
        w2 = np.full(d.m2, 1.0 / d.m2)
        p = _weighted_solve(d, w1, w2, scale, tikhonov=tikhonov * sv[0] ** 2)
        trace, converged = [_objective(d, p)], True
    coeffs = d.M @ p
    es = ExpSum(z, coeffs, real=real or None)
    report = certify(target, es, alpha, r)
    surrogate = _objective(d, p)
    if initial is not None:
        init_es = ExpSum(z, _embed(initial, z), real=real or None)
        init_report = certify(target, init_es, alpha, r)
        if init_report.total < report.total:
            es, report, surrogate = init_es, init_report, _objective(d, p_init)
    grid = {"deriv_points": d.m1, "deriv_cutoff": d.X, "boundary_points": d.m2,
            "certify_deriv_grid": report.deriv_grid_size,
            "certify_boundary_grid": report.boundary_grid_size}
    return FitResult(es, report.total, report, surrogate, trace, float(sv[0]),
                     float(sv[-1]), rank, converged, method, nodes, grid)


# ------------------------------------------------------------------ demo

DEFAULT_SCHEDULE = ((1, 9), (2, 9), (2, 15), (3, 13), (3, 19), (4, 15))


@dataclass
class DemoResult:
    fit: FitResult
    achieved: bool
    eps: float
    history: list
    diagnostics: dict
    certificate: dict


def _nodes_left_of(f: FunctionExpr, beta: float) -> bool:
    return isinstance(f, ExpSum) and (len(f) == 0 or bool(np.all(f.nodes.real < beta)))


def _identity_fit(target: ExpSum, alpha, r, beta, method) -> FitResult:
    report = certify(target, target, alpha, r)
    ns = NodeSet(beta, 0.0, target.nodes, "target") if len(target) else None
    return FitResult(target, report.total, report, 0.0, [0.0], 0.0, 0.0, len(target), True,
                     method, ns, {})


def density_demo(target: FunctionExpr, alpha: float, r: float, beta: float, eps: float, *,
                 h: float = 0.1, delta: float = 0.5, budget: int = 60,
                 schedule=DEFAULT_SCHEDULE, im_range=(-6.0, 6.0), method: str = "minimax",
                 target_id: str = "target", contour_params: dict | None = None) -> DemoResult:
    """Fit over progressively larger node grids until the certified error is below ``eps``.

    Grids larger than ``budget`` nodes are skipped. Diagnostics record the
    damping distance ``||target - e^{-hx} target||`` and, when the damped
    target has certified ray decay, the size and tail bound of its contour
    sum. Contour nodes lie right of ``beta``, so that sum is a reference point
    rather than an admissible seed.
    """
    if not beta < alpha < 0:
        raise ParameterError(f"need beta < alpha < 0, got beta={beta}, alpha={alpha}")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    Rectangle(alpha, r)
    check_rectangle(target.singularities(), Rectangle(alpha, r))
    diagnostics: dict = {"h": h}
    history = []

    if math.isinf(eps):
        report = v_norm(target, alpha, r)
        fit = FitResult(ExpSum(), report.total, report, report.total, [report.total], 0.0,
                        0.0, 0, True, method, None, {})
        return _finish(fit, True, eps, history, diagnostics, target, target_id, alpha, r, beta)
    if _nodes_left_of(target, beta):
        fit = _identity_fit(target, alpha, r, beta, method)
        history.append((len(target), fit.achieved_error))
        return _finish(fit, fit.achieved_error <= eps, eps, history, diagnostics, target,
                       target_id, alpha, r, beta)

    damped = damp(target, h)
    diagnostics["damping_distance"] = v_norm(target - damped, alpha, r).total
    try:
        ray_decay_constant(damped, h)
        cp = {"alpha_prime": min(-2 * h, alpha - 0.1), "r_prime": r + 1.0, "xi": 40.0,
              "nodes_per_unit": 8}
        cp.update(contour_params or {})
        spec = build_gamma(h, cp["alpha_prime"], cp["r_prime"], cp["xi"], cp["nodes_per_unit"])
        rec = contour_to_expsum(damped, spec, estimate=False, alpha=alpha, r=r)
        diagnostics["contour_nodes"] = int(spec.nodes.size)
        diagnostics["contour_tail_bound"] = rec.tail_bound
        diagnostics["contour_min_abs_re"] = float(np.min(-rec.expsum.nodes.real))
    except ParameterError as exc:
        diagnostics["contour_skipped"] = str(exc)

    best = None
    prev = None
    for n_lines, n_per_line in schedule:
        nodes = node_grid(beta, delta, n_lines, n_per_line, im_range)
        if len(nodes) > budget:
            continue
        seed = None
        if prev is not None and set(np.round(prev.expsum.nodes, 12)) <= set(np.round(nodes.nodes, 12)):
            seed = prev.expsum
        fit = fit_coefficients(target, nodes, alpha, r, method, initial=seed, eps_hint=eps)
        history.append((len(nodes), fit.achieved_error))
        if best is None or fit.achieved_error < best.achieved_error:
            best = fit
        prev = fit
        if fit.achieved_error <= eps:
            break
    if best is None:
        raise ParameterError(f"no node grid of the schedule fits within the budget {budget}")
    return _finish(best, best.achieved_error <= eps, eps, history, diagnostics, target,
                   target_id, alpha, r, beta)


def _finish(fit, achieved, eps, history, diagnostics, target, target_id, alpha, r, beta):
    cert = {
        "schema": CERT_SCHEMA,
        "target_id": target_id,
        "target": target.to_dict(),
        "alpha": alpha, "r": r, "beta": beta, "eps": eps if math.isfinite(eps) else "inf",
        "achieved": bool(achieved),
        "status": "achieved" if achieved else "budget exhausted",
        "history": [[int(n), float(e)] for n, e in history],
        "diagnostics": diagnostics,
        "fit": fit.to_dict(),
    }
    return DemoResult(fit, bool(achieved), eps, history, diagnostics, cert)


def verify_certificate(cert: dict) -> float:
    """Recompute the certified error of a certificate from its target and sum."""
    from .expr import from_dict

    if cert.get("schema") != CERT_SCHEMA:
        raise CertificateError("unknown certificate schema")
    target = from_dict(cert["target"])
    es = ExpSum.from_dict(cert["fit"]["expsum"])
    return certify(target, es, cert["alpha"], cert["r"]).total
