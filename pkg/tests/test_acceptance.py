"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_base, random_s  # noqa: E402
from entire_laplace import cli  # noqa: E402
from entire_laplace.contour import (build_gamma, cauchy_check, contour_to_expsum,  # noqa: E402
                                    holomorphy_defect)
from entire_laplace.errors import InsufficientShift  # noqa: E402
from entire_laplace.expr import (Mollified, PowerDecay, damp, dilate, exp_atom,  # noqa: E402
                                 mollify, sine_modulate, window)
from entire_laplace.fit import (density_demo, fit_coefficients, node_grid,  # noqa: E402
                                verify_certificate)
from entire_laplace.laplace import (check_monotone_margin, direct_laplace,  # noqa: E402
                                    e_zeta_norm_bound, laplace, v_norm)
from entire_laplace.registry import (STANDARD_CONTOUR, STANDARD_NORM_RECT,  # noqa: E402
                                     STANDARD_S, TRANSFER_INSTANCES, instance)
from entire_laplace.tauberian import remainder_probe, wiener_ikehara_transfer  # noqa: E402

RESULTS: list[str] = []


def record(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# ------------------------------------------------------------- criterion 1

def _identity_errors(rng, n=50):
    errs = {k: 0.0 for k in ("dilation", "damping", "mollification", "windowing",
                             "modulation", "closed_form")}
    for _ in range(n):
        f = random_base(rng)
        s = random_s(rng)
        lam = float(rng.uniform(0.1, 2.0))
        g = dilate(f, lam)
        errs["dilation"] = max(errs["dilation"], _rel(laplace(g, s), direct_laplace(g, s, tol=1e-10)))
        h = float(rng.uniform(0.05, 1.0))
        g = damp(f, h)
        errs["damping"] = max(errs["damping"], _rel(laplace(g, s), direct_laplace(g, s, tol=1e-10)))
        g = mollify(f.inner if isinstance(f, Mollified) else f, float(rng.uniform(0.1, 1.0)))
        errs["mollification"] = max(errs["mollification"],
                                    _rel(laplace(g, s), direct_laplace(g, s, tol=1e-10)))
        g = window(f, float(rng.uniform(0.2, 1.5)))
        errs["windowing"] = max(errs["windowing"], _rel(laplace(g, s), direct_laplace(g, s, tol=1e-11)))
        g = sine_modulate(f, float(rng.uniform(0.3, 4.0)))
        errs["modulation"] = max(errs["modulation"],
                                 _rel(laplace(g, s), direct_laplace(g, s, tol=1e-10)))
        z = complex(rng.uniform(-3.0, -0.1), rng.uniform(-4.0, 4.0))
        w = complex(rng.uniform(-0.5, 2.0), rng.uniform(-4.0, 4.0))
        exact = 1.0 / (w - z)
        errs["closed_form"] = max(errs["closed_form"],
                                  abs(laplace(exp_atom(z), w) - exact) / max(1.0, abs(exact)))
    return errs


def test_criterion_1_transform_identities():
    t0 = time.perf_counter()
    errs = _identity_errors(np.random.default_rng(1))
    dt = time.perf_counter() - t0
    ok = (all(v <= 1e-7 for k, v in errs.items() if k != "closed_form")
          and errs["closed_form"] <= 1e-12 and dt <= 30)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    record(1, ok, f"max rel errors {detail}; {dt:.1f} s")
    assert ok


# ------------------------------------------------------------- criterion 2

def test_criterion_2_cauchy_representation():
    t0 = time.perf_counter()
    f = instance("standard")
    s = np.array(STANDARD_S)
    reps = cauchy_check(f, build_gamma(**STANDARD_CONTOUR), s)
    reps2 = cauchy_check(f, build_gamma(**dict(STANDARD_CONTOUR, nodes_per_unit=16)), s)
    r1 = max(r.residual for r in reps)
    r2 = max(r.residual for r in reps2)
    dt = time.perf_counter() - t0
    alpha, r = STANDARD_NORM_RECT
    on_domain = all(z.real > 0 or (alpha <= z.real <= 1 and abs(z.imag) <= r) for z in s)
    ok = len(s) == 10 and on_domain and r1 <= 1e-6 and r1 >= 4 * r2 and dt <= 60
    record(2, ok, f"max residual {r1:.2e} at 8/unit, {r2:.2e} at 16/unit "
                  f"(ratio {r1 / r2:.0f}); {dt:.1f} s")
    assert ok


# ------------------------------------------------------------- criterion 3

def test_criterion_3_contour_reconstruction():
    t0 = time.perf_counter()
    f = instance("standard")
    rec = contour_to_expsum(f, build_gamma(**STANDARD_CONTOUR), estimate=False)
    x = np.linspace(0.0, 20.0, 20001)
    sup = float(np.abs(rec.expsum._value(x) - f._value(x)).max())
    nrm = v_norm(rec.expsum - f, *STANDARD_NORM_RECT).total
    dt = time.perf_counter() - t0
    ok = sup <= 1e-5 and nrm <= 1e-3 and dt <= 60
    record(3, ok, f"sup error {sup:.2e}, norm of difference {nrm:.2e}; {dt:.1f} s")
    assert ok


# ------------------------------------------------------------- criterion 4

def test_criterion_4_holomorphy_order():
    zeta = -0.5 + 2.5j
    etas = (0.1, 0.05, 0.025, 0.0125)
    vals = [holomorphy_defect(zeta, eta, -0.5, 1.0).total for eta in etas]
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    ok = all(0.4 <= q <= 0.6 for q in ratios)
    record(4, ok, "ratios " + ", ".join(f"{q:.4f}" for q in ratios))
    assert ok


# ------------------------------------------------------------- criterion 5

def test_criterion_5_norm_bound():
    rng = np.random.default_rng(5)
    worst = -math.inf
    for _ in range(50):
        t = float(rng.uniform(2.0, 40.0))
        z = complex(-0.2, t if rng.random() < 0.5 else -t)
        excess = v_norm(exp_atom(z), -0.5, 1.0).total - e_zeta_norm_bound(z, -0.5, 1.0, 2.0, 0.2)
        worst = max(worst, excess)
    ok = worst <= 1e-8
    record(5, ok, f"max (norm - bound) over 50 ray points {worst:.3e}")
    assert ok


# ------------------------------------------------------------- criterion 6

def test_criterion_6_density_demo():
    t0 = time.perf_counter()
    res = density_demo(instance("zeta0"), -0.5, 1.0, -2.0, 1e-2, budget=60)
    reverified = verify_certificate(res.certificate)
    dt = time.perf_counter() - t0

    ns = node_grid(-2.0, 0.5, 2, 9, (-4.0, 4.0))
    z0 = -2.5 + 1.0j
    exact = fit_coefficients(exp_atom(z0), ns, -0.5, 1.0)
    k = int(np.argmin(np.abs(exact.expsum.nodes - z0)))
    coeff_err = max(abs(exact.expsum.coeffs[k] - 1.0),
                    float(np.abs(np.delete(exact.expsum.coeffs, k)).max(initial=0.0)))
    recovery_ok = exact.achieved_error <= 1e-10 and coeff_err <= 1e-10

    small = node_grid(-2.0, 0.5, 1, 9)
    a = fit_coefficients(instance("zeta0"), small, -0.5, 1.0)
    b = fit_coefficients(instance("zeta0"), small.union(node_grid(-2.0, 0.5, 2, 17)), -0.5, 1.0,
                         initial=a.expsum)
    nested_ok = b.achieved_error <= a.achieved_error + 1e-8

    demo_ok = (reverified <= 1e-2 and abs(reverified - res.fit.achieved_error) <= 1e-8
               and all(n <= 60 for n, _ in res.history))
    ok = demo_ok and recovery_ok and nested_ok and dt <= 120
    record(6, ok, f"re-verified achieved_error {reverified:.4f} with {len(res.fit.expsum)} nodes "
                  f"(target 1e-2, status {res.certificate['status']}); exact recovery "
                  f"{'ok' if recovery_ok else 'failed'}; nesting {'ok' if nested_ok else 'failed'} "
                  f"({a.achieved_error:.4f} -> {b.achieved_error:.4f}); {dt:.1f} s")
    assert ok


# ------------------------------------------------------------- criterion 7

def test_criterion_7_remainder_probe():
    t0 = time.perf_counter()
    L, rho = PowerDecay(0.5, 1.0), PowerDecay(1.0, 1.0)
    rep = remainder_probe(L, rho, -0.5, 1.0, C=1.0)
    doubled = remainder_probe(L, rho, -0.5, 1.0, b_samples=2 * 16, n_X=5)
    change = abs(doubled.norm_sup - rep.norm_sup) / rep.norm_sup
    ratio_err = float(np.abs(rep.windowed_ratio - np.sqrt(1.0 + rep.X)).max())
    dt = time.perf_counter() - t0
    ok = (math.isfinite(rep.norm_sup) and change <= 0.05 and ratio_err <= 1e-10
          and rep.crossing_X is not None and tuple(rep.b_interval) == pytest.approx((1.1, 2.1))
          and dt <= 60)
    record(7, ok, f"norm_sup {rep.norm_sup:.4f} (change {100 * change:.2f}% at doubled "
                  f"sampling), ratio error {ratio_err:.1e}, crossing_X {rep.crossing_X}; {dt:.1f} s")
    assert ok


# ------------------------------------------------------------- criterion 8

def test_criterion_8_wiener_ikehara():
    tr = wiener_ikehara_transfer(exp_atom(-1.0), 1.0)
    formula = tr.transform(3.0)
    direct, _ = tr.direct(3.0)
    transfer_ok = abs(formula - 1.5) <= 1e-8 and abs(direct - formula) <= 1e-8
    mono_ok = tr.monotone_on_grid(20.0, 10 ** 5)
    margins, reject_ok = [], True
    x = np.linspace(0.0, 40.0, 10 ** 6)
    for name in TRANSFER_INSTANCES:
        tau = instance(name)
        a_min = check_monotone_margin(tau)
        brute = max(0.0, float(-(tau._value(x) + tau._deriv(x)).min()))
        reject_ok &= brute - 1e-12 <= a_min <= brute + 1e-6
        if a_min > 0:
            try:
                wiener_ikehara_transfer(tau, a_min - 0.01)
                reject_ok = False
            except InsufficientShift as e:
                reject_ok &= e.a_min == a_min
        reject_ok &= wiener_ikehara_transfer(tau, a_min).monotone_on_grid(20.0, 10 ** 5)
        margins.append(f"{name} {a_min:.6f}")
    ok = transfer_ok and mono_ok and reject_ok
    record(8, ok, f"formula {formula.real:.12f}, direct {direct.real:.12f}; monotone "
                  f"{mono_ok}; a_min " + ", ".join(margins))
    assert ok


# ------------------------------------------------------------- criterion 9

CLI_RUNS = {
    "2": ["cauchy"],
    "6": ["demo", "--target", "instance:zeta0", "--alpha", "-0.5", "--r", "1", "--beta", "-2",
          "--eps", "1e-2", "--budget", "60"],
    "7": ["probe", "--L", "powerdecay:0.5", "--rho", "powerdecay:1", "--alpha", "-0.5",
          "--r", "1"],
}


def test_criterion_9_determinism(tmp_path):
    mismatched = []
    for label, args in CLI_RUNS.items():
        dirs = [tmp_path / f"{label}_{k}" for k in range(2)]
        for d in dirs:
            cli.main([*args, "--deterministic", "--out-dir", str(d)])
        names = sorted(p.name for p in dirs[0].iterdir())
        if names != sorted(p.name for p in dirs[1].iterdir()):
            mismatched.append(f"{label}: file sets")
        mismatched += [f"{label}: {n}" for n in names
                       if (dirs[0] / n).read_bytes() != (dirs[1] / n).read_bytes()]
    ok = not mismatched
    record(9, ok, "byte-identical outputs for criteria 2, 6, 7" if ok
           else "differences in " + ", ".join(mismatched))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
