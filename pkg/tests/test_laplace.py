import math

import mpmath as mp
import numpy as np
import pytest

from conftest import random_base, random_expsum, random_s
from entire_laplace.errors import DomainError, ParameterError
from entire_laplace.expr import (CompactBump, ExpSum, Mollified, PowerDecay, damp, dilate, exp_atom,
                                 mollify, sine_modulate, window)
from entire_laplace.geometry import Rectangle
from entire_laplace.laplace import (boundary_trace, check_monotone_margin, direct_laplace,
                                    e_zeta_norm_bound, laplace, rect_sup_details, rect_sup_norm,
                                    stieltjes_transform, sup_deriv_norm, v_norm)
from entire_laplace.registry import instance


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# --------------------------------------------------------------- transforms

def test_laplace_examples():
    assert laplace(exp_atom(-1.0), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert laplace(ExpSum(), 0.3 + 1j) == 0.0


def test_pole_rejected_with_location():
    with pytest.raises(DomainError) as info:
        laplace(exp_atom(-1.0), -1.0)
    assert info.value.location == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        laplace(PowerDecay(0.5, 1.0), -2.0)


def test_exp_atom_closed_form_and_direct(rng):
    for _ in range(50):
        z = complex(rng.uniform(-3, -0.1), rng.uniform(-4, 4))
        s = complex(rng.uniform(-0.5, 2.0), rng.uniform(-4, 4))
        assert abs(laplace(exp_atom(z), s) - 1 / (s - z)) <= 1e-12 * max(1, abs(1 / (s - z)))
        s = random_s(rng)
        assert _rel(direct_laplace(exp_atom(z), s), 1 / (s - z)) <= 1e-9


def test_damping_identity(rng):
    for _ in range(50):
        f = random_base(rng)
        h = float(rng.uniform(0.05, 1.0))
        s = complex(rng.uniform(-0.2, 2.0), rng.uniform(-3, 3))
        if f.singularities():
            s = s + 0.5
        assert _rel(laplace(damp(f, h), s), laplace(f, s + h)) <= 1e-10


def test_dilation_identity(rng):
    for _ in range(50):
        f = random_base(rng)
        lam = float(rng.uniform(0.1, 2.0))
        s = random_s(rng)
        lhs = laplace(dilate(f, lam), s)
        assert _rel(lhs, laplace(f, s / (1 + lam)) / (1 + lam)) <= 1e-9
        assert _rel(lhs, direct_laplace(dilate(f, lam), s, tol=1e-10)) <= 1e-7


def test_windowed_against_direct(rng):
    for _ in range(50):
        f = random_base(rng)
        lam = float(rng.uniform(0.2, 1.5))
        s = random_s(rng)
        w = window(f, lam)
        assert _rel(laplace(w, s), direct_laplace(w, s, tol=1e-11)) <= 1e-7


def test_mollification_product(rng):
    for _ in range(50):
        f = random_base(rng)
        if isinstance(f, Mollified):
            f = f.inner  # keep the nested convolution out of the time-domain oracle
        lam = float(rng.uniform(0.1, 1.0))
        s = random_s(rng)
        m = mollify(f, lam)
        assert _rel(laplace(m, s), direct_laplace(m, s, tol=1e-10)) <= 1e-7


def test_modulation_identity(rng):
    for _ in range(50):
        f = random_base(rng)
        b = float(rng.uniform(0.3, 4.0))
        s = random_s(rng, re_range=(0.2, 2.0))
        g = sine_modulate(f, b)
        two_path = (laplace(f, s - 1j * b) - laplace(f, s + 1j * b)) / 2j
        assert _rel(laplace(g, s), two_path) <= 1e-12
        assert _rel(laplace(g, s), direct_laplace(g, s, tol=1e-10)) <= 1e-8


def _powerdecay_reference(s, p, c):
    s = mp.mpc(s)
    return complex(mp.exp(c * s) * mp.power(s, p - 1) * mp.gammainc(1 - p, c * s))


@pytest.mark.parametrize("p,c", [(0.5, 1.0), (0.3, 2.0), (0.8, 0.5)])
def test_powerdecay_against_incomplete_gamma(p, c):
    pts = [1.0, 0.5 + 3j, -0.5 + 1j, -2 - 0.3j, -0.5 + 0.01j, 0.01j, 40j, -1 + 1e-3j, 5 - 5j]
    f = PowerDecay(p, c)
    for s in pts:
        ref = _powerdecay_reference(s, p, c)
        assert abs(laplace(f, s) - ref) <= 1e-12 * abs(ref)


# ----------------------------------------------------------------- norms

def test_sup_deriv_examples():
    v, tail = sup_deriv_norm(exp_atom(-1.0))
    assert v == pytest.approx(1.0, abs=1e-12)
    f = ExpSum([-1.0, -2.0], [1.0, -1.0])
    x = np.linspace(0.0, 20.0, 10 ** 6)
    v, _ = sup_deriv_norm(f)
    assert abs(v - np.abs(f._deriv(x)).max()) <= 1e-8
    cb = CompactBump(1.0)
    v, tail = sup_deriv_norm(cb)
    x = np.linspace(0.0, 1.0, 10 ** 6)
    assert abs(v - np.abs(cb._deriv(x)).max()) <= 1e-8
    assert tail == 0.0


def _brute_boundary(f, rect, n=10 ** 5):
    t = np.linspace(0.0, 1.0, n // 4 + 1)
    c = rect.corners
    s = np.concatenate([c[k] + t * (c[(k + 1) % 4] - c[k]) for k in range(4)])
    return np.abs(f._transform(s)).max()


def test_rect_sup_examples():
    rect = Rectangle(-0.5, 1.0)
    f = exp_atom(-1.0)
    assert rect_sup_norm(f, rect) == pytest.approx(2.0, abs=1e-12)
    assert abs(rect_sup_norm(f, rect) - _brute_boundary(f, rect)) <= 1e-8
    assert rect_sup_norm(ExpSum(), rect) == 0.0
    g = ExpSum([-0.1 + 2j, -0.1 - 2j], [1.0, 1.0])
    v = rect_sup_norm(g, rect)
    assert math.isfinite(v)
    assert v >= _brute_boundary(g, rect) - 1e-9
    assert abs(v - _brute_boundary(g, rect)) <= 1e-6


def test_rect_sup_refinement_monotone():
    f = instance("standard")
    rep = rect_sup_details(f, Rectangle(-0.15, 1.5))
    hist = [h[1] for h in rep.history] if rep.history and isinstance(rep.history[0], tuple) \
        else list(rep.history)
    assert all(b >= a for a, b in zip(hist, hist[1:]))


def test_v_norm_examples():
    rep = v_norm(exp_atom(-1.0), -0.5, 1.0)
    assert rep.total == pytest.approx(3.0, abs=1e-10)
    assert rep.total == rep.deriv_sup + rep.rect_sup
    assert v_norm(ExpSum(), -0.5, 1.0).total == 0.0
    d = rep.to_dict()
    assert d["total"] == rep.total and "refinement_history" in d


def test_v_norm_rejects_pole_inside():
    with pytest.raises(DomainError) as info:
        v_norm(exp_atom(-0.2), -0.5, 1.0)
    assert info.value.location == pytest.approx(-0.2)


def test_triangle_inequality_and_homogeneity(rng):
    for _ in range(50):
        f, g = random_expsum(rng, re_range=(-2.5, -0.6)), random_expsum(rng, re_range=(-2.5, -0.6))
        nf, ng = v_norm(f, -0.5, 1.0).total, v_norm(g, -0.5, 1.0).total
        assert v_norm(f.concat(g), -0.5, 1.0).total <= nf + ng + 1e-8
        c = float(rng.uniform(-3.0, 3.0))
        assert abs(v_norm(c * f, -0.5, 1.0).total - abs(c) * nf) <= 1e-8 * max(1.0, abs(c) * nf)


def test_rect_sup_monotone_in_rectangle(rng):
    for _ in range(10):
        f = random_base(rng)
        if f.singularities():
            big, small = Rectangle(-0.1, 1.5), Rectangle(-0.05, 1.0)
        else:
            big, small = Rectangle(-1.0, 2.0), Rectangle(-0.5, 1.0)
        assert rect_sup_norm(f, big) >= rect_sup_norm(f, small) - 1e-12


def test_boundary_trace_shape():
    s, L = boundary_trace(exp_atom(-1.0), Rectangle(-0.5, 1.0), 16)
    assert s.shape == L.shape
    assert np.allclose(L, 1 / (s + 1))


def test_e_zeta_bound():
    assert e_zeta_norm_bound(-0.2 + 3j, -0.5, 1.0, 2.0, 0.2) == pytest.approx(4.2)
    assert e_zeta_norm_bound(-0.2 + 2j, -0.5, 1.0, 2.0, 0.2) == pytest.approx(1 + 0.2 + 2)
    with pytest.raises(ParameterError):
        e_zeta_norm_bound(-0.3 + 3j, -0.5, 1.0, 2.0, 0.2)


def test_e_zeta_norm_within_bound(rng):
    for _ in range(50):
        t = float(rng.uniform(2.0, 30.0))
        z = complex(-0.2, t if rng.random() < 0.5 else -t)
        assert v_norm(exp_atom(z), -0.5, 1.0).total <= e_zeta_norm_bound(z, -0.5, 1.0, 2.0,
                                                                          0.2) + 1e-8


def test_instances_decay_at_infinity():
    xs = 10.0 ** np.arange(1, 5)
    for name in ["exp_unit", "two_exp", "zeta0", "neg_exp"]:
        v = np.abs(instance(name)._value(xs))
        assert np.all((np.diff(v) < 0) | (v[1:] == 0.0))
    v = np.abs(PowerDecay(0.5, 1.0)._value(xs))
    assert np.all(np.diff(v) < 0)


# -------------------------------------------------------------- Stieltjes

def test_stieltjes_examples():
    assert stieltjes_transform(exp_atom(-1.0), 1.0, 3.0) == pytest.approx(1.5, abs=1e-14)
    assert stieltjes_transform(ExpSum(), 0.0, 2.0 + 1j) == 0.0
    # tau = 0: S = a e^x with S(0-) = a, so there is no jump and only a e^x dx remains
    for s in (2.0, 3.0 + 1j):
        assert stieltjes_transform(ExpSum(), 1.0, s) == pytest.approx(1.0 / (s - 1.0))


def test_stieltjes_entire_part_bounded_near_one():
    cb = CompactBump(2.0)
    ring = 1.0 + 0.3 * np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
    part = np.array([stieltjes_transform(cb, 0.0, s) for s in ring])
    assert np.all(np.isfinite(part)) and np.abs(part).max() < 10.0
    inner = np.array([stieltjes_transform(cb, 0.0, s) for s in 1.0 + 0.05 * ring - 0.05])
    assert np.abs(inner).max() < 10.0
    with_pole = stieltjes_transform(cb, 1.0, 1.0 + 1e-6)
    assert abs(with_pole) > 1e5


def test_monotone_margin_examples():
    assert check_monotone_margin(exp_atom(-1.0)) == pytest.approx(0.0, abs=1e-12)
    assert check_monotone_margin(exp_atom(-1.0, -1.0)) == pytest.approx(0.0, abs=1e-12)
    f = instance("sine_bump")
    x = np.linspace(0.0, 2.0, 10 ** 6)
    brute = max(0.0, float(-(f._value(x) + f._deriv(x)).min()))
    assert abs(check_monotone_margin(f) - brute) <= 1e-6
