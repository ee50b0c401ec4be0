import math

import numpy as np
import pytest

from entire_laplace.contour import (SEGMENTS, ContourSpec, build_gamma, cauchy_check,
                                    choose_truncation, contour_csv_rows, contour_to_expsum,
                                    holomorphy_defect, pointwise_tail_bound, ray_tail_bound)
from entire_laplace.errors import DomainError, ParameterError
from entire_laplace.expr import CompactBump, ExpSum, PowerDecay, damp, mollify
from entire_laplace.laplace import laplace, v_norm
from entire_laplace.registry import STANDARD_CONTOUR, STANDARD_NORM_RECT, STANDARD_S, instance


@pytest.fixture(scope="module")
def standard():
    return instance("standard"), build_gamma(**STANDARD_CONTOUR)


# ------------------------------------------------------------ construction

def test_node_real_parts():
    spec = build_gamma(0.2, -0.6, 2.0, 10.0)
    assert np.all(spec.nodes.real >= -0.6 - 1e-15)
    assert np.all(spec.nodes.real <= -0.2 + 1e-15)


def test_direction_integral_telescopes():
    for xi in (10.0, 40.0):
        spec = build_gamma(0.2, -0.6, 2.0, xi)
        # endpoints -h - i xi and -h + i xi
        assert abs(spec.weights.sum() - 2j * xi) <= 1e-10


def test_arclengths():
    spec = build_gamma(0.2, -0.6, 2.0, 10.0, 8)
    for name in SEGMENTS:
        assert abs(spec.segment_arclength(name) - spec.analytic_arclength(name)) <= 1e-10
    total = 2 * (10.0 - 2.0) + 2 * 0.4 + 4.0
    assert abs(np.abs(spec.weights).sum() - total) <= 1e-10
    assert spec.total_arclength == pytest.approx(total)


def test_orientation_and_symmetry():
    spec = build_gamma(0.2, -0.6, 2.0, 10.0)
    d = spec.directions
    ray_up = spec.segment == "ray-upper"
    ray_lo = spec.segment == "ray-lower"
    assert np.allclose(d[ray_up], 1j) and np.allclose(d[ray_lo], 1j)
    assert np.allclose(d[spec.segment == "left"], 1j)
    assert np.allclose(d[spec.segment == "top"], 1.0)
    assert np.allclose(d[spec.segment == "bottom"], -1.0)
    assert np.array_equal(spec.nodes, np.conj(spec.nodes[::-1]))
    assert np.array_equal(spec.weights, -np.conj(spec.weights[::-1]))


def test_build_validation():
    with pytest.raises(ParameterError):
        build_gamma(0.7, -0.6, 2.0, 10.0)
    with pytest.raises(ParameterError):
        build_gamma(0.2, -0.6, 2.0, 1.5)
    with pytest.raises(ParameterError):
        build_gamma(0.2, 0.1, 2.0, 10.0)


def test_spec_round_trip():
    spec = build_gamma(**STANDARD_CONTOUR)
    again = ContourSpec.from_dict(spec.to_dict())
    assert np.array_equal(spec.nodes, again.nodes)
    assert np.array_equal(spec.weights, again.weights)
    rows = contour_csv_rows(spec)
    assert len(rows) == spec.nodes.size and rows[0][4] == "ray-lower"


# ------------------------------------------------------------ Cauchy

def test_cauchy_examples(standard):
    f, spec = standard
    for s in (0.5, 2.0):
        assert cauchy_check(f, spec, s).residual <= 1e-6
    assert cauchy_check(ExpSum(), spec, 0.5).residual == 0.0


def test_cauchy_standard_points_and_convergence(standard):
    f, spec = standard
    reps = cauchy_check(f, spec, np.array(STANDARD_S))
    assert max(r.residual for r in reps) <= 1e-6
    assert all(r.residual <= r.budget + 1e-12 for r in reps)
    finer = build_gamma(**dict(STANDARD_CONTOUR, nodes_per_unit=16))
    reps2 = cauchy_check(f, finer, np.array(STANDARD_S))
    assert max(r.residual for r in reps) >= 4 * max(r.residual for r in reps2)


def test_cauchy_transform_reference_agrees(standard):
    f, spec = standard
    a = cauchy_check(f, spec, 0.3j, reference="direct")
    b = cauchy_check(f, spec, 0.3j, reference="transform")
    assert abs(a.lhs - b.lhs) <= 1e-10


def test_cauchy_rejects_points_left_of_contour(standard):
    f, spec = standard
    with pytest.raises(DomainError):
        cauchy_check(f, spec, -0.7)
    with pytest.raises(DomainError):
        cauchy_check(damp(PowerDecay(0.5), 0.2), spec, 0.5)


def test_cauchy_needs_matching_damping():
    spec = build_gamma(**STANDARD_CONTOUR)
    with pytest.raises(ParameterError):
        cauchy_check(damp(mollify(CompactBump(4.0), 2.0), 0.3), spec, 0.5)


# -------------------------------------------------------------- tails

def test_ray_tail_decay_rate(standard):
    f, _ = standard
    xis = np.array([20.0, 40.0, 80.0])
    bounds = [ray_tail_bound(f, build_gamma(**dict(STANDARD_CONTOUR, xi=x))) for x in xis]
    slope = np.polyfit(np.log(xis), np.log(bounds), 1)[0]
    assert slope <= -1.99


def test_ray_tail_dominates_discarded_part(standard):
    f, spec = standard
    longer = build_gamma(**dict(STANDARD_CONTOUR, xi=2 * spec.xi))
    s = np.array(STANDARD_S)
    for z, a, b in zip(s, cauchy_check(f, spec, s), cauchy_check(f, longer, s)):
        assert abs(a.rhs - b.rhs) <= a.tail_bound
    rec, rec_long = contour_to_expsum(f, spec), contour_to_expsum(f, longer, estimate=False)
    tail = ray_tail_bound(f, spec, STANDARD_NORM_RECT[1])
    diff = v_norm(rec.expsum.concat(rec_long.expsum.scaled(-1.0)), *STANDARD_NORM_RECT).total
    assert diff <= tail
    assert ray_tail_bound(ExpSum(), spec) == 0.0


def test_choose_truncation(standard):
    f, spec = standard
    xi = choose_truncation(f, 0.2, 2.0, 1e-6)
    assert ray_tail_bound(f, build_gamma(0.2, -0.6, 2.0, xi)) <= 1e-7 * (1 + 1e-9)
    assert ray_tail_bound(f, build_gamma(0.2, -0.6, 2.0, 0.99 * xi)) > 1e-7


# ------------------------------------------------------- reconstruction

def test_reconstruction_accuracy(standard):
    f, spec = standard
    rec = contour_to_expsum(f, spec, alpha=STANDARD_NORM_RECT[0], r=STANDARD_NORM_RECT[1])
    x = np.linspace(0.0, 20.0, 2001)
    assert np.abs(rec.expsum._value(x) - f._value(x)).max() <= 1e-5
    assert v_norm(rec.expsum - f, *STANDARD_NORM_RECT).total <= 1e-3
    assert rec.expsum.is_real
    assert np.all(rec.expsum.nodes.real <= -spec.h + 1e-15)
    assert abs(pointwise_tail_bound(f, spec) - rec.pointwise_tail) == 0.0


def test_reconstruction_is_real(standard):
    f, spec = standard
    es = contour_to_expsum(f, spec, estimate=False).expsum
    x = np.linspace(0.0, 20.0, 101)
    terms = np.exp(np.outer(x, es.nodes)) @ es.coeffs
    assert np.abs(terms.imag).max() <= 1e-12


def test_reconstruction_transform_matches(standard):
    f, spec = standard
    es = contour_to_expsum(f, spec, estimate=False).expsum
    for s in STANDARD_S:
        assert abs(laplace(es, s) - laplace(f, s)) <= 1e-5


def test_empty_reconstruction():
    spec = build_gamma(**STANDARD_CONTOUR)
    assert len(contour_to_expsum(ExpSum(), spec).expsum) == 0


# -------------------------------------------------------------- holomorphy

def test_holomorphy_linear_rate():
    zeta = -0.5 + 2.5j
    vals = [holomorphy_defect(zeta, eta, -0.5, 1.0).total for eta in (0.1, 0.05, 0.025, 0.0125)]
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    assert all(0.4 <= q <= 0.6 for q in ratios)
    with pytest.raises(ParameterError):
        holomorphy_defect(zeta, 0.0, -0.5, 1.0)
