import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monopole.errors import (ChartExcludedError, DirectionMismatchError, NotRealError,
                             PoleAtZeroError, ValidationError)
from monopole.minitwistor import (OrientedLine, SpectralCurvePoly, TwistorCoord, average_lines,
                                  centre_of, disk_samples, eta_of_point, from_twistor,
                                  point_coefficients, real_structure, reality_defect,
                                  to_twistor, zeta_of_direction, direction_of_zeta)

seeds = st.integers(0, 2**32 - 1)
coord = st.floats(-3, 3, allow_nan=False)


def random_line(rng, max_u3=0.9):
    while True:
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        if u[2] < max_u3:
            return OrientedLine.through(rng.standard_normal(3), u)


def test_line_invariants_checked():
    with pytest.raises(ValidationError):
        OrientedLine([1.0, 1.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        OrientedLine([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    line = OrientedLine.through([1.0, 2.0, 3.0], [0.0, 2.0, 0.0])
    assert np.allclose(line.v, [1.0, 0.0, 3.0])
    assert line.distance_to([1.0, 7.0, 3.0]) == pytest.approx(0.0)


def test_chart_examples():
    t = to_twistor(OrientedLine([0.0, 0.0, -1.0], [0.0, 0.0, 0.0]))
    assert (t.eta, t.zeta) == (0, 0)
    t = to_twistor(OrientedLine([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]))
    assert t.zeta == pytest.approx(1.0)
    assert t.eta == pytest.approx(2.0)
    with pytest.raises(ChartExcludedError):
        to_twistor(OrientedLine([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]))


def test_inverse_examples():
    line = from_twistor(TwistorCoord(0j, 0j))
    assert np.allclose(line.u, [0, 0, -1]) and np.allclose(line.v, 0)
    line = from_twistor(TwistorCoord(2 + 0j, 1 + 0j))
    assert np.allclose(line.u, [1, 0, 0], atol=1e-14) and np.allclose(line.v, [0, 0, 1], atol=1e-14)


def test_round_trip_hundred_lines(rng):
    worst = 0.0
    for _ in range(100):
        line = random_line(rng)
        back = from_twistor(to_twistor(line))
        worst = max(worst, np.abs(back.u - line.u).max(), np.abs(back.v - line.v).max())
    assert worst < 1e-10


@given(seeds)
def test_coordinate_round_trip(seed):
    rng = np.random.default_rng(seed)
    eta, zeta = complex(*rng.standard_normal(2)), complex(*rng.uniform(-2, 2, 2))
    t = to_twistor(from_twistor(TwistorCoord(eta, zeta)))
    assert abs(t.eta - eta) < 1e-10 and abs(t.zeta - zeta) < 1e-10


def test_eta_of_point_examples():
    assert eta_of_point(np.zeros(3), 0.7 - 2j) == 0
    assert eta_of_point([0.0, 0.0, 1.0], 1.0) == 2
    assert np.allclose(np.polynomial.polynomial.polyval(0.4j, point_coefficients([1, 2, 3])),
                       eta_of_point([1, 2, 3], 0.4j))


@given(seeds)
def test_incidence(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(3) * 2
    zeta = complex(*rng.uniform(-1.5, 1.5, 2))
    line = from_twistor(TwistorCoord(eta_of_point(x, zeta), zeta))
    assert line.distance_to(x) < 1e-10


def test_stereographic_round_trip(rng):
    u = rng.standard_normal((20, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    assert np.allclose(direction_of_zeta(zeta_of_direction(u)), u, atol=1e-12)
    assert np.isinf(zeta_of_direction([0.0, 0.0, 1.0]))


def test_real_structure_examples():
    t = real_structure(TwistorCoord(2 + 0j, 1 + 0j))
    assert t.eta == pytest.approx(-2) and t.zeta == pytest.approx(-1)
    with pytest.raises(PoleAtZeroError):
        real_structure(TwistorCoord(1j, 0j))


@given(seeds)
def test_real_structure_involution_and_reversal(seed):
    rng = np.random.default_rng(seed)
    t = TwistorCoord(complex(*rng.standard_normal(2)), complex(*rng.uniform(0.1, 2, 2)))
    back = real_structure(real_structure(t))
    assert abs(back.eta - t.eta) < 1e-12 and abs(back.zeta - t.zeta) < 1e-12
    line = random_line(rng, max_u3=0.9)
    if line.u[2] > -0.9:
        a = to_twistor(line.reversed())
        b = real_structure(to_twistor(line))
        assert abs(a.eta - b.eta) < 1e-10 and abs(a.zeta - b.zeta) < 1e-10


def test_lines_through_point_are_tau_covariant(rng):
    x = rng.standard_normal(3)
    for zeta in (0.3 + 0.4j, -1.2j, 2.0):
        t = TwistorCoord(eta_of_point(x, zeta), zeta)
        s = real_structure(t)
        assert abs(s.eta - eta_of_point(x, s.zeta)) < 1e-12


def test_average_lines(rng):
    u = np.array([0.0, 0.6, -0.8])
    a = OrientedLine.through([1.0, 0.0, 0.0], u)
    b = OrientedLine(u, -a.v)
    assert np.allclose(average_lines([a, b]).v, 0)
    assert average_lines([a]) == a
    lines = [OrientedLine.through(rng.standard_normal(3), u) for _ in range(3)]
    etas = [to_twistor(ln).eta for ln in lines]
    assert abs(to_twistor(average_lines(lines)).eta - np.mean(etas)) < 1e-10
    with pytest.raises(DirectionMismatchError):
        average_lines([a, OrientedLine.through([0, 0, 0], [1.0, 0.0, 0.0])])


def test_reality_defect_examples(rng):
    p = np.array([0.3, -0.2, 0.5])
    bps = SpectralCurvePoly(1, (-point_coefficients(p),))
    assert reality_defect(bps) < 1e-12
    broken = SpectralCurvePoly(1, (-point_coefficients(p) + np.array([0.3j, 0, 0]),))
    assert reality_defect(broken) > 0.1
    two = SpectralCurvePoly.from_points([p, rng.standard_normal(3)])
    assert reality_defect(two) < 1e-10


def test_curve_vanishes_on_lines_through_points(rng):
    pts = rng.standard_normal((3, 3))
    curve = SpectralCurvePoly.from_points(pts)
    zeta = 0.4 - 0.7j
    for x in pts:
        assert abs(curve(eta_of_point(x, zeta), zeta)) < 1e-12
    roots = np.sort_complex(curve.roots(zeta))
    assert np.allclose(roots, np.sort_complex(eta_of_point(pts, zeta)), atol=1e-10)


def test_degree_bounds_enforced():
    with pytest.raises(ValidationError):
        SpectralCurvePoly(1, (np.ones(4),))
    c = SpectralCurvePoly(2, (np.ones(1), np.ones(2)))
    assert [len(a) for a in c.a] == [3, 5]
    with pytest.raises(ValidationError):
        SpectralCurvePoly(2, (np.ones(3),))


def test_centre_examples():
    assert np.allclose(centre_of(SpectralCurvePoly(1, (np.zeros(3),))), 0)
    p = np.array([0.0, 0.0, 1.0])
    assert np.allclose(centre_of(SpectralCurvePoly(1, (-point_coefficients(p),))), p)
    q = np.array([[0.3, -0.2, 0.5], [-1.0, 0.4, 0.1]])
    assert np.allclose(centre_of(SpectralCurvePoly.from_points(q)), q.mean(axis=0))
    with pytest.raises(NotRealError):
        centre_of(SpectralCurvePoly(1, (np.array([1j, 0, 0]),)))


def test_curve_json_round_trip(rng):
    curve = SpectralCurvePoly.from_points(rng.standard_normal((2, 3)))
    back = SpectralCurvePoly.from_json(json.dumps(curve.to_json()))
    for a, b in zip(curve.a, back.a):
        assert np.array_equal(a, b)


def test_disk_samples():
    z = disk_samples(30)
    assert len(np.unique(z)) == 30 and np.abs(z).max() <= 0.9
    with pytest.raises(ValidationError):
        disk_samples(0)
