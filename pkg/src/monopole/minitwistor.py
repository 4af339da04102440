"""Oriented lines in R^3 and their mini-twistor coordinates.

A line is ``gamma(t) = v + t u`` with ``|u| = 1`` and ``u . v = 0``. In the
chart ``u != (0, 0, 1)``::

    zeta = (u1 + i u2) / (1 - u3)
    eta  = (v1 + i v2) + 2 v3 zeta + (-v1 + i v2) zeta^2

A spectral-curve polynomial ``eta^k + a_1(zeta) eta^(k-1) + ... + a_k(zeta)``
stores ``a_i`` as ascending coefficient vectors of length ``2i + 1``.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChartExcludedError,
    DirectionMismatchError,
    NotRealError,
    PoleAtZeroError,
    ValidationError,
)

LINE_TOL = 1e-12
CHART_TOL = 1e-12


def _vec3(a, name):
    a = np.asarray(a, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} must be a finite 3-vector")
    return a


@dataclass(frozen=True)
class OrientedLine:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = _vec3(self.u, "u")
        v = _vec3(self.v, "v")
        if abs(np.linalg.norm(u) - 1.0) > LINE_TOL:
            raise ValidationError(f"direction must be a unit vector, |u| = {np.linalg.norm(u)}")
        if abs(np.dot(u, v)) > LINE_TOL * max(1.0, np.linalg.norm(v)):
            raise ValidationError("moment must be orthogonal to the direction")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def through(cls, x, u):
        """The line through ``x`` with direction ``u`` (normalised here)."""
        x = _vec3(x, "x")
        u = _vec3(u, "u")
        u = u / np.linalg.norm(u)
        v = x - np.dot(x, u) * u
        v = v - np.dot(v, u) * u
        return cls(u, v)

    def point(self, t):
        return self.v + np.multiply.outer(t, self.u)

    def reversed(self):
        return OrientedLine(-self.u, self.v)

    def distance_to(self, x):
        y = np.asarray(x, dtype=float) - self.v
        return float(np.linalg.norm(y - np.dot(y, self.u) * self.u))

    def __eq__(self, other):
        return (isinstance(other, OrientedLine) and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v))

    def __hash__(self):
        return hash((tuple(self.u), tuple(self.v)))


@dataclass(frozen=True)
class TwistorCoord:
    eta: complex
    zeta: complex

    def __iter__(self):
        return iter((self.eta, self.zeta))


def zeta_of_direction(u):
    """Stereographic coordinate of a unit vector (``inf`` at the north pole)."""
    u = np.asarray(u, dtype=float)
    den = 1.0 - u[..., 2]
    num = u[..., 0] + 1j * u[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(np.abs(den) < CHART_TOL, complex(np.inf), num / np.where(den == 0, 1.0, den))
    return z[()] if z.ndim == 0 else z


def direction_of_zeta(zeta):
    """Inverse stereographic projection; ``inf`` maps to ``(0, 0, 1)``."""
    z = np.asarray(zeta, dtype=complex)
    fin = np.isfinite(z)
    zf = np.where(fin, z, 0.0)
    m = np.abs(zf) ** 2
    u = np.stack([2 * zf.real, 2 * zf.imag, m - 1.0], axis=-1) / (1.0 + m)[..., None]
    return np.where(fin[..., None], u, np.array([0.0, 0.0, 1.0]))


def eta_of_point(x, zeta):
    """``(x1 + i x2) + 2 x3 zeta + (-x1 + i x2) zeta^2``; broadcasts."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(zeta, dtype=complex)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return (x1 + 1j * x2) + 2 * x3 * z + (-x1 + 1j * x2) * z * z


def point_coefficients(x):
    """Ascending coefficients of ``zeta -> eta_of_point(x, zeta)``."""
    x = _vec3(x, "x")
    return np.array([x[0] + 1j * x[1], 2 * x[2], -x[0] + 1j * x[1]], dtype=complex)


def twistor_arrays(u, v):
    """Vectorised ``(eta, zeta)`` for arrays of directions and moments."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(1.0 - u[..., 2]) < CHART_TOL):
        raise ChartExcludedError("direction (0,0,1) lies outside the coordinate chart")
    zeta = (u[..., 0] + 1j * u[..., 1]) / (1.0 - u[..., 2])
    return eta_of_point(v, zeta), zeta


def lines_from_twistor(eta, zeta):
    """Vectorised inverse of :func:`twistor_arrays` for finite ``zeta``."""
    eta = np.asarray(eta, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    eta, zeta = np.broadcast_arrays(eta, zeta)
    if not np.all(np.isfinite(zeta)):
        raise ChartExcludedError("zeta must be finite in this chart")
    u = direction_of_zeta(zeta)
    # eta is real-linear in v: eta = sum_i v_i c_i(zeta); with u . v = 0 this is a 3x3 system
    c1 = 1.0 - zeta**2
    c2 = 1j * (1.0 + zeta**2)
    c3 = 2.0 * zeta
    Msys = np.stack(
        [
            np.stack([c1.real, c2.real, c3.real], axis=-1),
            np.stack([c1.imag, c2.imag, c3.imag], axis=-1),
            u,
        ],
        axis=-2,
    )
    rhs = np.stack([eta.real, eta.imag, np.zeros_like(eta.real)], axis=-1)
    v = np.linalg.solve(Msys, rhs[..., None])[..., 0]
    return u, v


def to_twistor(line):
    if abs(1.0 - line.u[2]) < CHART_TOL:
        raise ChartExcludedError("direction (0,0,1) lies outside the coordinate chart; reverse the line")
    eta, zeta = twistor_arrays(line.u, line.v)
    return TwistorCoord(complex(eta), complex(zeta))


def from_twistor(t):
    eta, zeta = t
    u, v = lines_from_twistor(eta, zeta)
    v = v - np.dot(v, u) * u
    return OrientedLine(u, v)


def real_structure(t):
    """``tau(eta, zeta) = (-conj(eta)/conj(zeta)^2, -1/conj(zeta))``."""
    eta, zeta = (complex(c) for c in t)
    if zeta == 0:
        raise PoleAtZeroError("real structure has a pole at zeta = 0 in this chart")
    zc = np.conj(zeta)
    return TwistorCoord(complex(-np.conj(eta) / zc**2), complex(-1.0 / zc))


def average_lines(lines, tol=1e-10):
    """Common direction, mean moment."""
    lines = list(lines)
    if not lines:
        raise ValidationError("need at least one line")
    u = lines[0].u
    for ln in lines[1:]:
        if np.abs(ln.u - u).max() > tol:
            raise DirectionMismatchError("lines to average must share a direction")
    v = np.mean([ln.v for ln in lines], axis=0)
    return OrientedLine(u, v - np.dot(v, u) * u)


def disk_samples(n, radius=0.9):
    """Deterministic, evenly spread points in the disk ``|zeta| <= radius``."""
    if n < 1:
        raise ValidationError("need at least one sample")
    idx = np.arange(n)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    rad = radius * np.sqrt((idx + 0.5) / n)
    return rad * np.exp(1j * golden * idx)


# ---------------------------------------------------------------------------
# spectral curves


@dataclass(frozen=True)
class SpectralCurvePoly:
    """``eta^k + sum_i a_i(zeta) eta^(k-i)``; ``a[i-1]`` has ``2i + 1`` coefficients."""

    k: int
    a: tuple
    residual: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValidationError("k must be a non-negative integer")
        if len(self.a) != self.k:
            raise ValidationError(f"expected {self.k} coefficient polynomials, got {len(self.a)}")
        coeffs = []
        for i, c in enumerate(self.a, start=1):
            c = np.asarray(c, dtype=complex).reshape(-1)
            if len(c) > 2 * i + 1:
                if np.any(np.abs(c[2 * i + 1:]) > 0):
                    raise ValidationError(f"a_{i} exceeds degree {2 * i}")
                c = c[: 2 * i + 1]
            coeffs.append(np.pad(c, (0, 2 * i + 1 - len(c))))
        object.__setattr__(self, "a", tuple(coeffs))

    def coefficient_values(self, zeta):
        """``[a_1(zeta), ..., a_k(zeta)]`` stacked on the last axis."""
        z = np.asarray(zeta, dtype=complex)
        vals = [np.polynomial.polynomial.polyval(z, c) for c in self.a]
        return np.stack(vals, axis=-1) if vals else np.zeros(z.shape + (0,), dtype=complex)

    def __call__(self, eta, zeta):
        eta = np.asarray(eta, dtype=complex)
        vals = self.coefficient_values(zeta)
        out = np.ones(np.broadcast(eta, np.asarray(zeta)).shape, dtype=complex)
        for i in range(self.k):
            out = out * eta + vals[..., i]
        return out

    def roots(self, zeta):
        """The ``k`` values of ``eta`` over ``zeta``."""
        vals = self.coefficient_values(complex(zeta))
        return np.roots(np.concatenate([[1.0], vals]))

    def __mul__(self, other):
        k = self.k + other.k
        mine = [np.array([1.0 + 0j])] + list(self.a)
        theirs = [np.array([1.0 + 0j])] + list(other.a)
        out = []
        for i in range(1, k + 1):
            acc = np.zeros(2 * i + 1, dtype=complex)
            for j in range(max(0, i - other.k), min(i, self.k) + 1):
                term = np.polynomial.polynomial.polymul(mine[j], theirs[i - j])
                acc[: len(term)] += term
            out.append(acc)
        return SpectralCurvePoly(k, tuple(out))

    @classmethod
    def from_points(cls, points):
        """Product of the k=1 curves ``eta - eta_of_point(p, zeta)``."""
        out = cls(0, ())
        for p in points:
            out = out * cls(1, (-point_coefficients(p),))
        return out

    def to_json(self):
        return {
            "k": self.k,
            "a": [[[float(c.real), float(c.imag)] for c in ai] for ai in self.a],
            "residual": float(self.residual),
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        a = tuple(np.array([complex(re, im) for re, im in ai]) for ai in obj["a"])
        return cls(int(obj["k"]), a, float(obj.get("residual", 0.0)))


def reality_defect(poly):
    """Largest violation of the coefficient reality conditions.

    A curve is fixed by the real structure iff, for each ``a_i`` with
    coefficients ``c_0 .. c_2i``, ``c_m = (-1)^(i+m) conj(c_(2i-m))``.
    """
    worst = 0.0
    for i, c in enumerate(poly.a, start=1):
        m = np.arange(2 * i + 1)
        sign = (-1.0) ** (i + m)
        worst = max(worst, float(np.abs(c - sign * np.conj(c[::-1])).max()))
    return worst


def centre_of(poly, tol=1e-3):
    """Point read from ``-a_1 / k`` through the incidence pattern."""
    if poly.k < 1:
        raise ValidationError("the centre needs k >= 1")
    defect = reality_defect(poly)
    if defect > tol:
        raise NotRealError(f"curve is not real: defect {defect:.3e}")
    c = -poly.a[0] / poly.k
    x1 = 0.5 * (c[0] - c[2]).real
    x2 = 0.5 * (c[0] + c[2]).imag
    x3 = 0.5 * c[1].real
    return np.array([x1, x2, x3])
