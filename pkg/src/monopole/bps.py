"""Closed-form charge-one BPS monopole.

With ``y = x - p`` and ``r = |y|``::

    Phi = (1/r - coth r) (y . e) / r
    A_j = (1/sinh r - 1/r) sum_i y_i [e^i, e^j] / r

Both profiles divided by ``r`` are even analytic functions of ``r``; below
``SERIES_RADIUS`` they are summed from their Taylor series in ``r^2`` so the
fields and their analytic derivatives stay accurate at the centre.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from . import su2
from .fields import FieldConfiguration

SERIES_RADIUS = 0.5
_NTERMS = 14



def _bernoulli(n):
    """Exact Bernoulli numbers B_0..B_n (Akiyama-Tanigawa)."""
    a = [Fraction(0)] * (n + 1)
    out = []
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return out


_B = _bernoulli(2 * _NTERMS + 2)
_n = np.arange(1, _NTERMS + 1)
# coth r - 1/r = sum_n C_n r^(2n-1); 1/sinh r - 1/r = sum_n S_n r^(2n-1)
_COTH = np.array([float(2 ** (2 * n) * _B[2 * n] / factorial(2 * n)) for n in _n])
_CSCH = np.array([float(-2 * (2 ** (2 * n - 1) - 1) * _B[2 * n] / factorial(2 * n)) for n in _n])
# coefficients in s = r^2 of phi(r)/r and a(r)/r
PHI_SERIES = -_COTH
A_SERIES = _CSCH
# (coth r - 1/r)^2 = sum_m D_m r^(2m), m >= 1; Laplacian gives 2m(2m+1) D_m r^(2m-2)
_SQ = np.convolve(_COTH, _COTH)[: _NTERMS]
ENERGY_SERIES = np.array([2 * m * (2 * m + 1) * _SQ[m - 1] for m in range(1, _NTERMS + 1)])
NORM_SERIES = _COTH


def _poly(c, s):
    return np.polynomial.polynomial.polyval(s, c)


def _dpoly(c, s):
    return np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(c))


def profiles(r):
    """Return ``(phi/r, a/r, d(phi/r)/dr / r, d(a/r)/dr / r)``.

    ``phi = 1/r - coth r`` and ``a = 1/sinh r - 1/r``.
    """
    r = np.asarray(r, dtype=float)
    small = r < SERIES_RADIUS
    rs = np.where(small, r, 0.0)
    s = rs * rs
    ps, as_ = _poly(PHI_SERIES, s), _poly(A_SERIES, s)
    dps, das = 2.0 * _dpoly(PHI_SERIES, s), 2.0 * _dpoly(A_SERIES, s)

    rl = np.where(small, 1.0, r)
    with np.errstate(over="ignore"):
        em = np.exp(-rl)
        csch = 2.0 * em / (1.0 - em * em)
    coth = 1.0 / np.tanh(rl)
    phi = 1.0 / rl - coth
    dphi = -1.0 / rl**2 + csch**2
    a = csch - 1.0 / rl
    da = -coth * csch + 1.0 / rl**2
    ps_l = phi / rl
    as_l = a / rl
    dps_l = ((dphi - ps_l) / rl) / rl
    das_l = ((da - as_l) / rl) / rl
    return (
        np.where(small, ps, ps_l),
        np.where(small, as_, as_l),
        np.where(small, dps, dps_l),
        np.where(small, das, das_l),
    )


def higgs_norm_profile(r):
    """``coth r - 1/r``."""
    r = np.asarray(r, dtype=float)
    small = r < SERIES_RADIUS
    rs = np.where(small, r, 0.0)
    rl = np.where(small, 1.0, r)
    return np.where(small, rs * _poly(NORM_SERIES, rs * rs), 1.0 / np.tanh(rl) - 1.0 / rl)


def energy_density_closed(r):
    """Closed-form energy density of the BPS monopole as a function of ``r``.

    ``6/tanh^4 r - 8/tanh^2 r + 2 + 2/r^4 - 8/(r tanh^3 r) + 8/(r tanh r)``,
    equal to the Laplacian of ``(coth r - 1/r)^2``; tends to 2/3 at r = 0.
    """
    r = np.asarray(r, dtype=float)
    small = r < SERIES_RADIUS
    rs = np.where(small, r, 0.0)
    rl = np.where(small, 1.0, r)
    c = 1.0 / np.tanh(rl)
    closed = 6 * c**4 - 8 * c**2 + 2 + 2 / rl**4 - 8 * c**3 / rl + 8 * c / rl
    return np.where(small, _poly(ENERGY_SERIES, rs * rs), closed)


bps_energy_density_closed = energy_density_closed


# [e^i, e^j] = eps_ijk e^k
_COMM = np.einsum("ijk,kab->ijab", su2.EPS, su2.BASIS)


@dataclass(frozen=True)
class BpsMonopole:
    p: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError(f"BPS location must be a finite 3-vector, got {self.p}")
        object.__setattr__(self, "p", tuple(float(v) for v in p))

    def _offset(self, x):
        y = np.asarray(x, dtype=float) - np.asarray(self.p)
        return y, np.linalg.norm(y, axis=-1)

    def higgs(self, x):
        y, r = self._offset(x)
        ps, _, _, _ = profiles(r)
        return ps[..., None, None] * su2.from_vector(y)

    def connection(self, x):
        y, r = self._offset(x)
        _, as_, _, _ = profiles(r)
        return as_[..., None, None, None] * np.einsum("...i,ijab->...jab", y, _COMM)

    def d_higgs(self, x):
        y, r = self._offset(x)
        ps, _, dps, _ = profiles(r)
        ye = su2.from_vector(y)
        return (dps[..., None, None, None] * y[..., :, None, None] * ye[..., None, :, :]
                + ps[..., None, None, None] * su2.BASIS)

    def d_connection(self, x):
        y, r = self._offset(x)
        _, as_, _, das = profiles(r)
        yc = np.einsum("...i,ijab->...jab", y, _COMM)
        return (das[..., None, None, None, None] * y[..., :, None, None, None] * yc[..., None, :, :, :]
                + as_[..., None, None, None, None] * _COMM)

    def higgs_norm(self, x):
        return higgs_norm_profile(self._offset(x)[1])

    def energy_density(self, x):
        return energy_density_closed(self._offset(x)[1])

    def config(self):
        params = np.array(list(self.p) + [1.0])
        return FieldConfiguration(
            self.connection, self.higgs, self.d_connection, self.d_higgs,
            charge=1, vev=1.0, kernel=("bps", params), name="bps",
            meta={"p": list(self.p)},
        )


def bps_config(p=(0.0, 0.0, 0.0)):
    """Field configuration of the BPS monopole centred at ``p``."""
    return BpsMonopole(tuple(p)).config()
