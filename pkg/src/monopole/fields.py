"""Field configurations (A, Phi) on R^3 and their differential operators.

Callables are vectorised: ``connection(x)`` maps ``(..., 3)`` points to
``(..., 3, 2, 2)``, ``higgs(x)`` to ``(..., 2, 2)``. Optional analytic
derivatives use the index order ``d_connection(x)[..., i, j] = d_i A_j`` and
``d_higgs(x)[..., i] = d_i Phi``. Without them, central differences of
second order are used.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import su2
from .errors import QuadratureNotConvergedError, StepTooSmallError, ValidationError

MIN_STEP = 1e-8
DEFAULT_STEP = 1e-4
DEFAULT_LAPLACIAN_STEP = 1e-3

_UNIT = np.eye(3)
# (i, j) pairs giving the dual components B = (F23, F31, F12)
_DUAL = ((1, 2), (2, 0), (0, 1))


@dataclass(frozen=True)
class FieldConfiguration:
    """A candidate monopole.

    ``vev`` is the norm of Phi at infinity and ``kernel`` optionally names a
    compiled field routine ``(kind, params)`` used by the fast scattering path.
    """

    connection: Callable
    higgs: Callable
    d_connection: Optional[Callable] = None
    d_higgs: Optional[Callable] = None
    charge: int = 0
    vev: float = 1.0
    kernel: Optional[tuple] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if int(self.charge) != self.charge or self.charge < 0:
            raise ValidationError(f"charge must be a non-negative integer, got {self.charge}")
        if (self.d_connection is None) != (self.d_higgs is None):
            raise ValidationError("analytic derivatives must be given for both A and Phi")

    @property
    def has_derivatives(self):
        return self.d_connection is not None

    def without_derivatives(self):
        return replace(self, d_connection=None, d_higgs=None)

    def without_kernel(self):
        return replace(self, kernel=None)


@dataclass(frozen=True)
class GaugeTransform:
    """Pointwise SU(2)-valued map with optional first and second derivatives."""

    g: Callable
    dg: Optional[Callable] = None
    ddg: Optional[Callable] = None

    @property
    def has_derivatives(self):
        return self.dg is not None and self.ddg is not None


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (3,):
        raise ValidationError(f"points must have trailing dimension 3, got {x.shape}")
    return x


def _check_step(h):
    if not h > MIN_STEP:
        raise StepTooSmallError(f"step {h} below {MIN_STEP}")


def _central(f, x, h):
    """Central differences ``d_i f`` stacked on a new axis after the point axes."""
    out = []
    for i in range(3):
        dx = h * _UNIT[i]
        out.append((f(x + dx) - f(x - dx)) / (2.0 * h))
    return np.stack(out, axis=x.ndim - 1)


def derivatives(cfg, x, h=DEFAULT_STEP):
    """Return ``(dA, dPhi)`` at ``x``; analytic when available."""
    x = _points(x)
    if cfg.has_derivatives:
        return cfg.d_connection(x), cfg.d_higgs(x)
    _check_step(h)
    return _central(cfg.connection, x, h), _central(cfg.higgs, x, h)


def _curvature_from(A, dA):
    F = []
    for i, j in _DUAL:
        F.append(dA[..., i, j, :, :] - dA[..., j, i, :, :] + su2.bracket(A[..., i, :, :], A[..., j, :, :]))
    return np.stack(F, axis=-3)


def _cov_higgs_from(A, Phi, dPhi):
    return dPhi + su2.bracket(A, Phi[..., None, :, :])


def curvature(cfg, x, h=DEFAULT_STEP):
    """Dual curvature components ``(F23, F31, F12)``, shape ``(..., 3, 2, 2)``."""
    _check_step(h)
    x = _points(x)
    dA, _ = derivatives(cfg, x, h)
    return _curvature_from(cfg.connection(x), dA)


def cov_deriv_higgs(cfg, x, h=DEFAULT_STEP):
    """``(grad_A Phi)_i = d_i Phi + [A_i, Phi]``, shape ``(..., 3, 2, 2)``."""
    _check_step(h)
    x = _points(x)
    _, dPhi = derivatives(cfg, x, h)
    return _cov_higgs_from(cfg.connection(x), cfg.higgs(x), dPhi)


def _local_terms(cfg, x, h):
    _check_step(h)
    x = _points(x)
    dA, dPhi = derivatives(cfg, x, h)
    A = cfg.connection(x)
    Phi = cfg.higgs(x)
    return _curvature_from(A, dA), _cov_higgs_from(A, Phi, dPhi), Phi


def bogomolny_residual(cfg, x, h=DEFAULT_STEP):
    """Largest component norm of ``F - *grad Phi``; zero for solutions."""
    F, D, _ = _local_terms(cfg, x, h)
    return su2.norm(F - D).max(axis=-1)


def energy_density(cfg, x, h=DEFAULT_STEP, convention="printed"):
    """Energy density.

    ``printed``: (1/2) sum_{i<j} <F,F> + (1/4) sum_i <D_i Phi, D_i Phi>.
    ``bianchi``: sum_{i<j} <F,F> + sum_i <D_i Phi, D_i Phi>, which equals
    the Laplacian of <Phi, Phi> on solutions.
    """
    F, D, _ = _local_terms(cfg, x, h)
    f2 = su2.inner(F, F).sum(axis=-1)
    d2 = su2.inner(D, D).sum(axis=-1)
    if convention == "printed":
        return 0.5 * f2 + 0.25 * d2
    if convention == "bianchi":
        return f2 + d2
    raise ValidationError(f"unknown energy convention {convention!r}")


def bogomolny_gap_density(cfg, x, h=DEFAULT_STEP):
    """``sum_i |F_i - D_i Phi|^2`` in the bianchi normalisation."""
    F, D, _ = _local_terms(cfg, x, h)
    diff = F - D
    return su2.inner(diff, diff).sum(axis=-1)


def energy_density_laplacian(cfg, x, h=DEFAULT_LAPLACIAN_STEP):
    """Second central differences of ``<Phi, Phi>``."""
    _check_step(h)
    x = _points(x)

    def sq(y):
        P = cfg.higgs(y)
        return su2.inner(P, P)

    centre = sq(x)
    total = np.zeros_like(centre)
    for i in range(3):
        dx = h * _UNIT[i]
        total += sq(x + dx) - 2.0 * centre + sq(x - dx)
    return total / h**2


def grid_gradient(values, spacing):
    """Fourth-order central differences on a regular grid.

    ``values`` has three leading grid axes; the result drops two points on
    each side and stacks ``d_i`` on a new axis after the grid axes.
    """
    values = np.asarray(values)
    if min(values.shape[:3]) < 5:
        raise ValidationError("fourth-order differences need at least 5 points per axis")
    inner = (slice(2, -2),) * 3
    out = []
    for i in range(3):
        def shift(k):
            sl = list(inner)
            sl[i] = slice(2 + k, values.shape[i] - 2 + k)
            return values[tuple(sl)]
        out.append((-shift(2) + 8 * shift(1) - 8 * shift(-1) + shift(-2)) / (12.0 * spacing[i]))
    return np.stack(out, axis=3)


def grid_bogomolny_residual(spacing, A, Phi):
    """Bogomolny residual at the interior points of sampled fields."""
    dA = grid_gradient(A, spacing)
    dPhi = grid_gradient(Phi, spacing)
    inner = (slice(2, -2),) * 3
    F = _curvature_from(A[inner], dA)
    D = _cov_higgs_from(A[inner], Phi[inner], dPhi)
    return su2.norm(F - D).max(axis=-1)


def higgs_norm(cfg, x):
    return su2.norm(cfg.higgs(_points(x)))


# ---------------------------------------------------------------------------
# transformations


def gauge_apply(cfg, gt):
    """``(g A g^-1 + g d(g^-1), g Phi g^-1)``."""
    dag = su2.dagger

    def connection(x):
        g = gt.g(x)
        gi = dag(g)[..., None, :, :]
        gg = g[..., None, :, :]
        dg = gt.dg(x) if gt.dg is not None else _central(gt.g, x, DEFAULT_STEP)
        return gg @ cfg.connection(x) @ gi - dg @ gi

    def higgs(x):
        g = gt.g(x)
        return g @ cfg.higgs(x) @ dag(g)

    d_connection = d_higgs = None
    if cfg.has_derivatives and gt.has_derivatives:

        def d_higgs(x):
            g = gt.g(x)
            gi = dag(g)
            dg = gt.dg(x)
            dgi = -gi[..., None, :, :] @ dg @ gi[..., None, :, :]
            P = cfg.higgs(x)[..., None, :, :]
            gg = g[..., None, :, :]
            return dg @ P @ gi[..., None, :, :] + gg @ cfg.d_higgs(x) @ gi[..., None, :, :] + gg @ P @ dgi

        def d_connection(x):
            g = gt.g(x)
            gi = dag(g)
            dg = gt.dg(x)
            ddg = gt.ddg(x)
            dgi = -gi[..., None, :, :] @ dg @ gi[..., None, :, :]
            A = cfg.connection(x)
            dA = cfg.d_connection(x)
            # index layout [..., i (derivative), j (component), 2, 2]
            g4 = g[..., None, None, :, :]
            gi4 = gi[..., None, None, :, :]
            dgi_i = dgi[..., :, None, :, :]
            dg_i = dg[..., :, None, :, :]
            dg_j = dg[..., None, :, :, :]
            A_j = A[..., None, :, :, :]
            out = dg_i @ A_j @ gi4 + g4 @ dA @ gi4 + g4 @ A_j @ dgi_i
            out -= ddg @ gi4 + dg_j @ dgi_i
            return out

    return replace(cfg, connection=connection, higgs=higgs, d_connection=d_connection,
                   d_higgs=d_higgs, kernel=None)


def constant_gauge(g0):
    g0 = su2.check_group(g0, tol=1e-10)

    def g(x):
        return np.broadcast_to(g0, np.shape(x)[:-1] + (2, 2)).copy()

    def dg(x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2), dtype=complex)

    def ddg(x):
        return np.zeros(np.shape(x)[:-1] + (3, 3, 2, 2), dtype=complex)

    return GaugeTransform(g, dg, ddg)


def exp_gauge(f, df, ddf, axis=(0.0, 0.0, 1.0)):
    """``g(x) = exp(f(x) N)`` with ``N = axis . e``, derivatives exact.

    ``f`` returns ``(...)``, ``df`` ``(..., 3)`` and ``ddf`` ``(..., 3, 3)``.
    """
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    M = 2.0 * su2.from_vector(n)  # M^2 = -1

    def parts(x):
        half = 0.5 * f(x)
        return np.cos(half)[..., None, None], np.sin(half)[..., None, None]

    def g(x):
        c, s = parts(x)
        return c * su2.IDENTITY + s * M

    def dg(x):
        c, s = parts(x)
        lin = -0.5 * s * su2.IDENTITY + 0.5 * c * M
        return df(x)[..., None, None] * lin[..., None, :, :]

    def ddg(x):
        c, s = parts(x)
        lin = (-0.5 * s * su2.IDENTITY + 0.5 * c * M)[..., None, None, :, :]
        quad = (-0.25 * c * su2.IDENTITY - 0.25 * s * M)[..., None, None, :, :]
        d1 = df(x)
        return ddf(x)[..., None, None] * lin + (d1[..., :, None] * d1[..., None, :])[..., None, None] * quad

    return GaugeTransform(g, dg, ddg)


def bump_gauge(amplitude, centre=(0.0, 0.0, 0.0), width=1.0, axis=(0.0, 0.0, 1.0)):
    """Framed gauge transform ``exp(f N)`` with a Gaussian bump ``f``; g -> 1 at infinity."""
    c0 = np.asarray(centre, dtype=float)
    w2 = float(width) ** 2

    def f(x):
        y = x - c0
        return amplitude * np.exp(-np.sum(y * y, axis=-1) / w2)

    def df(x):
        y = x - c0
        return (-2.0 / w2) * f(x)[..., None] * y

    def ddf(x):
        y = x - c0
        fx = f(x)[..., None, None]
        return fx * ((4.0 / w2**2) * y[..., :, None] * y[..., None, :] - (2.0 / w2) * np.eye(3))

    return exp_gauge(f, df, ddf, axis)


def random_framed_gauge(rng, scale=1.0):
    """Random bump gauge transform near the origin."""
    axis = rng.standard_normal(3)
    centre = rng.uniform(-1.0, 1.0, 3)
    return bump_gauge(rng.uniform(0.5, 2.5) * scale, centre, rng.uniform(0.8, 2.0), axis)


def scale(cfg, c):
    """``(c A(c x), c Phi(c x))``; preserves the Bogomolny equation."""
    c = float(c)
    if not c > 0:
        raise ValidationError(f"scale factor must be positive, got {c}")
    d_connection = d_higgs = None
    if cfg.has_derivatives:
        def d_connection(x):
            return c * c * cfg.d_connection(c * _points(x))

        def d_higgs(x):
            return c * c * cfg.d_higgs(c * _points(x))

    return replace(
        cfg,
        connection=lambda x: c * cfg.connection(c * _points(x)),
        higgs=lambda x: c * cfg.higgs(c * _points(x)),
        d_connection=d_connection,
        d_higgs=d_higgs,
        vev=c * cfg.vev,
        kernel=None,
    )


def rotate(cfg, R):
    """Spatial rotation: ``A'_i(x) = R_ij A_j(R^T x)``, ``Phi'(x) = Phi(R^T x)``."""
    R = np.asarray(R, dtype=float)

    def back(x):
        return _points(x) @ R  # R^T x for row vectors

    d_connection = d_higgs = None
    if cfg.has_derivatives:
        def d_connection(x):
            return np.einsum("ij,kl,...ljab->...kiab", R, R, cfg.d_connection(back(x)))

        def d_higgs(x):
            return np.einsum("kl,...lab->...kab", R, cfg.d_higgs(back(x)))

    return replace(
        cfg,
        connection=lambda x: np.einsum("ij,...jab->...iab", R, cfg.connection(back(x))),
        higgs=lambda x: cfg.higgs(back(x)),
        d_connection=d_connection,
        d_higgs=d_higgs,
        kernel=None,
    )


def translate(cfg, a):
    a = np.asarray(a, dtype=float)
    d_connection = d_higgs = None
    if cfg.has_derivatives:
        def d_connection(x):
            return cfg.d_connection(_points(x) - a)

        def d_higgs(x):
            return cfg.d_higgs(_points(x) - a)

    return replace(
        cfg,
        connection=lambda x: cfg.connection(_points(x) - a),
        higgs=lambda x: cfg.higgs(_points(x) - a),
        d_connection=d_connection,
        d_higgs=d_higgs,
        kernel=None,
    )


# ---------------------------------------------------------------------------
# simple configurations


def constant_config(phi, charge=0):
    """A = 0 with constant Higgs field ``phi``."""
    phi = su2.check_algebra(phi, tol=1e-10)

    def connection(x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2), dtype=complex)

    def higgs(x):
        return np.broadcast_to(phi, np.shape(x)[:-1] + (2, 2)).copy()

    def d_connection(x):
        return np.zeros(np.shape(x)[:-1] + (3, 3, 2, 2), dtype=complex)

    def d_higgs(x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2), dtype=complex)

    return FieldConfiguration(connection, higgs, d_connection, d_higgs, charge=charge,
                              vev=float(su2.norm(phi)), name="constant")


VACUUM_HIGGS = np.diag([1j, -1j])


def vacuum_config(phi=VACUUM_HIGGS):
    """Zero connection, constant diagonal Higgs field (charge 0)."""
    phi = np.asarray(phi, dtype=complex)
    cfg = constant_config(phi)
    if np.allclose(phi, np.diag(np.diag(phi))):
        cfg = replace(cfg, kernel=("vacuum", np.array([np.imag(phi[0, 0])])))
    return replace(cfg, name="vacuum")


# ---------------------------------------------------------------------------
# energy integrals


def sphere_grid(n_theta=32, n_phi=64):
    """Unit normals and weights of a Gauss (polar) x uniform (azimuth) grid."""
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - ct**2)
    n = np.stack(
        [st[:, None] * np.cos(ph)[None, :], st[:, None] * np.sin(ph)[None, :],
         np.broadcast_to(ct[:, None], (n_theta, n_phi))],
        axis=-1,
    ).reshape(-1, 3)
    w = np.broadcast_to(wt[:, None] * (2.0 * np.pi / n_phi), (n_theta, n_phi)).reshape(-1)
    return n, w


def surface_flux(cfg, R, centre=(0.0, 0.0, 0.0), n_theta=32, n_phi=64, h=DEFAULT_STEP):
    """``oint 2 n_i <B_i, Phi> dA`` over the sphere of radius ``R``."""
    n, w = sphere_grid(n_theta, n_phi)
    x = np.asarray(centre, dtype=float) + R * n
    F, _, Phi = _local_terms(cfg, x, h)
    flux = np.einsum("qi,qi->q", n, su2.inner(F, Phi[:, None]))
    return 2.0 * R * R * np.dot(w, flux)


def ball_integral(func, R, centre=(0.0, 0.0, 0.0), n_radial=48, n_theta=24, n_phi=48):
    """Integral of a vectorised point function over the ball of radius ``R``."""
    r, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * R * (r + 1.0)
    wr = 0.5 * R * wr * r * r
    n, w = sphere_grid(n_theta, n_phi)
    x = np.asarray(centre, dtype=float) + r[:, None, None] * n[None, :, :]
    vals = func(x.reshape(-1, 3)).reshape(n_radial, -1)
    return float(np.einsum("r,q,rq->", wr, w, vals))


def _extrapolate(radii, values):
    """Neville extrapolation to 1/R -> 0."""
    t = 1.0 / np.asarray(radii, dtype=float)
    p = np.array(values, dtype=float)
    n = len(t)
    for m in range(1, n):
        p[: n - m] = (t[m:] * p[: n - m] - t[: n - m] * p[1 : n - m + 1]) / (t[m:] - t[: n - m])
    return p[0]


@dataclass(frozen=True)
class EnergyReport:
    radii: np.ndarray
    surface: np.ndarray
    extrapolated: float
    previous: float
    ball: float
    ball_radius: float
    ball_gap: float

    @property
    def bound_defect(self):
        """``ball - gap - surface`` at the ball radius (Bogomolny bound identity)."""
        return self.ball - self.ball_gap - self.surface[0]


def total_energy(cfg, radii=(8.0, 10.0, 12.0, 16.0), centre=(0.0, 0.0, 0.0), h=DEFAULT_STEP,
                 n_theta=32, n_phi=64, n_radial=48, rtol=1e-3, atol=1e-10):
    """Total energy (bianchi normalisation) from the surface term.

    Surface fluxes at each radius are extrapolated polynomially in 1/R.
    The ball integral of the energy density over the first radius is returned
    alongside for the Bogomolny-bound cross-check.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2 or np.any(np.diff(radii) <= 0):
        raise ValidationError("radii must be an increasing list of at least two values")
    surface = np.array([surface_flux(cfg, R, centre, n_theta, n_phi, h) for R in radii])
    best = _extrapolate(radii, surface)
    prev = _extrapolate(radii[1:], surface[1:])
    if abs(best - prev) > rtol * max(abs(best), 1.0) + atol:
        raise QuadratureNotConvergedError(
            f"surface extrapolation unstable: {best:.6g} vs {prev:.6g}")
    R0 = radii[0]
    ball = ball_integral(lambda y: energy_density(cfg, y, h, "bianchi"), R0, centre, n_radial)
    gap = ball_integral(lambda y: bogomolny_gap_density(cfg, y, h), R0, centre, n_radial)
    return EnergyReport(radii, surface, float(best), float(prev), ball, float(R0), gap)
