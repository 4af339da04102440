"""Hitchin's equation along oriented lines.

Along ``gamma(t) = x0 + t u`` we solve ``ds/dt = (i Phi - u . A) s``. The
solution decaying as ``t -> +inf`` (``-inf``) is seeded at ``+t_max``
(``-t_max``) with the matching eigenvector of ``i Phi`` and integrated inward,
where it is the dominant mode. A line is spectral when the two decaying
solutions are parallel, i.e. ``det[s_plus, s_minus] = 0``.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels, su2
from ._jit import resolve_engine
from ._parallel import chunks, parallel_map
from .errors import (
    AsymptoticRegimeError,
    BasednessViolatedError,
    DegreeUnstableError,
    EigenGapError,
    InsufficientSamplesError,
    PoleCountMismatchError,
    RootsNotFoundError,
    StepUnderflowError,
    ToleranceNotMetError,
    ValidationError,
)
from .minitwistor import (
    OrientedLine,
    SpectralCurvePoly,
    direction_of_zeta,
    disk_samples,
    lines_from_twistor,
)

log = logging.getLogger(__name__)

DEFAULT_TMAX = 25.0
DEFAULT_TOL = 1e-10
ASYMPTOTIC_DEVIATION = 0.05
MIN_GAP_PRODUCT = 20.0
MAX_STEPS = 200000


# ---------------------------------------------------------------------------
# integration


def _line_arrays(lines):
    if isinstance(lines, OrientedLine):
        lines = [lines]
    us = np.array([ln.u for ln in lines], dtype=float).reshape(-1, 3)
    vs = np.array([ln.v for ln in lines], dtype=float).reshape(-1, 3)
    return us, vs


def _raise_status(status):
    bad = np.flatnonzero(status != kernels.OK)
    if bad.size == 0:
        return
    code = int(status[bad[0]])
    if code == kernels.UNDERFLOW:
        raise StepUnderflowError(f"step size underflow on {bad.size} line(s)")
    raise ToleranceNotMetError(f"integration failed (status {code}) on {bad.size} line(s)")


def _generic_one(cfg, u, x0, s0, t0, t1, tol):
    def rhs(t, s):
        x = x0 + t * u
        M = 1j * cfg.higgs(x) - np.einsum("i,iab->ab", u, cfg.connection(x))
        return M @ s

    if t0 == t1:
        return np.array(s0, dtype=complex)
    sol = solve_ivp(rhs, (t0, t1), np.asarray(s0, dtype=complex), method="DOP853",
                    rtol=tol, atol=tol * 1e-3)
    if not sol.success:
        raise ToleranceNotMetError(f"Hitchin integration failed: {sol.message}")
    return sol.y[:, -1]


def integrate_many(cfg, us, x0s, s0s, t0s, t1s, tol=DEFAULT_TOL, engine=None, threads=None):
    """Integrate Hitchin's equation for a batch of lines ``x0 + t u``.

    Arrays have a leading batch axis. Uses the compiled kernel when the
    configuration names one and the numba engine is active.
    """
    us = np.ascontiguousarray(us, dtype=float).reshape(-1, 3)
    x0s = np.ascontiguousarray(x0s, dtype=float).reshape(-1, 3)
    s0s = np.ascontiguousarray(s0s, dtype=complex).reshape(-1, 2)
    n = us.shape[0]
    t0s = np.ascontiguousarray(np.broadcast_to(t0s, (n,)), dtype=float)
    t1s = np.ascontiguousarray(np.broadcast_to(t1s, (n,)), dtype=float)
    if resolve_engine(engine) and cfg.kernel is not None:
        kind = kernels.KIND_IDS[cfg.kernel[0]]
        params = np.ascontiguousarray(cfg.kernel[1], dtype=float)

        def run(sl):
            return kernels.hitchin_batch(kind, params, us[sl], x0s[sl], s0s[sl], t0s[sl], t1s[sl],
                                         tol, tol * 1e-3, MAX_STEPS)

        parts = parallel_map(run, chunks(n, threads), threads)
        out = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, 2), complex)
        status = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, int)
        _raise_status(status)
        return out
    results = parallel_map(
        lambda i: _generic_one(cfg, us[i], x0s[i], s0s[i], t0s[i], t1s[i], tol), range(n), threads)
    return np.array(results, dtype=complex).reshape(n, 2)


def integrate_hitchin(cfg, line, s0, t0, t1, tol=DEFAULT_TOL, engine=None):
    """Solution at ``t1`` of Hitchin's equation with ``s(t0) = s0``."""
    us, vs = _line_arrays(line)
    return integrate_many(cfg, us, vs, np.asarray(s0)[None], t0, t1, tol, engine)[0]


# ---------------------------------------------------------------------------
# decaying solutions


def _seeds(cfg, us, x0s, sign, t_max):
    """Unit eigenvectors of ``i Phi`` at ``x0 + sign t_max u`` that decay outward.

    The phase is fixed by making the larger diagonal entry of the spectral
    projector the real positive component, which is smooth in the line.
    Returns the seeds and the decay rate ``mu`` (half the eigenvalue gap).
    """
    x = x0s + sign * t_max * us
    Phi = cfg.higgs(x)
    norm = su2.norm(Phi)
    vev = cfg.vev
    dev = np.abs(norm - vev)
    if vev > 0 and np.any(dev > ASYMPTOTIC_DEVIATION * vev):
        raise AsymptoticRegimeError(
            f"|Phi| at t_max={t_max} deviates from {vev} by {dev.max():.3f}; increase t_max")
    gap = norm  # eigenvalues of i Phi are -+|Phi|/2
    if np.any(gap * t_max <= MIN_GAP_PRODUCT):
        raise EigenGapError(f"eigenvalue gap x t_max = {gap.min() * t_max:.2f} <= {MIN_GAP_PRODUCT}")
    H = 1j * Phi
    mu = 0.5 * gap
    lam = (-mu if sign > 0 else mu)[..., None, None]
    proj = (H + lam * su2.IDENTITY) / (2.0 * lam)
    # proj = (H - other)/(lam - other) with other = -lam
    diag = np.real(np.stack([proj[..., 0, 0], proj[..., 1, 1]], axis=-1))
    col = np.argmax(diag, axis=-1)
    seed = np.take_along_axis(proj, col[..., None, None], axis=-1)[..., 0]
    seed /= np.linalg.norm(seed, axis=-1, keepdims=True)
    return seed, mu


def decaying_many(cfg, us, x0s, end, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None,
                  threads=None, normalize=True, modified=False):
    """Decaying solutions at ``t = 0`` for a batch of lines.

    With ``modified=True`` the seed is scaled by the modified-equation factor
    ``t_max^(+-k/2) exp(-mu t_max)`` instead of the result being normalised.
    """
    sign = {"plus": 1.0, "minus": -1.0}.get(end)
    if sign is None:
        raise ValidationError(f"end must be 'plus' or 'minus', got {end!r}")
    us = np.asarray(us, dtype=float).reshape(-1, 3)
    x0s = np.asarray(x0s, dtype=float).reshape(-1, 3)
    seed, mu = _seeds(cfg, us, x0s, sign, t_max)
    if modified:
        k = cfg.charge
        seed = seed * (t_max ** (sign * k / 2.0) * np.exp(-mu * t_max))[:, None]
    s = integrate_many(cfg, us, x0s, seed, sign * t_max, 0.0, tol, engine, threads)
    if normalize:
        s = s / np.linalg.norm(s, axis=-1, keepdims=True)
    return s


def decaying_solution(cfg, line, end, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None):
    """Unit vector at ``t = 0`` spanning the solution decaying toward ``end``."""
    us, vs = _line_arrays(line)
    return decaying_many(cfg, us, vs, end, t_max, tol, engine)[0]


@dataclass(frozen=True)
class ScatteringSolution:
    line: OrientedLine
    t_max: float
    s_plus: np.ndarray
    s_minus: np.ndarray
    cond: dict = field(default_factory=dict)

    @property
    def determinant(self):
        return complex(self.s_plus[0] * self.s_minus[1] - self.s_plus[1] * self.s_minus[0])


def solve_line(cfg, line, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None):
    us, vs = _line_arrays(line)
    sp = decaying_many(cfg, us, vs, "plus", t_max, tol, engine)[0]
    sm = decaying_many(cfg, us, vs, "minus", t_max, tol, engine)[0]
    x = np.stack([line.point(t_max), line.point(-t_max)])
    cond = {"higgs_norm_ends": su2.norm(cfg.higgs(x)).tolist(), "gap_t_max": float(cfg.vev * t_max)}
    return ScatteringSolution(line, t_max, sp, sm, cond)


def spectral_determinants(cfg, lines, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None, threads=None):
    """``det[s_plus, s_minus]`` for each line (unit-normalised solutions)."""
    us, vs = _line_arrays(lines)
    return _dets(cfg, us, vs, t_max, tol, engine, threads)


def _dets(cfg, us, vs, t_max, tol, engine, threads=None):
    sp = decaying_many(cfg, us, vs, "plus", t_max, tol, engine, threads)
    sm = decaying_many(cfg, us, vs, "minus", t_max, tol, engine, threads)
    return sp[:, 0] * sm[:, 1] - sp[:, 1] * sm[:, 0]


def spectral_determinant(cfg, line, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None):
    return complex(spectral_determinants(cfg, [line], t_max, tol, engine)[0])


# ---------------------------------------------------------------------------
# root finding


def _newton(f_batch, z0, found, tol=1e-10, max_iter=40, delta=1e-5, max_step=np.inf, radius=np.inf):
    """Newton iteration for a zero of ``f / prod(z - found)`` in the plane.

    ``f`` need not be holomorphic (the scattering determinant is
    anti-holomorphic in our conventions), so the full real 2x2 Jacobian is
    estimated by central differences. Steps are capped at ``max_step``;
    returns NaN if the iterate leaves the disc of ``radius`` around ``z0``.
    """
    found = np.asarray(list(found), dtype=complex)
    offsets = np.array([0, 1, -1, 1j, -1j])
    z = complex(z0)
    for _ in range(max_iter):
        d = delta * max(1.0, abs(z))
        pts = z + d * offsets
        vals = f_batch(pts)
        if found.size:
            vals = vals / np.prod(pts[:, None] - found[None, :], axis=1)
        fx = (vals[1] - vals[2]) / (2 * d)
        fy = (vals[3] - vals[4]) / (2 * d)
        J = np.array([[fx.real, fy.real], [fx.imag, fy.imag]])
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) == 0:
            return complex(np.nan)
        dx, dy = np.linalg.solve(J, [-vals[0].real, -vals[0].imag])
        step = complex(dx, dy)
        if abs(step) > max_step:
            step *= max_step / abs(step)
        z += step
        if abs(z - z0) > radius:
            return complex(np.nan)
        if abs(step) < tol * max(1.0, abs(z)):
            break
    return z


def _grid_minima(values, n_keep):
    """Indices of local minima of ``|values|`` on a 2-D grid, best first."""
    a = np.abs(values)
    pad = np.pad(a, 1, constant_values=np.inf)
    ny, nx = a.shape
    is_min = np.ones_like(a, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            is_min &= a <= pad[1 + dy : 1 + dy + ny, 1 + dx : 1 + dx + nx]
    idx = np.argwhere(is_min)
    order = np.argsort(a[is_min])
    return [tuple(i) for i in idx[order][:n_keep]]


def _find_zeros(f_batch, centre, half_width, k, n_grid, accept=1e-8, extra=4):
    """Zeros of a complex function via grid minima plus deflated Newton."""
    xs = centre.real + np.linspace(-half_width, half_width, n_grid)
    ys = centre.imag + np.linspace(-half_width, half_width, n_grid)
    Z = xs[None, :] + 1j * ys[:, None]
    vals = f_batch(Z.ravel()).reshape(Z.shape)

    def f(z):
        return f_batch(np.array([z]))[0]

    spacing = 2.0 * half_width / (n_grid - 1)
    roots = []
    residuals = []
    for iy, ix in _grid_minima(vals, k + extra):
        if len(roots) >= k:
            break
        z = _newton(f_batch, Z[iy, ix], roots, max_step=spacing, radius=3.0 * spacing)
        if not np.isfinite(z):
            continue
        res = abs(f(z))
        if res < accept and all(abs(z - r) > 1e-6 for r in roots):
            roots.append(z)
            residuals.append(res)
    return roots, residuals, vals


def find_spectral_etas(cfg, zeta, k=None, search_radius=2.0, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL,
                       n_grid=9, engine=None, threads=None):
    """Values of ``eta`` for which the line ``(eta, zeta)`` is spectral.

    Searches lines passing within ``search_radius`` of the origin. Returns the
    converged roots (``|det| < 1e-8``); fewer than ``k`` is logged, not fatal.
    """
    k = cfg.charge if k is None else int(k)
    zeta = complex(zeta)
    half = search_radius * (1.0 + abs(zeta)) ** 2

    def f_batch(etas):
        us, vs = lines_from_twistor(etas, np.full(etas.shape, zeta))
        return _dets(cfg, us, vs, t_max, tol, engine, threads)

    roots, _, _ = _find_zeros(f_batch, 0j, half, k, n_grid)
    if len(roots) < k:
        log.warning("found %d of %d spectral lines at zeta=%s", len(roots), k, zeta)
    return roots


@dataclass(frozen=True)
class SpectralScan:
    curve: SpectralCurvePoly
    zetas: np.ndarray
    roots: list
    residual: float

    def to_json(self):
        return {
            "zeta": [[float(z.real), float(z.imag)] for z in self.zetas],
            "roots": [[[float(r.real), float(r.imag)] for r in rs] for rs in self.roots],
            "curve": self.curve.to_json(),
            "fit_residual": float(self.residual),
        }


def fit_spectral_curve(cfg, k=None, zeta_samples=None, search_radius=2.0, t_max=DEFAULT_TMAX,
                       tol=DEFAULT_TOL, n_grid=9, engine=None, threads=None):
    """Least-squares spectral curve from detected spectral lines."""
    k = cfg.charge if k is None else int(k)
    if k < 1:
        raise ValidationError("spectral curves need charge k >= 1")
    if zeta_samples is None:
        zeta_samples = disk_samples(3 * (2 * k + 1) + 3)
    zetas = np.asarray(zeta_samples, dtype=complex).reshape(-1)
    if zetas.size < 3 * (2 * k + 1):
        raise InsufficientSamplesError(f"need at least {3 * (2 * k + 1)} zeta samples, got {zetas.size}")
    roots = [find_spectral_etas(cfg, z, k, search_radius, t_max, tol, n_grid, engine, threads)
             for z in zetas]
    short = [z for z, r in zip(zetas, roots) if len(r) < k]
    if short:
        raise RootsNotFoundError(f"fewer than {k} spectral lines at {len(short)} sample(s)")
    # a_i values from the elementary symmetric functions of the roots
    vals = np.array([np.poly(r)[1:] for r in roots])
    coeffs = []
    worst = 0.0
    for i in range(1, k + 1):
        V = np.vander(zetas, 2 * i + 1, increasing=True)
        c, *_ = np.linalg.lstsq(V, vals[:, i - 1], rcond=None)
        worst = max(worst, float(np.abs(V @ c - vals[:, i - 1]).max()))
        coeffs.append(c)
    curve = SpectralCurvePoly(k, tuple(coeffs), residual=worst)
    return SpectralScan(curve, zetas, roots, worst)


# ---------------------------------------------------------------------------
# rational maps


def _resultant(p, q):
    """Sylvester resultant of ascending coefficient vectors."""
    p = np.trim_zeros(np.asarray(p, dtype=complex), "b")
    q = np.trim_zeros(np.asarray(q, dtype=complex), "b")
    if p.size == 0 or q.size == 0:
        other = q if p.size == 0 else p
        return complex(other[0]) if other.size == 1 else 0j
    m, n = p.size - 1, q.size - 1
    if m == 0 and n == 0:
        return 1.0 + 0j
    S = np.zeros((m + n, m + n), dtype=complex)
    for i in range(n):
        S[i, i : i + m + 1] = p[::-1]
    for i in range(m):
        S[n + i, i : i + n + 1] = q[::-1]
    return complex(np.linalg.det(S))


@dataclass(frozen=True)
class RationalMap:
    """``R(z) = p(z) / q(z)`` with ascending coefficient vectors."""

    p: np.ndarray
    q: np.ndarray
    based: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=complex))
        q = np.atleast_1d(np.asarray(self.q, dtype=complex))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if not (np.any(p != 0) or np.any(q != 0)):
            raise ValidationError("p and q cannot both vanish")
        scale = max(np.abs(p).max(), np.abs(q).max())
        if abs(_resultant(p / scale, q / scale)) <= 1e-10:
            raise ValidationError("p and q have a common root")
        if self.based:
            dq = self.degree_of(q)
            if self.degree_of(p) >= dq or abs(q[dq] - 1.0) > 1e-12:
                raise ValidationError("a based map needs q monic and deg p < deg q")

    @staticmethod
    def degree_of(c, rel=1e-10):
        c = np.asarray(c)
        big = np.abs(c).max(initial=0.0)
        nz = np.flatnonzero(np.abs(c) > rel * big) if big > 0 else []
        return int(nz[-1]) if len(nz) else -1

    @property
    def degree(self):
        return max(self.degree_of(self.p), self.degree_of(self.q), 0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        num = np.polynomial.polynomial.polyval(z, self.p)
        den = np.polynomial.polynomial.polyval(z, self.q)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den == 0, complex(np.inf), num / np.where(den == 0, 1.0, den))

    def poles(self):
        dq = self.degree_of(self.q)
        return np.polynomial.polynomial.polyroots(self.q[: dq + 1]) if dq > 0 else np.array([], complex)

    def zeros(self):
        dp = self.degree_of(self.p)
        return np.polynomial.polynomial.polyroots(self.p[: dp + 1]) if dp > 0 else np.array([], complex)

    def to_json(self):
        def pairs(c):
            return [[float(v.real), float(v.imag)] for v in c]

        return {
            "p": pairs(self.p),
            "q": pairs(self.q),
            "based": self.based,
            "degree": self.degree,
            "poles": pairs(self.poles()),
            "zeros": pairs(self.zeros()),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)

        def unpairs(c):
            return np.array([complex(a, b) for a, b in c])

        return cls(unpairs(obj["p"]), unpairs(obj["q"]), bool(obj.get("based", False)), obj.get("meta", {}))


@dataclass(frozen=True)
class DonaldsonResult:
    map: RationalMap
    poles: np.ndarray
    pole_residuals: np.ndarray
    z_grid: np.ndarray
    a_grid: np.ndarray
    b_grid: np.ndarray
    frame: np.ndarray
    boundary_decay: float


def _donaldson_ab(cfg, z, frame, t_max, tol, engine, threads):
    z = np.asarray(z, dtype=complex).reshape(-1)
    e1, e2, e3 = frame[:, 0], frame[:, 1], frame[:, 2]
    vs = z.real[:, None] * e1 + z.imag[:, None] * e2
    us = np.broadcast_to(e3, vs.shape)
    sp = decaying_many(cfg, us, vs, "plus", t_max, tol, engine, threads, normalize=False, modified=True)
    sm = decaying_many(cfg, us, vs, "minus", t_max, tol, engine, threads, normalize=False, modified=True)
    b = sm[:, 0] * sp[:, 1] - sm[:, 1] * sp[:, 0]
    a = np.einsum("ni,ni->n", np.conj(sm), sp) / np.einsum("ni,ni->n", np.conj(sm), sm)
    return a, b


def donaldson_map(cfg, k=None, frame=None, z_grid=None, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL,
                  engine=None, threads=None, decay_ratio=0.5):
    """Based rational map from scattering along the ``frame[:, 2]`` direction.

    ``z = x + i y`` labels the line ``x e1 + y e2 + t e3``. ``b(z)`` vanishes
    exactly on spectral lines; its zeros are the poles of the map and
    ``p(beta_i) = a(beta_i)``. The overall constant is convention dependent.
    """
    k = cfg.charge if k is None else int(k)
    if k < 1:
        raise ValidationError("the Donaldson map needs charge k >= 1")
    frame = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    if frame.shape != (3, 3) or np.abs(frame.T @ frame - np.eye(3)).max() > 1e-10:
        raise ValidationError("frame must be an orthonormal 3x3 matrix (columns e1, e2, e3)")
    if z_grid is None:
        side = np.linspace(-3.0, 3.0, 13)
        z_grid = side[None, :] + 1j * side[:, None]
    z_grid = np.asarray(z_grid, dtype=complex)
    if z_grid.ndim != 2 or min(z_grid.shape) < 3:
        raise ValidationError("z_grid must be a 2-D grid with at least 3 points per side")
    a_grid, b_grid = _donaldson_ab(cfg, z_grid, frame, t_max, tol, engine, threads)
    a_grid = a_grid.reshape(z_grid.shape)
    b_grid = b_grid.reshape(z_grid.shape)

    def f(zs):
        return _donaldson_ab(cfg, zs, frame, t_max, tol, engine, threads)[1]

    spacing = max(np.abs(np.diff(z_grid, axis=0)).max(), np.abs(np.diff(z_grid, axis=1)).max())
    poles = []
    for iy, ix in _grid_minima(b_grid, k + 4):
        if len(poles) >= k:
            break
        z = _newton(f, z_grid[iy, ix], poles, max_step=spacing, radius=3.0 * spacing)
        if np.isfinite(z) and abs(f(np.array([z]))[0]) < 1e-8 and all(abs(z - r) > 1e-6 for r in poles):
            poles.append(z)
    if len(poles) != k:
        raise PoleCountMismatchError(f"found {len(poles)} poles, expected {k}")
    poles = np.array(poles)
    a_at, b_at = _donaldson_ab(cfg, poles, frame, t_max, tol, engine, threads)

    # basedness: |a| on the outer ring must be small against its values at the poles
    ring = np.concatenate([a_grid[0], a_grid[-1], a_grid[1:-1, 0], a_grid[1:-1, -1]])
    decay = float(np.abs(ring).max() / np.abs(a_at).max())
    if decay > decay_ratio:
        raise BasednessViolatedError(f"|a| on the grid boundary is {decay:.3f} of its pole value")

    q = np.polynomial.polynomial.polyfromroots(poles)
    if k == 1:
        p = np.array([a_at[0]])
    else:
        V = np.vander(poles, k, increasing=True)
        p = np.linalg.solve(V, a_at)
    rmap = RationalMap(p, q / q[-1], based=True,
                       meta={"mode": "donaldson", "frame": frame.tolist(), "t_max": t_max})
    return DonaldsonResult(rmap, poles, np.abs(b_at), z_grid, a_grid, b_grid, frame, decay)


def sphere_zetas(n, exclude=0.25):
    """Stereographic coordinates of a spiral point set on the sphere.

    Points within ``exclude`` (chordal) of the north pole are dropped so all
    samples are finite.
    """
    i = np.arange(n) + 0.5
    u3 = 1.0 - 2.0 * i / n
    ang = np.pi * (1.0 + np.sqrt(5.0)) * i
    s = np.sqrt(1.0 - u3**2)
    u = np.stack([s * np.cos(ang), s * np.sin(ang), u3], axis=-1)
    keep = np.linalg.norm(u - np.array([0, 0, 1.0]), axis=-1) > exclude
    u = u[keep]
    return (u[:, 0] + 1j * u[:, 1]) / (1.0 - u[:, 2])


def jarvis_values(cfg, base, zetas, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL, engine=None, threads=None):
    """Homogeneous samples ``conj(s)`` of the forward-decaying solution at the base point.

    The returned rows ``(w0, w1)`` represent ``R(zeta) = w0 / w1``.
    """
    zetas = np.asarray(zetas, dtype=complex).reshape(-1)
    us = direction_of_zeta(zetas)
    x0 = np.broadcast_to(np.asarray(base, dtype=float), us.shape)
    s = decaying_many(cfg, us, x0, "plus", t_max, tol, engine, threads)
    return np.conj(s)


@dataclass(frozen=True)
class JarvisResult:
    map: RationalMap
    degree: int
    residual: float
    residuals: dict
    zetas: np.ndarray
    values: np.ndarray
    base: np.ndarray

    def ratios(self):
        w = self.values
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(w[:, 1]) < 1e-14, complex(np.inf), w[:, 0] / w[:, 1])


def fit_rational(zetas, values, max_degree, threshold=None):
    """Smallest-degree ``p/q`` with ``p(z) w1 - q(z) w0 = 0`` on the samples."""
    zetas = np.asarray(zetas, dtype=complex)
    n = zetas.size
    threshold = 1e-6 * n if threshold is None else threshold
    residuals = {}
    for d in range(max_degree + 1):
        V = np.vander(zetas, d + 1, increasing=True)
        V = V / (1.0 + np.abs(zetas) ** 2)[:, None] ** (0.5 * d)
        M = np.hstack([V * values[:, 1:2], -V * values[:, 0:1]])
        _, sv, vh = np.linalg.svd(M)
        sigma = sv[-1] if M.shape[0] >= M.shape[1] else 0.0
        residuals[d] = float(sigma)
        if sigma < threshold:
            coef = np.conj(vh[-1])
            p, q = coef[: d + 1], coef[d + 1 :]
            return p, q, d, float(sigma), residuals
    raise DegreeUnstableError(f"no rational fit of degree <= {max_degree} (residuals {residuals})")


def jarvis_map(cfg, base=(0.0, 0.0, 0.0), zeta_grid=None, t_max=DEFAULT_TMAX, tol=DEFAULT_TOL,
               engine=None, threads=None, max_degree=None):
    """Rational map from forward-decaying solutions along rays from ``base``."""
    zetas = sphere_zetas(48) if zeta_grid is None else np.asarray(zeta_grid, dtype=complex).reshape(-1)
    k = cfg.charge
    max_degree = k + 1 if max_degree is None else max_degree
    values = jarvis_values(cfg, base, zetas, t_max, tol, engine, threads)
    p, q, d, res, residuals = fit_rational(zetas, values, max_degree)
    big = max(np.abs(p).max(), np.abs(q).max())
    p = np.where(np.abs(p) < 1e-8 * big, 0.0, p)
    q = np.where(np.abs(q) < 1e-8 * big, 0.0, q)
    lead = q if np.any(q != 0) else p
    scale = lead[RationalMap.degree_of(lead)]
    p, q = p / scale, q / scale
    rmap = RationalMap(p, q, meta={"mode": "jarvis", "base": list(map(float, base)), "t_max": t_max})
    return JarvisResult(rmap, rmap.degree, res, residuals, zetas, values, np.asarray(base, dtype=float))
