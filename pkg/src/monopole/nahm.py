"""Nahm's equations ``dT1/dz = [T2, T3]`` (and cyclic) for k x k matrices.

Trajectories are stored as dense samples ``T[j, a]`` at ascending ``z[j]``
with cubic interpolation in between. The Lax matrix is
``A(zeta) = (T1 + i T2) + 2 T3 zeta + (-T1 + i T2) zeta^2``; the spectral
curve ``det(eta - A(zeta)) = 0`` is built from the hermitian position
matrices ``P = 2i T``, so the k=1 data ``T = -(i/2) p`` has curve
``eta = eta_of_point(p, zeta)``.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import ellipj, ellipk

from . import kernels
from ._jit import resolve_engine
from .errors import (
    BlowUpError,
    InsufficientSamplesError,
    OutOfWindowError,
    ShapeMismatchError,
    StepUnderflowError,
    ToleranceNotMetError,
    ValidationError,
)
from .minitwistor import SpectralCurvePoly, disk_samples

DEFAULT_EPSILON = 0.05
DEFAULT_TOL = 1e-10
ANTIHERMITIAN_TOL = 1e-10
PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def _triple(T):
    T = np.asarray(T, dtype=complex)
    if T.ndim < 3 or T.shape[-3] != 3 or T.shape[-1] != T.shape[-2]:
        raise ShapeMismatchError(f"expected (..., 3, k, k) matrices, got {T.shape}")
    return T


def spin_generators(k):
    """Irreducible triple ``rho_a = -i J_a`` of size k with ``[rho_2, rho_3] = rho_1``."""
    if k < 1:
        raise ValidationError("k must be positive")
    j = (k - 1) / 2.0
    m = j - np.arange(k)
    jp = np.zeros((k, k))
    for i in range(1, k):
        jp[i - 1, i] = np.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    J1 = 0.5 * (jp + jp.T)
    J2 = -0.5j * (jp - jp.T)
    J3 = np.diag(m)
    return -1j * np.array([J1, J2, J3], dtype=complex)


def nahm_rhs(T):
    """``([T2, T3], [T3, T1], [T1, T2])``; broadcasts over leading axes."""
    T = _triple(T)
    T1, T2, T3 = T[..., 0, :, :], T[..., 1, :, :], T[..., 2, :, :]
    return np.stack([T2 @ T3 - T3 @ T2, T3 @ T1 - T1 @ T3, T1 @ T2 - T2 @ T1], axis=-3)


def antihermitian_defect(T):
    T = np.asarray(T)
    return float(np.abs(T + np.conj(np.swapaxes(T, -1, -2))).max(initial=0.0))


@dataclass(frozen=True)
class NahmData:
    """Sampled Nahm matrices on a window of ``(-1, 1)``.

    A single sample represents constant data on ``window`` (default the full
    interval). ``pole_meta`` may carry ``{"residues": {"-1": R, "+1": R}}``
    with ``T ~ -R_a / (z - c)`` near each end.
    """

    k: int
    z: np.ndarray
    T: np.ndarray
    pole_meta: Optional[dict] = None
    window: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        T = _triple(self.T)
        if T.ndim == 3:
            T = T[None]
        if T.shape[0] != z.size or T.shape[-1] != self.k:
            raise ShapeMismatchError(f"{z.size} samples of k={self.k} expected, got T {T.shape}")
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise ValidationError("z samples must be strictly increasing")
        defect = antihermitian_defect(T)
        if defect > ANTIHERMITIAN_TOL * max(1.0, float(np.abs(T).max())):
            raise ValidationError(f"Nahm matrices must be anti-hermitian (defect {defect:.2e})")
        window = self.window
        if window is None:
            window = (-1.0, 1.0) if z.size == 1 else (float(z[0]), float(z[-1]))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "window", (float(window[0]), float(window[1])))

    @classmethod
    def constant(cls, T, window=(-1.0, 1.0)):
        T = _triple(T)
        return cls(T.shape[-1], np.array([0.0]), T[None], window=window)

    @classmethod
    def point(cls, p):
        """k=1 data of the monopole centred at ``p``: ``T = -(i/2) p``."""
        p = np.asarray(p, dtype=float).reshape(3)
        return cls.constant((-0.5j * p).reshape(3, 1, 1))

    @property
    def is_constant(self):
        return self.z.size == 1 or float(np.abs(self.T - self.T[0]).max()) == 0.0

    @cached_property
    def _spline(self):
        flat = self.T.reshape(self.z.size, -1)
        return CubicSpline(self.z, flat, axis=0)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        lo, hi = self.window
        if np.any(z < lo - 1e-12) or np.any(z > hi + 1e-12):
            raise OutOfWindowError(f"z outside the data window [{lo}, {hi}]")
        if self.z.size == 1:
            return np.broadcast_to(self.T[0], z.shape + self.T.shape[1:]).copy()
        return self._spline(z).reshape(z.shape + self.T.shape[1:])

    def positions(self, z):
        """Hermitian position matrices ``P = 2i T(z)``."""
        return 2j * self(z)

    def to_json(self):
        def enc(a):
            a = np.asarray(a)
            return np.stack([a.real, a.imag], axis=-1).tolist()

        meta = None
        if self.pole_meta is not None:
            meta = {key: val for key, val in self.pole_meta.items() if key != "residues"}
            if "residues" in self.pole_meta:
                meta["residues"] = {end: enc(R) for end, R in self.pole_meta["residues"].items()}
        return {"k": self.k, "z_samples": self.z.tolist(), "T": enc(self.T), "pole_meta": meta,
                "window": list(self.window)}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)

        def dec(a):
            a = np.asarray(a, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        meta = obj.get("pole_meta")
        if meta is not None and "residues" in meta:
            meta = dict(meta)
            meta["residues"] = {end: dec(R) for end, R in meta["residues"].items()}
        window = obj.get("window")
        return cls(int(obj["k"]), np.asarray(obj["z_samples"], dtype=float), dec(obj["T"]), meta,
                   tuple(window) if window is not None else None)


def pole_solution(rho, z, c=1.0):
    """Exact samples ``T_a(z) = -rho_a / (z - c)``."""
    rho = _triple(rho)
    z = np.asarray(z, dtype=float)
    T = -rho[None] / (z - c)[:, None, None, None]
    return NahmData(rho.shape[-1], z, T, pole_meta={"residues": {"+1" if c > 0 else "-1": rho}})


def euler_top(z, m=0.0):
    """Exact k=2 solution with simple poles at both ends of ``(-1, 1)``.

    ``T_a = -f_a rho_a`` with ``(f1, f2, f3) = K (cn/sn, dn/sn, 1/sn)(K (z + 1))``
    and ``K = K(m)``; residues are ``rho`` at ``z = -1`` and
    ``(rho_1, -rho_2, -rho_3)`` at ``z = +1``.
    """
    z = np.asarray(z, dtype=float)
    K = ellipk(m)
    sn, cn, dn, _ = ellipj(K * (z + 1.0), m)
    f = K * np.stack([cn / sn, dn / sn, 1.0 / sn], axis=-1)
    rho = spin_generators(2)
    T = -f[:, :, None, None] * rho[None]
    res_plus = rho * np.array([1.0, -1.0, -1.0])[:, None, None]
    return NahmData(2, z, T, pole_meta={"residues": {"-1": rho, "+1": res_plus}, "m": m})


def random_initial(rng, k, scale=0.3):
    """Random anti-hermitian triple with entries of size ``scale``."""
    X = rng.standard_normal((3, k, k)) + 1j * rng.standard_normal((3, k, k))
    return scale * 0.5 * (X - np.conj(np.swapaxes(X, -1, -2)))


# ---------------------------------------------------------------------------
# evolution


def evolve(T0, z0, z1, tol=DEFAULT_TOL, n_samples=201, z_samples=None, blow_up=1e6, engine=None):
    """Integrate Nahm's equations from ``T(z0) = T0`` to ``z1``.

    Samples are returned at ``z_samples`` (default ``n_samples`` uniform
    points between ``z0`` and ``z1``) in ascending order. Raises
    :class:`BlowUpError` with the location when a matrix entry exceeds
    ``blow_up``.
    """
    T0 = _triple(T0)
    if T0.ndim != 3:
        raise ShapeMismatchError("initial data must be a single (3, k, k) triple")
    k = T0.shape[-1]
    if z_samples is None:
        z_samples = np.linspace(z0, z1, n_samples)
    zs = np.asarray(z_samples, dtype=float)
    direction = 1.0 if z1 >= z0 else -1.0
    order = np.argsort(direction * zs, kind="stable")
    t_out = zs[order]
    if np.any(direction * (t_out - z0) < -1e-15) or np.any(direction * (t_out - z1) > 1e-15):
        raise ValidationError("z_samples must lie between z0 and z1")
    y0 = np.ascontiguousarray(T0.reshape(-1))
    if resolve_engine(engine):
        h0 = 1e-2 * max(abs(z1 - z0), 1e-6)
        Y, status, z_fail, _ = kernels.dopri5(
            kernels.RHS_NAHM, np.array([k], dtype=np.int64), np.zeros(1), y0, float(z0),
            np.ascontiguousarray(t_out), tol, tol, h0, 10**7, blow_up)
        if status == kernels.BLOW_UP:
            raise BlowUpError(f"Nahm matrices blew up near z = {z_fail:.6g}", z=z_fail)
        if status == kernels.UNDERFLOW:
            raise StepUnderflowError(f"step size underflow near z = {z_fail:.6g}")
        if status != kernels.OK:
            raise ToleranceNotMetError(f"Nahm integration failed near z = {z_fail:.6g}")
    else:
        Y = _evolve_scipy(y0, k, z0, z1, t_out, tol, blow_up)
    T = Y.reshape(-1, 3, k, k)
    asc = np.argsort(t_out)
    T = T[asc]
    z = t_out[asc]
    return NahmData(k, z, T, meta={"z0": float(z0), "z1": float(z1), "tol": tol})


def _evolve_scipy(y0, k, z0, z1, t_out, tol, blow_up):
    def rhs(z, y):
        return nahm_rhs(y.reshape(3, k, k)).reshape(-1)

    def blown(z, y):
        return blow_up - np.abs(y).max()

    blown.terminal = True
    sol = solve_ivp(rhs, (z0, z1), y0, method="DOP853", t_eval=t_out, rtol=tol, atol=tol,
                    events=blown)
    if sol.status == 1:
        z_fail = float(sol.t_events[0][0])
        raise BlowUpError(f"Nahm matrices blew up near z = {z_fail:.6g}", z=z_fail)
    if not sol.success:
        raise ToleranceNotMetError(sol.message)
    return sol.y.T


# ---------------------------------------------------------------------------
# Lax form and spectral curve


def lax_polynomial(T, zeta):
    """``(T1 + i T2) + 2 T3 zeta + (-T1 + i T2) zeta^2``."""
    T = _triple(T)
    z = np.asarray(zeta, dtype=complex)[..., None, None]
    T1, T2, T3 = T[..., 0, :, :], T[..., 1, :, :], T[..., 2, :, :]
    return (T1 + 1j * T2) + 2 * T3 * z + (-T1 + 1j * T2) * z * z


def a_plus(T, zeta):
    """``i T3 - (i T1 + T2) zeta``, the second member of the Lax pair."""
    T = _triple(T)
    z = np.asarray(zeta, dtype=complex)[..., None, None]
    return 1j * T[..., 2, :, :] - (1j * T[..., 0, :, :] + T[..., 1, :, :]) * z


def lax_residual(data):
    """Max norm of ``dA/dz - [A_+, A]`` over interior samples, a few ``zeta``."""
    if data.z.size < 3:
        raise InsufficientSamplesError("need at least three samples")
    worst = 0.0
    for zeta in (0.0, 0.5 + 0.25j, -0.7j):
        A = lax_polynomial(data.T, zeta)
        dA = np.gradient(A, data.z, axis=0)[1:-1]
        Ap = a_plus(data.T, zeta)[1:-1]
        Ai = A[1:-1]
        worst = max(worst, float(np.abs(dA - (Ap @ Ai - Ai @ Ap)).max()))
    return worst


def char_poly_values(T, zetas):
    """Coefficients ``a_1..a_k`` of ``det(eta - A(zeta))`` with ``A`` built from ``2i T``.

    ``T`` is ``(..., 3, k, k)``; the result is ``(..., n_zeta, k)``.
    """
    T = _triple(T)
    zetas = np.asarray(zetas, dtype=complex).reshape(-1)
    A = lax_polynomial(2j * T[..., None, :, :, :], zetas)
    ev = np.linalg.eigvals(A)
    k = T.shape[-1]
    # elementary symmetric functions with alternating sign, as in np.poly
    coeffs = np.zeros(ev.shape[:-1] + (k + 1,), dtype=complex)
    coeffs[..., 0] = 1.0
    for j in range(k):
        lam = ev[..., j : j + 1]
        coeffs[..., 1:] = coeffs[..., 1:] - lam * coeffs[..., :-1]
    return coeffs[..., 1:]


def default_zetas(k):
    return disk_samples(3 * (2 * k + 1) + 3)


def nahm_spectral_curve(data, zeta_samples=None, z=None):
    """Spectral curve at ``z`` (default the middle sample), fitted in ``zeta``."""
    zetas = default_zetas(data.k) if zeta_samples is None else np.asarray(zeta_samples, dtype=complex)
    if z is None:
        T = data.T[data.z.size // 2]
    else:
        T = data(z)
    vals = char_poly_values(T, zetas)
    coeffs = []
    worst = 0.0
    for i in range(1, data.k + 1):
        if zetas.size < 2 * i + 1:
            raise InsufficientSamplesError(f"need {2 * i + 1} zeta samples for a_{i}")
        V = np.vander(zetas, 2 * i + 1, increasing=True)
        c, *_ = np.linalg.lstsq(V, vals[:, i - 1], rcond=None)
        worst = max(worst, float(np.abs(V @ c - vals[:, i - 1]).max()))
        coeffs.append(c)
    return SpectralCurvePoly(data.k, tuple(coeffs), residual=worst)


def conservation_report(data, zeta_samples=None):
    """Max drift ``|a_i(zeta; z) - a_i(zeta; z_0)|`` over samples."""
    zetas = default_zetas(data.k) if zeta_samples is None else np.asarray(zeta_samples, dtype=complex)
    vals = char_poly_values(data.T, zetas)
    return float(np.abs(vals - vals[0]).max())


def nahm_residual(data):
    """Max norm of ``dT/dz - rhs(T)`` over interior samples (second order)."""
    if data.z.size < 3:
        if data.is_constant:
            return float(np.abs(nahm_rhs(data.T)).max())
        raise InsufficientSamplesError("need at least three samples")
    dT = np.gradient(data.T, data.z, axis=0)[1:-1]
    return float(np.abs(dT - nahm_rhs(data.T[1:-1])).max())
