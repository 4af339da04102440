"""From Nahm data to monopole fields.

At each point ``x`` the kernel ODE ``dv/dz = M(z) v`` with
``M = sum_a (x_a - P_a(z)) (x) tau_a / 2`` and ``P = 2i T`` is solved on the
data window. Two admissible solutions, orthonormalised in ``L^2`` by
Gauss-Legendre quadrature, give

    Phi = (i/2) traceless part of  sum_b int z (v_b, v_a) dz
    A_i = anti-hermitian traceless part of  sum_b int (v_b, dv_a/dx_i) dz

with ``dv/dx_i`` by central differences of the frame. Charge one with
constant data has a closed-form fundamental solution and a compiled kernel;
charge two and higher needs pole residues in ``pole_meta`` and is
experimental.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from ._jit import resolve_engine
from ._parallel import parallel_map
from .errors import (
    FrameAlignmentError,
    MonopoleError,
    PoleDataMissingError,
    StepTooSmallError,
    SubspaceSelectionError,
    ToleranceNotMetError,
    ValidationError,
)
from .fields import FieldConfiguration, MIN_STEP, energy_density
from .grid import GridSpec

DEFAULT_QUAD_ORDER = 64
DEFAULT_STEP = 1e-3
ODE_TOL = 1e-12
RANK_TOL = 1e-13
ALIGNMENT_TOL = 0.5
GRID_CHUNK = 512
# residue-space eigenvalues above this are square integrable at a pole
ADMISSIBLE_EXPONENT = -0.5

RHO = 0.5 * np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def gauss_nodes(order, window=(-1.0, 1.0)):
    if order < 2:
        raise ValidationError("quad_order must be at least 2")
    t, w = np.polynomial.legendre.leggauss(order)
    lo, hi = window
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def _positions(data, z):
    return 2j * data(z)


def kernel_ode_matrix(data, x, z):
    """``sum_a (x_a - P_a(z)) (x) rho_a``, a hermitian ``2k x 2k`` matrix."""
    x = np.asarray(x, dtype=float).reshape(3)
    P = _positions(data, z)
    eye = np.eye(data.k)
    return sum(np.kron(x[a] * eye - P[..., a, :, :], RHO[a]) for a in range(3))


def _sqrt_inv(G):
    lam, U = np.linalg.eigh(G)
    lam_max = lam[..., -1:]
    if np.any(lam[..., 0] <= RANK_TOL * lam_max[..., 0]):
        raise SubspaceSelectionError("Gram matrix is rank deficient; kernel is not two dimensional")
    return (U / np.sqrt(lam)[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2)), lam


def _gram(V, w):
    return np.einsum("j,...jcb,...jca->...ba", w, np.conj(V), V)


# ---------------------------------------------------------------------------
# charge one, constant data (vectorised over points)


def _k1_frames(y, nodes, weights):
    """Loewdin frames ``(N, n, 2, 2)`` for ``y = x - P`` of shape ``(N, 3)``."""
    r = np.linalg.norm(y, axis=-1)[:, None]
    s = 0.5 * r * nodes
    c = np.cosh(s)
    small = np.abs(s) < 1e-8
    d = np.where(small, 0.5 * nodes, 0.5 * nodes * np.sinh(s) / np.where(small, 1.0, s))
    g0 = (weights * (c * c + d * d * r * r)).sum(axis=-1)
    gv = (weights * 2.0 * c * d).sum(axis=-1)
    r = r[:, 0]
    lp = 1.0 / np.sqrt(g0 + gv * r)
    lm = 1.0 / np.sqrt(g0 - gv * r)
    alpha = 0.5 * (lp + lm)
    beta = np.where(r > 0, 0.5 * (lp - lm) / np.where(r > 0, r, 1.0), 0.0)
    a0 = c * alpha[:, None] + d * (beta * r * r)[:, None]
    a1 = c * beta[:, None] + d * alpha[:, None]
    y1, y2, y3 = (y[:, i, None] for i in range(3))
    V = np.empty(a0.shape + (2, 2), dtype=complex)
    V[..., 0, 0] = a0 + a1 * y3
    V[..., 0, 1] = a1 * (y1 - 1j * y2)
    V[..., 1, 0] = a1 * (y1 + 1j * y2)
    V[..., 1, 1] = a0 - a1 * y3
    return V


def _higgs_from_frame(V, nodes, weights):
    H = _gram(V, weights * nodes)
    tr = 0.5 * np.trace(H, axis1=-2, axis2=-1)[..., None, None]
    Phi = 0.5j * (H - tr * np.eye(2))
    return 0.5 * (Phi - np.conj(np.swapaxes(Phi, -1, -2)))


def _antihermitian_traceless(Q):
    Q = 0.5 * (Q - np.conj(np.swapaxes(Q, -1, -2)))
    tr = 0.5 * np.trace(Q, axis1=-2, axis2=-1)[..., None, None]
    return Q - tr * np.eye(Q.shape[-1])


def _connection_from_frames(V, Vp, Vm, weights, h):
    Q = np.einsum("j,...jcb,...jca->...ba", weights / (2.0 * h), np.conj(V), Vp - Vm)
    return _antihermitian_traceless(Q)


def _alignment_defect(V, Vn, weights):
    """Distance from the identity of the unitary part of ``<V, Vn>``."""
    S = _gram_cross(V, Vn, weights)
    U, _, Wh = np.linalg.svd(S)
    return np.linalg.norm(U @ Wh - np.eye(S.shape[-1]), axis=(-2, -1))


def _gram_cross(V, W, weights):
    return np.einsum("j,...jcb,...jca->...ba", weights, np.conj(V), W)


def _k1_fields_numpy(P, h, nodes, weights, xs, with_connection=True, check_alignment=True):
    y = xs - P
    V = _k1_frames(y, nodes, weights)
    Phi = _higgs_from_frame(V, nodes, weights)
    if not with_connection:
        return None, Phi
    A = np.empty(xs.shape[:1] + (3, 2, 2), dtype=complex)
    for i in range(3):
        dy = np.zeros(3)
        dy[i] = h
        Vp = _k1_frames(y + dy, nodes, weights)
        Vm = _k1_frames(y - dy, nodes, weights)
        if check_alignment:
            _check_alignment(V, Vp, Vm, weights)
        A[:, i] = _connection_from_frames(V, Vp, Vm, weights, h)
    return A, Phi


def _check_alignment(V, Vp, Vm, weights):
    worst = max(float(np.max(_alignment_defect(V, Vp, weights), initial=0.0)),
                float(np.max(_alignment_defect(V, Vm, weights), initial=0.0)))
    if worst > ALIGNMENT_TOL:
        raise FrameAlignmentError(f"neighbouring frames differ by a unitary of size {worst:.3g}; "
                                  "the frame jumps between differencing points")


def _k1_params(data, quad_order, h):
    nodes, weights = gauss_nodes(quad_order, data.window)
    P = np.real(_positions(data, 0.0 if data.z.size == 1 else data.z[0]))[:, 0, 0]
    return P, nodes, weights, np.concatenate([P, [h, quad_order], nodes, weights])


def _is_k1_constant(data):
    return data.k == 1 and data.is_constant and data.window == (-1.0, 1.0)


# ---------------------------------------------------------------------------
# general data: numerical fundamental solutions


def _propagate(data, x, z0, V0, z_targets):
    """Solve the kernel ODE for the columns of ``V0`` from ``z0`` to ``z_targets``."""
    shape = V0.shape

    def rhs(z, y):
        return (kernel_ode_matrix(data, x, z) @ y.reshape(shape)).reshape(-1)

    out = np.empty((len(z_targets),) + shape, dtype=complex)
    if len(z_targets) == 0:
        return out
    z_targets = np.asarray(z_targets, dtype=float)
    for direction in (-1, 1):
        mask = direction * (z_targets - z0) >= 0 if direction > 0 else z_targets < z0
        if not np.any(mask):
            continue
        zt = z_targets[mask]
        order = np.argsort(direction * zt)
        end = zt[order][-1]
        if end == z0:
            out[np.flatnonzero(mask)] = V0
            continue
        sol = solve_ivp(rhs, (z0, end), V0.reshape(-1).astype(complex), method="DOP853",
                        t_eval=zt[order], rtol=ODE_TOL, atol=ODE_TOL)
        if not sol.success:
            raise ToleranceNotMetError(f"kernel ODE failed: {sol.message}")
        vals = sol.y.T.reshape((-1,) + shape)
        idx = np.flatnonzero(mask)[order]
        out[idx] = vals
    return out


def _residue_matrix(R):
    """``i sum_a R_a (x) tau_a``: the coefficient of ``1/(z - c)`` in the kernel ODE."""
    return 1j * sum(np.kron(R[a], 2.0 * RHO[a]) for a in range(3))


def _admissible(R):
    Q = _residue_matrix(np.asarray(R, dtype=complex))
    Q = 0.5 * (Q + np.conj(Q.T))
    mu, W = np.linalg.eigh(Q)
    keep = mu > ADMISSIBLE_EXPONENT
    return W[:, keep], mu


def _general_frame_values(data, x, nodes):
    """Unnormalised admissible solutions at ``nodes`` as ``(n, 2k, 2)``."""
    k = data.k
    lo, hi = data.window
    if k == 1:
        z_mid = 0.5 * (lo + hi)
        return _propagate(data, x, z_mid, np.eye(2, dtype=complex), nodes)
    meta = data.pole_meta or {}
    residues = meta.get("residues", {})
    if "-1" not in residues or "+1" not in residues:
        raise PoleDataMissingError("charge k >= 2 needs residue triples at both ends in pole_meta")
    WL, _ = _admissible(residues["-1"])
    WR, _ = _admissible(residues["+1"])
    z_mid = 0.5 * (lo + hi)
    SL = _propagate(data, x, lo, WL, [z_mid])[0]
    SR = _propagate(data, x, hi, WR, [z_mid])[0]
    nL = np.linalg.norm(SL, axis=0)
    nR = np.linalg.norm(SR, axis=0)
    SL = SL / nL
    SR = SR / nR
    # solutions admissible at both ends: SL a = SR b
    stack = np.hstack([SL, -SR])
    _, sv, Vh = np.linalg.svd(stack)
    n_null = stack.shape[1] - np.count_nonzero(sv > 1e-6 * sv[0])
    if n_null != 2:
        raise SubspaceSelectionError(
            f"admissible subspace is not two dimensional (singular values {np.array2string(sv, precision=2)})")
    coeff = np.conj(Vh[-2:]).T
    aL = coeff[: SL.shape[1]] / nL[:, None]
    aR = coeff[SL.shape[1]:] / nR[:, None]
    left = nodes <= z_mid
    V = np.empty((len(nodes), 2 * k, 2), dtype=complex)
    V[left] = _propagate(data, x, lo, WL @ aL, nodes[left])
    V[~left] = _propagate(data, x, hi, WR @ aR, nodes[~left])
    return V


def _canonical(V, weights, k):
    """Orthonormal frame of ``span(V)`` fixed by projecting a reference pair."""
    C, lam = _sqrt_inv(_gram(V, weights))
    V = V @ C
    if k > 1:
        R = np.zeros((2 * k, 2), dtype=complex)
        R[0::2, 0] = 1.0 / np.sqrt(k)
        R[1::2, 1] = 1.0 / np.sqrt(k)
        S = np.einsum("j,jcb,ca->ba", weights, np.conj(V), R)
        V = V @ S
        C, _ = _sqrt_inv(_gram(V, weights))
        V = V @ C
    return V, lam


# ---------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class KernelFrame:
    """Orthonormal basis of the two dimensional kernel at ``x``.

    ``values[j]`` holds the two basis vectors (columns) at ``nodes[j]``;
    calling the frame evaluates it at arbitrary ``z`` in the window.
    """

    x: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    gram_diagnostics: dict
    evaluate: Callable = field(repr=False)

    def __call__(self, z):
        return self.evaluate(np.asarray(z, dtype=float))

    def gram(self):
        return _gram(self.values, self.weights)

    def orthonormality(self):
        return float(np.abs(self.gram() - np.eye(2)).max())


def kernel_frame(data, x, quad_order=DEFAULT_QUAD_ORDER):
    """The kernel frame at one point ``x``."""
    x = np.asarray(x, dtype=float).reshape(3)
    nodes, weights = gauss_nodes(quad_order, data.window)
    if _is_k1_constant(data):
        P = np.real(_positions(data, 0.0))[:, 0, 0]
        y = (x - P)[None]
        V = _k1_frames(y, nodes, weights)[0]
        # the same Loewdin coefficient applies off the nodes
        M = kernel_ode_matrix(data, x, 0.0)
        mu, U = np.linalg.eigh(M)
        Psi_nodes = _fundamental_constant(U, mu, nodes)
        C = np.linalg.solve(Psi_nodes[0], V[0])

        def evaluate(z):
            return _fundamental_constant(U, mu, np.atleast_1d(z)).reshape(np.shape(z) + (2, 2)) @ C

        G_raw = _gram(Psi_nodes, weights)
    else:
        raw = _general_frame_values(data, x, nodes)
        G_raw = _gram(raw, weights)
        V, _ = _canonical(raw, weights, data.k)

        def evaluate(z):
            z = np.atleast_1d(z)
            out = np.empty(z.shape + V.shape[1:], dtype=complex)
            for j, zj in enumerate(z.reshape(-1)):
                i = int(np.argmin(np.abs(nodes - zj)))
                out.reshape((-1,) + V.shape[1:])[j] = _propagate(data, x, nodes[i], V[i], [zj])[0]
            return out

    g = np.linalg.eigvalsh(G_raw)
    frame = KernelFrame(x, nodes, weights, V, {}, evaluate)
    frame.gram_diagnostics.update({"condition": float(g[-1] / g[0]),
                                   "orthonormality": frame.orthonormality(),
                                   "quad_order": int(quad_order)})
    return frame


def _fundamental_constant(U, lam, z):
    E = np.exp(np.multiply.outer(z, lam))
    return (U * E[..., None, :]) @ np.conj(U.T)


def ode_residual(data, frame, z=None, h=1e-4):
    """Max of ``|dv/dz - M v|`` at interior points, derivative by central differences."""
    if z is None:
        lo, hi = data.window
        z = np.linspace(lo, hi, 9)[1:-1]
    worst = 0.0
    for zj in np.atleast_1d(z):
        dV = (frame(zj + h) - frame(zj - h)) / (2 * h)
        worst = max(worst, float(np.abs(dV - kernel_ode_matrix(data, frame.x, zj) @ frame(zj)).max()))
    return worst


# ---------------------------------------------------------------------------
# fields


def _check_step(h):
    if not h > MIN_STEP:
        raise StepTooSmallError(f"step {h} below {MIN_STEP}")


def _point_fields(data, x, quad_order, h, with_connection=True):
    frame = kernel_frame(data, x, quad_order)
    Phi = _higgs_from_frame(frame.values, frame.nodes, frame.weights)
    if not with_connection:
        return None, Phi
    A = np.empty((3, 2, 2), dtype=complex)
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h
        Vp = kernel_frame(data, x + dx, quad_order).values
        Vm = kernel_frame(data, x - dx, quad_order).values
        _check_alignment(frame.values[None], Vp[None], Vm[None], frame.weights)
        A[i] = _connection_from_frames(frame.values, Vp, Vm, frame.weights, h)
    return A, Phi


def _fields(data, xs, quad_order, h, with_connection, engine=None):
    xs = np.asarray(xs, dtype=float)
    lead = xs.shape[:-1]
    flat = xs.reshape(-1, 3)
    if _is_k1_constant(data):
        P, nodes, weights, params = _k1_params(data, quad_order, h)
        if resolve_engine(engine) and with_connection:
            A, Phi = kernels.field_batch(kernels.KIND_NAHM1, params, np.ascontiguousarray(flat))
        else:
            A, Phi = _k1_fields_numpy(P, h, nodes, weights, flat, with_connection)
    else:
        Phi = np.empty((len(flat), 2, 2), dtype=complex)
        A = np.empty((len(flat), 3, 2, 2), dtype=complex) if with_connection else None
        for j, x in enumerate(flat):
            a, Phi[j] = _point_fields(data, x, quad_order, h, with_connection)
            if with_connection:
                A[j] = a
    Phi = Phi.reshape(lead + (2, 2))
    if with_connection:
        A = A.reshape(lead + (3, 2, 2))
    return A, Phi


def reconstruct_higgs(data, x, quad_order=DEFAULT_QUAD_ORDER):
    """Higgs field at ``x`` (``(..., 3)``)."""
    return _fields(data, x, quad_order, DEFAULT_STEP, False)[1]


def reconstruct_connection(data, x, quad_order=DEFAULT_QUAD_ORDER, h=DEFAULT_STEP, engine=None):
    """Connection ``(..., 3, 2, 2)`` at ``x`` with frame differencing step ``h``."""
    _check_step(h)
    return _fields(data, x, quad_order, h, True, engine)[0]


def nahm_monopole(data, quad_order=DEFAULT_QUAD_ORDER, h=DEFAULT_STEP, engine=None):
    """The monopole of ``data`` as a configuration evaluated on demand."""
    _check_step(h)
    kernel = None
    if _is_k1_constant(data):
        kernel = ("nahm1", _k1_params(data, quad_order, h)[3])

    def connection(x):
        return _fields(data, x, quad_order, h, True, engine)[0]

    def higgs(x):
        return _fields(data, x, quad_order, h, False, engine)[1]

    return FieldConfiguration(connection, higgs, charge=data.k, vev=1.0, kernel=kernel,
                              name=f"nahm-k{data.k}",
                              meta={"quad_order": quad_order, "h": h, "window": data.window})


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridReconstruction:
    """Fields sampled on a grid; failed points hold NaN and are listed in ``report``."""

    grid: GridSpec
    connection: np.ndarray
    higgs: np.ndarray
    energy: np.ndarray
    report: dict

    def higgs_norm(self):
        Phi = self.higgs
        return np.sqrt(np.maximum(-2.0 * np.real(np.einsum("...ab,...ba->...", Phi, Phi)), 0.0))

    def to_config(self, method="cubic"):
        """Configuration interpolating the samples (defined inside the grid box)."""
        from scipy.interpolate import RegularGridInterpolator

        axes = self.grid.axes()

        def interp(values):
            flat = values.reshape(self.grid.counts + (-1,))
            real = np.concatenate([flat.real, flat.imag], axis=-1)
            f = RegularGridInterpolator(axes, real, method=method, bounds_error=True)
            m = flat.shape[-1]
            tail = values.shape[3:]

            def call(x):
                x = np.asarray(x, dtype=float)
                out = f(x.reshape(-1, 3))
                return (out[:, :m] + 1j * out[:, m:]).reshape(x.shape[:-1] + tail)

            return call

        return FieldConfiguration(interp(self.connection), interp(self.higgs), charge=0, vev=1.0,
                                  name="sampled", meta={"grid": self.grid.to_json()})


def reconstruct_grid(data, grid, quad_order=DEFAULT_QUAD_ORDER, h=DEFAULT_STEP, energy=False,
                     energy_step=DEFAULT_STEP, engine=None, threads=None):
    """Reconstruct on every grid point.

    Per-point failures are collected in ``report["failures"]``. The output
    does not depend on the thread count. With ``energy=True`` the energy
    density (Laplacian normalisation) is evaluated from the on-demand
    configuration with step ``energy_step``.
    """
    _check_step(h)
    pts = grid.points().reshape(-1, 3)
    cfg = nahm_monopole(data, quad_order, h, engine)

    def work(sl):
        sub = pts[sl]
        try:
            A, Phi = _fields(data, sub, quad_order, h, True, engine)
            failures = []
        except MonopoleError:
            A = np.full((len(sub), 3, 2, 2), np.nan, dtype=complex)
            Phi = np.full((len(sub), 2, 2), np.nan, dtype=complex)
            failures = []
            for j, x in enumerate(sub):
                try:
                    a, phi = _fields(data, x[None], quad_order, h, True, engine)
                    A[j], Phi[j] = a[0], phi[0]
                except MonopoleError as exc:
                    failures.append({"index": int(sl.start + j), "point": x.tolist(),
                                     "error": type(exc).__name__, "message": str(exc)})
        e = None
        if energy:
            e = np.full(len(sub), np.nan)
            ok = np.all(np.isfinite(Phi.reshape(len(sub), -1)), axis=-1)
            if np.any(ok):
                e[ok] = energy_density(cfg, sub[ok], h=energy_step, convention="bianchi")
        return A, Phi, e, failures

    slices = [slice(i, min(i + GRID_CHUNK, len(pts))) for i in range(0, len(pts), GRID_CHUNK)]
    parts = parallel_map(work, slices, threads)
    shape = grid.counts
    A = np.concatenate([p[0] for p in parts]).reshape(shape + (3, 2, 2))
    Phi = np.concatenate([p[1] for p in parts]).reshape(shape + (2, 2))
    e = np.concatenate([p[2] for p in parts]).reshape(shape) if energy else None
    failures = [f for p in parts for f in p[3]]
    report = {"points": int(len(pts)), "failures": failures, "quad_order": int(quad_order), "h": h}
    return GridReconstruction(grid, A, Phi, e, report)
