"""su(2) and SU(2) on 2x2 complex arrays.

Lie-algebra values are stored as ``(..., 2, 2)`` complex arrays. The basis is
``e^a = -(i/2) tau_a`` (tau = Pauli), so ``[e^a, e^b] = eps_abc e^c``, and the
invariant form is ``<A, B> = -2 tr(AB)``, under which the basis is orthonormal.
All functions broadcast over leading axes.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ValidationError

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
IDENTITY = np.eye(2, dtype=complex)
BASIS = -0.5j * PAULI
E1, E2, E3 = BASIS

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_i, _j, _k] = 1.0
    EPS[_j, _i, _k] = -1.0

ALGEBRA_TOL = 1e-12
GROUP_TOL = 1e-12


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def trace(m):
    return m[..., 0, 0] + m[..., 1, 1]


def inner(a, b):
    """Invariant form ``-2 Re tr(ab)``."""
    return -2.0 * np.real(np.einsum("...ij,...ji->...", a, b))


def norm(a):
    return np.sqrt(np.maximum(inner(a, a), 0.0))


def bracket(a, b):
    return a @ b - b @ a


def from_vector(c):
    """``sum_a c_a e^a`` for real ``c`` of shape ``(..., 3)``."""
    c = np.asarray(c, dtype=float)
    return np.einsum("...a,aij->...ij", c, BASIS)


def to_vector(a):
    """Components of ``a`` in the orthonormal basis."""
    return np.stack([inner(a, BASIS[i]) for i in range(3)], axis=-1)


def project(m):
    """Nearest su(2) element: anti-hermitian, traceless part."""
    ah = 0.5 * (m - dagger(m))
    tr = trace(ah)[..., None, None]
    return ah - 0.5 * tr * IDENTITY


def algebra_defect(m):
    m = np.asarray(m)
    herm = np.abs(m + dagger(m)).max(axis=(-1, -2))
    tr = np.abs(trace(m))
    return np.maximum(herm, tr)


def group_defect(g):
    g = np.asarray(g)
    unit = np.abs(g @ dagger(g) - IDENTITY).max(axis=(-1, -2))
    det = np.abs(np.linalg.det(g) - 1.0)
    return np.maximum(unit, det)


def check_algebra(m, tol=ALGEBRA_TOL):
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (...,2,2) array, got {m.shape}")
    bad = np.max(algebra_defect(m), initial=0.0)
    if bad > tol:
        raise ValidationError(f"not in su(2): defect {bad:.3e}")
    return m


def check_group(g, tol=GROUP_TOL):
    g = np.asarray(g, dtype=complex)
    if g.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (...,2,2) array, got {g.shape}")
    bad = np.max(group_defect(g), initial=0.0)
    if bad > tol:
        raise ValidationError(f"not in SU(2): defect {bad:.3e}")
    return g


def expm(a):
    """Exponential of su(2) elements in closed form."""
    c = to_vector(a)
    theta = np.linalg.norm(c, axis=-1)
    # a = -(i/2) c.tau, a^2 = -(theta/2)^2
    half = 0.5 * theta
    sinc = np.sinc(half / np.pi)  # sin(half)/half
    return np.cos(half)[..., None, None] * IDENTITY + sinc[..., None, None] * a


def random_algebra(rng, size=(), scale=1.0):
    shape = size if isinstance(size, tuple) else (size,)
    return from_vector(scale * rng.standard_normal(shape + (3,)))


def random_group(rng, size=()):
    shape = size if isinstance(size, tuple) else (size,)
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    g = np.empty(shape + (2, 2), dtype=complex)
    g[..., 0, 0] = w + 1j * z
    g[..., 0, 1] = y + 1j * x
    g[..., 1, 0] = -y + 1j * x
    g[..., 1, 1] = w - 1j * z
    return g


def mobius(g, zeta):
    """Fractional linear action of ``g`` on the Riemann sphere.

    ``zeta`` may be ``inf`` (complex or real); the result is ``inf`` where the
    denominator vanishes.
    """
    g = np.asarray(g, dtype=complex)
    z = np.asarray(zeta, dtype=complex)
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    at_inf = ~np.isfinite(z)
    zf = np.where(at_inf, 0.0, z)
    num = np.where(at_inf, a, a * zf + b)
    den = np.where(at_inf, c, c * zf + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den == 0, complex(np.inf), num / np.where(den == 0, 1.0, den))
    return out[()] if out.ndim == 0 else out


def chordal_distance(z1, z2):
    """Chordal distance on the Riemann sphere (handles ``inf``)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    h1 = _homogeneous(z1)
    h2 = _homogeneous(z2)
    cross = np.abs(h1[..., 0] * h2[..., 1] - h1[..., 1] * h2[..., 0])
    return cross


def _homogeneous(z):
    fin = np.isfinite(z)
    zf = np.where(fin, z, 0.0)
    w0 = np.where(fin, zf, 1.0)
    w1 = np.where(fin, 1.0, 0.0)
    h = np.stack([w0, w1], axis=-1).astype(complex)
    return h / np.linalg.norm(h, axis=-1, keepdims=True)


def rotation_lift(R):
    """SU(2) element acting on zeta = (u1+iu2)/(1-u3) as the rotation R.

    ``mobius(rotation_lift(R), zeta(u)) == zeta(R u)``.
    """
    x, y, z, w = Rotation.from_matrix(np.asarray(R, dtype=float)).as_quat()
    h = w * IDENTITY - 1j * (x * PAULI[0] + y * PAULI[1] + z * PAULI[2])
    return np.conj(h)


def adjoint_matrix(g):
    """3x3 rotation ``R`` with ``g e^a g^-1 = sum_b R[b, a] e^b``."""
    g = np.asarray(g, dtype=complex)
    ge = g[..., None, :, :] @ BASIS @ dagger(g)[..., None, :, :]
    return np.swapaxes(to_vector(ge), -1, -2)
