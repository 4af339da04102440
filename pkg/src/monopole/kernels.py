"""Compiled hot loops.

A single Dormand-Prince 5(4) solver serves two right-hand sides: Hitchin's
equation along a line for the built-in field kinds, and Nahm's equations for
k x k matrices. Field kinds are dispatched on an integer so that the whole
integration compiles to one cached function.

Field kinds and their float parameter blocks:

* ``KIND_BPS``     ``[p1, p2, p3, c]`` (BPS at p scaled by c)
* ``KIND_VACUUM``  ``[w]`` (A = 0, Phi = diag(iw, -iw))
* ``KIND_NAHM1``   ``[P1, P2, P3, h, n, nodes..., weights...]`` (k=1 inverse Nahm)

Every function here also runs uncompiled when ``MONOPOLE_NUMBA=0``.
"""

import numpy as np

from ._jit import njit

KIND_BPS = 0
KIND_VACUUM = 1
KIND_NAHM1 = 2
KIND_IDS = {"bps": KIND_BPS, "vacuum": KIND_VACUUM, "nahm1": KIND_NAHM1}

RHS_HITCHIN = 0
RHS_NAHM = 1

OK, UNDERFLOW, MAX_STEPS, BLOW_UP, NONFINITE = 0, 1, 2, 3, 4

SERIES_RADIUS = 0.5
# Taylor coefficients in s = r^2 of (1/r - coth r)/r and (1/sinh r - 1/r)/r
_PHI_C = np.array([
    -1.0 / 3.0, 1.0 / 45.0, -2.0 / 945.0, 1.0 / 4725.0, -2.0 / 93555.0,
    1382.0 / 638512875.0, -4.0 / 18243225.0, 3617.0 / 162820783125.0,
    -87734.0 / 38979295480125.0, 349222.0 / 1531329465290625.0,
])
_A_C = np.array([
    -1.0 / 6.0, 7.0 / 360.0, -31.0 / 15120.0, 127.0 / 604800.0, -73.0 / 3421440.0,
    1414477.0 / 653837184000.0, -8191.0 / 37362124800.0, 16931177.0 / 762187345920000.0,
    -5749691557.0 / 2554547108585472000.0, 91546277357.0 / 401428831349145600000.0,
])

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B = _A[6].copy()
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit
def _poly(c, s):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * s + c[i]
    return acc


@njit
def bps_profiles(r):
    """``(phi/r, a/r)`` for the BPS profiles."""
    if r < SERIES_RADIUS:
        s = r * r
        return _poly(_PHI_C, s), _poly(_A_C, s)
    em = np.exp(-r)
    csch = 2.0 * em / (1.0 - em * em)
    coth = 1.0 / np.tanh(r)
    return (1.0 / r - coth) / r, (csch - 1.0 / r) / r


@njit
def _pauli_combination(m1, m2, m3, M):
    M[0, 0] = m3
    M[0, 1] = m1 - 1j * m2
    M[1, 0] = m1 + 1j * m2
    M[1, 1] = -m3


@njit
def _k1_frame(y1, y2, y3, nodes, weights, V):
    """Loewdin-orthonormal kernel frame for k=1 constant data.

    ``V[j]`` is the 2x2 matrix whose columns are the two kernel vectors at
    node ``j``; the kernel ODE is ``dv/dz = (y . tau / 2) v``.
    """
    r = np.sqrt(y1 * y1 + y2 * y2 + y3 * y3)
    n = nodes.shape[0]
    # Psi(z) = cosh(rz/2) + (z/2) shc(rz/2) (y . tau); G = sum w Psi^2
    g0 = 0.0
    gv = 0.0
    cs = np.empty(n)
    ds = np.empty(n)
    for j in range(n):
        z = nodes[j]
        s = 0.5 * r * z
        c = np.cosh(s)
        if abs(s) < 1e-8:
            d = 0.5 * z
        else:
            d = 0.5 * z * np.sinh(s) / s
        cs[j] = c
        ds[j] = d
        # Psi^2 = (c^2 + d^2 r^2) + 2 c d (y . tau)
        g0 += weights[j] * (c * c + d * d * r * r)
        gv += weights[j] * 2.0 * c * d
    # G = g0 + gv (y . tau); eigenvalues g0 +- gv r
    lp = 1.0 / np.sqrt(g0 + gv * r)
    lm = 1.0 / np.sqrt(g0 - gv * r)
    alpha = 0.5 * (lp + lm)
    if r > 0.0:
        beta = 0.5 * (lp - lm) / r
    else:
        beta = 0.0
    for j in range(n):
        # (c + d Y)(alpha + beta Y) with Y^2 = r^2
        a0 = cs[j] * alpha + ds[j] * beta * r * r
        a1 = cs[j] * beta + ds[j] * alpha
        V[j, 0, 0] = a0 + a1 * y3
        V[j, 0, 1] = a1 * (y1 - 1j * y2)
        V[j, 1, 0] = a1 * (y1 + 1j * y2)
        V[j, 1, 1] = a0 - a1 * y3


@njit
def nahm1_fields(P, h, nodes, weights, x, A, Phi):
    """Inverse-Nahm fields for k=1 data at ``x`` (writes into ``A``, ``Phi``)."""
    n = nodes.shape[0]
    V = np.empty((n, 2, 2), dtype=np.complex128)
    Vp = np.empty((n, 2, 2), dtype=np.complex128)
    Vm = np.empty((n, 2, 2), dtype=np.complex128)
    y1 = x[0] - P[0]
    y2 = x[1] - P[1]
    y3 = x[2] - P[2]
    _k1_frame(y1, y2, y3, nodes, weights, V)
    H = np.zeros((2, 2), dtype=np.complex128)
    for j in range(n):
        wz = weights[j] * nodes[j]
        for b in range(2):
            for a in range(2):
                H[b, a] += wz * (np.conj(V[j, 0, b]) * V[j, 0, a] + np.conj(V[j, 1, b]) * V[j, 1, a])
    tr = 0.5 * (H[0, 0] + H[1, 1])
    Phi[0, 0] = 0.5j * (H[0, 0] - tr)
    Phi[1, 1] = 0.5j * (H[1, 1] - tr)
    Phi[0, 1] = 0.5j * H[0, 1]
    Phi[1, 0] = 0.5j * H[1, 0]
    # enforce exact anti-hermiticity
    Phi[0, 0] = 1j * Phi[0, 0].imag
    Phi[1, 1] = -Phi[0, 0]
    off = 0.5 * (Phi[0, 1] - np.conj(Phi[1, 0]))
    Phi[0, 1] = off
    Phi[1, 0] = -np.conj(off)
    for i in range(3):
        dy = np.zeros(3)
        dy[i] = h
        _k1_frame(y1 + dy[0], y2 + dy[1], y3 + dy[2], nodes, weights, Vp)
        _k1_frame(y1 - dy[0], y2 - dy[1], y3 - dy[2], nodes, weights, Vm)
        Q = np.zeros((2, 2), dtype=np.complex128)
        for j in range(n):
            wj = weights[j] / (2.0 * h)
            for b in range(2):
                for a in range(2):
                    acc = 0j
                    for c in range(2):
                        acc += np.conj(V[j, c, b]) * (Vp[j, c, a] - Vm[j, c, a])
                    Q[b, a] += wj * acc
        # anti-hermitian traceless part
        q00 = 0.5 * (Q[0, 0] - np.conj(Q[0, 0]))
        q11 = 0.5 * (Q[1, 1] - np.conj(Q[1, 1]))
        t = 0.5 * (q00 + q11)
        A[i, 0, 0] = q00 - t
        A[i, 1, 1] = q11 - t
        off = 0.5 * (Q[0, 1] - np.conj(Q[1, 0]))
        A[i, 0, 1] = off
        A[i, 1, 0] = -np.conj(off)


@njit
def hitchin_matrix(kind, params, x, u, M):
    """``i Phi(x) - u . A(x)`` for a built-in field kind, written into ``M``."""
    if kind == KIND_BPS:
        c = params[3]
        y1 = c * (x[0] - params[0])
        y2 = c * (x[1] - params[1])
        y3 = c * (x[2] - params[2])
        r = np.sqrt(y1 * y1 + y2 * y2 + y3 * y3)
        ps, as_ = bps_profiles(r)
        # i Phi = (ps/2) y.tau ; -u.A = (i as/2) (y x u).tau
        w1 = y2 * u[2] - y3 * u[1]
        w2 = y3 * u[0] - y1 * u[2]
        w3 = y1 * u[1] - y2 * u[0]
        f = 0.5 * c * ps
        g = 0.5j * c * as_
        _pauli_combination(f * y1 + g * w1, f * y2 + g * w2, f * y3 + g * w3, M)
    elif kind == KIND_VACUUM:
        w = params[0]
        _pauli_combination(0.0, 0.0, -w, M)
    else:
        n = int(params[4])
        A = np.empty((3, 2, 2), dtype=np.complex128)
        Phi = np.empty((2, 2), dtype=np.complex128)
        nahm1_fields(params[0:3], params[3], params[5:5 + n], params[5 + n:5 + 2 * n], x, A, Phi)
        for a in range(2):
            for b in range(2):
                M[a, b] = 1j * Phi[a, b] - u[0] * A[0, a, b] - u[1] * A[1, a, b] - u[2] * A[2, a, b]


@njit
def field_values(kind, params, x, A, Phi):
    """Connection and Higgs field of a built-in kind at one point."""
    if kind == KIND_NAHM1:
        n = int(params[4])
        nahm1_fields(params[0:3], params[3], params[5:5 + n], params[5 + n:5 + 2 * n], x, A, Phi)
        return
    # recover A and Phi from i Phi - u.A with u = 0 and unit vectors
    M = np.empty((2, 2), dtype=np.complex128)
    zero = np.zeros(3)
    hitchin_matrix(kind, params, x, zero, M)
    for a in range(2):
        for b in range(2):
            Phi[a, b] = -1j * M[a, b]
    for i in range(3):
        u = np.zeros(3)
        u[i] = 1.0
        hitchin_matrix(kind, params, x, u, M)
        for a in range(2):
            for b in range(2):
                A[i, a, b] = -(M[a, b] - 1j * Phi[a, b])


@njit
def _rhs(rid, iparams, fparams, t, y, dy):
    if rid == RHS_HITCHIN:
        M = np.empty((2, 2), dtype=np.complex128)
        x = np.empty(3)
        for i in range(3):
            x[i] = fparams[3 + i] + t * fparams[i]
        hitchin_matrix(iparams[0], fparams[6:], x, fparams[0:3], M)
        dy[0] = M[0, 0] * y[0] + M[0, 1] * y[1]
        dy[1] = M[1, 0] * y[0] + M[1, 1] * y[1]
    else:
        k = iparams[0]
        kk = k * k
        for a in range(3):
            b = (a + 1) % 3
            c = (a + 2) % 3
            for i in range(k):
                for j in range(k):
                    acc = 0j
                    for m in range(k):
                        acc += y[b * kk + i * k + m] * y[c * kk + m * k + j]
                        acc -= y[c * kk + i * k + m] * y[b * kk + m * k + j]
                    dy[a * kk + i * k + j] = acc


@njit
def dopri5(rid, iparams, fparams, y0, t0, t_out, rtol, atol, h0, max_steps, blow):
    """Adaptive Dormand-Prince integration landing exactly on ``t_out``.

    Returns ``(Y, status, t_reached, n_steps)``; rows of ``Y`` past a failure
    are left as NaN.
    """
    m = y0.shape[0]
    n_out = t_out.shape[0]
    Y = np.full((n_out, m), np.nan + 0j)
    y = y0.copy()
    K = np.empty((7, m), dtype=np.complex128)
    tmp = np.empty(m, dtype=np.complex128)
    ynew = np.empty(m, dtype=np.complex128)
    t = t0
    steps = 0
    if n_out == 0:
        return Y, OK, t, steps
    direction = 1.0 if t_out[n_out - 1] >= t0 else -1.0
    h = abs(h0)
    _rhs(rid, iparams, fparams, t, y, K[0])
    idx = 0
    while idx < n_out and (t_out[idx] - t) * direction <= 0.0:
        Y[idx] = y
        idx += 1
    while idx < n_out:
        target = t_out[idx]
        span = abs(target - t)
        last = h >= span
        hs = direction * span if last else direction * h
        for s in range(1, 7):
            for q in range(m):
                acc = y[q]
                for j in range(s):
                    acc += hs * _A[s, j] * K[j, q]
                tmp[q] = acc
            _rhs(rid, iparams, fparams, t + _C[s] * hs, tmp, K[s])
        for q in range(m):
            ynew[q] = tmp[q]
        # the seventh stage is evaluated at (t + h, ynew): first-same-as-last
        err = 0.0
        for q in range(m):
            e = 0j
            for j in range(7):
                e += _E[j] * K[j, q]
            sc = atol + rtol * max(abs(y[q]), abs(ynew[q]))
            v = abs(hs * e) / sc
            err += v * v
        err = np.sqrt(err / m)
        steps += 1
        if not np.isfinite(err):
            return Y, NONFINITE, t, steps
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if err <= 1.0:
            t = target if last else t + hs
            for q in range(m):
                y[q] = ynew[q]
                K[0, q] = K[6, q]
            big = 0.0
            for q in range(m):
                big = max(big, abs(y[q]))
            if big > blow:
                return Y, BLOW_UP, t, steps
            while idx < n_out and (t_out[idx] - t) * direction <= 0.0:
                Y[idx] = y
                idx += 1
            if not last:
                h = h * fac
        else:
            h = abs(hs) * fac
        if h < 1e-14 * max(1.0, abs(t)):
            return Y, UNDERFLOW, t, steps
        if steps >= max_steps:
            return Y, MAX_STEPS, t, steps
    return Y, OK, t, steps


@njit
def hitchin_batch(kind, params, us, vs, s0s, t0s, t1s, rtol, atol, max_steps):
    """Integrate many lines; returns end values, statuses and step counts."""
    n = us.shape[0]
    out = np.empty((n, 2), dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    nsteps = np.zeros(n, dtype=np.int64)
    iparams = np.array([kind], dtype=np.int64)
    fparams = np.empty(6 + params.shape[0])
    fparams[6:] = params
    t_out = np.empty(1)
    for i in range(n):
        fparams[0:3] = us[i]
        fparams[3:6] = vs[i]
        t_out[0] = t1s[i]
        h0 = 0.05 * max(abs(t1s[i] - t0s[i]), 1e-3)
        Y, st, _, ns = dopri5(RHS_HITCHIN, iparams, fparams, s0s[i], t0s[i], t_out,
                              rtol, atol, h0, max_steps, 1e300)
        out[i] = Y[0]
        status[i] = st
        nsteps[i] = ns
    return out, status, nsteps


@njit
def field_batch(kind, params, xs):
    n = xs.shape[0]
    A = np.empty((n, 3, 2, 2), dtype=np.complex128)
    Phi = np.empty((n, 2, 2), dtype=np.complex128)
    for i in range(n):
        field_values(kind, params, xs[i], A[i], Phi[i])
    return A, Phi
