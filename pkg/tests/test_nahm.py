import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monopole.errors import (BlowUpError, InsufficientSamplesError, OutOfWindowError,
                             ShapeMismatchError, ValidationError)
from monopole.minitwistor import centre_of, eta_of_point, point_coefficients, reality_defect
from monopole.nahm import (NahmData, a_plus, antihermitian_defect, char_poly_values,
                           conservation_report, euler_top, evolve, lax_polynomial, lax_residual,
                           nahm_residual, nahm_rhs, nahm_spectral_curve, pole_solution,
                           random_initial, spin_generators)

seeds = st.integers(0, 2**32 - 1)
RHO = spin_generators(2)


def bracket(a, b):
    return a @ b - b @ a


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_spin_generators(k):
    r = spin_generators(k)
    assert np.abs(bracket(r[1], r[2]) - r[0]).max() < 1e-13
    assert np.abs(bracket(r[2], r[0]) - r[1]).max() < 1e-13
    assert np.abs(bracket(r[0], r[1]) - r[2]).max() < 1e-13
    assert antihermitian_defect(r) < 1e-15
    # Casimir of the irreducible k-dimensional representation
    cas = -sum(m @ m for m in r)
    assert np.allclose(cas, (k * k - 1) / 4 * np.eye(k))


def test_k2_generators_are_half_pauli():
    pauli = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    assert np.allclose(RHO, -0.5j * pauli)


def test_rhs_examples():
    assert np.all(nahm_rhs(np.array([1j, -2j, 0.5j]).reshape(3, 1, 1)) == 0)
    f = 1.7
    assert np.allclose(nahm_rhs(f * RHO), f * f * RHO)
    with pytest.raises(ShapeMismatchError):
        nahm_rhs(np.zeros((2, 2, 2)))
    with pytest.raises(ShapeMismatchError):
        nahm_rhs(np.zeros((3, 2, 3)))


@given(seeds, st.integers(1, 4))
def test_rhs_preserves_antihermiticity(seed, k):
    T = random_initial(np.random.default_rng(seed), k, scale=1.0)
    assert antihermitian_defect(nahm_rhs(T)) < 1e-13


def test_rhs_broadcasts(rng):
    T = random_initial(rng, 3)
    batch = np.stack([T, 2 * T])
    out = nahm_rhs(batch)
    assert np.allclose(out[0], nahm_rhs(T)) and np.allclose(out[1], 4 * nahm_rhs(T))


def test_constant_k1_trajectory():
    p = np.array([0.3, -0.2, 0.5])
    data = evolve(-p.reshape(3, 1, 1).astype(complex) * 1j, -0.9, 0.9)
    assert np.abs(data.T - data.T[0]).max() == 0


@pytest.mark.parametrize("engine", ["numba", "numpy"])
def test_pole_solution_reproduced(engine):
    data = evolve(RHO, 0.0, 0.9, engine=engine)
    exact = pole_solution(RHO, data.z)
    assert np.abs(data.T - exact.T).max() < 1e-8
    assert antihermitian_defect(data.T) < 1e-9


def test_pole_family_solves_equations():
    # analytic derivative of -rho/(z - c) is rho/(z - c)^2
    for k in (2, 3, 4):
        rho = spin_generators(k)
        z = np.linspace(-0.9, 0.9, 7)
        for c in (1.0, -1.0, 1.3):
            T = pole_solution(rho, z, c).T
            dT = rho[None] / ((z - c) ** 2)[:, None, None, None]
            assert np.abs(dT - nahm_rhs(T)).max() < 1e-10


def test_time_reversal(rng):
    T0 = random_initial(rng, 3)
    fwd = evolve(T0, -0.5, 0.7)
    back = evolve(fwd.T[-1], 0.7, -0.5)
    assert np.abs(back.T[0] - T0).max() < 1e-8
    assert np.allclose(back.z, fwd.z)


def test_blow_up_detected():
    with pytest.raises(BlowUpError) as err:
        evolve(RHO, 0.0, 1.5)
    assert abs(err.value.z - 1.0) < 1e-3


@pytest.mark.parametrize("k,bound", [(2, 1e-8), (3, 1e-7)])
def test_conservation(rng, k, bound):
    T0 = random_initial(rng, k)
    data = evolve(T0, -0.9, 0.9, tol=1e-10)
    assert conservation_report(data) < bound


def test_conservation_drift_shrinks_with_tol(rng):
    T0 = random_initial(rng, 3)
    coarse = conservation_report(evolve(T0, -0.9, 0.9, tol=1e-6))
    fine = conservation_report(evolve(T0, -0.9, 0.9, tol=1e-10))
    assert fine <= coarse


def test_constant_k1_conservation_zero():
    assert conservation_report(NahmData.point([1.0, 2.0, 3.0])) == 0


def test_lax_polynomial_examples(rng):
    p = np.array([0.3, -0.2, 0.5])
    T = -p.reshape(3, 1, 1).astype(complex)
    for zeta in (0.0, 0.3 - 0.8j, 2.0):
        assert abs(lax_polynomial(T, zeta)[0, 0] + eta_of_point(p, zeta)) < 1e-14
    T = random_initial(rng, 3)
    assert np.allclose(lax_polynomial(T, 0.0), T[0] + 1j * T[1])


@given(seeds, st.integers(1, 4))
def test_lax_form_is_nahm(seed, k):
    # A is linear in T, so dA/dz = A(rhs(T)); Nahm's equations are equivalent to the Lax identity
    rng = np.random.default_rng(seed)
    T = random_initial(rng, k, scale=1.0)
    zeta = complex(*rng.uniform(-1.5, 1.5, 2))
    dA = lax_polynomial(nahm_rhs(T), zeta)
    A, Ap = lax_polynomial(T, zeta), a_plus(T, zeta)
    assert np.abs(dA - bracket(Ap, A)).max() < 1e-12


def test_lax_residual_on_trajectory(rng):
    T0 = random_initial(rng, 2)
    r1 = lax_residual(evolve(T0, -0.9, 0.9, n_samples=201))
    r2 = lax_residual(evolve(T0, -0.9, 0.9, n_samples=401))
    assert r2 < r1 / 3.5
    assert lax_residual(evolve(T0, -0.9, 0.9, n_samples=3201)) < 1e-5


def test_nahm_residual_examples(rng):
    T0 = random_initial(rng, 3)
    res = [nahm_residual(evolve(T0, -0.5, 0.5, n_samples=n)) for n in (101, 201, 401)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.8)
    assert nahm_residual(NahmData.point([0.1, 0.2, 0.3])) < 1e-14
    data = evolve(T0, -0.9, 0.9)
    noise = 1e-3 * random_initial(rng, 3).reshape(1, 3, 3, 3) * rng.standard_normal((data.z.size, 1, 1, 1))
    noisy = NahmData(3, data.z, data.T + noise)
    assert nahm_residual(noisy) > 1e-4
    with pytest.raises(InsufficientSamplesError):
        nahm_residual(NahmData(3, data.z[:2], data.T[:2]))


def test_point_curve_centre():
    p = np.array([0.3, -0.2, 0.5])
    curve = nahm_spectral_curve(NahmData.point(p))
    assert np.abs(curve.a[0] + point_coefficients(p)).max() < 1e-12
    assert np.allclose(centre_of(curve), p)


def test_pole_curve_vanishes():
    data = pole_solution(RHO, np.linspace(-0.5, 0.5, 11))
    for z in data.z:
        curve = nahm_spectral_curve(data, z=z)
        assert max(np.abs(a).max() for a in curve.a) < 1e-12


def test_curve_degrees_and_reality(rng):
    data = evolve(random_initial(rng, 2), -0.5, 0.5)
    curve = nahm_spectral_curve(data)
    assert [len(a) for a in curve.a] == [3, 5]
    assert curve.residual < 1e-10
    assert reality_defect(curve) < 1e-8
    c3 = nahm_spectral_curve(evolve(random_initial(rng, 3), -0.5, 0.5))
    assert reality_defect(c3) < 1e-8
    with pytest.raises(InsufficientSamplesError):
        nahm_spectral_curve(data, zeta_samples=[0.1, 0.2, 0.3])


def test_char_poly_values_shape(rng):
    T = np.stack([random_initial(rng, 3) for _ in range(4)])
    out = char_poly_values(T, [0.1, 0.2j])
    assert out.shape == (4, 2, 3)


def test_euler_top_solves_equations():
    z = np.linspace(0.0, 0.8, 81)
    data = euler_top(z, m=0.3)
    evolved = evolve(data.T[0], 0.0, 0.8, z_samples=z)
    assert np.abs(evolved.T - data.T).max() < 1e-8
    assert conservation_report(data) < 1e-10
    assert antihermitian_defect(data.T) < 1e-12
    # near each end T approaches R / (z -+ 1)
    near = euler_top(np.array([-1 + 1e-6, 1 - 1e-6]), m=0.3)
    res = near.pole_meta["residues"]
    assert np.abs(-1e-6 * near.T[0] - res["-1"]).max() < 1e-5
    assert np.abs(1e-6 * near.T[1] - res["+1"]).max() < 1e-5


def test_nahm_data_validation():
    with pytest.raises(ValidationError):
        NahmData(2, np.array([0.0]), np.ones((1, 3, 2, 2), complex))
    with pytest.raises(ValidationError):
        NahmData(2, np.array([0.1, 0.0]), np.zeros((2, 3, 2, 2), complex))
    data = evolve(pole_solution(RHO, [-0.5]).T[0], -0.5, 0.5)
    with pytest.raises(OutOfWindowError):
        data(0.6)
    assert np.abs(data(0.123) - pole_solution(RHO, [0.123]).T[0]).max() < 1e-7


def test_json_round_trip(rng):
    data = euler_top(np.linspace(-0.9, 0.9, 5))
    obj = json.loads(json.dumps(data.to_json()))
    assert {"k", "z_samples", "T", "pole_meta"} <= set(obj)
    back = NahmData.from_json(obj)
    assert np.array_equal(back.T, data.T) and np.array_equal(back.z, data.z)
    assert np.array_equal(back.pole_meta["residues"]["+1"], data.pole_meta["residues"]["+1"])
    assert back.window == data.window
