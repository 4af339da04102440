import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_points
from monopole import su2
from monopole.bps import bps_config, energy_density_closed, higgs_norm_profile
from monopole.errors import (OutOfWindowError, PoleDataMissingError, StepTooSmallError)
from monopole.fields import bogomolny_residual, energy_density, higgs_norm
from monopole.grid import GridSpec
from monopole.nahm import NahmData, euler_top, spin_generators
from monopole.nahm_inverse import (_canonical, _connection_from_frames, _general_frame_values,
                                   _higgs_from_frame, gauss_nodes, kernel_frame, kernel_ode_matrix,
                                   nahm_monopole, ode_residual, reconstruct_connection,
                                   reconstruct_grid, reconstruct_higgs)

P = np.array([0.3, -0.2, 0.5])
ORIGIN = NahmData.point([0.0, 0.0, 0.0])
seeds = st.integers(0, 2**32 - 1)


def field_norm(Phi):
    return su2.norm(Phi)


def test_ode_matrix_examples():
    r = 1.3
    M = kernel_ode_matrix(ORIGIN, [0.0, 0.0, r], 0.0)
    assert np.allclose(M, np.diag([r / 2, -r / 2]))
    assert np.abs(kernel_ode_matrix(NahmData.point(P), P, 0.3)).max() < 1e-15
    with pytest.raises(OutOfWindowError):
        kernel_ode_matrix(euler_top(np.linspace(-0.9, 0.9, 11)), P, 0.95)


@given(seeds)
def test_ode_matrix_hermitian(seed):
    rng = np.random.default_rng(seed)
    data = euler_top(np.linspace(-0.9, 0.9, 21), m=rng.uniform(0, 0.9))
    M = kernel_ode_matrix(data, rng.standard_normal(3), rng.uniform(-0.9, 0.9))
    assert np.abs(M - M.conj().T).max() < 1e-12


def test_frame_matches_analytic_solution():
    r = 1.7
    frame = kernel_frame(ORIGIN, [0.0, 0.0, r])
    z = np.linspace(-1, 1, 9)
    n = np.sqrt(2 * np.sinh(r) / r)
    expect = np.zeros((9, 2, 2))
    expect[:, 0, 0] = np.exp(r * z / 2) / n
    expect[:, 1, 1] = np.exp(-r * z / 2) / n
    assert np.abs(frame(z) - expect).max() < 1e-12


def test_frame_orthonormal_and_solves_ode(rng):
    data = NahmData.point(P)
    for x in random_points(rng, 5, P, 3.0):
        frame = kernel_frame(data, x)
        assert frame.orthonormality() < 1e-10
        assert frame.gram_diagnostics["quad_order"] == 64
        assert ode_residual(data, frame) < 1e-8


def test_frame_constant_at_centre():
    frame = kernel_frame(NahmData.point(P), P)
    V = frame(np.linspace(-1, 1, 7))
    assert np.abs(V - V[0]).max() < 1e-14
    assert np.abs(reconstruct_higgs(NahmData.point(P), P)).max() < 1e-15


def test_general_path_matches_closed_form(rng):
    data = NahmData.point(P)
    nodes, weights = gauss_nodes(64)
    for x in random_points(rng, 3, P, 2.0):
        V, _ = _canonical(_general_frame_values(data, x, nodes), weights, 1)
        phi = _higgs_from_frame(V, nodes, weights)
        assert abs(field_norm(phi) - higgs_norm_profile(np.linalg.norm(x - P))) < 1e-9


def test_higgs_norm_closed_form(rng):
    pts = random_points(rng, 50, P, 5.0)
    got = field_norm(reconstruct_higgs(NahmData.point(P), pts))
    want = higgs_norm_profile(np.linalg.norm(pts - P, axis=1))
    assert np.abs(got - want).max() < 1e-6


def test_translation_covariance(rng):
    q = rng.standard_normal(3)
    pts = random_points(rng, 10, radius=3.0)
    a = field_norm(reconstruct_higgs(ORIGIN, pts))
    b = field_norm(reconstruct_higgs(NahmData.point(q), pts + q))
    assert np.abs(a - b).max() < 1e-12


def test_quadrature_converged(rng):
    pts = random_points(rng, 10, P, 4.0)
    a = reconstruct_higgs(NahmData.point(P), pts, quad_order=64)
    b = reconstruct_higgs(NahmData.point(P), pts, quad_order=128)
    assert np.abs(a - b).max() < 1e-10


@pytest.mark.parametrize("engine", ["numba", "numpy"])
def test_bogomolny_residual_second_order(engine):
    x = np.array([[0.0, 0.0, 0.8], [0.4, -0.3, 1.1]]) + P
    res = []
    for h in (2e-3, 1e-3, 5e-4):
        cfg = nahm_monopole(NahmData.point(P), h=h, engine=engine)
        res.append(bogomolny_residual(cfg, x, h=1e-4).max())
    assert res[1] < 5e-6
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.8)


def test_residual_at_centre():
    cfg = nahm_monopole(NahmData.point(P))
    A = cfg.connection(P)
    assert np.all(np.isfinite(A))
    assert bogomolny_residual(cfg, P[None], h=1e-4).max() < 5e-6


def test_unitary_frame_change_is_gauge(rng):
    data = NahmData.point(P)
    x, h = np.array([0.9, 0.1, -0.4]), 1e-3
    frame = kernel_frame(data, x)
    nodes, w = frame.nodes, frame.weights
    Vp = kernel_frame(data, x + [h, 0, 0]).values
    Vm = kernel_frame(data, x - [h, 0, 0]).values
    U = su2.random_group(rng)
    phi0 = _higgs_from_frame(frame.values, nodes, w)
    phi1 = _higgs_from_frame(frame.values @ U, nodes, w)
    assert np.abs(phi1 - U.conj().T @ phi0 @ U).max() < 1e-12
    a0 = _connection_from_frames(frame.values, Vp, Vm, w, h)
    a1 = _connection_from_frames(frame.values @ U, Vp @ U, Vm @ U, w, h)
    assert np.abs(a1 - U.conj().T @ a0 @ U).max() < 1e-12
    assert abs(su2.norm(phi1) - su2.norm(phi0)) < 1e-12


def test_round_trip_against_bps(rng):
    pts = random_points(rng, 20, P, 4.0)
    rec = nahm_monopole(NahmData.point(P))
    ref = bps_config(P)
    assert np.abs(higgs_norm(rec, pts) - higgs_norm(ref, pts)).max() < 1e-5
    e_rec = energy_density(rec, pts[:6], h=1e-3, convention="bianchi")
    e_ref = energy_density(ref, pts[:6], convention="bianchi")
    assert np.abs(e_rec - e_ref).max() < 1e-5


def test_step_guard():
    with pytest.raises(StepTooSmallError):
        reconstruct_connection(ORIGIN, [[0.1, 0.2, 0.3]], h=1e-12)
    with pytest.raises(StepTooSmallError):
        nahm_monopole(ORIGIN, h=0.0)


def test_pole_data_required_for_k2():
    z = np.linspace(-0.9, 0.9, 11)
    data = euler_top(z)
    bare = NahmData(2, data.z, data.T)
    with pytest.raises(PoleDataMissingError):
        reconstruct_higgs(bare, [[0.1, 0.2, 0.3]])


@pytest.fixture(scope="module")
def grid21():
    grid = GridSpec.cube(-2.0, 2.0, 21)
    return reconstruct_grid(ORIGIN, grid, energy=True, energy_step=1e-3)


def test_grid_reconstruction(grid21):
    r = np.linalg.norm(grid21.grid.points(), axis=-1)
    assert np.abs(grid21.higgs_norm() - higgs_norm_profile(r)).max() < 1e-6
    e = grid21.energy
    assert np.unravel_index(np.argmax(e), e.shape) == (10, 10, 10)
    assert abs(e[10, 10, 10] - 2.0 / 3.0) < 1e-3
    assert np.abs(e - energy_density_closed(r)).max() < 1e-3
    assert grid21.report["failures"] == []


def test_grid_deterministic_across_threads():
    grid = GridSpec.cube(-1.0, 1.0, 11)
    a = reconstruct_grid(NahmData.point(P), grid, threads=1)
    b = reconstruct_grid(NahmData.point(P), grid, threads=3)
    assert np.array_equal(a.connection, b.connection) and np.array_equal(a.higgs, b.higgs)


def test_grid_engines_agree():
    grid = GridSpec.cube(-1.0, 1.0, 7)
    a = reconstruct_grid(NahmData.point(P), grid, engine="numba")
    b = reconstruct_grid(NahmData.point(P), grid, engine="numpy")
    assert np.abs(a.connection - b.connection).max() < 1e-12
    assert np.abs(a.higgs - b.higgs).max() < 1e-12


def test_grid_to_config(grid21):
    cfg = grid21.to_config()
    x = np.array([[0.35, -0.45, 0.7]])
    r = np.linalg.norm(x, axis=1)
    assert abs(higgs_norm(cfg, x)[0] - higgs_norm_profile(r)[0]) < 1e-3
    with pytest.raises(ValueError):
        cfg.higgs(np.array([[3.0, 0.0, 0.0]]))


def test_k2_experimental_converges_with_window():
    # residual of the k=2 reconstruction shrinks like eps^2 as the window approaches the poles
    x = np.array([[0.3, 0.2, 0.4]])
    res = []
    for eps in (0.1, 0.05):
        th = np.linspace(np.pi, 0, 801)
        data = euler_top((1 - eps) * np.cos(th))
        cfg = nahm_monopole(data, quad_order=32, h=1e-3)
        res.append(bogomolny_residual(cfg, x, h=1e-3)[0])
        frame = kernel_frame(data, x[0], quad_order=32)
        assert frame.orthonormality() < 1e-10
    assert res[1] < res[0] / 3
