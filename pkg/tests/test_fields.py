import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from monopole import bps, fields, su2
from monopole.errors import StepTooSmallError, ValidationError
from monopole.fields import FieldConfiguration

from conftest import random_points

P = np.array([0.3, -0.2, 0.5])
seeds = st.integers(0, 2**32 - 1)


def linear_higgs_config():
    def connection(x):
        return np.zeros(np.shape(x)[:-1] + (3, 2, 2), dtype=complex)

    def higgs(x):
        return np.asarray(x)[..., 0, None, None] * su2.E1

    return FieldConfiguration(connection, higgs)


def pure_gauge_config(rng):
    c = rng.standard_normal((3, 3))

    def g(x):
        return su2.expm(su2.from_vector(np.sin(np.asarray(x) @ c)))

    def connection(x):
        # A_i = g d_i(g^-1) by central differences of g itself
        h = 1e-5
        out = []
        gx = g(x)
        for i in range(3):
            dx = h * np.eye(3)[i]
            dginv = (su2.dagger(g(x + dx)) - su2.dagger(g(x - dx))) / (2 * h)
            out.append(gx @ dginv)
        return np.stack(out, axis=-3)

    return FieldConfiguration(connection, lambda x: g(x) @ su2.E3 @ su2.dagger(g(x)))


def random_nonsolution(rng):
    a = rng.standard_normal((3, 3, 3))
    b = rng.standard_normal((3, 3))

    def connection(x):
        return su2.from_vector(np.einsum("...k,ijk->...ij", np.sin(x), a))

    def higgs(x):
        return su2.from_vector(np.cos(x) @ b)

    return FieldConfiguration(connection, higgs)


def test_vacuum_has_no_curvature_or_gradient():
    cfg = fields.vacuum_config()
    x = np.array([[0.1, 0.2, 0.3], [5.0, -2.0, 1.0]])
    assert np.abs(fields.curvature(cfg, x)).max() == 0.0
    assert np.abs(fields.cov_deriv_higgs(cfg, x)).max() == 0.0
    assert np.all(fields.bogomolny_residual(cfg, x) == 0.0)
    assert np.all(fields.energy_density(cfg, x) == 0.0)
    assert cfg.vev == pytest.approx(2.0)


def test_linear_higgs_gradient():
    D = fields.cov_deriv_higgs(linear_higgs_config(), np.array([0.4, 1.0, -2.0]))
    assert np.allclose(D, np.stack([su2.E1, 0 * su2.E1, 0 * su2.E1]), atol=1e-10)


def test_pure_gauge_is_flat(rng):
    cfg = pure_gauge_config(rng)
    h = 1e-3
    F = fields.curvature(cfg, random_points(rng, 10, radius=1.0), h)
    assert np.abs(F).max() < 10 * h**2


def test_random_fields_are_not_solutions(rng):
    cfg = random_nonsolution(rng)
    assert np.min(fields.bogomolny_residual(cfg, random_points(rng, 10, radius=2.0))) > 0.01


def test_bps_residual_analytic(rng):
    cfg = bps.bps_config()
    assert fields.bogomolny_residual(cfg, np.array([0.7, -0.3, 0.2])) < 1e-10
    x = random_points(rng, 50, P)
    assert fields.bogomolny_residual(bps.bps_config(P), x).max() < 1e-10


def test_curvature_difference_order(rng):
    cfg = bps.bps_config(P)
    x = random_points(rng, 20, P, radius=3.0)
    exact = fields.curvature(cfg, x)
    fd = cfg.without_derivatives()
    e1 = np.abs(fields.curvature(fd, x, 1e-3) - exact).max()
    e2 = np.abs(fields.curvature(fd, x, 5e-4) - exact).max()
    assert np.log2(e1 / e2) > 1.9


def test_residual_difference_order(rng):
    fd = bps.bps_config(P).without_derivatives()
    x = random_points(rng, 20, P, radius=3.0)
    r1 = fields.bogomolny_residual(fd, x, 1e-3).max()
    r2 = fields.bogomolny_residual(fd, x, 5e-4).max()
    assert np.log2(r1 / r2) > 1.9


def test_gradient_norm_is_radial(rng):
    cfg = bps.bps_config()
    u = rng.standard_normal((30, 3))
    x = 1.3 * u / np.linalg.norm(u, axis=1)[:, None]
    D = fields.cov_deriv_higgs(cfg, x)
    n = np.sqrt(su2.inner(D, D).sum(axis=-1))
    assert np.ptp(n) < 1e-8


def test_step_guard():
    fd = bps.bps_config().without_derivatives()
    with pytest.raises(StepTooSmallError):
        fields.curvature(fd, np.ones(3), 1e-9)
    with pytest.raises(StepTooSmallError):
        fields.energy_density_laplacian(fd, np.ones(3), 1e-10)


def test_point_shape_validated():
    with pytest.raises(ValidationError):
        fields.higgs_norm(bps.bps_config(), np.ones(2))


def test_energy_conventions_at_centre():
    cfg = bps.bps_config()
    x = np.zeros((1, 3))
    assert fields.energy_density(cfg, x, convention="bianchi")[0] == pytest.approx(2 / 3, abs=1e-12)
    assert fields.energy_density(cfg, x)[0] == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ValidationError):
        fields.energy_density(cfg, x, convention="other")


def test_energy_nonnegative(rng):
    x = random_points(rng, 50, radius=8.0)
    for cfg in (bps.bps_config(P), random_nonsolution(rng)):
        assert np.all(fields.energy_density(cfg, x) >= 0)


def test_gauge_identity_leaves_fields():
    cfg = bps.bps_config(P)
    g = fields.gauge_apply(cfg, fields.constant_gauge(su2.IDENTITY))
    x = np.array([[0.1, 0.5, -1.0]])
    assert np.allclose(g.connection(x), cfg.connection(x), atol=1e-15)
    assert np.allclose(g.higgs(x), cfg.higgs(x), atol=1e-15)


def test_constant_gauge(rng):
    cfg = bps.bps_config(P)
    g0 = su2.random_group(rng)
    gc = fields.gauge_apply(cfg, fields.constant_gauge(g0))
    x = random_points(rng, 20, P, radius=3.0)
    assert np.allclose(gc.higgs(x), g0 @ cfg.higgs(x) @ su2.dagger(g0), atol=1e-14)
    assert np.allclose(gc.connection(x), g0 @ cfg.connection(x) @ su2.dagger(g0), atol=1e-14)
    assert np.abs(fields.bogomolny_residual(gc, x) - fields.bogomolny_residual(cfg, x)).max() < 1e-12


def test_exp_gauge_energy_invariance(rng):
    cfg = bps.bps_config(P)
    gt = fields.bump_gauge(1.7, centre=P + 0.2, width=0.8, axis=(0.2, 0.5, 1.0))
    g = fields.gauge_apply(cfg, gt)
    x = random_points(rng, 20, P, radius=2.0)
    assert np.abs(fields.energy_density(g, x) - fields.energy_density(cfg, x)).max() < 1e-8


@given(seeds)
def test_gauge_invariants(seed):
    rng = np.random.default_rng(seed)
    cfg = bps.bps_config(P)
    g = fields.gauge_apply(cfg, fields.random_framed_gauge(rng))
    x = random_points(rng, 10, P, radius=3.0)
    assert np.abs(fields.higgs_norm(g, x) - fields.higgs_norm(cfg, x)).max() < 1e-8
    assert np.abs(fields.energy_density(g, x) - fields.energy_density(cfg, x)).max() < 1e-8
    assert fields.bogomolny_residual(g, x).max() < 1e-8


def test_gauge_invariants_finite_difference(rng):
    cfg = bps.bps_config(P).without_derivatives()
    g = fields.gauge_apply(cfg, fields.random_framed_gauge(rng))
    x = random_points(rng, 10, P, radius=3.0)
    for h in (1e-3, 5e-4):
        diff = np.abs(fields.energy_density(g, x, h) - fields.energy_density(cfg, x, h)).max()
        assert diff < 10 * h**2


def test_scale_identity_and_solution(rng):
    cfg = bps.bps_config(P)
    x = random_points(rng, 20, radius=2.0)
    one = fields.scale(cfg, 1.0)
    assert np.allclose(one.higgs(x), cfg.higgs(x), atol=1e-15)
    two = fields.scale(cfg, 2.0)
    assert fields.bogomolny_residual(two, x).max() < 1e-9
    assert two.vev == pytest.approx(2.0)
    # F_hat(x) = c^2 F(c x)
    assert np.allclose(fields.curvature(two, x), 4 * fields.curvature(cfg, 2 * x), atol=1e-12)


def test_scale_rejects_nonpositive():
    with pytest.raises(ValidationError):
        fields.scale(bps.bps_config(), 0.0)


def test_rotation_and_translation_preserve_solutions(rng):
    cfg = bps.bps_config(P)
    R = Rotation.random(random_state=3).as_matrix()
    rot = fields.rotate(cfg, R)
    x = random_points(rng, 20, radius=3.0)
    assert fields.bogomolny_residual(rot, x).max() < 1e-10
    assert np.allclose(fields.higgs_norm(rot, x), fields.higgs_norm(cfg, x @ R), atol=1e-12)
    moved = fields.translate(cfg, [1.0, 0.0, 0.0])
    assert np.allclose(fields.higgs_norm(moved, x), fields.higgs_norm(cfg, x - [1.0, 0.0, 0.0]))


def test_total_energy_bps():
    rep = fields.total_energy(bps.bps_config())
    assert rep.extrapolated == pytest.approx(8 * np.pi, rel=5e-3)
    # Bogomolny bound identity on the ball: gap density vanishes
    assert rep.ball_gap < 1e-12
    assert abs(rep.bound_defect) < 1e-3 * rep.ball


def test_total_energy_scaled_and_vacuum():
    rep = fields.total_energy(fields.scale(bps.bps_config(), 2.0), radii=(4.0, 5.0, 6.0, 8.0))
    assert rep.extrapolated == pytest.approx(16 * np.pi, rel=1e-2)
    vac = fields.total_energy(fields.vacuum_config(), radii=(2.0, 3.0))
    assert vac.extrapolated == 0.0


def test_total_energy_radii_validated():
    with pytest.raises(ValidationError):
        fields.total_energy(bps.bps_config(), radii=(8.0,))


def test_grid_gradient_order():
    from monopole.grid import GridSpec

    errs = []
    for n in (21, 41):
        grid = GridSpec.cube(-1, 1, n)
        x = grid.points()
        f = np.sin(x[..., 0]) * np.cos(2 * x[..., 1]) + x[..., 2] ** 3
        exact = np.stack([np.cos(x[..., 0]) * np.cos(2 * x[..., 1]),
                          -2 * np.sin(x[..., 0]) * np.sin(2 * x[..., 1]),
                          3 * x[..., 2] ** 2], axis=-1)[2:-2, 2:-2, 2:-2]
        errs.append(np.abs(fields.grid_gradient(f, grid.spacing) - exact).max())
    assert np.log2(errs[0] / errs[1]) > 3.8


def test_grid_residual_of_bps():
    from monopole.grid import GridSpec

    grid = GridSpec.cube(-2, 2, 21)
    cfg = bps.bps_config([0.1, 0.0, 0.0])
    x = grid.points()
    assert fields.grid_bogomolny_residual(grid.spacing, cfg.connection(x), cfg.higgs(x)).max() < 1e-4
