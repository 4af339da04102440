"""Command line interface.

Exit status: 0 success, 2 validation failure (including a residual above
threshold), 3 numerical failure, 4 I/O failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bps, fields, io, nahm, nahm_inverse, scattering, su2
from .errors import NumericalError, ValidationError
from .minitwistor import centre_of, eta_of_point, reality_defect

log = logging.getLogger("monopole")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ANALYTIC_THRESHOLD = 1e-10
RECONSTRUCTION_THRESHOLD = 5e-6
VOLUME_THRESHOLD = 1e-3
PROFILE_RADIUS = 5.0
PROFILE_POINTS = 101


class ResidualError(ValidationError):
    """A verification residual exceeded its threshold."""


# ---------------------------------------------------------------------------
# helpers


def _run_config(args):
    base = io.load_run_config(args.config) if args.config else io.RunConfig()
    grid = io.parse_grid(args.grid) if args.grid else None
    threads = args.threads
    if threads is None and base.thread_cap is None and os.environ.get("MONOPOLE_THREADS"):
        threads = int(os.environ["MONOPOLE_THREADS"])
    return base.with_overrides(grid=grid, ode_tol=args.tol, t_max=args.tmax, quad_order=args.quad_order,
                               seed=args.seed, thread_cap=threads, fd_step=args.h,
                               k=getattr(args, "k", None))


def _emit(args, report, name="report"):
    text = io.dumps_csv(report) if args.format == "csv" else io.dumps(report) + "\n"
    if args.out:
        out = Path(args.out)
        if out.suffix == "":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"{name}.{args.format}"
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _out_dir(args, default):
    path = Path(args.out) if args.out else Path(default)
    if path.suffix:
        path = path.parent
    path.mkdir(parents=True, exist_ok=True)
    return path


def _point(text):
    return np.array(io.parse_triple(text)) if isinstance(text, str) else np.asarray(text, dtype=float)


def _source_config(args, run):
    src = args.source
    if src == "bps":
        return bps.bps_config(_point(args.p))
    if src == "vacuum":
        return fields.vacuum_config()
    if src == "nahm":
        return nahm_inverse.nahm_monopole(_nahm_data(args), run.quad_order, run.fd_step)
    raise ValidationError(f"unknown source {src!r}")


def _nahm_data(args):
    if getattr(args, "data", None):
        with open(args.data, encoding="utf-8") as fh:
            return nahm.NahmData.from_json(fh.read())
    return nahm.NahmData.point(_point(args.p))


# ---------------------------------------------------------------------------
# bps


def cmd_bps(args, run):
    p = _point(args.p)
    mono = bps.BpsMonopole(p)
    grid = run.grid
    pts = grid.points()
    r = np.linalg.norm(pts - p, axis=-1)
    energy = bps.energy_density_closed(r)
    norm = mono.higgs_norm(pts)
    out = _out_dir(args, "bps_out")
    io.write_volume(out / "energy_density.vol", grid, energy, "energy_density")
    io.write_volume(out / "higgs_norm.vol", grid, norm, "higgs_norm")
    io.write_config_volume(out / "config.vol", grid, mono.connection(pts), mono.higgs(pts))
    radii = np.linspace(0.0, PROFILE_RADIUS, PROFILE_POINTS)
    prof_e = bps.energy_density_closed(radii)
    prof_n = bps.higgs_norm_profile(radii)
    with open(out / "profile.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write("r,energy_density,higgs_norm\n")
        for row in zip(radii, prof_e, prof_n):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    peak = np.unravel_index(int(np.argmax(energy)), grid.counts)
    report = {"p": p, "grid": grid.to_json(), "energy_max": float(energy.max()),
              "energy_argmax": [int(i) for i in peak],
              "energy_at_origin": float(prof_e[0]),
              "profile_monotone": bool(np.all(np.diff(prof_e) < 0)),
              "files": ["energy_density.vol", "higgs_norm.vol", "config.vol", "profile.csv"]}
    _emit(argparse.Namespace(out=str(out), format=args.format), report, "bps")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _order(r1, r2):
    r1, r2 = float(np.max(r1)), float(np.max(r2))
    if r2 <= 0 or r1 <= 0:
        return float("inf")
    return float(np.log2(r1 / r2))


def _verify_points(rng, centre, n, radius=3.0):
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return centre + d * radius * rng.random(n)[:, None] ** (1 / 3)


def _gauge_checks(cfg, pts, h, rng):
    worst = {"higgs_norm": 0.0, "energy_density": 0.0, "residual": 0.0}
    base_norm = fields.higgs_norm(cfg, pts)
    base_e = fields.energy_density(cfg, pts, h)
    base_r = fields.bogomolny_residual(cfg, pts, h)
    for _ in range(3):
        g = fields.gauge_apply(cfg, fields.random_framed_gauge(rng))
        worst["higgs_norm"] = max(worst["higgs_norm"], float(np.abs(fields.higgs_norm(g, pts) - base_norm).max()))
        worst["energy_density"] = max(worst["energy_density"],
                                      float(np.abs(fields.energy_density(g, pts, h) - base_e).max()))
        worst["residual"] = max(worst["residual"],
                                float(np.abs(fields.bogomolny_residual(g, pts, h) - base_r).max()))
    return worst


def cmd_verify(args, run):
    rng = np.random.default_rng(run.seed)
    report = {"source": args.source, "seed": run.seed}
    if args.source == "volume":
        if not args.volume:
            raise ValidationError("verify --source volume needs --volume FILE")
        grid, A, Phi = io.read_config_volume(args.volume)
        res = fields.grid_bogomolny_residual(grid.spacing, A, Phi)
        threshold = VOLUME_THRESHOLD if args.threshold is None else args.threshold
        report.update({"volume": str(args.volume), "grid": grid.to_json(),
                       "max_residual": float(res.max()), "threshold": threshold,
                       "method": "fourth-order grid differences"})
    else:
        cfg = _source_config(args, run)
        centre = _point(args.p) if args.source in ("bps", "nahm") and not getattr(args, "data", None) else np.zeros(3)
        pts = _verify_points(rng, centre, args.points)
        h = run.fd_step
        if args.source == "bps":
            res = fields.bogomolny_residual(cfg, pts)
            fd1 = fields.bogomolny_residual(cfg.without_derivatives(), pts, h)
            fd2 = fields.bogomolny_residual(cfg.without_derivatives(), pts, h / 2)
            threshold = ANALYTIC_THRESHOLD if args.threshold is None else args.threshold
            report["analytic_residual"] = float(res.max())
        elif args.source == "nahm":
            data = _nahm_data(args)
            cfg2 = nahm_inverse.nahm_monopole(data, run.quad_order, h / 2)
            fd1 = fields.bogomolny_residual(cfg, pts, h)
            fd2 = fields.bogomolny_residual(cfg2, pts, h / 2)
            res = fd1
            threshold = RECONSTRUCTION_THRESHOLD if args.threshold is None else args.threshold
            if data.k == 1 and data.is_constant:
                p = np.real(2j * data.T[0])[:, 0, 0]
                r = np.linalg.norm(pts - p, axis=-1)
                report["higgs_norm_error"] = float(np.abs(fields.higgs_norm(cfg, pts)
                                                          - bps.higgs_norm_profile(r)).max())
        else:
            res = fields.bogomolny_residual(cfg, pts)
            fd1 = fd2 = res
            threshold = ANALYTIC_THRESHOLD if args.threshold is None else args.threshold
        lap = fields.energy_density_laplacian(cfg, pts, max(h, 1e-3))
        e = fields.energy_density(cfg, pts, h, convention="bianchi")
        report.update({
            "points": int(len(pts)),
            "max_residual": float(np.max(res)),
            "fd_residual": [float(np.max(fd1)), float(np.max(fd2))],
            "fd_steps": [h, h / 2],
            "convergence_order": _order(fd1, fd2),
            "energy_identity": float(np.abs(e - lap).max()),
            "gauge_invariance": _gauge_checks(cfg.without_derivatives() if args.source == "nahm" else cfg,
                                              pts[:5], h, rng),
            "threshold": threshold,
        })
    report["passed"] = bool(report["max_residual"] <= threshold)
    _emit(args, report, "verify")
    if not report["passed"]:
        raise ResidualError(f"max residual {report['max_residual']:.3e} exceeds {threshold:.1e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan and rmap


def cmd_scan(args, run):
    cfg = _source_config(args, run)
    k = cfg.charge if args.k is None else args.k
    if k < 1:
        raise ValidationError("spectral scans need charge k >= 1")
    zetas = None
    if args.zeta_count:
        from .minitwistor import disk_samples
        zetas = disk_samples(args.zeta_count)
    scan = scattering.fit_spectral_curve(cfg, k, zetas, t_max=run.t_max, tol=run.ode_tol,
                                         threads=run.thread_cap)
    report = scan.to_json()
    report["centre"] = centre_of(scan.curve) if k == 1 else None
    report["reality_defect"] = reality_defect(scan.curve)
    report["k"] = k
    _emit(args, report, "scan")
    return EXIT_OK


def cmd_rmap(args, run):
    cfg = _source_config(args, run)
    if args.mode == "donaldson":
        res = scattering.donaldson_map(cfg, args.k, t_max=run.t_max, tol=run.ode_tol, threads=run.thread_cap)
        report = {"mode": "donaldson", "map": res.map.to_json(), "poles": res.poles,
                  "pole_residuals": res.pole_residuals, "frame": res.frame,
                  "boundary_decay": res.boundary_decay}
    else:
        base = _point(args.base)
        res = scattering.jarvis_map(cfg, base, t_max=run.t_max, tol=run.ode_tol, threads=run.thread_cap)
        report = {"mode": "jarvis", "map": res.map.to_json(), "degree": res.degree,
                  "residual": res.residual, "residuals": res.residuals, "base": base}
    _emit(args, report, "rmap")
    return EXIT_OK


# ---------------------------------------------------------------------------
# nahm


def cmd_nahm_evolve(args, run):
    rng = np.random.default_rng(run.seed)
    k = run.k
    if args.initial == "pole":
        T0 = nahm.spin_generators(k)
    elif args.initial == "random":
        T0 = nahm.random_initial(rng, k, args.scale)
    else:
        T0 = nahm.NahmData.point(_point(args.p)).T[0]
    traj = nahm.evolve(T0, args.z0, args.z1, tol=run.ode_tol, n_samples=args.samples)
    report = {"k": traj.k, "z0": args.z0, "z1": args.z1, "tol": run.ode_tol,
              "conservation_drift": nahm.conservation_report(traj),
              "nahm_residual": nahm.nahm_residual(traj),
              "antihermitian_defect": nahm.antihermitian_defect(traj.T)}
    if args.initial == "pole":
        exact = nahm.pole_solution(T0, traj.z)
        report["pole_solution_error"] = float(np.abs(traj.T - exact.T).max())
    out = _out_dir(args, "nahm_out")
    (out / "trajectory.json").write_text(io.dumps(traj.to_json()) + "\n", encoding="utf-8")
    _emit(argparse.Namespace(out=str(out), format=args.format), report, "evolve")
    return EXIT_OK


def cmd_nahm_curve(args, run):
    data = _nahm_data(args)
    curve = nahm.nahm_spectral_curve(data)
    report = {"curve": curve.to_json(), "fit_residual": curve.residual,
              "reality_defect": reality_defect(curve),
              "centre": centre_of(curve) if data.k == 1 else None}
    _emit(args, report, "curve")
    return EXIT_OK


def cmd_nahm_reconstruct(args, run):
    data = _nahm_data(args)
    grid = run.grid
    rec = nahm_inverse.reconstruct_grid(data, grid, run.quad_order, run.fd_step, threads=run.thread_cap)
    out = _out_dir(args, "nahm_out")
    norm = rec.higgs_norm()
    io.write_volume(out / "higgs_norm.vol", grid, norm, "higgs_norm")
    io.write_config_volume(out / "config.vol", grid, rec.connection, rec.higgs)
    rng = np.random.default_rng(run.seed)
    lo = np.array(grid.origin)
    hi = lo + np.array(grid.spacing) * (np.array(grid.counts) - 1)
    pts = lo + (hi - lo) * rng.random((args.points, 3))
    cfg = nahm_inverse.nahm_monopole(data, run.quad_order, run.fd_step)
    res = fields.bogomolny_residual(cfg, pts, run.fd_step)
    report = {"k": data.k, "grid": grid.to_json(), "failures": rec.report["failures"],
              "max_residual": float(res.max()), "threshold": RECONSTRUCTION_THRESHOLD,
              "files": ["higgs_norm.vol", "config.vol"]}
    if data.k == 1 and data.is_constant:
        p = np.real(2j * data.T[0])[:, 0, 0]
        r = np.linalg.norm(grid.points() - p, axis=-1)
        report["higgs_norm_error"] = float(np.abs(norm - bps.higgs_norm_profile(r)).max())
    report["passed"] = bool(report["max_residual"] <= RECONSTRUCTION_THRESHOLD and not rec.report["failures"])
    _emit(argparse.Namespace(out=str(out), format=args.format), report, "reconstruct")
    if not report["passed"]:
        raise ResidualError("reconstruction failed verification")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--grid", help="cube LO:HI:N")
    p.add_argument("--tol", type=float, help="ODE tolerance")
    p.add_argument("--tmax", type=float, help="half length of scattering lines")
    p.add_argument("--quad-order", type=int, dest="quad_order", help="Gauss-Legendre order")
    p.add_argument("--h", type=float, help="finite difference step")
    p.add_argument("--seed", type=int, help="random seed (default 42)")
    p.add_argument("--threads", type=int, help="worker thread cap")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", help="run configuration file")


def _source(p, choices=("bps", "vacuum", "nahm")):
    p.add_argument("--source", choices=choices, default="bps")
    p.add_argument("--p", default="0 0 0", help="monopole centre 'x y z'")
    p.add_argument("--data", help="Nahm data JSON (source nahm)")


def build_parser():
    parser = argparse.ArgumentParser(prog="monopole", description="SU(2) monopole toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bps", help="export BPS monopole volumes and the energy profile")
    _common(p)
    p.add_argument("--p", default="0 0 0")
    p.set_defaults(func=cmd_bps)

    p = sub.add_parser("verify", help="Bogomolny residual and identity checks")
    _common(p)
    _source(p, ("bps", "vacuum", "nahm", "volume"))
    p.add_argument("--volume", help="config volume file (source volume)")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="fit the spectral curve from spectral lines")
    _common(p)
    _source(p)
    p.add_argument("--k", type=int)
    p.add_argument("--zeta-count", type=int, dest="zeta_count")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("rmap", help="Donaldson or Jarvis rational map")
    _common(p)
    _source(p)
    p.add_argument("--mode", choices=("donaldson", "jarvis"), default="donaldson")
    p.add_argument("--base", default="0 0 0", help="Jarvis base point")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_rmap)

    p = sub.add_parser("nahm", help="Nahm data tools")
    nsub = p.add_subparsers(dest="nahm_command", required=True)
    q = nsub.add_parser("evolve", help="integrate Nahm's equations")
    _common(q)
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--initial", choices=("pole", "random", "point"), default="pole")
    q.add_argument("--p", default="0 0 0")
    q.add_argument("--scale", type=float, default=0.3)
    q.add_argument("--z0", type=float, default=0.0)
    q.add_argument("--z1", type=float, default=0.9)
    q.add_argument("--samples", type=int, default=201)
    q.set_defaults(func=cmd_nahm_evolve)
    q = nsub.add_parser("curve", help="spectral curve of Nahm data")
    _common(q)
    q.add_argument("--p", default="0 0 0")
    q.add_argument("--data")
    q.set_defaults(func=cmd_nahm_curve)
    q = nsub.add_parser("reconstruct", help="monopole fields from Nahm data on a grid")
    _common(q)
    q.add_argument("--p", default="0 0 0")
    q.add_argument("--data")
    q.add_argument("--points", type=int, default=10)
    q.set_defaults(func=cmd_nahm_reconstruct)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = _run_config(args)
        return args.func(args, run)
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
