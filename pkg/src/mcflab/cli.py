"""Command line entry point ``mcflab``.

Exit codes: 0 success, 1 a check failed (or a sweep row errored),
2 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

import numpy as np

from . import io as fio
from .config import CHECKS, PRESETS, SHAPES, ConfigError, ExperimentConfig, preset
from .estimates import (
    INCONCLUSIVE,
    PASS,
    VerificationReport,
    check_quadratic_bound,
    decay_fit,
    random_graph,
    unique_continuation_certificate,
    verify_duhamel,
    verify_key_inequality,
    verify_sup_bound,
)
from .flow import FlowControls, run_to_extinction
from .pipeline import PipelineError
from .rescale import build_graph_trajectory
from .spectral import SphereGrid, mode_spectrum

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("mcflab")


class UsageError(Exception):
    pass


def _shape_args(p):
    g = p.add_argument_group("shape")
    g.add_argument("--shape", choices=SHAPES, default="ellipse")
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--axis-a", type=float, default=1.2)
    g.add_argument("--axis-b", type=float, default=1 / 1.2)
    g.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    g.add_argument("--amplitude", type=float, default=0.03)
    g.add_argument("--modes", type=int, default=6)
    g.add_argument("--seed", type=int, default=0)


def _config_from(ns, **extra) -> ExperimentConfig:
    kw = {"shape": ns.shape, "radius": ns.radius, "axis_a": ns.axis_a, "axis_b": ns.axis_b,
          "center_x": ns.center[0], "center_y": ns.center[1], "amplitude": ns.amplitude,
          "modes": ns.modes, "seed": ns.seed}
    kw.update(extra)
    return ExperimentConfig(**kw)


def cmd_flow(ns) -> int:
    from .pipeline import initial_shape

    cfg = _config_from(ns, flow_m=ns.m, cfl=ns.cfl, ds=ns.ds, area_floor=ns.area_floor)
    traj = run_to_extinction(initial_shape(cfg), FlowControls(cfg.cfl, cfg.ds, cfg.area_floor))
    params = {"radius": cfg.radius, "center": list(cfg.center), "axis_a": cfg.axis_a,
              "axis_b": cfg.axis_b, "amplitude": cfg.amplitude, "modes": cfg.modes, "m": cfg.flow_m}
    fio.write_trajectory(ns.out, traj, cfg.shape, params, cfg.seed)
    print(f"T_hat={traj.T_hat!r} x0_hat={traj.x0_hat.tolist()} snapshots={len(traj.snapshots)}")
    return EXIT_OK


def cmd_rescale(ns) -> int:
    traj, _ = fio.read_trajectory(ns.trajectory)
    T = traj.T_hat if ns.gauge_T is None else ns.gauge_T
    x0 = traj.x0_hat if ns.gauge_x0 is None else ns.gauge_x0
    graphs = build_graph_trajectory(traj, SphereGrid(1, traj.final.m), (T, tuple(x0)), ns.l_max)
    fio.write_graphs(ns.out, graphs)
    print(f"snapshots={len(graphs.snapshots)} first_valid_s={graphs.first_valid_s!r} "
          f"omitted={len(graphs.omitted)}")
    return EXIT_OK


def cmd_spectrum(ns) -> int:
    spec = mode_spectrum(ns.n, ns.l_max)
    if ns.out:
        fio.write_spectrum(ns.out, spec)
    else:
        fio.write_spectrum(sys.stdout, spec)
    return EXIT_OK


def cmd_arrival(ns) -> int:
    from .arrival import (
        ArrivalControls,
        CartesianGrid,
        asymptotic_residual,
        curve_sdf,
        disk_sdf,
        solve_arrival,
        square_sdf,
    )
    from .pipeline import initial_shape

    grid = CartesianGrid.square(ns.half_width, ns.n)
    if ns.domain == "square":
        phi0 = square_sdf(grid, ns.radius)
    elif ns.domain == "disk":
        phi0 = disk_sdf(grid, ns.radius, ns.center)
    else:
        cfg = _config_from(ns, shape=ns.domain if ns.domain != "perturbed" else "perturbed-circle")
        phi0 = curve_sdf(grid, initial_shape(cfg, m=8192).boundary())
    field_ = solve_arrival(phi0, grid, ArrivalControls(reinit_every=ns.reinit_every))
    hdr = fio.write_arrival(ns.out, field_)
    print(f"T_hat={field_.T_hat!r} x0_hat={field_.x0_hat.tolist()} header={hdr}")
    if ns.residual_out:
        rep = asymptotic_residual(field_, field_.T_hat, field_.x0_hat, N=ns.order)
        fio.write_residual(ns.residual_out, rep)
        print(f"fit_exponent={rep.fit_exponent!r}")
    return EXIT_OK


def _verify(ns) -> VerificationReport:
    check = ns.check.replace("-", "_")
    if check == "quadratic_bound":
        rng = np.random.default_rng(ns.seed)
        grid = SphereGrid(1, 128)
        return check_quadratic_bound([random_graph(rng, grid) for _ in range(ns.samples)], ns.r)
    if ns.graphs is None:
        raise UsageError(f"verify {ns.check} needs --graphs")
    graphs = fio.read_graphs(ns.graphs)
    window = tuple(ns.window) if ns.window else None
    if check == "decay_fit":
        f = decay_fit(graphs, ns.r, window)
        return VerificationReport("decay_fit", PASS if f.reliable else INCONCLUSIVE,
                                  {"r": ns.r, "window": window}, [0.1 - f.residual], "",
                                  {"rate": f.rate, "residual": f.residual, "status": f.verdict})
    if check == "key_inequality":
        return verify_key_inequality(graphs, ns.k, ns.r, s0=ns.s0)
    if check == "sup_bound":
        if ns.C_hat is None:
            raise UsageError("verify sup-bound needs --C-hat")
        return verify_sup_bound(graphs, ns.C_hat, ns.r)
    if check == "duhamel":
        refine = fio.read_graphs(ns.refine) if ns.refine else None
        return verify_duhamel(graphs, ns.s0, ns.s0 + ns.span, ns.r, refine=refine)
    if check == "certificate":
        return unique_continuation_certificate(graphs, window=window)
    raise UsageError(f"unknown check {ns.check}")


def cmd_verify(ns) -> int:
    rep = _verify(ns)
    if ns.report:
        fio.write_report(ns.report, rep)
    print(f"{rep.check}: {rep.verdict} (min margin {rep.min_margin})")
    return EXIT_FAIL if rep.failed else EXIT_OK


def cmd_pipeline(ns) -> int:
    from .pipeline import run_pipeline

    if ns.config:
        cfg = ExperimentConfig.load(ns.config)
    else:
        cfg = preset(ns.preset)
    over = {}
    for key in ("seed", "flow_m", "arrival_n", "ds", "gauge"):
        v = getattr(ns, key)
        if v is not None:
            over[key] = v
    if ns.checks:
        over["checks"] = tuple(ns.checks)
    cfg = cfg.with_(**over)
    b = run_pipeline(cfg, out_dir=ns.out)
    for name, rep in b.reports.items():
        print(f"{name}: {rep.verdict}")
    return EXIT_OK if b.ok else EXIT_FAIL


def _seed_range(text: str):
    if ":" in text:
        a, b = text.split(":", 1)
        return range(int(a), int(b))
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_sweep(ns) -> int:
    from .pipeline import sweep, sweep_configs, write_sweep

    cfgs = [ExperimentConfig.load(p) for p in ns.configs] if ns.configs else []
    if ns.seeds:
        cfgs += sweep_configs(_seed_range(ns.seeds), include_ball=ns.include_ball)
    elif ns.include_ball:
        cfgs += sweep_configs([], include_ball=True)
    rows = sweep(cfgs, workers=ns.workers)
    write_sweep(ns.out if ns.out else sys.stdout, rows)
    bad = [r for r in rows if r["verdict"] in ("violation", "fail", "error")]
    return EXIT_FAIL if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcflab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("flow", help="support-function flow to extinction (JSONL trajectory)")
    _shape_args(f)
    f.add_argument("--m", type=int, default=128)
    f.add_argument("--cfl", type=float, default=1.0)
    f.add_argument("--ds", type=float, default=0.05)
    f.add_argument("--area-floor", type=float, default=1e-6)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_flow)

    r = sub.add_parser("rescale", help="radial graphs of a trajectory (JSONL)")
    r.add_argument("--trajectory", required=True)
    r.add_argument("--gauge-T", type=float)
    r.add_argument("--gauge-x0", type=float, nargs=2, metavar=("X", "Y"))
    r.add_argument("--l-max", type=int)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rescale)

    s = sub.add_parser("spectrum", help="eigenvalue table (CSV l, nu, lambda)")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--l-max", type=int, default=8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    a = sub.add_parser("arrival", help="level-set arrival field (CSV + JSON header)")
    _shape_args(a)
    a.add_argument("--domain", choices=("disk", "square", "ellipse", "perturbed"), default="disk")
    a.add_argument("--n", type=int, default=128)
    a.add_argument("--half-width", type=float, default=1.1)
    a.add_argument("--reinit-every", type=int, default=50)
    a.add_argument("--order", type=int, default=3)
    a.add_argument("--residual-out")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_arrival)

    v = sub.add_parser("verify", help="run one estimate check")
    v.add_argument("check", choices=[c.replace("_", "-") for c in CHECKS])
    v.add_argument("--graphs")
    v.add_argument("--refine", help="same run logged at half the spacing (duhamel)")
    v.add_argument("--r", type=int, default=2)
    v.add_argument("--k", type=int, default=3)
    v.add_argument("--s0", type=float, default=3.0)
    v.add_argument("--span", type=float, default=1.0)
    v.add_argument("--window", type=float, nargs=2, metavar=("S_A", "S_B"))
    v.add_argument("--C-hat", type=float, dest="C_hat")
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    pl = sub.add_parser("pipeline", help="full run with manifest")
    pl.add_argument("--config")
    pl.add_argument("--preset", choices=sorted(PRESETS), default="ellipse")
    pl.add_argument("--seed", type=int)
    pl.add_argument("--flow-m", type=int)
    pl.add_argument("--arrival-n", type=int)
    pl.add_argument("--ds", type=float)
    pl.add_argument("--gauge", choices=("estimated", "exact"))
    pl.add_argument("--checks", nargs="+", choices=CHECKS)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)

    sw = sub.add_parser("sweep", help="summary table over seeds or config files")
    sw.add_argument("--seeds", help="'a:b' range or comma list of perturbed-circle seeds")
    sw.add_argument("--configs", nargs="*")
    sw.add_argument("--include-ball", action="store_true")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if not ns.verbose:
        warnings.simplefilter("ignore")
    try:
        return ns.func(ns)
    except (UsageError, ConfigError, fio.FormatError, FileNotFoundError, ValueError) as exc:
        print(f"mcflab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"mcflab: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
