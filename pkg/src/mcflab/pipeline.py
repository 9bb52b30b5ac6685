"""End-to-end runs: flow, rescaling, spectra, arrival field and checks."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as fio
from .arrival import (
    ArrivalField,
    CartesianGrid,
    ResidualReport,
    asymptotic_residual,
    curve_sdf,
    disk_sdf,
    solve_arrival,
)
from .config import ExperimentConfig, preset
from .estimates import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    VerificationReport,
    admissible_indices,
    check_quadratic_bound,
    decay_fit,
    quadratic_ratio,
    random_graph,
    trajectory_digest,
    unique_continuation_certificate,
    verify_duhamel,
    verify_key_inequality,
    verify_sup_bound,
)
from .flow import (
    FlowControls,
    FlowTrajectory,
    SupportFunction,
    circle,
    ellipse,
    perturbed_circle,
    run_to_extinction,
)
from .rescale import GraphTrajectory, build_graph_trajectory
from .spectral import SphereGrid, mode_spectrum

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, msg: str):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


@dataclass
class Bundle:
    config: ExperimentConfig
    flow: FlowTrajectory
    graphs: GraphTrajectory
    reports: dict[str, VerificationReport]
    arrival: ArrivalField | None = None
    residual: ResidualReport | None = None
    files: list[str] = field(default_factory=list)
    manifest: dict[str, str] = field(default_factory=dict)

    @property
    def certificate(self) -> str | None:
        r = self.reports.get("certificate")
        return r.verdict if r else None

    @property
    def ok(self) -> bool:
        return not any(r.failed for r in self.reports.values())


def initial_shape(cfg: ExperimentConfig, m: int | None = None) -> SupportFunction:
    m = m or cfg.flow_m
    if cfg.shape in ("ball", "circle"):
        return circle(cfg.radius, cfg.center, m)
    if cfg.shape == "ellipse":
        return ellipse(cfg.axis_a, cfg.axis_b, cfg.center, m)
    sf = perturbed_circle(cfg.seed, m, cfg.amplitude, cfg.modes, cfg.radius)
    return sf.translated(cfg.center)


def _gauge(cfg: ExperimentConfig, traj: FlowTrajectory):
    if cfg.gauge == "exact":
        # area law is exact for curves; the centre is the extinction point by symmetry
        return traj.area0 / (2 * np.pi), cfg.center
    return traj.T_hat, tuple(float(v) for v in traj.x0_hat)


def _arrival(cfg: ExperimentConfig, T: float, x0):
    grid = CartesianGrid.square(cfg.arrival_half_width, cfg.arrival_n)
    if cfg.shape in ("ball", "circle"):
        phi0 = disk_sdf(grid, cfg.radius, cfg.center)
    else:
        phi0 = curve_sdf(grid, initial_shape(cfg, m=8192).boundary())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        field_ = solve_arrival(phi0, grid)
    # the level-set solver carries an O(dx^2) error; residuals below it are unresolved
    res = asymptotic_residual(field_, T, x0, N=cfg.residual_order, noise=0.5 * grid.dx ** 2)
    return field_, res


def _arrival_report(cfg: ExperimentConfig, field_: ArrivalField, res: ResidualReport, T, x0):
    details = {"T_hat": field_.T_hat, "x0_hat": list(field_.x0_hat), "T_flow": T,
               "fit_exponent": res.fit_exponent, "residual_at_floor": res.at_floor}
    margins = []
    if cfg.shape in ("ball", "circle"):
        X, Y = field_.grid.mesh()
        d = np.hypot(X - cfg.center_x, Y - cfg.center_y)
        inside = d < cfg.radius
        collar = d > 4 * field_.grid.dx
        exact = np.where(inside, (cfg.radius ** 2 - np.minimum(d, cfg.radius) ** 2) / 2, np.nan)
        err = float(np.nanmax(np.abs(field_.values - exact)[inside & collar]))
        details["max_error"] = err
        margins.append(2e-3 - err)
    details["T_gap"] = abs(field_.T_hat - T)
    margins.append(5e-3 - abs(field_.T_hat - T))
    verdict = PASS if min(margins) >= 0 else FAIL
    return VerificationReport("arrival", verdict, {"n": cfg.arrival_n}, margins, "", details)


def _checks(cfg: ExperimentConfig, graphs: GraphTrajectory, rng) -> dict[str, VerificationReport]:
    spec = mode_spectrum(1, graphs.grid.capacity)
    reports = {}
    r = cfg.r
    dig = trajectory_digest(graphs)
    fit = decay_fit(graphs, r, cfg.fit_window)
    rate = fit.rate

    if "decay_fit" in cfg.checks:
        reports["decay_fit"] = VerificationReport(
            "decay_fit", PASS if fit.reliable else INCONCLUSIVE,
            {"r": r, "window": list(cfg.fit_window)}, [0.1 - fit.residual], dig,
            {"rate": rate, "amplitude": fit.amplitude, "residual": fit.residual,
             "status": fit.verdict, "n_points": fit.n_points})

    C_hat = None
    if "quadratic_bound" in cfg.checks or "sup_bound" in cfg.checks:
        grid = SphereGrid(1, cfg.flow_m)
        samples = [random_graph(rng, grid) for _ in range(cfg.n_samples)]
        q = check_quadratic_bound(samples, r)
        traj_sup = max(quadratic_ratio(g.u, r) for g in graphs.snapshots)
        q.details["trajectory_sup"] = traj_sup
        C_hat = 2 * max(q.details.get("C_sup", 0.0), traj_sup)
        q.details["C_hat"] = C_hat
        if "quadratic_bound" in cfg.checks:
            reports["quadratic_bound"] = q

    if "key_inequality" in cfg.checks:
        ks = admissible_indices(rate, spec) if rate is not None else [1, 2, 3]
        sub = [verify_key_inequality(graphs, k, r, s0=cfg.s0, rate=rate, spectrum=spec) for k in ks]
        margins = [x.margins for x in sub]
        verdicts = {x.verdict for x in sub}
        verdict = FAIL if FAIL in verdicts else (PASS if verdicts == {PASS} else INCONCLUSIVE)
        reports["key_inequality"] = VerificationReport(
            "key_inequality", verdict, {"r": r, "s0": cfg.s0, "k": ks}, margins, dig,
            {"per_k": {x.params["k"]: x.verdict for x in sub}})

    if "sup_bound" in cfg.checks:
        reports["sup_bound"] = verify_sup_bound(graphs, C_hat, r, rate=rate, spectrum=spec)

    if "duhamel" in cfg.checks:
        reports["duhamel"] = verify_duhamel(graphs, cfg.s0, cfg.s0 + cfg.duhamel_span, r)

    if "certificate" in cfg.checks:
        reports["certificate"] = unique_continuation_certificate(
            graphs, spec, window=(cfg.fit_window[0], cfg.s_graph_max))
    return reports


def run_pipeline(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> Bundle:
    """Run every stage of ``cfg``; stage failures raise :class:`PipelineError`."""
    rng = np.random.default_rng(cfg.seed)
    try:
        sf0 = initial_shape(cfg)
    except Exception as exc:
        raise PipelineError("shape", f"{cfg.shape} (seed={cfg.seed}): {exc}") from exc
    try:
        traj = run_to_extinction(sf0, FlowControls(cfl=cfg.cfl, ds=cfg.ds, area_floor=cfg.area_floor))
    except Exception as exc:
        raise PipelineError("flow", f"cfl={cfg.cfl}, ds={cfg.ds}: {exc}") from exc
    T, x0 = _gauge(cfg, traj)
    try:
        graphs = build_graph_trajectory(traj, SphereGrid(1, cfg.flow_m), (T, x0)).window(
            -np.inf, cfg.s_graph_max)
        if not graphs.snapshots:
            raise ValueError("no snapshot satisfies the graph condition")
    except Exception as exc:
        raise PipelineError("rescale", f"gauge={cfg.gauge}: {exc}") from exc
    try:
        reports = _checks(cfg, graphs, rng)
    except Exception as exc:
        raise PipelineError("checks", f"checks={list(cfg.checks)}: {exc}") from exc
    field_ = res = None
    if cfg.arrival_n:
        try:
            field_, res = _arrival(cfg, T, x0)
        except Exception as exc:
            raise PipelineError("arrival", f"arrival_n={cfg.arrival_n}: {exc}") from exc
        reports["arrival"] = _arrival_report(cfg, field_, res, T, x0)
    reports = dict(sorted(reports.items()))
    bundle = Bundle(cfg, traj, graphs, reports, field_, res)
    if write:
        write_bundle(bundle, Path(out_dir if out_dir is not None else cfg.output_dir))
    return bundle


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_bundle(b: Bundle, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg = b.config
    files = []

    def add(name):
        files.append(name)
        return out / name

    add("config.ini").write_text(cfg.dumps(), encoding="utf-8")
    params = {k: getattr(cfg, k) for k in ("radius", "center_x", "center_y", "axis_a",
                                           "axis_b", "amplitude", "modes", "flow_m")}
    fio.write_trajectory(add("trajectory.jsonl"), b.flow, cfg.shape, params, cfg.seed)
    fio.write_graphs(add("graphs.jsonl"), b.graphs)
    fio.write_spectrum(add("spectrum.csv"), mode_spectrum(1, b.graphs.grid.capacity))
    fio.write_coeffs(add("coeffs_last.json"), b.graphs.snapshots[-1].coeffs)
    if b.arrival is not None:
        hdr = fio.write_arrival(add("arrival.csv"), b.arrival)
        files.append(hdr.name)
        fio.write_residual(add("residual.csv"), b.residual)
    (out / "reports").mkdir(exist_ok=True)
    for name, rep in b.reports.items():
        fio.write_report(add(f"reports/{name}.json"), rep)
    fio.write_summary(add("summary.csv"), b.reports.values())
    b.files = files
    b.manifest = {f: _sha256(out / f) for f in files}
    (out / "manifest.json").write_text(
        json.dumps({"config_sha256": hashlib.sha256(cfg.dumps().encode()).hexdigest(),
                    "files": b.manifest}, sort_keys=True, indent=1) + "\n",
        encoding="utf-8")


def verify_manifest(out_dir) -> list[str]:
    """Files whose checksum does not match the manifest (empty when complete)."""
    out = Path(out_dir)
    man = json.loads((out / "manifest.json").read_text(encoding="utf-8"))["files"]
    return [f for f, h in man.items() if not (out / f).exists() or _sha256(out / f) != h]


# -- sweeps ---------------------------------------------------------------------

SWEEP_FIELDS = ["name", "shape", "seed", "rate", "verdict", "min_margin", "error"]


def _sweep_row(cfg: ExperimentConfig) -> dict:
    row = {"name": cfg.name, "shape": cfg.shape, "seed": cfg.seed, "rate": "",
           "verdict": "", "min_margin": "", "error": ""}
    try:
        b = run_pipeline(cfg, write=False)
    except Exception as exc:  # recorded per row; the sweep goes on
        row["error"] = str(exc)
        row["verdict"] = "error"
        return row
    cert = b.reports.get("certificate")
    fits = cert.details.get("fits", {}) if cert else {}
    rate = fits.get(cfg.r, {}).get("rate") if fits else None
    row["rate"] = "" if rate is None else repr(float(rate))
    row["verdict"] = cert.verdict if cert else ""
    mm = [r.min_margin for r in b.reports.values() if r.min_margin is not None]
    row["min_margin"] = repr(min(mm)) if mm else ""
    return row


def sweep_configs(seeds, include_ball: bool = False, **overrides) -> list[ExperimentConfig]:
    checks = overrides.pop("checks", ("certificate",))
    cfgs = [preset("perturbed-circle", name=f"perturbed-{s}", seed=int(s), checks=checks, **overrides)
            for s in seeds]
    if include_ball:
        cfgs.append(preset("ball", name="ball", arrival_n=0, checks=checks, **overrides))
    return cfgs


def sweep(configs, workers: int = 1) -> list[dict]:
    configs = list(configs)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_row, configs))
    return [_sweep_row(c) for c in configs]


def write_sweep(path_or_fh, rows) -> None:
    def emit(fh):
        w = csv.DictWriter(fh, SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    if hasattr(path_or_fh, "write"):
        emit(path_or_fh)
    else:
        with open(path_or_fh, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
