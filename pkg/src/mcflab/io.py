"""File formats: JSONL trajectories, JSON coefficients/reports, CSV tables."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .arrival import ArrivalField, CartesianGrid, ResidualReport
from .flow import FlowControls, FlowTrajectory, SupportFunction
from .rescale import GraphSnapshot, GraphTrajectory
from .spectral import ModeSpectrum, SpectralCoeffs, SphereGrid, sobolev_norms


class FormatError(ValueError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{i}: {exc.msg}") from exc
    if not out:
        raise FormatError(f"{path}: empty file")
    return out


# -- flow trajectory ---------------------------------------------------------

def write_trajectory(path, traj: FlowTrajectory, shape: str = "custom", params: dict | None = None,
                     seed: int | None = None) -> None:
    c = traj.controls
    header = {
        "type": "header",
        "shape": shape,
        "params": params or {},
        "dtau_policy": {"rule": "cfl*min(h+h'')^2/(k_max^2-1)", "cfl": c.cfl, "ds": c.ds,
                        "area_floor": c.area_floor, "s_max": c.s_max},
        "seed": seed,
        "T_hat": traj.T_hat,
        "x0_hat": [float(v) for v in traj.x0_hat],
        "x0_converged": traj.x0_converged,
        "area0": traj.area0,
        "n_steps": traj.n_steps,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(header) + "\n")
        for sf in list(traj.snapshots) + [traj.final]:
            rec = {"tau": sf.tau, "m": sf.m, "h": sf.h.tolist(), "area": sf.area(),
                   "length": sf.length()}
            if sf is traj.final:
                rec["final"] = True
            fh.write(_dump(rec) + "\n")


def read_trajectory(path) -> tuple[FlowTrajectory, dict]:
    recs = _read_jsonl(path)
    header, body = recs[0], recs[1:]
    if header.get("type") != "header":
        raise FormatError(f"{path}: first record must be the header")
    snaps, final = [], None
    for r in body:
        m = int(r["m"])
        h = np.asarray(r["h"], dtype=float)
        if h.size != m:
            raise FormatError(f"{path}: record at tau={r['tau']} has {h.size} values, expected {m}")
        sf = SupportFunction(2 * np.pi * np.arange(m) / m, h, float(r["tau"]))
        if r.get("final"):
            final = sf
        else:
            snaps.append(sf)
    p = header.get("dtau_policy", {})
    controls = FlowControls(cfl=p.get("cfl", 1.0), ds=p.get("ds", 0.05),
                            area_floor=p.get("area_floor", 1e-6), s_max=p.get("s_max"))
    traj = FlowTrajectory(
        snapshots=snaps,
        final=final if final is not None else snaps[-1],
        T_hat=float(header["T_hat"]),
        x0_hat=np.asarray(header["x0_hat"], dtype=float),
        area0=float(header.get("area0", snaps[0].area() if snaps else np.nan)),
        controls=controls,
        x0_converged=bool(header.get("x0_converged", True)),
        n_steps=int(header.get("n_steps", 0)),
    )
    return traj, header


# -- graph trajectory ----------------------------------------------------------

def write_graphs(path, graphs: GraphTrajectory, rs=(0, 1, 2, 3, 4, 6)) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if graphs.gauge is not None:
            T, x0 = graphs.gauge
            fh.write(_dump({"type": "header", "gauge": {"T": T, "x0": list(x0)},
                            "omitted_tau": list(graphs.omitted)}) + "\n")
        for g in graphs.snapshots:
            rec = {
                "s": g.s,
                "l_max": g.coeffs.l_max,
                "m": g.grid.m,
                "coeffs": g.coeffs.to_json()["blocks"],
                "sup_norm": g.sup_norm,
                "h_norms": {str(k): v for k, v in sobolev_norms(g.coeffs, rs).items()},
                "u": g.u.tolist(),
            }
            fh.write(_dump(rec) + "\n")


def read_graphs(path) -> GraphTrajectory:
    recs = _read_jsonl(path)
    gauge, omitted = None, []
    if recs[0].get("type") == "header":
        hd = recs.pop(0)
        gauge = (float(hd["gauge"]["T"]), tuple(hd["gauge"]["x0"]))
        omitted = list(hd.get("omitted_tau", []))
    snaps = []
    for r in recs:
        c = SpectralCoeffs.from_json({"n": 1, "l_max": r["l_max"], "blocks": r["coeffs"]})
        grid = SphereGrid(1, int(r.get("m", 4 * c.l_max)))
        if "u" in r:
            u = np.asarray(r["u"], dtype=float)
        else:
            from .spectral import synthesize
            u = synthesize(c, grid)
        snaps.append(GraphSnapshot(float(r["s"]), grid, u, c))
    return GraphTrajectory(snaps, gauge, omitted)


# -- coefficients, spectra ------------------------------------------------------

def write_coeffs(path, coeffs: SpectralCoeffs) -> None:
    Path(path).write_text(json.dumps(coeffs.to_json(), indent=1) + "\n", encoding="utf-8")


def read_coeffs(path) -> SpectralCoeffs:
    try:
        return SpectralCoeffs.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (KeyError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not a coefficient file ({exc})") from exc


def write_spectrum(fh_or_path, spectrum: ModeSpectrum) -> None:
    _write_csv(fh_or_path, ["l", "nu", "lambda"], spectrum.to_csv_rows())


def _write_csv(fh_or_path, header, rows):
    if hasattr(fh_or_path, "write"):
        w = csv.writer(fh_or_path, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(fh_or_path, "w", newline="", encoding="utf-8") as fh:
        _write_csv(fh, header, rows)


# -- arrival fields ---------------------------------------------------------------

def write_arrival(path, field: ArrivalField) -> Path:
    """CSV of ``(x, y, t)`` plus a JSON header next to it; returns the header path."""
    path = Path(path)
    rows = [tuple(repr(float(v)) for v in row) for row in field.to_rows()]
    _write_csv(path, ["x", "y", "t"], rows)
    hdr = path.with_suffix(".json")
    g = field.grid
    meta = dict(g.header())
    meta.update(T_hat=field.T_hat, x0_hat=[float(v) for v in field.x0_hat],
                flagged=bool(np.any(field.flagged)) if field.flagged is not None else False)
    hdr.write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return hdr


def read_arrival(path) -> ArrivalField:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    grid = CartesianGrid(int(meta["nx"]), int(meta["ny"]), float(meta["dx"]),
                         tuple(meta["origin"]))
    vals = np.full((grid.ny, grid.nx), np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        next(rd)
        for x, y, t in rd:
            i = round((float(y) - grid.origin[1]) / grid.dx)
            j = round((float(x) - grid.origin[0]) / grid.dx)
            vals[i, j] = float(t)
    return ArrivalField.from_values(grid, vals)


def write_residual(path, report: ResidualReport) -> None:
    _write_csv(path, ["annulus_radius", "exponent"], report.rows())


# -- reports ----------------------------------------------------------------------

def write_report(path, report) -> None:
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


SUMMARY_FIELDS = ["check", "verdict", "min_margin", "inputs_digest"]


def write_summary(path, reports) -> None:
    rows = [(r.check, r.verdict, "" if r.min_margin is None else repr(r.min_margin), r.inputs_digest)
            for r in sorted(reports, key=lambda r: r.check)]
    _write_csv(path, SUMMARY_FIELDS, rows)
