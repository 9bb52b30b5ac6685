"""Acceptance criteria 1-9, one test each.

Every test prints ``CRITERION n: PASS`` or ``CRITERION n: FAIL`` (with the
measured quantities) even when pytest captures output.  Run the file as a
script to print the nine lines without pytest.
"""
import sys
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from mcflab.arrival import (
    ArrivalField,
    CartesianGrid,
    ResolutionWarning,
    asymptotic_residual,
    disk_sdf,
    solve_arrival,
)
from mcflab.config import preset
from mcflab.estimates import (
    admissible_indices,
    chain_slack,
    check_quadratic_bound,
    decay_fit,
    mode_growth,
    quadratic_ratio,
    random_graph,
    remainder_scaling_order,
    verify_duhamel,
    verify_key_inequality,
    verify_sup_bound,
)
from mcflab.flow import FlowControls, circle, ellipse, run_to_extinction
from mcflab.pipeline import run_pipeline, sweep, sweep_configs
from mcflab.rescale import build_graph_trajectory, decay_exponent_map, expansion_order
from mcflab.spectral import SpectralCoeffs, SphereGrid, mode_spectrum, sobolev_norm

GRID = SphereGrid(1, 128)
_printer = print


def emit(n, ok, detail):
    _printer(f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _printer
    def show(*a):
        with capsys.disabled():
            print(*a)
    _printer = show
    yield
    _printer = print


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def check(n, results):
    ok = all(v for v, _ in results.values())
    emit(n, ok, "; ".join(f"{k}={d}" for k, (_, d) in results.items()))
    failed = [k for k, (v, _) in results.items() if not v]
    assert not failed, f"criterion {n}: {failed}"


# ---------------------------------------------------------------------------

def _arrival_error(n):
    g = CartesianGrid.square(1.1, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        f = solve_arrival(disk_sdf(g), g)
    X, Y = g.mesh()
    r = np.hypot(X, Y)
    sel = (r < 1) & (r > 4 * g.dx)
    return float(np.max(np.abs(f.values - (1 - r ** 2) / 2)[sel]))


def test_criterion_1_ball_exactness():
    def work():
        tr = run_to_extinction(circle(1.0), FlowControls())
        flow_err = max(np.max(np.abs(sf.h - np.sqrt(1 - 2 * sf.tau))) for sf in tr.snapshots)
        e128, e256 = _arrival_error(128), _arrival_error(256)
        return flow_err, e128, e256

    (flow_err, e128, e256), dt = timed(work)
    order = np.log2(e128 / e256)
    check(1, {
        "flow_max_err": (flow_err <= 1e-6, f"{flow_err:.2e}"),
        "arrival_err_256": (e256 <= 2e-3, f"{e256:.2e}"),
        "halving_order": (order >= 0.9, f"{order:.2f}"),
        "runtime_s": (dt <= 60, f"{dt:.1f}"),
    })


def test_criterion_2_rigidity():
    b, dt = timed(lambda: run_pipeline(preset("ball", arrival_n=0, checks=("certificate",)),
                                       write=False))
    sup = float(np.max(b.graphs.norms(2)))
    check(2, {
        "max_H2": (sup <= 1e-8, f"{sup:.2e}"),
        "certificate": (b.certificate == "rigid", b.certificate),
        "runtime_s": (dt <= 30, f"{dt:.1f}"),
    })


def test_criterion_3_rate_quantization():
    def work():
        el = run_to_extinction(ellipse(1.2, 1 / 1.2), FlowControls())
        rate = decay_fit(build_graph_trajectory(el), 2, (3, 6)).rate
        ci = run_to_extinction(circle(), FlowControls())
        g0 = build_graph_trajectory(ci, gauge=(ci.T_hat + 1e-6, tuple(ci.x0_hat)))
        grow0 = -mode_growth(g0, 0, (3, 8)).rate
        x0 = el.x0_hat
        g1 = build_graph_trajectory(el, gauge=(el.T_hat, (x0[0] + 1e-4, x0[1])))
        grow1 = -mode_growth(g1, 1, (3, 8)).rate
        return rate, grow0, grow1

    (rate, g0, g1), dt = timed(work)
    lam2 = float(mode_spectrum(1, 2).lam[2])
    check(3, {
        "rate_l2": (abs(rate - lam2) <= 0.05 * lam2, f"{rate:.4f}"),
        "growth_l0": (abs(g0 - 1) <= 0.05, f"{g0:.4f}"),
        "growth_l1": (abs(g1 - 0.5) <= 0.025, f"{g1:.4f}"),
        "runtime_s": (dt <= 120, f"{dt:.1f}"),
    })


def test_criterion_4_exponent_map():
    g = CartesianGrid.square(1.0, 401)
    X, Y = g.mesh()
    r2 = X ** 2 + Y ** 2
    v = np.where(r2 <= 1, 0.5 - r2 / 2 + r2 ** 2, np.nan)
    rep = asymptotic_residual(ArrivalField.from_values(g, v), 0.5, (0.0, 0.0), N=4)
    exp_ = rep.fit_exponent
    check(4, {
        "map(3)": (decay_exponent_map(3) == Fraction(1, 2), str(decay_exponent_map(3))),
        "map(4)": (decay_exponent_map(4) == 1, str(decay_exponent_map(4))),
        "quartic_exponent": (abs(exp_ - 4) <= 0.1, f"{exp_:.3f}"),
        "inverse_rate": (decay_exponent_map(round(exp_)) == 1 and expansion_order(1) == 4,
                         str(decay_exponent_map(round(exp_)))),
    })


def test_criterion_5_quadratic_bound():
    def work():
        sups = []
        for seed in (2024, 2025):
            rng = np.random.default_rng(seed)
            rep = check_quadratic_bound([random_graph(rng, GRID, h2_max=0.1) for _ in range(100)])
            sups.append(rep.details["C_sup"])
        rng = np.random.default_rng(99)
        orders = [remainder_scaling_order(random_graph(rng, GRID)) for _ in range(10)]
        return sups, min(orders)

    (sups, order), dt = timed(work)
    ratio = max(sups) / min(sups)
    check(5, {
        "C_sup": (all(np.isfinite(sups)), "/".join(f"{s:.3f}" for s in sups)),
        "reseed_ratio": (ratio <= 2, f"{ratio:.3f}"),
        "scaling_order": (order >= 1.9, f"{order:.3f}"),
        "runtime_s": (dt <= 60, f"{dt:.1f}"),
    })


def test_criterion_6_interpolation_and_chain():
    rng = np.random.default_rng(6)
    interp, chain = np.inf, np.inf
    for _ in range(1000):
        c = SpectralCoeffs(1, rng.standard_normal((rng.integers(1, 17), 2)))
        for k in (1, 2, 3):
            interp = min(interp, np.sqrt(sobolev_norm(c, 0) * sobolev_norm(c, 2 * k))
                         - sobolev_norm(c, k))
        for r in (0, 1, 2):
            chain = min(chain, sobolev_norm(c, r) * sobolev_norm(c, r + 4) - sobolev_norm(c, r + 2) ** 2)
    # nodal form used by the pipeline
    u = random_graph(rng, GRID)
    chain = min(chain, chain_slack(u))
    check(6, {
        "interpolation_slack": (interp >= -1e-12, f"{interp:.3e}"),
        "chain_slack": (chain >= -1e-12, f"{chain:.3e}"),
    })


@pytest.fixture(scope="module")
def ellipse_runs():
    fine = run_to_extinction(ellipse(), FlowControls(ds=0.025))
    g_fine = build_graph_trajectory(fine).window(-np.inf, 12.0)
    return g_fine.every(2), g_fine


def test_criterion_7_key_inequality(ellipse_runs):
    g, _ = ellipse_runs
    spec = mode_spectrum(1, g.grid.capacity)
    rate = decay_fit(g, 2, (3, 6)).rate
    ks = admissible_indices(rate, spec)
    margins = [verify_key_inequality(g, k, 2, s0=3.0, rate=rate, spectrum=spec).min_margin
               for k in ks]
    rng = np.random.default_rng(0)
    q = check_quadratic_bound([random_graph(rng, GRID) for _ in range(100)])
    C_hat = 2 * max(q.details["C_sup"], max(quadratic_ratio(s.u) for s in g.snapshots))
    sup = verify_sup_bound(g, C_hat, 2, rate=rate, spectrum=spec)
    check(7, {
        "admissible_k": (len(ks) > 0, str(ks)),
        "min_margin": (min(margins) >= -1e-6, f"{min(margins):.3e}"),
        "sup_bound": (sup.verdict == "pass", f"{sup.verdict} s0={sup.params['s0']}"),
    })


def test_criterion_8_duhamel(ellipse_runs):
    g, g_fine = ellipse_runs
    rep = verify_duhamel(g, 3.0, 4.0, refine=g_fine)
    mm, order = rep.details["mismatch"], rep.details["order"]
    check(8, {
        "H2_mismatch": (mm <= 1e-4, f"{mm:.2e}"),
        "order": (order >= 1.9, f"{order:.3f}"),
    })


def test_criterion_9_sweep():
    rows, dt = timed(lambda: sweep(sweep_configs(range(20), include_ball=True)))
    verdicts = [r["verdict"] for r in rows]
    rigid = [r["name"] for r in rows if r["verdict"] == "rigid"]
    counts = {v: verdicts.count(v) for v in sorted(set(verdicts))}
    check(9, {
        "rows": (len(rows) == 21, str(len(rows))),
        "verdicts_ok": (set(verdicts) <= {"rigid", "quantized"}, str(counts)),
        "no_violation": ("violation" not in verdicts, str(verdicts.count("violation"))),
        "only_ball_rigid": (rigid == ["ball"], str(rigid)),
        "runtime_s": (dt <= 600, f"{dt:.1f}"),
    })


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
