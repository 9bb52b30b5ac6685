"""Arrival time of mean curvature flow on gridded planar domains.

The level set function is evolved by curvature motion

    phi_tau = (phi_xx phi_y^2 - 2 phi_x phi_y phi_xy + phi_yy phi_x^2) / (|grad phi|^2 + eps)

from the signed distance to the boundary (negative inside), and the arrival
time of a node is the first time ``phi`` changes sign there, interpolated
linearly between steps.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage import measure

log = logging.getLogger(__name__)


class CFLError(ValueError):
    pass


class ResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform node grid; ``values[i, j]`` lives at ``(x[j], y[i])``."""

    nx: int
    ny: int
    dx: float
    origin: tuple[float, float]

    @classmethod
    def square(cls, half_width: float, n: int) -> CartesianGrid:
        dx = 2 * half_width / (n - 1)
        return cls(n, n, dx, (-half_width, -half_width))

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dx * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    def header(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "dx": self.dx, "origin": list(self.origin)}


@dataclass
class ArrivalField:
    grid: CartesianGrid
    values: np.ndarray  # NaN outside the domain
    T_hat: float
    x0_hat: np.ndarray
    flagged: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_values(cls, grid: CartesianGrid, values, flagged=None) -> ArrivalField:
        v = np.asarray(values, dtype=float)
        T, x0 = _argmax_estimate(grid, v)
        return cls(grid, v, T, x0, flagged)

    def to_rows(self):
        X, Y = self.grid.mesh()
        ok = np.isfinite(self.values)
        return np.column_stack([X[ok], Y[ok], self.values[ok]])


def _argmax_estimate(grid: CartesianGrid, v: np.ndarray):
    """Maximum and argmax refined by a quadratic fit on the 3x3 neighbourhood."""
    if not np.any(np.isfinite(v)):
        return float("nan"), np.array([np.nan, np.nan])
    i, j = np.unravel_index(np.nanargmax(v), v.shape)
    x0 = np.array([grid.x[j], grid.y[i]])
    T = float(v[i, j])
    if 1 <= i < v.shape[0] - 1 and 1 <= j < v.shape[1] - 1:
        patch = v[i - 1 : i + 2, j - 1 : j + 2]
        if np.all(np.isfinite(patch)):
            d = grid.dx
            gx = (patch[1, 2] - patch[1, 0]) / (2 * d)
            gy = (patch[2, 1] - patch[0, 1]) / (2 * d)
            hxx = (patch[1, 2] - 2 * patch[1, 1] + patch[1, 0]) / d ** 2
            hyy = (patch[2, 1] - 2 * patch[1, 1] + patch[0, 1]) / d ** 2
            hxy = (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0]) / (4 * d * d)
            H = np.array([[hxx, hxy], [hxy, hyy]])
            g = np.array([gx, gy])
            if np.linalg.det(H) > 0 and hxx < 0:
                step = -np.linalg.solve(H, g)
                if np.all(np.abs(step) <= d):
                    x0 = x0 + step
                    T = T + 0.5 * float(g @ step)
    return T, x0


def ball_arrival_exact(x, r: float, x0, n: int) -> np.ndarray | float:
    """Arrival time ``(r^2 - |x - x0|^2) / (2n)`` of the shrinking ball."""
    x = np.asarray(x, dtype=float)
    d2 = np.sum((x - np.asarray(x0, dtype=float)) ** 2, axis=-1)
    if np.any(d2 > r * r * (1 + 1e-12)):
        raise ValueError("point lies outside the ball")
    out = (r * r - d2) / (2 * n)
    return float(out) if np.ndim(out) == 0 else out


# --- signed distance helpers -------------------------------------------------

def disk_sdf(grid: CartesianGrid, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    X, Y = grid.mesh()
    return np.hypot(X - center[0], Y - center[1]) - radius


def square_sdf(grid: CartesianGrid, half: float = 1.0) -> np.ndarray:
    X, Y = grid.mesh()
    qx, qy = np.abs(X) - half, np.abs(Y) - half
    outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
    inside = np.minimum(np.maximum(qx, qy), 0)
    return outside + inside


def polyline_sdf(grid: CartesianGrid, curves, inside, where=None) -> np.ndarray:
    """Signed distance to closed polylines; ``inside`` is a boolean mask.

    With ``where`` given, only those nodes are computed (others are NaN).
    """
    starts = np.concatenate([c[:-1] for c in curves])
    ends = np.concatenate([c[1:] for c in curves])
    # segment i is adjacent to segments i-1 and i+1 along its own curve
    prev = np.concatenate([np.roll(np.arange(len(c) - 1), 1) + off
                           for c, off in zip(curves, np.cumsum([0] + [len(c) - 1 for c in curves[:-1]]))])
    X, Y = grid.mesh()
    sel = np.ones(X.shape, bool) if where is None else where
    q = np.column_stack([X[sel], Y[sel]])
    _, idx = cKDTree(starts).query(q, k=1)
    best = np.full(q.shape[0], np.inf)
    for i in (idx, prev[idx]):
        a, b = starts[i], ends[i]
        ab = b - a
        L2 = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
        t = np.clip(np.sum((q - a) * ab, axis=1) / L2, 0, 1)
        best = np.minimum(best, np.hypot(*(q - a - t[:, None] * ab).T))
    out = np.full(X.shape, np.nan)
    out[sel] = np.where(inside[sel], -best, best)
    return out


def curve_sdf(grid: CartesianGrid, boundary_points) -> np.ndarray:
    """Signed distance to a closed convex curve given by dense boundary samples."""
    from matplotlib.path import Path

    b = np.asarray(boundary_points, dtype=float)
    closed = np.vstack([b, b[:1]])
    X, Y = grid.mesh()
    inside = Path(closed).contains_points(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    return polyline_sdf(grid, [closed], inside)


def ellipse_sdf(grid: CartesianGrid, a: float = 1.2, b: float = 1 / 1.2, samples: int = 8192) -> np.ndarray:
    t = 2 * np.pi * np.arange(samples) / samples
    return curve_sdf(grid, np.column_stack([a * np.cos(t), b * np.sin(t)]))


def _fd4(f, axis, dx):
    """Fourth-order central first derivative (second order at the two edge layers)."""
    g = np.gradient(f, dx, axis=axis, edge_order=2)
    sl = [slice(None)] * f.ndim

    def at(a, b):
        sl2 = list(sl)
        sl2[axis] = slice(a, f.shape[axis] + b if b <= 0 else b)
        return f[tuple(sl2)]

    inner = list(sl)
    inner[axis] = slice(2, -2)
    g[tuple(inner)] = (at(0, -4) - 8 * at(1, -3) + 8 * at(3, -1) - at(4, 0)) / (12 * dx)
    return g


# Hermite bicubic basis matrix: coefficients from (f, fx, fy, fxy) at the corners
_HERMITE = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [-3, 3, -2, -1], [2, -2, 1, 1]], dtype=float)


@njit(cache=True)
def _hermite_eval(F, FX, FY, FXY, x0, y0, dx, px, py):
    ny, nx = F.shape
    u = (px - x0) / dx
    v = (py - y0) / dx
    j = min(max(int(np.floor(u)), 0), nx - 2)
    i = min(max(int(np.floor(v)), 0), ny - 2)
    a = u - j
    b = v - i
    # 1D cubic Hermite basis and derivatives in local coordinates
    ha = np.array([2 * a**3 - 3 * a**2 + 1, -2 * a**3 + 3 * a**2, a**3 - 2 * a**2 + a, a**3 - a**2])
    da = np.array([6 * a**2 - 6 * a, -6 * a**2 + 6 * a, 3 * a**2 - 4 * a + 1, 3 * a**2 - 2 * a])
    hb = np.array([2 * b**3 - 3 * b**2 + 1, -2 * b**3 + 3 * b**2, b**3 - 2 * b**2 + b, b**3 - b**2])
    db = np.array([6 * b**2 - 6 * b, -6 * b**2 + 6 * b, 3 * b**2 - 4 * b + 1, 3 * b**2 - 2 * b])
    # nodal data: index 0/1 = value at left/right, 2/3 = slope (scaled by dx)
    f = 0.0
    fx = 0.0
    fy = 0.0
    for p in range(4):
        for q in range(4):
            ia = j + (p % 2)
            ib = i + (q % 2)
            if p < 2 and q < 2:
                val = F[ib, ia]
            elif p >= 2 and q < 2:
                val = FX[ib, ia] * dx
            elif p < 2 and q >= 2:
                val = FY[ib, ia] * dx
            else:
                val = FXY[ib, ia] * dx * dx
            f += ha[p] * hb[q] * val
            fx += da[p] * hb[q] * val
            fy += ha[p] * db[q] * val
    return f, fx / dx, fy / dx


@njit(cache=True)
def _newton_closest(F, FX, FY, FXY, x0, y0, dx, qx, qy, iters, tol):
    out = np.empty(qx.size)
    ok = np.zeros(qx.size, np.bool_)
    xmax = x0 + dx * (F.shape[1] - 1)
    ymax = y0 + dx * (F.shape[0] - 1)
    for k in range(qx.size):
        px = qx[k]
        py = qy[k]
        for _ in range(iters):
            f, gx, gy = _hermite_eval(F, FX, FY, FXY, x0, y0, dx, px, py)
            g2 = max(gx * gx + gy * gy, 1e-300)
            wx = qx[k] - px
            wy = qy[k] - py
            proj = (wx * gx + wy * gy) / g2
            sx = -f * gx / g2 + wx - proj * gx
            sy = -f * gy / g2 + wy - proj * gy
            px = min(max(px + sx, x0), xmax)
            py = min(max(py + sy, y0), ymax)
            if abs(sx) + abs(sy) < tol:
                ok[k] = True
                break
        out[k] = np.hypot(qx[k] - px, qy[k] - py)
    return out, ok


def _closest_point_distance(phi, grid, mask, iters: int = 12, tol: float = 1e-10):
    """Distance from masked nodes to the zero set of the bicubic interpolant of ``phi``.

    The interpolant is the Hermite bicubic built from fourth-order finite
    difference derivatives.  A two-part Newton iteration pulls the point
    onto the zero set and removes the tangential component of ``x - p``.
    Returns the distances and a per-node convergence flag.
    """
    rows = np.nonzero(np.any(mask, axis=1))[0]
    cols = np.nonzero(np.any(mask, axis=0))[0]
    r0, r1 = max(rows[0] - 4, 0), min(rows[-1] + 5, phi.shape[0])
    c0, c1 = max(cols[0] - 4, 0), min(cols[-1] + 5, phi.shape[1])
    F = np.ascontiguousarray(phi[r0:r1, c0:c1])
    dx = grid.dx
    FX = _fd4(F, 1, dx)
    FY = _fd4(F, 0, dx)
    FXY = _fd4(FX, 0, dx)
    X, Y = grid.mesh()
    return _newton_closest(F, FX, FY, FXY, grid.x[c0], grid.y[r0], dx,
                           X[mask].astype(float), Y[mask].astype(float), iters, tol * dx)


def reinitialize(phi: np.ndarray, grid: CartesianGrid, band: float = 12.0, where=None) -> np.ndarray:
    """Refresh ``phi`` to the signed distance to its zero set, keeping signs.

    Within ``band`` cells of the front, nodes get the closest-point distance
    to the zero set of the bicubic interpolant, which displaces the front
    only at fourth order; where that Newton solve fails (near the critical
    point of ``phi``) the distance to the piecewise-linear contour is used.
    Beyond the band a node-to-node Euclidean distance transform is enough:
    its cell-scale roughness spreads a few cells per refresh interval and is
    overwritten before reaching the front.

    With ``where`` given only those nodes are refreshed.
    """
    inside = phi < 0
    if not np.any(inside) or np.all(inside):
        return phi
    dx = grid.dx
    # half a cell accounts for the front lying between opposite-sign nodes
    far = np.where(inside, -(ndimage.distance_transform_edt(inside) - 0.5),
                   ndimage.distance_transform_edt(~inside) - 0.5) * dx
    sel = np.ones(phi.shape, bool) if where is None else where
    out = np.where(sel, far, phi)
    near = sel & (np.abs(far) < band * dx)
    if np.count_nonzero(near) < 16:
        return out
    d, ok = _closest_point_distance(phi, grid, near)
    vals = np.where(inside[near], -d, d)
    if not np.all(ok):
        curves = []
        for c in measure.find_contours(phi, 0.0):
            # find_contours returns (row, col) index coordinates
            xy = np.column_stack([grid.origin[0] + c[:, 1] * dx, grid.origin[1] + c[:, 0] * dx])
            if len(xy) >= 2:
                curves.append(xy)
        if curves:
            bad = np.zeros(phi.shape, bool)
            bad[near] = ~ok
            vals[~ok] = polyline_sdf(grid, curves, inside, bad)[bad]
    out[near] = vals
    return out


# --- solver -----------------------------------------------------------------

@dataclass(frozen=True)
class ArrivalControls:
    cfl: float = 0.25  # dtau = cfl * dx^2
    eps: float = 1e-8
    reinit_every: int = 50
    band: float = 4.0  # active box margin in cells around phi < 0
    t_max: float | None = None


def curvature_speed(phi: np.ndarray, dx: float, eps: float = 1e-8) -> np.ndarray:
    """``|grad phi| div(grad phi/|grad phi|)`` by central differences.

    Ghost cells are filled by linear extrapolation, which keeps a signed
    distance field undistorted at the box edges.
    """
    p = np.pad(phi, 1, mode="reflect", reflect_type="odd")
    px = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * dx)
    py = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * dx)
    pxx = (p[1:-1, 2:] - 2 * phi + p[1:-1, :-2]) / dx ** 2
    pyy = (p[2:, 1:-1] - 2 * phi + p[:-2, 1:-1]) / dx ** 2
    pxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * dx * dx)
    return (pxx * py * py - 2 * px * py * pxy + pyy * px * px) / (px * px + py * py + eps)


@njit(cache=True)
def _euler_step(phi, r0, r1, c0, c1, dx, dt, eps, tau, t, pending, out):
    """Explicit step on the box ``[r0:r1, c0:c1]`` with arrival-time capture."""
    ny, nx = phi.shape
    inv2 = 1.0 / (2.0 * dx)
    invsq = 1.0 / (dx * dx)
    for i in range(r0, r1):
        for j in range(c0, c1):
            c = phi[i, j]
            # linear extrapolation at the domain edge
            e = phi[i, j + 1] if j + 1 < nx else 2 * c - phi[i, j - 1]
            w = phi[i, j - 1] if j > 0 else 2 * c - phi[i, j + 1]
            n = phi[i + 1, j] if i + 1 < ny else 2 * c - phi[i - 1, j]
            s = phi[i - 1, j] if i > 0 else 2 * c - phi[i + 1, j]
            ii = min(max(i, 1), ny - 2)
            jj = min(max(j, 1), nx - 2)
            pxy = (phi[ii + 1, jj + 1] - phi[ii + 1, jj - 1] - phi[ii - 1, jj + 1]
                   + phi[ii - 1, jj - 1]) * inv2 * inv2
            px = (e - w) * inv2
            py = (n - s) * inv2
            pxx = (e - 2 * c + w) * invsq
            pyy = (n - 2 * c + s) * invsq
            v = c + dt * (pxx * py * py - 2 * px * py * pxy + pyy * px * px) / (px * px + py * py + eps)
            out[i, j] = v
            if pending[i, j] and v >= 0:
                frac = -c / (v - c)
                t[i, j] = tau + dt * min(max(frac, 0.0), 1.0)
                pending[i, j] = False


def solve_arrival(phi0: np.ndarray, grid: CartesianGrid, controls: ArrivalControls | None = None) -> ArrivalField:
    c = controls or ArrivalControls()
    if c.cfl > 0.25:
        raise CFLError(f"explicit curvature step needs dtau <= dx^2/4, got cfl={c.cfl}")
    phi = np.array(phi0, dtype=float)
    inside0 = phi < 0
    width = np.ptp(np.nonzero(inside0)[1]) + 1 if np.any(inside0) else 0
    if width < 64:
        warnings.warn(f"domain only {width} cells across; at least 64 recommended", ResolutionWarning)
    dx = grid.dx
    dt = c.cfl * dx * dx
    t = np.full(phi.shape, np.nan)
    t[~inside0] = 0.0
    pending = inside0.copy()
    scratch = phi.copy()
    tau = 0.0
    step = 0
    margin = int(np.ceil(c.band)) + 2
    flag_tau = None
    box = None
    while True:
        if box is None or step % 10 == 0:
            n_in = int(np.count_nonzero(pending))
            if n_in == 0:
                break
            if flag_tau is None and n_in < 4 * np.pi:
                # shrinking radius below 2 dx: values from here on are under-resolved
                flag_tau = tau
            act = phi < c.band * dx
            rows = np.nonzero(np.any(act, axis=1))[0]
            cols = np.nonzero(np.any(act, axis=0))[0]
            box = (max(rows[0] - margin, 0), min(rows[-1] + margin + 1, phi.shape[0]),
                   max(cols[0] - margin, 0), min(cols[-1] + margin + 1, phi.shape[1]))
            scratch[...] = phi
        _euler_step(phi, *box, dx, dt, c.eps, tau, t, pending, scratch)
        phi, scratch = scratch, phi
        tau += dt
        step += 1
        if c.reinit_every and step % c.reinit_every == 0 and np.any(pending):
            where = np.zeros(phi.shape, bool)
            where[box[0]:box[1], box[2]:box[3]] = True
            phi = reinitialize(phi, grid, where=where)
            scratch = phi.copy()
        if c.t_max is not None and tau > c.t_max:
            break
    flagged = None
    if flag_tau is not None:
        flagged = np.isfinite(t) & (t >= flag_tau)
        warnings.warn(
            f"{int(flagged.sum())} node(s) arrived after the front radius fell below 2 dx",
            ResolutionWarning,
        )
    log.debug("arrival solve: %d steps, final tau %.6g", step, tau)
    return ArrivalField.from_values(grid, t, flagged)


# --- asymptotic expansion check --------------------------------------------

@dataclass
class ResidualReport:
    radii: np.ndarray  # geometric-mean radius of each resolved annulus
    rms: np.ndarray  # RMS residual on each annulus
    exponents: np.ndarray  # local log-log slope between successive annuli
    fit_exponent: float  # global least-squares slope over resolved annuli
    at_floor: bool
    order: int

    @property
    def meets_order(self) -> bool:
        return bool(self.at_floor or self.fit_exponent >= self.order - 0.1)

    def rows(self):
        return [(float(r), float(e)) for r, e in zip(self.radii[:-1], self.exponents)]


def asymptotic_residual(field: ArrivalField, T: float, x0, N: int = 3, n: int = 1,
                        r_max: float | None = None, min_nodes: int = 8,
                        floor: float = 1e-13, noise: float = 0.0) -> ResidualReport:
    """Residual ``t - T + |x - x0|^2/(2n)`` on dyadic annuli and its power law.

    Inner annuli whose RMS residual does not exceed ``noise`` (the solver
    error level) are treated as unresolved and left out of the report.
    """
    if N < 3:
        raise ValueError("expansion order must be at least 3")
    X, Y = field.grid.mesh()
    d = np.hypot(X - x0[0], Y - x0[1])
    R = field.values - T + d ** 2 / (2 * n)
    ok = np.isfinite(R)
    if r_max is None:
        r_max = 0.5 * float(np.max(d[ok]))
    dx = field.grid.dx
    radii, rms = [], []
    hi = r_max
    while hi / 2 >= 2 * dx:
        lo = hi / 2
        sel = ok & (d >= lo) & (d < hi)
        if np.count_nonzero(sel) < min_nodes:
            break
        radii.append(np.sqrt(lo * hi))
        rms.append(np.sqrt(np.mean(R[sel] ** 2)))
        hi = lo
    radii, rms = np.array(radii[::-1]), np.array(rms[::-1])
    if noise > 0:
        # resolved range: everything outward of the last annulus at the noise level
        low = np.nonzero(rms <= noise)[0]
        start = low[-1] + 1 if low.size else 0
        radii, rms = radii[start:], rms[start:]
    scale = max(float(np.nanmax(np.abs(field.values))), 1.0)
    at_floor = bool(len(rms) == 0 or np.all(rms <= max(floor * scale, noise)))
    if at_floor or len(rms) < 2:
        return ResidualReport(radii, rms, np.full(max(len(rms) - 1, 0), np.nan), float("nan"), at_floor, N)
    lr, lm = np.log(radii), np.log(np.maximum(rms, 1e-300))
    exps = np.diff(lm) / np.diff(lr)
    fit = float(np.polyfit(lr, lm, 1)[0])
    return ResidualReport(radii, rms, exps, fit, at_floor, N)


def arrival_from_graphs(graphs, grid: CartesianGrid, T: float, x0) -> ArrivalField:
    """Arrival field near ``x0`` reconstructed from a rescaled graph trajectory.

    A node at distance ``d`` and polar angle ``phi`` from ``x0`` arrives at
    ``T - exp(-s)`` where ``d = exp(-s/2) (sqrt(2) + u(phi, s))``; the root in
    ``s`` is bracketed between logged snapshots and found by linear
    interpolation of ``u`` in ``s``.  Nodes outside the logged range are NaN.
    """
    from .spectral import evaluate

    X, Y = grid.mesh()
    dxy = np.column_stack([X.ravel() - x0[0], Y.ravel() - x0[1]])
    d = np.hypot(*dxy.T)
    ang = np.arctan2(dxy[:, 1], dxy[:, 0])
    s = np.array([g.s for g in graphs])
    U = np.stack([evaluate(g.coeffs, ang) for g in graphs])  # (n_s, n_pts)
    rho_phys = np.exp(-s / 2)[:, None] * (np.sqrt(2.0) + U)
    f = rho_phys - d[None, :]  # decreasing in s
    out = np.full(d.size, np.nan)
    sign = f[:-1] > 0
    cross = sign & (f[1:] <= 0)
    has = np.any(cross, axis=0)
    k = np.argmax(cross, axis=0)
    cols = np.nonzero(has)[0]
    kk = k[cols]
    f0, f1 = f[kk, cols], f[kk + 1, cols]
    w = f0 / (f0 - f1)
    u0, u1 = U[kk, cols], U[kk + 1, cols]
    s0, s1 = s[kk], s[kk + 1]
    # a few secant refinements with u linear in s
    sc = s0 + w * (s1 - s0)
    for _ in range(20):
        uc = u0 + (sc - s0) / (s1 - s0) * (u1 - u0)
        g = np.exp(-sc / 2) * (np.sqrt(2.0) + uc) - d[cols]
        dg = np.exp(-sc / 2) * ((u1 - u0) / (s1 - s0) - 0.5 * (np.sqrt(2.0) + uc))
        sc = sc - g / dg
    out[cols] = T - np.exp(-sc)
    return ArrivalField.from_values(grid, out.reshape(X.shape))
