"""Parabolic rescaling of a flow and radial-graph extraction over the circle.

A snapshot at flow time ``tau`` is mapped by ``y = (T - tau)^(-1/2) (x - x0)``
and tagged with ``s = -log(T - tau)``.  The rescaled curve is stored through
its own support function, which makes the radial function ``rho(phi)``
available to spectral accuracy by Newton inversion of the polar angle.

The graph is radial, ``rho = sqrt(2) + u``, not a true normal graph; the two
parametrisations differ at order ``u^2 + u_theta^2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .flow import FlowTrajectory, SupportFunction
from .spectral import SpectralCoeffs, SphereGrid, analyze, sobolev_norm

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)


class StarShapeError(ValueError):
    """Rescaled curve does not enclose the origin, so no radial graph exists."""


class GaugeError(ValueError):
    pass


@dataclass(frozen=True)
class RescaledBoundary:
    s: float
    tau: float
    support: np.ndarray  # rescaled support function on equispaced normal angles

    @property
    def m(self) -> int:
        return self.support.size

    @property
    def points(self) -> np.ndarray:
        sf = SupportFunction(2 * np.pi * np.arange(self.m) / self.m, self.support)
        return sf.boundary()

    def hausdorff_to_circle(self, radius: float = SQRT2) -> float:
        """Hausdorff distance to the centred circle, from dense boundary samples."""
        r = np.hypot(*self.points.T)
        rho = radial_function(self.support, 2 * np.pi * np.arange(4 * self.m) / (4 * self.m))
        return float(max(np.max(np.abs(r - radius)), np.max(np.abs(rho - radius))))


def rescale_snapshot(sf: SupportFunction, T: float, x0) -> RescaledBoundary:
    if not sf.tau < T:
        raise GaugeError(f"snapshot tau={sf.tau!r} is not before the extinction time T={T!r}")
    x0 = np.asarray(x0, dtype=float)
    lam = (T - sf.tau) ** -0.5
    h = lam * (sf.h - x0[0] * np.cos(sf.theta) - x0[1] * np.sin(sf.theta))
    return RescaledBoundary(s=float(-np.log(T - sf.tau)), tau=sf.tau, support=h)


def _trig_eval(F, m, theta, order=0):
    """Evaluate the d^order/dtheta^order of the rfft interpolant at ``theta``."""
    k = np.arange(F.size, dtype=float)
    w = np.full(F.size, 2.0)
    w[0] = 1.0
    if m % 2 == 0:
        w[-1] = 0.0
    c = (w * F / m) * (1j * k) ** order
    return np.real(np.exp(1j * np.multiply.outer(theta, k)) @ c)


def radial_function(support, phi, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
    """Radial function of a convex curve about the origin at polar angles ``phi``.

    Solves ``polar_angle(y(theta)) = phi`` for the normal angle ``theta`` by
    Newton's method; ``d(polar)/d(theta) = (h + h'') h / |y|^2``.
    """
    h = np.asarray(support, dtype=float)
    m = h.size
    if np.min(h) <= 0:
        i = int(np.argmin(h))
        raise StarShapeError(
            f"curve does not enclose the origin (support {h[i]:.3g} at angle {2 * np.pi * i / m:.4f})"
        )
    F = np.fft.rfft(h)
    phi = np.asarray(phi, dtype=float)
    th = phi.copy()
    for _ in range(max_iter):
        h0 = _trig_eval(F, m, th)
        h1 = _trig_eval(F, m, th, 1)
        h2 = _trig_eval(F, m, th, 2)
        c, s = np.cos(th), np.sin(th)
        yx, yy = h0 * c - h1 * s, h0 * s + h1 * c
        cp, sp = np.cos(phi), np.sin(phi)
        g = np.arctan2(cp * yy - sp * yx, cp * yx + sp * yy)
        dg = (h0 + h2) * h0 / (yx * yx + yy * yy)
        if np.any(dg <= 0):
            raise StarShapeError("polar angle is not monotone along the curve")
        step = g / dg
        th = th - step
        if np.max(np.abs(step)) < tol:
            break
    h0 = _trig_eval(F, m, th)
    h1 = _trig_eval(F, m, th, 1)
    return np.sqrt(h0 * h0 + h1 * h1)


def radial_graph_samples(sf: SupportFunction, T: float, x0, m: int | None = None):
    """``(rho, s)`` for the rescaled snapshot, sampled at ``m`` equispaced polar angles."""
    b = rescale_snapshot(sf, T, x0)
    m = b.m if m is None else m
    phi = 2 * np.pi * np.arange(m) / m
    return radial_function(b.support, phi), b.s


@dataclass(frozen=True)
class GraphSnapshot:
    s: float
    grid: SphereGrid
    u: np.ndarray
    coeffs: SpectralCoeffs

    @classmethod
    def from_samples(cls, s: float, u, grid: SphereGrid | None = None,
                     l_max: int | None = None) -> GraphSnapshot:
        u = np.asarray(u, dtype=float)
        grid = grid or SphereGrid(1, u.size)
        if np.any(grid.radius + u <= 0):
            raise StarShapeError("graph condition sqrt(2n) + u > 0 violated")
        l_max = grid.m // 4 if l_max is None else l_max
        return cls(float(s), grid, u, analyze(u, grid, l_max))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.u)))

    def norm(self, r: float = 0) -> float:
        return sobolev_norm(self.coeffs, r)


def extract_graph(boundary: RescaledBoundary, grid: SphereGrid | None = None,
                  l_max: int | None = None) -> GraphSnapshot:
    grid = grid or SphereGrid(1, boundary.m)
    if grid.n != 1:
        raise NotImplementedError("graph extraction is implemented for curves only")
    rho = radial_function(boundary.support, grid.nodes)
    return GraphSnapshot.from_samples(boundary.s, rho - grid.radius, grid, l_max)


def decay_exponent_map(N):
    """Sup-norm decay rate of ``u`` implied by an order-N arrival-time expansion."""
    if N <= 2:
        raise ValueError("expansion order must exceed 2")
    if isinstance(N, (int, np.integer, Fraction)):
        return Fraction(N) / 2 - 1
    return N / 2 - 1


def expansion_order(rate):
    """Inverse of :func:`decay_exponent_map`: ``N = 2 (rate + 1)``."""
    if isinstance(rate, (int, np.integer, Fraction)):
        return 2 * (Fraction(rate) + 1)
    return 2 * (rate + 1)


@dataclass
class GraphTrajectory:
    snapshots: list[GraphSnapshot]
    gauge: tuple[float, tuple[float, float]] | None = None
    omitted: list[float] = field(default_factory=list)

    @property
    def s(self) -> np.ndarray:
        return np.array([g.s for g in self.snapshots])

    @property
    def first_valid_s(self) -> float | None:
        return self.snapshots[0].s if self.snapshots else None

    @property
    def grid(self) -> SphereGrid:
        return self.snapshots[0].grid

    def norms(self, r: float) -> np.ndarray:
        return np.array([g.norm(r) for g in self.snapshots])

    def coeff_array(self) -> np.ndarray:
        """Shape ``(n_snapshots, l_max + 1, 2)``."""
        return np.stack([g.coeffs.blocks for g in self.snapshots])

    @property
    def l0_track(self) -> np.ndarray:
        return self.coeff_array()[:, 0, 0]

    @property
    def l1_track(self) -> np.ndarray:
        return self.coeff_array()[:, 1, :]

    def window(self, s_a: float, s_b: float) -> GraphTrajectory:
        keep = [g for g in self.snapshots if s_a - 1e-9 <= g.s <= s_b + 1e-9]
        return GraphTrajectory(keep, self.gauge, list(self.omitted))

    def every(self, k: int) -> GraphTrajectory:
        return GraphTrajectory(self.snapshots[::k], self.gauge, list(self.omitted))

    @classmethod
    def from_coeffs(cls, s_values, coeffs, grid: SphereGrid | None = None) -> GraphTrajectory:
        """Synthetic trajectory from coefficient blocks (one per ``s``)."""
        from .spectral import synthesize

        grid = grid or SphereGrid(1, 128)
        snaps = []
        for s, c in zip(s_values, coeffs):
            u = synthesize(c, grid)
            snaps.append(GraphSnapshot(float(s), grid, u, c))
        return cls(snaps)


def build_graph_trajectory(traj: FlowTrajectory, grid: SphereGrid | None = None,
                           gauge: tuple | None = None, l_max: int | None = None) -> GraphTrajectory:
    """Radial graphs of every logged snapshot under the gauge ``(T, x0)``.

    Snapshots past the gauge time or not star-shaped about ``x0`` are omitted
    and their flow times reported in ``omitted``.
    """
    T, x0 = gauge if gauge is not None else (traj.T_hat, traj.x0_hat)
    x0 = np.asarray(x0, dtype=float)
    grid = grid or SphereGrid(1, traj.final.m)
    snaps, omitted = [], []
    for sf in traj.snapshots:
        try:
            g = extract_graph(rescale_snapshot(sf, T, x0), grid, l_max)
        except (GaugeError, StarShapeError) as exc:
            omitted.append(sf.tau)
            log.debug("snapshot tau=%.6g omitted: %s", sf.tau, exc)
            continue
        snaps.append(g)
    if omitted:
        log.info("%d snapshot(s) omitted from graph trajectory", len(omitted))
    return GraphTrajectory(snaps, (float(T), (float(x0[0]), float(x0[1]))), omitted)
