"""Curve shortening of convex planar curves in support-function form.

A convex curve is stored through its support function ``h(theta)`` sampled
at equispaced normal angles.  The radius of curvature is ``h + h''`` and the
flow reads ``dh/dtau = -1 / (h + h'')``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import periodic_derivative

log = logging.getLogger(__name__)

# RK4 stability interval on the negative real axis is about 2.785
RK4_STABILITY = 2.785


class ConvexityError(RuntimeError):
    """Radius of curvature ``h + h''`` became non-positive."""

    def __init__(self, msg, tau=None, theta=None):
        super().__init__(msg)
        self.tau = tau
        self.theta = theta


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SupportFunction:
    theta: np.ndarray
    h: np.ndarray
    tau: float = 0.0

    @property
    def m(self) -> int:
        return self.h.size

    @classmethod
    def from_function(cls, func, m: int = 128, tau: float = 0.0) -> SupportFunction:
        theta = 2 * np.pi * np.arange(m) / m
        return cls(theta, np.asarray(func(theta), dtype=float), tau)

    def with_h(self, h, tau) -> SupportFunction:
        return replace(self, h=h, tau=float(tau))

    def curvature_radius(self) -> np.ndarray:
        return self.h + periodic_derivative(self.h, 2)

    def area(self) -> float:
        hp = periodic_derivative(self.h, 1)
        return float(np.pi / self.m * np.sum(self.h ** 2 - hp ** 2))

    def length(self) -> float:
        return float(2 * np.pi * np.mean(self.h))

    def steiner_point(self) -> np.ndarray:
        # (1/pi) * integral of h(theta) (cos, sin) dtheta
        return 2.0 / self.m * np.array(
            [np.sum(self.h * np.cos(self.theta)), np.sum(self.h * np.sin(self.theta))]
        )

    def boundary(self) -> np.ndarray:
        """Boundary points ``h n + h' t`` at the sampled normal angles."""
        hp = periodic_derivative(self.h, 1)
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.column_stack([self.h * c - hp * s, self.h * s + hp * c])

    def translated(self, v) -> SupportFunction:
        v = np.asarray(v, dtype=float)
        return self.with_h(self.h + v[0] * np.cos(self.theta) + v[1] * np.sin(self.theta), self.tau)

    def scaled(self, lam: float) -> SupportFunction:
        return self.with_h(lam * self.h, lam ** 2 * self.tau)


def circle(radius: float = 1.0, center=(0.0, 0.0), m: int = 128) -> SupportFunction:
    cx, cy = center
    return SupportFunction.from_function(
        lambda t: radius + cx * np.cos(t) + cy * np.sin(t), m
    )


def ellipse(a: float = 1.2, b: float = 1 / 1.2, center=(0.0, 0.0), m: int = 128) -> SupportFunction:
    cx, cy = center
    return SupportFunction.from_function(
        lambda t: np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2)
        + cx * np.cos(t)
        + cy * np.sin(t),
        m,
    )


def perturbed_circle(seed: int, m: int = 128, amplitude: float = 0.03, l_max: int = 6,
                     radius: float = 1.0) -> SupportFunction:
    """Unit circle plus random modes ``2..l_max`` with ``|a_l| ~ amplitude / l^2``.

    ``amplitude`` is kept small enough that ``h + h''`` stays positive.
    """
    rng = np.random.default_rng(seed)
    ls = np.arange(2, l_max + 1)
    amp = amplitude / ls ** 2
    a = rng.uniform(-1, 1, ls.size) * amp
    b = rng.uniform(-1, 1, ls.size) * amp

    def h(t):
        out = np.full_like(t, radius)
        for l, al, bl in zip(ls, a, b):
            out += al * np.cos(l * t) + bl * np.sin(l * t)
        return out

    sf = SupportFunction.from_function(h, m)
    if np.min(sf.curvature_radius()) <= 0:
        raise ConvexityError("perturbation too large for a convex curve")
    return sf


def curvature_from_support(sf: SupportFunction) -> np.ndarray:
    rc = sf.curvature_radius()
    bad = rc <= 0
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConvexityError(
            f"convexity lost at tau={sf.tau:.6g}, theta={sf.theta[i]:.4f} "
            f"(h + h'' = {rc[i]:.3g})",
            tau=sf.tau,
            theta=float(sf.theta[i]),
        )
    return 1.0 / rc


def max_stable_step(sf: SupportFunction) -> float:
    """RK4 step limit from the stiffest linearised mode ``kappa^2 (1 - l^2)``."""
    k = sf.m // 2 - 1 if sf.m % 2 == 0 else sf.m // 2
    return RK4_STABILITY * float(np.min(sf.curvature_radius())) ** 2 / max(k * k - 1, 1)


def _speed(h, tau):
    rc = h + periodic_derivative(h, 2)
    if np.any(rc <= 0):
        raise ConvexityError(f"convexity lost at tau={tau:.6g}", tau=tau)
    return -1.0 / rc


def _rk4(h, tau, dtau, k1):
    k2 = _speed(h + 0.5 * dtau * k1, tau)
    k3 = _speed(h + 0.5 * dtau * k2, tau)
    k4 = _speed(h + dtau * k3, tau)
    return h + dtau / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_flow(sf: SupportFunction, dtau: float, check_stability: bool = True) -> SupportFunction:
    """One classical RK4 step of ``dh/dtau = -1/(h + h'')``."""
    if dtau <= 0:
        raise StepSizeError(f"time step must be positive, got {dtau}")
    kappa = curvature_from_support(sf)
    if check_stability and dtau > max_stable_step(sf):
        raise StepSizeError(f"dtau={dtau:.3g} exceeds RK4 stability bound {max_stable_step(sf):.3g}")
    return sf.with_h(_rk4(sf.h, sf.tau, dtau, -kappa), sf.tau + dtau)


@dataclass(frozen=True)
class FlowControls:
    """Integrator and logging controls.

    ``cfl`` scales the step ``dtau = cfl * min(h + h'')^2 / (l_max^2 - 1)``,
    which must stay below the RK4 limit ``2.785``.  Snapshots are logged at
    ``s = j * ds`` with ``s = -log(T - tau)`` and ``T`` predicted from the
    area law.
    """

    cfl: float = 1.0
    ds: float = 0.05
    area_floor: float = 1e-6
    s_max: float | None = None
    min_step: float = 1e-300


@dataclass
class FlowTrajectory:
    snapshots: list[SupportFunction]
    final: SupportFunction
    T_hat: float
    x0_hat: np.ndarray
    area0: float
    controls: FlowControls = field(default_factory=FlowControls)
    x0_converged: bool = True
    n_steps: int = 0

    @property
    def taus(self) -> np.ndarray:
        return np.array([sf.tau for sf in self.snapshots])

    def s_values(self, T: float | None = None) -> np.ndarray:
        T = self.T_hat if T is None else T
        return -np.log(T - self.taus)


def run_to_extinction(sf0: SupportFunction, controls: FlowControls | None = None,
                      refine_x0: bool = True) -> FlowTrajectory:
    """Flow until the enclosed area falls below ``area_floor * A(0)``."""
    c = controls or FlowControls()
    if not 0 < c.cfl < RK4_STABILITY:
        raise StepSizeError(f"cfl must lie in (0, {RK4_STABILITY}), got {c.cfl}")
    curvature_from_support(sf0)
    A0 = sf0.area()
    T_pred = sf0.tau + A0 / (2 * np.pi)
    s_first = np.ceil(-np.log(T_pred - sf0.tau) / c.ds - 1e-9) * c.ds
    k = sf0.m // 2 - 1 if sf0.m % 2 == 0 else sf0.m // 2
    stiff = max(k * k - 1, 1)

    snaps = []
    sf = sf0
    j = 0
    nsteps = 0
    floor = c.area_floor * A0
    while True:
        s_target = s_first + j * c.ds
        if c.s_max is not None and s_target > c.s_max + 1e-9:
            break
        tau_target = T_pred - np.exp(-s_target)
        done = False
        while sf.tau < tau_target:
            kappa = curvature_from_support(sf)
            # A = (1/2) * integral of h (h + h'')
            if np.pi / sf.m * np.sum(sf.h / kappa) < floor:
                done = True
                break
            dt = c.cfl / (np.max(kappa) ** 2 * stiff)
            if dt < c.min_step:
                raise StepSizeError(f"step size underflow at tau={sf.tau:.16g}")
            remaining = tau_target - sf.tau
            if dt >= remaining:
                dt = remaining
            elif dt > 0.5 * remaining:
                dt = 0.5 * remaining
            tau_new = sf.tau + dt
            if dt == remaining:
                tau_new = tau_target
            sf = sf.with_h(_rk4(sf.h, sf.tau, dt, -kappa), tau_new)
            nsteps += 1
        if done:
            break
        snaps.append(sf)
        j += 1

    final = sf
    traj = FlowTrajectory(
        snapshots=snaps,
        final=final,
        T_hat=final.tau + final.area() / (2 * np.pi),
        x0_hat=final.steiner_point(),
        area0=A0,
        controls=c,
        n_steps=nsteps,
    )
    if refine_x0 and snaps:
        _, x0_hat, ok = extinction_estimates(traj, return_status=True)
        traj.x0_hat = x0_hat
        traj.x0_converged = ok
    log.debug("flow finished: %d steps, %d snapshots, T_hat=%.15g", nsteps, len(snaps), traj.T_hat)
    return traj


def extinction_estimates(traj: FlowTrajectory, tol: float = 1e-13, max_iter: int = 30,
                         return_status: bool = False):
    """Extinction time from the area law and point by translation-mode fixed point.

    Starting from the Steiner point of the last state, the centre is moved
    by ``exp(-s/2)`` times the translation (``l = 1``) amplitude of the
    latest rescaled radial graph until that amplitude vanishes.
    """
    from .rescale import radial_graph_samples

    T_hat = traj.final.tau + traj.final.area() / (2 * np.pi)
    x0 = traj.final.steiner_point()
    scale = max(np.sqrt(traj.area0), 1e-300)
    # latest snapshot still well resolved in double precision
    cand = [sf for sf in traj.snapshots if T_hat - sf.tau > 1e-6 * T_hat]
    if not cand:
        cand = traj.snapshots[-1:]
    sf = cand[-1]
    ok = False
    for _ in range(max_iter):
        try:
            rho, s = radial_graph_samples(sf, T_hat, x0)
        except ValueError:
            break
        m = rho.size
        th = 2 * np.pi * np.arange(m) / m
        a1 = 2.0 / m * np.sum(rho * np.cos(th))
        b1 = 2.0 / m * np.sum(rho * np.sin(th))
        delta = np.exp(-s / 2) * np.array([a1, b1])
        x0 = x0 + delta
        if np.hypot(*delta) < tol * scale:
            ok = True
            break
    if not ok:
        log.warning("extinction point refinement did not converge; x0_hat=%s", x0)
    if return_status:
        return T_hat, x0, ok
    return T_hat, x0
