"""Spectral calculus on the stationary sphere of the rescaled flow.

The sphere has radius ``sqrt(2n)``.  Transforms are implemented for the
circle (``n = 1``) with an equispaced trigonometric quadrature; the
eigenvalue tables are valid for every ``n``.

Coefficients are stored against the *orthonormal* eigenbasis of the
radius-``sqrt(2)`` circle with its arclength measure::

    e_0 = 1 / sqrt(2 pi R),   e_l^c = cos(l theta) / sqrt(pi R),
    e_l^s = sin(l theta) / sqrt(pi R),       R = sqrt(2)

so the squared coefficients sum to the squared L2 norm and the Sobolev norm
is ``(sum_l (1 + nu_l)^r |block_l|^2)^(1/2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np


class AliasingError(ValueError):
    """Requested band limit exceeds what the quadrature grid resolves."""


@dataclass(frozen=True)
class SphereGrid:
    """Equispaced nodes on the radius ``sqrt(2n)`` sphere (circle for n = 1)."""

    n: int = 1
    m: int = 128

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension index must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"node count must be positive, got {self.m}")

    @property
    def radius(self) -> float:
        return float(np.sqrt(2 * self.n))

    @property
    def capacity(self) -> int:
        """Largest mode resolved without aliasing: ``m >= 2 l_max + 1``."""
        return (self.m - 1) // 2

    @property
    def nodes(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.m) / self.m

    @property
    def points(self) -> np.ndarray:
        th = self.nodes
        return self.radius * np.column_stack([np.cos(th), np.sin(th)])


@dataclass(frozen=True)
class SpectralCoeffs:
    """Eigenmode coefficients, one ``(cos, sin)`` row per mode ``l``.

    ``blocks[0, 1]`` is always zero: the ``l = 0`` eigenspace is
    one-dimensional on the circle.
    """

    n: int
    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ValueError(f"blocks must have shape (l_max + 1, 2), got {b.shape}")
        b[0, 1] = 0.0
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def l_max(self) -> int:
        return self.blocks.shape[0] - 1

    @classmethod
    def zeros(cls, l_max: int, n: int = 1) -> SpectralCoeffs:
        return cls(n, np.zeros((l_max + 1, 2)))

    def block_norms_sq(self) -> np.ndarray:
        return np.sum(self.blocks ** 2, axis=1)

    def _combine(self, other, op):
        if not isinstance(other, SpectralCoeffs):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("cannot combine coefficients of different dimension")
        lm = max(self.l_max, other.l_max)
        return SpectralCoeffs(self.n, op(self.padded(lm), other.padded(lm)))

    def padded(self, l_max: int) -> np.ndarray:
        """Blocks zero-padded (or truncated) to ``l_max``."""
        out = np.zeros((l_max + 1, 2))
        k = min(l_max, self.l_max) + 1
        out[:k] = self.blocks[:k]
        return out

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, a):
        return SpectralCoeffs(self.n, self.blocks * float(a))

    __rmul__ = __mul__

    def scale_modes(self, factors) -> SpectralCoeffs:
        """Multiply block ``l`` by ``factors[l]``."""
        f = np.asarray(factors, dtype=float)[: self.l_max + 1]
        return SpectralCoeffs(self.n, self.blocks * f[:, None])

    def dot(self, other: SpectralCoeffs, r: float = 0) -> float:
        """Sobolev ``H^r`` inner product."""
        lm = max(self.l_max, other.l_max)
        w = (1.0 + laplacian_eigenvalues(self.n, lm)) ** r
        return float(np.sum(w[:, None] * self.padded(lm) * other.padded(lm)))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "l_max": self.l_max,
            "blocks": [[l, float(c), float(s)] for l, (c, s) in enumerate(self.blocks)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> SpectralCoeffs:
        l_max = int(obj["l_max"])
        b = np.zeros((l_max + 1, 2))
        for l, c, s in obj["blocks"]:
            b[int(l)] = (c, s)
        return cls(int(obj["n"]), b)


def _basis_scale(radius: float) -> np.ndarray:
    """Factors turning trig amplitudes (a_0, a_l, b_l) into orthonormal coefficients."""
    return np.array([np.sqrt(2 * np.pi * radius), np.sqrt(np.pi * radius)])


def analyze(samples, grid: SphereGrid | None = None, l_max: int | None = None) -> SpectralCoeffs:
    """Forward transform of nodal samples to orthonormal eigenmode coefficients."""
    u = np.asarray(samples, dtype=float)
    if u.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if grid is None:
        grid = SphereGrid(1, u.size)
    if grid.n != 1:
        raise NotImplementedError("transforms are implemented for n = 1 only")
    if u.size != grid.m:
        raise ValueError(f"expected {grid.m} samples, got {u.size}")
    if not np.all(np.isfinite(u)):
        raise ValueError("samples contain non-finite values")
    if l_max is None:
        l_max = grid.capacity
    if l_max > grid.capacity:
        raise AliasingError(f"l_max={l_max} needs m >= {2 * l_max + 1} nodes, have {grid.m}")

    F = np.fft.rfft(u)[: l_max + 1] / grid.m
    a0, s = _basis_scale(grid.radius)
    blocks = np.empty((l_max + 1, 2))
    blocks[0] = (F[0].real * a0, 0.0)
    blocks[1:, 0] = 2 * F[1:].real * s
    blocks[1:, 1] = -2 * F[1:].imag * s
    return SpectralCoeffs(1, blocks)


def synthesize(coeffs: SpectralCoeffs, grid: SphereGrid) -> np.ndarray:
    """Evaluate the eigenfunction expansion at the grid nodes."""
    if grid.n != 1 or coeffs.n != 1:
        raise NotImplementedError("transforms are implemented for n = 1 only")
    if coeffs.l_max > grid.capacity:
        raise AliasingError(
            f"l_max={coeffs.l_max} exceeds grid capacity {grid.capacity} (m={grid.m})"
        )
    a0, s = _basis_scale(grid.radius)
    F = np.zeros(grid.m // 2 + 1, dtype=complex)
    b = coeffs.blocks
    F[0] = b[0, 0] / a0
    F[1 : coeffs.l_max + 1] = (b[1:, 0] - 1j * b[1:, 1]) / (2 * s)
    return np.fft.irfft(F * grid.m, n=grid.m)


def evaluate(coeffs: SpectralCoeffs, theta) -> np.ndarray:
    """Evaluate the expansion at arbitrary angles (direct summation)."""
    th = np.asarray(theta, dtype=float)
    a0, s = _basis_scale(np.sqrt(2.0))
    l = np.arange(1, coeffs.l_max + 1)
    arg = np.multiply.outer(th, l)
    b = coeffs.blocks
    return b[0, 0] / a0 + (np.cos(arg) @ b[1:, 0] + np.sin(arg) @ b[1:, 1]) / s


def wavenumbers(m: int) -> np.ndarray:
    """rfft wavenumbers with the Nyquist mode dropped (set to zero)."""
    k = np.arange(m // 2 + 1, dtype=float)
    if m % 2 == 0:
        k[-1] = 0.0
    return k


def periodic_derivative(samples, order: int = 1) -> np.ndarray:
    """Spectral derivative in the angle of equispaced periodic samples."""
    u = np.asarray(samples, dtype=float)
    m = u.size
    F = np.fft.rfft(u)
    k = wavenumbers(m)
    if m % 2 == 0:
        F[-1] = 0.0
    return np.fft.irfft(F * (1j * k) ** order, n=m)


def laplacian_eigenvalues(n: int, l_max: int) -> np.ndarray:
    """``nu_l = l (l + n - 1) / (2n)`` for ``l = 0..l_max`` as floats."""
    l = np.arange(l_max + 1, dtype=float)
    return l * (l + n - 1) / (2 * n)


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenvalues of ``-Delta`` and ``-Delta - 1`` on the radius-sqrt(2n) sphere.

    Entry ``l`` carries the distinct-eigenvalue index ``k = l + 1``: every mode
    number gives a distinct eigenvalue, so the k-th smallest eigenvalue of
    ``-Delta - 1`` is ``lam[k - 1]``.
    """

    n: int
    l: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    multiplicity: np.ndarray = field(repr=False)

    @property
    def entries(self) -> list[tuple[int, float, float]]:
        return [(int(a), float(b), float(c)) for a, b, c in zip(self.l, self.nu, self.lam)]

    def exact_nu(self, l: int) -> Fraction:
        return Fraction(l * (l + self.n - 1), 2 * self.n)

    def exact_lam(self, l: int) -> Fraction:
        return self.exact_nu(l) - 1

    def eigen_index(self, l: int) -> int:
        return l + 1

    def mode_of_index(self, k: int) -> int:
        if k < 1:
            raise ValueError("eigenvalue index k starts at 1")
        return k - 1

    def lam_k(self, k: int) -> float:
        return float(self.lam[self.mode_of_index(k)])

    def to_csv_rows(self) -> list[tuple[int, float, float]]:
        return self.entries


def harmonic_multiplicity(n: int, l: int) -> int:
    """Dimension of degree-l spherical harmonics on S^n."""
    if l == 0:
        return 1
    return comb(l + n, n) - comb(l + n - 2, n)


def mode_spectrum(n: int, l_max: int) -> ModeSpectrum:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if int(l_max) != l_max or l_max < 0:
        raise ValueError(f"l_max must be a nonnegative integer, got {l_max}")
    n, l_max = int(n), int(l_max)
    nu = laplacian_eigenvalues(n, l_max)
    return ModeSpectrum(
        n=n,
        l=np.arange(l_max + 1),
        nu=nu,
        lam=nu - 1.0,
        multiplicity=np.array([harmonic_multiplicity(n, l) for l in range(l_max + 1)]),
    )


def laplace_beltrami(coeffs: SpectralCoeffs) -> SpectralCoeffs:
    return coeffs.scale_modes(-laplacian_eigenvalues(coeffs.n, coeffs.l_max))


def sobolev_norm(coeffs: SpectralCoeffs, r: float = 0) -> float:
    if r < 0:
        raise ValueError("Sobolev index must be nonnegative")
    w = (1.0 + laplacian_eigenvalues(coeffs.n, coeffs.l_max)) ** r
    return float(np.sqrt(np.sum(w * coeffs.block_norms_sq())))


def sobolev_norms(coeffs: SpectralCoeffs, rs) -> dict[int, float]:
    return {int(r): sobolev_norm(coeffs, r) for r in rs}


def project_tail(coeffs: SpectralCoeffs, k: int) -> SpectralCoeffs:
    """Orthogonal projection onto eigenspaces ``lambda_j``, ``j >= k`` (distinct-eigenvalue indexing).

    With one distinct eigenvalue per mode number this keeps modes ``l >= k - 1``.
    """
    if k < 1:
        raise ValueError("projection index k starts at 1")
    keep = (np.arange(coeffs.l_max + 1) >= k - 1).astype(float)
    return coeffs.scale_modes(keep)


def l2_quadrature(samples, grid: SphereGrid) -> float:
    """L2 norm by the trapezoid rule with arclength weight ``R dtheta``."""
    u = np.asarray(samples, dtype=float)
    return float(np.sqrt(grid.radius * 2 * np.pi / grid.m * np.sum(u * u)))
