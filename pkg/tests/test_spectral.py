from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import sparse
from scipy.sparse.linalg import eigsh

from mcflab.spectral import (
    AliasingError,
    SpectralCoeffs,
    SphereGrid,
    analyze,
    evaluate,
    l2_quadrature,
    laplace_beltrami,
    mode_spectrum,
    project_tail,
    sobolev_norm,
    synthesize,
)

R2 = np.sqrt(2.0)


def direct_coeffs(u, l_max):
    """Orthonormal coefficients by explicit trapezoid sums (no FFT)."""
    m = u.size
    th = 2 * np.pi * np.arange(m) / m
    out = np.zeros((l_max + 1, 2))
    out[0, 0] = np.sum(u) * (2 * np.pi * R2 / m) / np.sqrt(2 * np.pi * R2)
    for l in range(1, l_max + 1):
        w = 2 * np.pi * R2 / m / np.sqrt(np.pi * R2)
        out[l] = (np.sum(u * np.cos(l * th)) * w, np.sum(u * np.sin(l * th)) * w)
    return out


def random_coeffs(rng, l_max):
    return SpectralCoeffs(1, rng.standard_normal((l_max + 1, 2)))


coeff_arrays = arrays(np.float64, st.tuples(st.integers(1, 20), st.just(2)),
                      elements=st.floats(-10, 10, allow_nan=False))


class TestGrid:
    def test_radius_squared_is_2n(self):
        for n in range(1, 6):
            assert SphereGrid(n, 8).radius ** 2 == pytest.approx(2 * n, rel=1e-15)

    def test_capacity(self):
        assert SphereGrid(1, 64).capacity == 31

    def test_invalid(self):
        with pytest.raises(ValueError):
            SphereGrid(0, 16)


class TestTransforms:
    def test_constant_only_l0(self):
        c = analyze(np.full(64, 3.0))
        assert c.blocks[0, 0] == pytest.approx(3.0 * np.sqrt(2 * np.pi * R2))
        assert np.max(np.abs(c.blocks[1:])) < 1e-13

    def test_cos2_only_l2_cosine(self):
        g = SphereGrid(1, 64)
        c = analyze(np.cos(2 * g.nodes), g)
        mask = np.ones_like(c.blocks, bool)
        mask[2, 0] = False
        assert np.max(np.abs(c.blocks[mask])) < 1e-13
        assert abs(c.blocks[2, 0]) > 0.5

    def test_matches_direct_quadrature(self, rng):
        g = SphereGrid(1, 96)
        u = rng.standard_normal(96)
        np.testing.assert_allclose(analyze(u, g, 30).blocks, direct_coeffs(u, 30), atol=1e-12)

    def test_roundtrip_band_limited(self, rng):
        g = SphereGrid(1, 128)
        c = random_coeffs(rng, 40)
        u = synthesize(c, g)
        back = analyze(u, g, 40)
        assert np.max(np.abs(back.blocks - c.blocks)) <= 1e-12 * np.max(np.abs(c.blocks))
        np.testing.assert_allclose(synthesize(back, g), u, rtol=0, atol=1e-12 * np.max(np.abs(u)))

    def test_zero_and_constant_synthesis(self):
        g = SphereGrid(1, 32)
        assert np.all(synthesize(SpectralCoeffs.zeros(5), g) == 0)
        b = np.zeros((3, 2))
        b[0, 0] = 2.0
        u = synthesize(SpectralCoeffs(1, b), g)
        assert np.ptp(u) < 1e-15

    def test_rejects_non_finite(self):
        u = np.zeros(16)
        u[3] = np.nan
        with pytest.raises(ValueError):
            analyze(u)

    def test_aliasing_errors(self):
        with pytest.raises(AliasingError):
            analyze(np.zeros(16), SphereGrid(1, 16), l_max=8)
        with pytest.raises(AliasingError):
            synthesize(SpectralCoeffs.zeros(10), SphereGrid(1, 16))

    def test_n2_transform_not_implemented(self):
        with pytest.raises(NotImplementedError):
            analyze(np.zeros(16), SphereGrid(2, 16))

    def test_evaluate_off_grid(self, rng):
        c = random_coeffs(rng, 6)
        g = SphereGrid(1, 64)
        np.testing.assert_allclose(evaluate(c, g.nodes), synthesize(c, g), atol=1e-12)

    def test_json_roundtrip(self, rng):
        c = random_coeffs(rng, 5)
        d = SpectralCoeffs.from_json(c.to_json())
        np.testing.assert_array_equal(d.blocks, c.blocks)
        assert c.to_json()["blocks"][2][0] == 2

    def test_l0_sine_slot_forced_zero(self):
        c = SpectralCoeffs(1, np.ones((3, 2)))
        assert c.blocks[0, 1] == 0.0


def fd_circle_eigs(m=400, k=4):
    """Smallest eigenvalues of the periodic second-difference Laplacian, radius sqrt(2)."""
    h = R2 * 2 * np.pi / m
    main = np.full(m, 2.0)
    A = sparse.diags([main, -np.ones(m - 1), -np.ones(m - 1)], [0, 1, -1]).tolil()
    A[0, m - 1] = A[m - 1, 0] = -1.0
    return np.sort(np.linalg.eigvalsh(A.toarray() / h ** 2))[:k]


def fd_sphere_axisym_eigs(m=2000, k=4, radius=2.0):
    """Finite-volume -Delta on zonal functions of the radius-2 two-sphere."""
    th = (np.arange(m) + 0.5) * np.pi / m
    face = np.arange(1, m) * np.pi / m
    d = np.pi / m
    w = np.sin(th)
    flux = np.sin(face) / d
    diag = np.zeros(m)
    diag[:-1] += flux
    diag[1:] += flux
    # generalized problem K v = nu M v with M = diag(sin th) d R^2
    K = sparse.diags([diag, -flux, -flux], [0, 1, -1]).tocsc()
    M = sparse.diags(w * d * radius ** 2).tocsc()
    vals = eigsh(K, k=k, M=M, sigma=-0.1, which="LM", return_eigenvectors=False)
    return np.sort(vals)


class TestSpectrum:
    def test_lambda0_is_minus_one(self):
        for n in range(1, 9):
            assert mode_spectrum(n, 3).exact_lam(0) == -1

    def test_lambda1_lambda2_exact(self):
        for n in range(1, 9):
            s = mode_spectrum(n, 3)
            assert s.exact_lam(1) == Fraction(-1, 2)
            assert s.exact_lam(2) == Fraction(1, n)

    def test_n1_l2_against_fd_oracle(self):
        # FD eigenvalues come in pairs (cos, sin); l = 2 is the 4th/5th
        ev = fd_circle_eigs(k=5)
        assert ev[3] - 1 == pytest.approx(mode_spectrum(1, 2).lam[2], rel=1e-3)
        assert mode_spectrum(1, 2).lam[2] == 1.0

    def test_n2_l2_against_axisymmetric_fd_oracle(self):
        ev = fd_sphere_axisym_eigs(k=3)
        assert ev[2] - 1 == pytest.approx(mode_spectrum(2, 2).lam[2], rel=1e-4)
        assert mode_spectrum(2, 2).lam[2] == 0.5

    def test_strictly_increasing(self):
        for n in (1, 2, 5):
            assert np.all(np.diff(mode_spectrum(n, 20).lam) > 0)

    def test_index_conversion(self):
        s = mode_spectrum(1, 6)
        assert s.eigen_index(0) == 1
        assert s.mode_of_index(3) == 2
        assert s.lam_k(3) == 1.0
        with pytest.raises(ValueError):
            s.mode_of_index(0)

    def test_multiplicity(self):
        s1, s2 = mode_spectrum(1, 3), mode_spectrum(2, 3)
        assert s1.multiplicity.tolist() == [1, 2, 2, 2]
        assert s2.multiplicity.tolist() == [1, 3, 5, 7]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            mode_spectrum(0, 3)
        with pytest.raises(ValueError):
            mode_spectrum(1, -1)


class TestOperators:
    def test_laplacian_of_constant(self):
        b = np.zeros((4, 2))
        b[0, 0] = 1.0
        assert np.all(laplace_beltrami(SpectralCoeffs(1, b)).blocks == 0)

    def test_laplacian_cos2_against_fd(self):
        m = 2048
        g = SphereGrid(1, m)
        u = np.cos(2 * g.nodes)
        h = R2 * 2 * np.pi / m
        fd = (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / h ** 2
        spec = synthesize(laplace_beltrami(analyze(u, g, 8)), g)
        np.testing.assert_allclose(spec, fd, atol=1e-5)
        np.testing.assert_allclose(spec, -2 * u, atol=1e-12)

    def test_laplacian_linear(self, rng):
        a, b = 1.7, -0.3
        u, v = random_coeffs(rng, 8), random_coeffs(rng, 8)
        lhs = laplace_beltrami(a * u + b * v).blocks
        rhs = (a * laplace_beltrami(u) + b * laplace_beltrami(v)).blocks
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_sobolev_zero(self):
        for r in range(5):
            assert sobolev_norm(SpectralCoeffs.zeros(4), r) == 0

    def test_sobolev_constant_quadrature(self):
        c = -0.7
        g = SphereGrid(1, 64)
        q = l2_quadrature(np.full(64, c), g)
        assert q == pytest.approx(abs(c) * np.sqrt(2 * np.pi * R2), rel=1e-14)
        for r in range(4):
            assert sobolev_norm(analyze(np.full(64, c), g), r) == pytest.approx(q, rel=1e-13)

    def test_parseval(self, rng):
        g = SphereGrid(1, 128)
        c = random_coeffs(rng, 50)
        assert sobolev_norm(c, 0) == pytest.approx(l2_quadrature(synthesize(c, g), g), rel=1e-12)

    def test_projection_examples(self, rng):
        c = random_coeffs(rng, 6)
        np.testing.assert_array_equal(project_tail(c, 1).blocks, c.blocks)
        b = np.zeros((3, 2))
        b[0, 0] = 5
        assert sobolev_norm(project_tail(SpectralCoeffs(1, b), 2)) == 0
        for k in range(1, 6):
            p = project_tail(c, k)
            np.testing.assert_array_equal(project_tail(p, k).blocks, p.blocks)

    def test_projection_self_adjoint(self, rng):
        u, v = random_coeffs(rng, 7), random_coeffs(rng, 7)
        for k in range(1, 5):
            assert project_tail(u, k).dot(v, 2) == pytest.approx(u.dot(project_tail(v, k), 2))

    def test_projection_index_validation(self):
        with pytest.raises(ValueError):
            project_tail(SpectralCoeffs.zeros(3), 0)


@settings(max_examples=200, deadline=None)
@given(coeff_arrays)
def test_interpolation_inequality(b):
    c = SpectralCoeffs(1, b)
    for k in (1, 2, 3):
        lhs = sobolev_norm(c, k)
        rhs = np.sqrt(sobolev_norm(c, 0) * sobolev_norm(c, 2 * k))
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


@settings(max_examples=200, deadline=None)
@given(coeff_arrays, st.integers(1, 6), st.integers(0, 4))
def test_projection_contracts(b, k, r):
    c = SpectralCoeffs(1, b)
    assert sobolev_norm(project_tail(c, k), r) <= sobolev_norm(c, r) * (1 + 1e-14)


@settings(max_examples=100, deadline=None)
@given(coeff_arrays)
def test_parseval_property(b):
    g = SphereGrid(1, 64)
    c = SpectralCoeffs(1, b)
    q = l2_quadrature(synthesize(c, g), g)
    assert abs(q - sobolev_norm(c, 0)) <= 1e-12 * max(q, 1e-300) + 1e-13
