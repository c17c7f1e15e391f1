import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oatdcc.grid import (
    GridError,
    apply_kinetic,
    apply_kinetic_phase,
    build_grid,
    decompose_interaction,
    gaussian_well,
    soft_coulomb,
)


def spin_function(values):
    """Put a spatial function on the spin grid (up block only)."""
    return np.concatenate([values, np.zeros_like(values)])


def test_build_grid_paper_spacing():
    grid = build_grid(15.0, 64)
    assert grid.dx == pytest.approx(30.0 / 64)
    assert grid.dx == pytest.approx(0.46875)
    assert grid.n_basis == 128


def test_build_grid_small_points():
    grid = build_grid(1.0, 4)
    assert np.allclose(grid.x, [-1.0, -0.5, 0.0, 0.5])
    assert np.all(np.diff(grid.x) > 0)


def test_build_grid_rejects_bad_input():
    with pytest.raises(GridError):
        build_grid(1.0, 6)
    with pytest.raises(GridError):
        build_grid(-2.0, 8)
    with pytest.raises(GridError):
        build_grid(1.0, 2)


def test_momentum_grid_period():
    grid = build_grid(3.0, 16)
    # fundamental momentum 2*pi / (2R)
    assert np.min(np.abs(grid.k[grid.k != 0])) == pytest.approx(np.pi / 3.0)


def test_kinetic_plane_wave_eigenfunction():
    grid = build_grid(5.0, 32)
    for j in (1, 5, 12):
        kj = grid.k[j]
        psi = spin_function(np.exp(1j * kj * grid.x))
        out = apply_kinetic(grid, psi)
        assert np.allclose(out, 0.5 * kj**2 * psi, atol=1e-12)


def test_kinetic_constant_is_zero():
    grid = build_grid(5.0, 32)
    psi = spin_function(np.ones(grid.n_grid))
    assert np.max(np.abs(apply_kinetic(grid, psi))) < 1e-14


def test_kinetic_matches_finite_difference_on_gaussian():
    # dense second-difference stencil oracle on a refined grid
    grid = build_grid(10.0, 1024)
    f = np.exp(-grid.x**2)
    psi = spin_function(f)
    spectral = apply_kinetic(grid, psi)[: grid.n_grid].real
    stencil = -0.5 * (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / grid.dx**2
    # stencil itself is only O(dx^2) accurate; compare at that level
    assert np.max(np.abs(spectral - stencil)) < 5e-4
    # spectral result is essentially exact: compare against the analytic derivative
    analytic = -0.5 * (4 * grid.x**2 - 2) * f
    assert np.max(np.abs(spectral - analytic)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kinetic_hermitian_on_grid_inner_product(seed):
    grid = build_grid(4.0, 16)
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(grid.n_basis) + 1j * rng.standard_normal(grid.n_basis)
    psi = rng.standard_normal(grid.n_basis) + 1j * rng.standard_normal(grid.n_basis)
    lhs = np.sum(phi.conj() * apply_kinetic(grid, psi)) * grid.dx
    rhs = np.sum(apply_kinetic(grid, phi).conj() * psi) * grid.dx
    assert abs(lhs - rhs) < 1e-12


def test_kinetic_linear():
    grid = build_grid(4.0, 16)
    rng = np.random.default_rng(7)
    a = rng.standard_normal(grid.n_basis) + 1j * rng.standard_normal(grid.n_basis)
    b = rng.standard_normal(grid.n_basis) + 1j * rng.standard_normal(grid.n_basis)
    out = apply_kinetic(grid, 2.0 * a + 0.5j * b)
    ref = 2.0 * apply_kinetic(grid, a) + 0.5j * apply_kinetic(grid, b)
    assert np.allclose(out, ref, atol=1e-13)


def test_one_body_operators_keep_spin_blocks():
    grid = build_grid(4.0, 16)
    rng = np.random.default_rng(3)
    up_only = np.concatenate([rng.standard_normal(grid.n_grid), np.zeros(grid.n_grid)])
    for result in (
        apply_kinetic(grid, up_only),
        apply_kinetic_phase(grid, up_only, -0.3j),
    ):
        assert np.max(np.abs(result[grid.n_grid:])) == 0.0


def test_kinetic_phase_is_free_propagator():
    grid = build_grid(5.0, 32)
    kj = grid.k[3]
    psi = spin_function(np.exp(1j * kj * grid.x))
    dt = 0.17
    out = apply_kinetic_phase(grid, psi, -1j * dt)
    assert np.allclose(out, np.exp(-0.5j * kj**2 * dt) * psi, atol=1e-12)


def test_gaussian_well_values():
    assert gaussian_well(0.0) == pytest.approx(-7.0)
    assert abs(gaussian_well(80.0)) < 1e-200
    x = np.linspace(-4, 4, 17)
    assert np.allclose(gaussian_well(x), gaussian_well(-x))


def test_soft_coulomb_values():
    assert soft_coulomb(0.0, 0.0) == pytest.approx(5.0)
    assert soft_coulomb(0.0, 1.0) == pytest.approx(1.0 / np.sqrt(1.04))
    assert soft_coulomb(0.3, -0.9) == pytest.approx(soft_coulomb(-0.9, 0.3))
    # bounded by strength / softening
    xs = np.linspace(-3, 3, 31)
    assert np.all(soft_coulomb(xs[:, None], xs[None, :]) <= 5.0 + 1e-12)
    # squared variant for reference
    assert soft_coulomb(0.0, 1.0, squared=True) == pytest.approx(1.0 / np.sqrt(1.04))
    assert soft_coulomb(0.0, 2.0, squared=True) == pytest.approx(1.0 / np.sqrt(4.04))


def test_decompose_rank_one_kernel_exact():
    grid = build_grid(2.0, 8)
    f = np.cos(grid.x)

    def kernel(a, b):
        return np.cos(a) * np.cos(b)

    lr = decompose_interaction(grid, kernel=kernel, rank=1)
    assert np.max(np.abs(lr.reconstruct() - f[:, None] * f[None, :])) < 1e-12


def test_decompose_truncation_error_is_next_eigenvalue():
    grid = build_grid(5.0, 32)
    dense = soft_coulomb(grid.x[:, None], grid.x[None, :])
    for m in (3, 10, 20):
        lr = decompose_interaction(grid, rank=m)
        err = np.linalg.norm(dense - lr.reconstruct(), 2)
        assert err == pytest.approx(lr.tail, rel=1e-8, abs=1e-12)


def test_decompose_full_rank_reconstructs():
    grid = build_grid(5.0, 64)
    dense = soft_coulomb(grid.x[:, None], grid.x[None, :])
    lr = decompose_interaction(grid, rank=grid.n_grid)
    assert np.max(np.abs(lr.reconstruct() - dense)) < 1e-10
    assert lr.tail == 0.0


def test_decompose_error_monotone_in_rank():
    grid = build_grid(5.0, 64)
    dense = soft_coulomb(grid.x[:, None], grid.x[None, :])
    errs = []
    for m in range(1, grid.n_grid + 1, 4):
        lr = decompose_interaction(grid, rank=m)
        errs.append(np.max(np.abs(lr.reconstruct() - dense)))
    assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(errs, errs[1:]))


def test_decompose_reconstruction_symmetric():
    grid = build_grid(5.0, 16)
    lr = decompose_interaction(grid, rank=5)
    rec = lr.reconstruct()
    assert np.allclose(rec, rec.T, atol=1e-13)


def test_decompose_default_rank_threshold():
    grid = build_grid(5.0, 32)
    lr = decompose_interaction(grid)
    if lr.rank < grid.n_grid:
        assert lr.tail / np.abs(lr.weights[0]) < 1e-10
    full = decompose_interaction(grid, rank=grid.n_grid)
    kept = np.abs(full.weights) / np.abs(full.weights[0]) >= 1e-10
    assert lr.rank == max(1, int(np.max(np.nonzero(kept)[0])) + 1)


def test_decompose_rank_bounds():
    grid = build_grid(2.0, 8)
    with pytest.raises(GridError):
        decompose_interaction(grid, rank=0)
    with pytest.raises(GridError):
        decompose_interaction(grid, rank=9)
