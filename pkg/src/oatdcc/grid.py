"""1D periodic Fourier grid, model potentials, and the low-rank interaction kernel.

Single-particle functions live on a spin-doubled grid of length ``2 * n_grid``:
the first ``n_grid`` entries are the spin-up channel, the rest spin-down.
One-body operators act identically and independently on each spin block.
"""

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    n_grid: int
    dx: float
    x: np.ndarray          # positions, strictly increasing
    k: np.ndarray          # momenta in DFT ordering, period 2*half_width
    n_basis: int           # 2 * n_grid (two spin channels)


def build_grid(half_width, n_grid):
    """Uniform grid on [-R, R) with DFT momenta; n_grid must be a power of two."""
    if half_width <= 0:
        raise GridError(f"half_width must be positive, got {half_width}")
    if n_grid < 4 or (n_grid & (n_grid - 1)) != 0:
        raise GridError(f"n_grid must be a power of two >= 4, got {n_grid}")
    dx = 2.0 * half_width / n_grid
    x = -half_width + dx * np.arange(n_grid)
    k = 2.0 * np.pi * np.fft.fftfreq(n_grid, d=dx)
    return GridSpec(float(half_width), int(n_grid), dx, x, k, 2 * n_grid)


def _as_spin_blocks(grid, psi):
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != grid.n_basis:
        raise GridError(
            f"grid function has leading dimension {psi.shape[0]}, expected {grid.n_basis}"
        )
    flat = psi.reshape(psi.shape[0], -1)
    return psi.shape, flat.reshape(2, grid.n_grid, -1)


def apply_kinetic(grid, psi):
    """Spectral -(1/2) d^2/dx^2, applied per spin block and per column."""
    shape, blocks = _as_spin_blocks(grid, psi)
    mult = 0.5 * grid.k[None, :, None] ** 2
    out = np.fft.ifft(mult * np.fft.fft(blocks, axis=1), axis=1)
    return out.reshape(shape)


def apply_kinetic_phase(grid, psi, factor):
    """Apply exp(factor * k^2 / 2) spectrally; factor is any complex scalar.

    ``factor = -1j * dt`` evolves a ket column under the free flow for time dt.
    """
    shape, blocks = _as_spin_blocks(grid, psi)
    mult = np.exp(factor * 0.5 * grid.k[None, :, None] ** 2)
    out = np.fft.ifft(mult * np.fft.fft(blocks, axis=1), axis=1)
    return out.reshape(shape)


def gaussian_well(x, depth=7.0, width=1.5):
    """Attractive Gaussian well -V0 exp(-x^2 / (2 a^2))."""
    x = np.asarray(x, dtype=float)
    return -depth * np.exp(-(x**2) / (2.0 * width**2))


def soft_coulomb(x1, x2, strength=1.0, softening=0.2, squared=False):
    """Smoothed Coulomb repulsion lambda / sqrt(|x1 - x2| + delta^2).

    The default keeps the unsquared separation under the root; ``squared=True``
    selects the more common lambda / sqrt((x1 - x2)^2 + delta^2) variant.
    """
    diff = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    sep = diff**2 if squared else np.abs(diff)
    return strength / np.sqrt(sep + softening**2)


@dataclass(frozen=True)
class InteractionLowRank:
    """Truncated symmetric eigendecomposition of the sampled two-body kernel.

    kernel[k, k'] ~= sum_m weights[m] * modes[m, k] * modes[m, k'], with the
    weights ordered by decreasing magnitude.  ``tail`` is |lambda_{M+1}| (zero
    when nothing was truncated), which equals the 2-norm truncation error.
    """

    weights: np.ndarray    # (M,)
    modes: np.ndarray      # (M, n_grid), sampled on the spatial grid
    tail: float

    @property
    def rank(self):
        return self.weights.shape[0]

    def reconstruct(self):
        return np.einsum("m,mk,ml->kl", self.weights, self.modes, self.modes)

    def spin_modes(self):
        """Modes duplicated onto the spin-doubled grid (interaction is spin-blind)."""
        return np.concatenate([self.modes, self.modes], axis=1)


def decompose_interaction(grid, kernel=soft_coulomb, rank=None, rel_threshold=1e-10):
    """Eigendecompose kernel(x, x') sampled on the grid, truncated to ``rank`` terms.

    With ``rank=None`` the rank is the smallest M such that
    |lambda_{M+1}| / |lambda_1| < rel_threshold.
    """
    sampled = kernel(grid.x[:, None], grid.x[None, :])
    sampled = np.asarray(sampled, dtype=float)
    try:
        vals, vecs = np.linalg.eigh(sampled)
    except np.linalg.LinAlgError as exc:
        raise GridError(f"interaction kernel eigendecomposition failed: {exc}") from exc
    order = np.argsort(-np.abs(vals))
    vals = vals[order]
    vecs = vecs[:, order]
    if rank is None:
        scale = np.abs(vals[0])
        keep = np.abs(vals) >= rel_threshold * scale
        rank = max(1, int(np.max(np.nonzero(keep)[0])) + 1) if keep.any() else 1
    if not 1 <= rank <= grid.n_grid:
        raise GridError(f"rank must be in [1, {grid.n_grid}], got {rank}")
    tail = float(np.abs(vals[rank])) if rank < grid.n_grid else 0.0
    return InteractionLowRank(vals[:rank].copy(), vecs[:, :rank].T.copy(), tail)
